"""``python -m msmodal``."""

import sys

from .cli import main

sys.exit(main())
