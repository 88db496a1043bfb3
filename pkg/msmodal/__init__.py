"""msmodal : many-sorted hybrid modal logic."""

from ._version import __version__
from .library import ProofBuilder, theorem_library
from .parsing import (
    format_signature,
    parse_context,
    parse_formula,
    parse_signature,
    print_context,
    print_formula,
)
from .proof import ProofLine, Theory, check_proof, format_proof, parse_proof
from .schemes import SCHEMES, SYSTEMS, SchemeInstance, instantiate_scheme, is_tautology
from .semantics import (
    Model,
    context_reach,
    format_model,
    generated_submodel,
    parse_model,
    random_model,
    satisfies,
    valid_in_frame,
    valid_in_model,
)
from .smc import (
    axiom_instance,
    build_pprime_proof,
    build_smc_signature,
    encode_program,
    smc_run,
)
from .soundness import soundness_sweep
from .syntax import (
    Signature,
    SymbolTable,
    apply_context,
    dual_context,
    free_state_vars,
    substitute,
    well_sorted,
)
from .translation import (
    correspondence_check,
    eval_fo,
    export_fo,
    fresh_pivot,
    global_correspondence_check,
    standard_translate,
)
from .utils import REASONS, ProofVerdict
