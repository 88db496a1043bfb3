"""Utility functions, exceptions and reason tables shared by the package."""

from typing import NamedTuple, Union


class MsmodalError(Exception):
    """Base class for all errors raised by msmodal."""


class SignatureError(MsmodalError, ValueError):
    """Ill-formed signature or symbol table."""


class SortError(MsmodalError, TypeError):
    """A formula is not well-sorted.

    Parameters
    ----------
    path : tuple of int
        Child indices leading from the root to the offending subterm.
    expected : str
        Sort that was required at that position.
    found : str
        Sort (or description) that was found.
    """

    def __init__(self, path, expected, found, msg=""):
        self.path = tuple(path)
        self.expected = expected
        self.found = found
        super().__init__(
            msg or f"sort error at {list(self.path)}: expected {expected}, got {found}"
        )


class FormulaSyntaxError(MsmodalError, ValueError):
    """Text could not be parsed. ``position`` is the character offset."""

    def __init__(self, msg, position=None):
        self.position = position
        if position is not None:
            msg = f"{msg} (at position {position})"
        super().__init__(msg)


class NotSubstitutableError(MsmodalError):
    """Substituting would capture the new state symbol under a binder."""


class ContextError(MsmodalError, ValueError):
    """A context is not a nominal context or does not fit the formula."""


class UnboundSymbolError(MsmodalError, KeyError):
    """A state variable or nominal has no denotation."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ModelError(MsmodalError, ValueError):
    """A model violates the frame/valuation invariants."""


class ResourceLimitError(MsmodalError):
    """An enumeration would exceed the configured bound."""


class MissingBindingError(MsmodalError, KeyError):
    """A scheme or theory axiom was instantiated without a required binding."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class SideConditionError(MsmodalError, ValueError):
    """A scheme side condition does not hold for the given bindings."""

    def __init__(self, scheme, detail):
        self.scheme = scheme
        self.detail = detail
        super().__init__(f"{scheme}: {detail}")


class TooManyAtomsError(MsmodalError):
    """Truth-table check requested on too many abstracted atoms."""


class OutOfFuelError(MsmodalError):
    """The SMC machine did not halt within the step budget."""


class StuckError(MsmodalError):
    """No SMC transition applies to the current configuration."""

    def __init__(self, msg, config=None):
        self.config = config
        super().__init__(msg)


def errorif(cond, err=ValueError, msg=""):
    """Raise an error if condition is met.

    Similar to assert but allows wider range of Error types, rather than
    just AssertionError.
    """
    if cond:
        raise err(msg)


def setdefault(val, default, cond=None):
    """Return val if condition is met, otherwise default.

    If cond is None, then it checks if val is not None, returning val
    or default accordingly.
    """
    return val if cond or (cond is None and val is not None) else default


REASONS = {
    "OK": "Proof checked.",
    "BAD_INDEX": "Line indices must be unique and strictly increasing.",
    "BAD_REF": "Justification cites a line that does not precede this one.",
    "SORT": "Line formula is not well-sorted at the declared sort.",
    "LANGUAGE": "Line formula uses a construct outside the system's language.",
    "UNKNOWN_HYPOTHESIS": "Hypothesis name is not among the given hypotheses.",
    "HYPOTHESIS_MISMATCH": "Line formula differs from the named hypothesis.",
    "SCHEME_NOT_IN_SYSTEM": "Axiom scheme is not part of the selected system.",
    "MISSING_BINDING": "Scheme instance lacks a metavariable binding.",
    "SIDE_CONDITION": "Scheme side condition fails for the given bindings.",
    "AXIOM_MISMATCH": "Line formula differs from the scheme instance.",
    "NOT_TAUTOLOGY": "Line formula is not a propositional tautology.",
    "TOO_MANY_ATOMS": "Tautology check exceeds the atom limit.",
    "NO_THEORY": "Theory axiom cited but no theory was supplied.",
    "THEORY_AXIOM": "Theory axiom instance could not be built.",
    "THEORY_MISMATCH": "Line formula differs from the theory axiom instance.",
    "RULE_NOT_IN_SYSTEM": "Deduction rule is not part of the selected system.",
    "MP_SHAPE": "Major premise of modus ponens is not an implication.",
    "MP_MISMATCH": "Modus ponens premises do not match this line.",
    "UG_MISMATCH": "Line is not the universal generalization of its premise.",
    "GEN_MISMATCH": "Line is not the binder generalization of its premise.",
    "GEN_AT_MISMATCH": "Line is not the @-generalization of its premise.",
    "BROADCAST_MISMATCH": "Line is not a broadcast of its premise.",
    "PASTE_MISMATCH": "Line is not a paste of its premise.",
    "FRESHNESS": "Pasted state symbol is not fresh.",
    "HYP_DEPENDENT": "Generalization rule applied to a hypothesis-dependent line.",
}


class ProofVerdict(NamedTuple):
    """Outcome of checking a proof.

    Parameters
    ----------
    ok : bool
        True if every line checked.
    line : int or None
        Index of the first rejected line, None when ``ok``.
    reason : str
        Key of ``msmodal.REASONS``; ``"OK"`` on success.
    detail : str
        Free form explanation of the failure.
    """

    ok: bool
    line: Union[int, None]
    reason: str
    detail: str = ""

    @property
    def message(self):
        """Human readable message for ``reason``."""
        return REASONS.get(self.reason, self.reason)
