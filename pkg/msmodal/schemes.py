"""Axiom schemes, derived theorem schemes and deductive systems.

A scheme instance names a scheme and binds each of its metavariables. Every
scheme is listed in ``SCHEMES`` with its metavariables and their kinds:

``formula``
    a formula;
``formulas``
    a tuple of formulas (the non-distinguished arguments of an operator);
``symbol``
    a nominal or state variable;
``svar``
    a state variable;
``sort``, ``op``
    names declared in the signature;
``pos``
    a 1-based argument position;
``context``
    a nominal context.
"""

from typing import Callable, NamedTuple, Tuple

import numpy as np

from .syntax import (
    App,
    At,
    Context,
    Forall,
    Formula,
    Neg,
    Nom,
    Or,
    SVar,
    apply_context,
    box,
    check_context,
    check_well_sorted,
    conj,
    dual_context,
    exists,
    free_state_vars,
    hole_sort,
    iff,
    implies,
    is_nominal_context,
    put,
    substitute,
)
from .utils import (
    MissingBindingError,
    NotSubstitutableError,
    SideConditionError,
    TooManyAtomsError,
)

MAX_TAUTOLOGY_ATOMS = 20


def _abstract(phi, letters):
    if isinstance(phi, Neg):
        return ("not", _abstract(phi.arg, letters))
    if isinstance(phi, Or):
        return ("or", _abstract(phi.left, letters), _abstract(phi.right, letters))
    return ("atom", letters.setdefault(phi, len(letters)))


def is_tautology(phi):
    """Whether ``phi`` is a propositional tautology.

    Maximal subformulas that are not negations or disjunctions are treated as
    propositional letters; structurally equal subformulas share a letter.

    Raises
    ------
    TooManyAtomsError
        If more than 20 letters are needed.
    """
    letters = {}
    skeleton = _abstract(phi, letters)
    k = len(letters)
    if k > MAX_TAUTOLOGY_ATOMS:
        raise TooManyAtomsError(f"{k} atoms exceed the limit of {MAX_TAUTOLOGY_ATOMS}")
    rows = np.arange(2**k, dtype=np.int64)

    def ev(node):
        if node[0] == "atom":
            return ((rows >> node[1]) & 1).astype(bool)
        if node[0] == "not":
            return ~ev(node[1])
        return ev(node[1]) | ev(node[2])

    return bool(np.all(ev(skeleton)))


class SchemeInstance(NamedTuple):
    """A scheme name together with its metavariable bindings."""

    scheme: str
    bindings: dict


class Scheme(NamedTuple):
    """An axiom or theorem scheme.

    Parameters
    ----------
    name : str
    metavars : tuple of (str, str)
        Metavariable names and kinds.
    build : callable
        ``build(sig, **bindings) -> Formula``; raises `SideConditionError`.
    description : str
        The scheme in plain text.
    """

    name: str
    metavars: Tuple[Tuple[str, str], ...]
    build: Callable
    description: str


def _fail(scheme, detail):
    raise SideConditionError(scheme, detail)


def _operator(sig, scheme, op, pos, side):
    o = sig.op(op)
    if not 1 <= pos <= o.arity:
        _fail(scheme, f"position {pos} out of range for {op}")
    if len(side) != o.arity - 1:
        _fail(scheme, f"{op} needs {o.arity - 1} side formulas, got {len(side)}")
    return o


def _taut(sig, phi):
    if not is_tautology(phi):
        _fail("TAUT", "not a propositional tautology")
    return phi


def _k_sigma(sig, op, pos, side, phi, chi):
    _operator(sig, "K_SIGMA_AX", op, pos, side)
    return implies(
        box(sig, op, put(side, pos, implies(phi, chi))),
        implies(box(sig, op, put(side, pos, phi)), box(sig, op, put(side, pos, chi))),
    )


def _dual(sig, op, args):
    if len(args) != sig.op(op).arity:
        _fail("DUAL", f"{op} needs {sig.op(op).arity} arguments")
    return iff(
        App(op, tuple(args), sig.op(op).result_sort),
        Neg(box(sig, op, [Neg(a) for a in args])),
    )


def _k_at(sig, z, sort, phi, psi):
    return implies(
        At(z, implies(phi, psi), sort), implies(At(z, phi, sort), At(z, psi, sort))
    )


def _selfdual(sig, z, sort, phi):
    return iff(At(z, phi, sort), Neg(At(z, Neg(phi), sort)))


def _intro(sig, z, phi):
    return implies(z, iff(phi, At(z, phi, z.sort)))


def _agree(sig, y, z, sort, phi):
    return iff(At(y, At(z, phi, y.sort), sort), At(z, phi, sort))


def _ref(sig, z, sort):
    return At(z, z, sort)


def _back(sig, op, pos, side, z, psi):
    o = _operator(sig, "BACK", op, pos, side)
    inner = At(z, psi, o.arg_sorts[pos - 1])
    return implies(
        App(op, put(side, pos, inner), o.result_sort), At(z, psi, o.result_sort)
    )


def _q1(sig, x, phi, psi):
    if x in free_state_vars(phi):
        _fail("Q1", f"{x.name} occurs free in the antecedent")
    return implies(Forall(x, implies(phi, psi)), implies(phi, Forall(x, psi)))


def _q2(sig, x, y, phi):
    try:
        return implies(Forall(x, phi), substitute(phi, x, y))
    except NotSubstitutableError as e:
        _fail("Q2", str(e))


def _name(sig, x):
    return exists(x, x)


def _barcan(sig, op, pos, side, x, phi):
    _operator(sig, "BARCAN", op, pos, side)
    if any(x in free_state_vars(f) for f in side):
        _fail("BARCAN", f"{x.name} occurs free in a side formula")
    return implies(
        Forall(x, box(sig, op, put(side, pos, phi))),
        box(sig, op, put(side, pos, Forall(x, phi))),
    )


def _barcan_at(sig, x, z, sort, phi):
    if x == z:
        _fail("BARCAN_AT", "the bound variable must differ from the subscript")
    return implies(Forall(x, At(z, phi, sort)), At(z, Forall(x, phi), sort))


def _nom(sig, x, eta, theta, phi):
    for name, ctx in (("eta", eta), ("theta", theta)):
        if not is_nominal_context(ctx):
            _fail("NOM", f"{name} must have exactly one hole")
        check_context(sig, ctx)
        if hole_sort(ctx) != x.sort:
            _fail("NOM", f"hole of {name} must have sort {x.sort}")
    if eta.sort != theta.sort:
        _fail("NOM", "both contexts must have the same sort")
    lhs = apply_context(eta, conj(x, phi))
    return Forall(x, implies(lhs, dual_context(theta)(implies(x, phi))))


def _nom_x(sig, x, y, z, sort):
    return implies(conj(At(z, x, sort), At(y, x, sort)), At(z, y, sort))


def _nom_z(sig, z, y, sort, phi):
    return implies(At(z, y, sort), iff(At(z, phi, sort), At(y, phi, sort)))


def _sym(sig, z, y, sort):
    return implies(At(z, y, sort), At(y, z, sort))


def _bridge(sig, op, pos, side, z, phi):
    o = _operator(sig, "BRIDGE", op, pos, side)
    s = o.result_sort
    return implies(
        conj(App(op, put(side, pos, z), s), At(z, phi, s)),
        App(op, put(side, pos, phi), s),
    )


def _at_elim(sig, z, phi):
    return implies(At(z, phi, phi.sort), phi)


_OPERATOR = (("op", "op"), ("pos", "pos"), ("side", "formulas"))

SCHEMES = {
    s.name: s
    for s in (
        Scheme("TAUT", (("phi", "formula"),), _taut, "phi, a propositional tautology"),
        Scheme(
            "K_SIGMA_AX",
            _OPERATOR + (("phi", "formula"), ("chi", "formula")),
            _k_sigma,
            "box(..,phi->chi,..) -> (box(..,phi,..) -> box(..,chi,..))",
        ),
        Scheme(
            "DUAL",
            (("op", "op"), ("args", "formulas")),
            _dual,
            "op(args) <-> not box(not args)",
        ),
        Scheme(
            "K_AT",
            (("z", "symbol"), ("sort", "sort"), ("phi", "formula"), ("psi", "formula")),
            _k_at,
            "@z(phi -> psi) -> (@z phi -> @z psi)",
        ),
        Scheme(
            "SELFDUAL",
            (("z", "symbol"), ("sort", "sort"), ("phi", "formula")),
            _selfdual,
            "@z phi <-> not @z not phi",
        ),
        Scheme(
            "INTRO",
            (("z", "symbol"), ("phi", "formula")),
            _intro,
            "z -> (phi <-> @z phi)",
        ),
        Scheme(
            "AGREE",
            (("y", "symbol"), ("z", "symbol"), ("sort", "sort"), ("phi", "formula")),
            _agree,
            "@y @z phi <-> @z phi",
        ),
        Scheme("REF", (("z", "symbol"), ("sort", "sort")), _ref, "@z z"),
        Scheme(
            "BACK",
            _OPERATOR + (("z", "symbol"), ("psi", "formula")),
            _back,
            "op(.., @z psi, ..) -> @z psi",
        ),
        Scheme(
            "Q1",
            (("x", "svar"), ("phi", "formula"), ("psi", "formula")),
            _q1,
            "forall x (phi -> psi) -> (phi -> forall x psi), x not free in phi",
        ),
        Scheme(
            "Q2",
            (("x", "svar"), ("y", "symbol"), ("phi", "formula")),
            _q2,
            "forall x phi -> phi[y/x], y substitutable for x",
        ),
        Scheme("NAME", (("x", "svar"),), _name, "exists x x"),
        Scheme(
            "BARCAN",
            _OPERATOR + (("x", "svar"), ("phi", "formula")),
            _barcan,
            "forall x box(.., phi, ..) -> box(.., forall x phi, ..)",
        ),
        Scheme(
            "BARCAN_AT",
            (("x", "svar"), ("z", "symbol"), ("sort", "sort"), ("phi", "formula")),
            _barcan_at,
            "forall x @z phi -> @z forall x phi, x distinct from z",
        ),
        Scheme(
            "NOM",
            (
                ("x", "svar"),
                ("eta", "context"),
                ("theta", "context"),
                ("phi", "formula"),
            ),
            _nom,
            "forall x (eta(x and phi) -> theta^box(x -> phi))",
        ),
        Scheme(
            "NOM_X",
            (("x", "svar"), ("y", "symbol"), ("z", "symbol"), ("sort", "sort")),
            _nom_x,
            "@z x and @y x -> @z y",
        ),
        Scheme(
            "NOM_Z",
            (("z", "symbol"), ("y", "symbol"), ("sort", "sort"), ("phi", "formula")),
            _nom_z,
            "@z y -> (@z phi <-> @y phi)",
        ),
        Scheme(
            "SYM",
            (("z", "symbol"), ("y", "symbol"), ("sort", "sort")),
            _sym,
            "@z y -> @y z",
        ),
        Scheme(
            "BRIDGE",
            _OPERATOR + (("z", "symbol"), ("phi", "formula")),
            _bridge,
            "op(.., z, ..) and @z phi -> op(.., phi, ..)",
        ),
        Scheme(
            "AT_ELIM",
            (("z", "symbol"), ("phi", "formula")),
            _at_elim,
            "@z phi -> phi (not valid)",
        ),
    )
}

AXIOM_SCHEMES = (
    "TAUT",
    "K_SIGMA_AX",
    "DUAL",
    "K_AT",
    "SELFDUAL",
    "INTRO",
    "AGREE",
    "REF",
    "BACK",
    "Q1",
    "Q2",
    "NAME",
    "BARCAN",
    "BARCAN_AT",
    "NOM",
    "NOM_X",
)
THEOREM_SCHEMES = ("NOM_Z", "SYM", "BRIDGE")
INVALID_SCHEMES = ("AT_ELIM",)


class System(NamedTuple):
    """A deductive system: admissible schemes and rules, and its language."""

    name: str
    schemes: Tuple[str, ...]
    rules: Tuple[str, ...]
    forbidden: Tuple[str, ...]


_BASE_SCHEMES = ("TAUT", "K_SIGMA_AX", "DUAL")
_AT_SCHEMES = ("K_AT", "SELFDUAL", "INTRO", "AGREE", "REF", "BACK")
_AT_RULES = ("BROADCAST", "GEN_AT", "PASTE0", "PASTE1")

SYSTEMS = {
    s.name: s
    for s in (
        System("K_SIGMA", _BASE_SCHEMES, ("MP", "UG"), ("Nom", "SVar", "At", "Forall")),
        System(
            "H_AT", _BASE_SCHEMES + _AT_SCHEMES, ("MP", "UG") + _AT_RULES, ("Forall",)
        ),
        System(
            "H_FORALL",
            _BASE_SCHEMES + ("Q1", "Q2", "NAME", "BARCAN", "NOM"),
            ("MP", "UG", "GEN"),
            ("At",),
        ),
        System(
            "H_AT_FORALL",
            _BASE_SCHEMES
            + _AT_SCHEMES
            + ("Q1", "Q2", "NAME", "BARCAN", "BARCAN_AT", "NOM_X"),
            ("MP", "UG") + _AT_RULES + ("GEN",),
            (),
        ),
    )
}


def _check_kind(scheme, name, kind, value, sig):
    ok = {
        "formula": lambda v: isinstance(v, Formula),
        "formulas": lambda v: isinstance(v, (tuple, list))
        and all(isinstance(f, Formula) for f in v),
        "symbol": lambda v: isinstance(v, (Nom, SVar)),
        "svar": lambda v: isinstance(v, SVar),
        "sort": lambda v: v in sig.sorts,
        "op": lambda v: isinstance(v, str) and sig.has_op(v),
        "pos": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "context": lambda v: isinstance(v, Context),
    }[kind](value)
    if not ok:
        _fail(scheme, f"binding {name} is not a valid {kind}")


def instantiate_scheme(inst, sig, tab):
    """Build the formula of a scheme instance.

    Parameters
    ----------
    inst : SchemeInstance
    sig : Signature
    tab : SymbolTable
        Used to check that the instance is well-sorted.

    Returns
    -------
    Formula
        The literal instance, sugar expanded.

    Raises
    ------
    MissingBindingError
        If a metavariable is unbound.
    SideConditionError
        If a side condition fails or a binding has the wrong kind.
    SortError
        If the instance is not well-sorted.
    TooManyAtomsError
        For ``TAUT`` instances beyond the tautology checker's limit.
    """
    try:
        scheme = SCHEMES[inst.scheme]
    except KeyError:
        raise SideConditionError(inst.scheme, "unknown scheme") from None
    names = [m for m, _ in scheme.metavars]
    missing = [m for m in names if m not in inst.bindings]
    if missing:
        raise MissingBindingError(f"{inst.scheme}: missing {', '.join(missing)}")
    extra = sorted(set(inst.bindings) - set(names))
    if extra:
        _fail(inst.scheme, f"unexpected bindings {', '.join(extra)}")
    for m, kind in scheme.metavars:
        _check_kind(inst.scheme, m, kind, inst.bindings[m], sig)
    kwargs = {
        m: tuple(v) if kind == "formulas" else v
        for (m, kind), v in zip(scheme.metavars, (inst.bindings[m] for m in names))
    }
    for m, kind in scheme.metavars:
        if kind in ("formula", "symbol", "svar"):
            check_well_sorted(sig, tab, kwargs[m])
        elif kind == "formulas":
            for f in kwargs[m]:
                check_well_sorted(sig, tab, f)
    phi = scheme.build(sig, **kwargs)
    check_well_sorted(sig, tab, phi)
    return phi
