"""Random formulas and randomized soundness sweeps of the axiom schemes."""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple

import numpy as np

from .schemes import (
    SCHEMES,
    SYSTEMS,
    THEOREM_SCHEMES,
    SchemeInstance,
    instantiate_scheme,
)
from .semantics import falsifying_points, random_model
from .syntax import (
    NOMINAL,
    PROP,
    SVAR,
    App,
    At,
    CtxTop,
    Forall,
    Hole,
    Neg,
    Nom,
    OpCtx,
    Operator,
    Or,
    Prop,
    Signature,
    SVar,
    SymbolTable,
    Top,
    conj,
    iff,
    implies,
)
from .utils import NotSubstitutableError, SideConditionError, errorif

logger = logging.getLogger(__name__)

MAX_RESAMPLE = 100


def sweep_signature():
    """Three-sorted signature used by default for sweeps.

    Sorts ``s``, ``t``, ``u``; operators ``f : s -> s``, ``g : s t -> s``,
    ``h : t -> u``, ``k : u s -> t`` and the constant ``c0 : -> t``.
    """
    sig = Signature(
        ("s", "t", "u"),
        (
            Operator("f", ("s",), "s"),
            Operator("g", ("s", "t"), "s"),
            Operator("h", ("t",), "u"),
            Operator("k", ("u", "s"), "t"),
            Operator("c0", (), "t"),
        ),
    )
    tab = SymbolTable(
        props={"s": {"p_s", "q_s"}, "t": {"p_t"}, "u": {"p_u"}},
        noms={"s": {"j_s", "k_s"}, "t": {"j_t"}, "u": {"j_u"}},
        svars={"s": {"x_s", "y_s"}, "t": {"x_t", "y_t"}, "u": {"x_u"}},
    )
    return sig, tab


class _Resample(Exception):
    pass


class FormulaSampler:
    """Draw random well-sorted formulas and contexts.

    Parameters
    ----------
    sig : Signature
    tab : SymbolTable
    rng : numpy.random.Generator
    at, binders : bool
        Whether ``@`` and ``forall`` may be generated.
    """

    def __init__(self, sig, tab, rng, at=True, binders=True):
        self.sig = sig
        self.tab = tab
        self.rng = rng
        self.at = at
        self.binders = binders

    def choice(self, seq):
        seq = list(seq)
        if not seq:
            raise _Resample
        return seq[int(self.rng.integers(len(seq)))]

    def symbols(self, sort=None, kinds=(NOMINAL, SVAR)):
        sorts = self.sig.sorts if sort is None else (sort,)
        out = []
        for s in sorts:
            for kind in kinds:
                cls = Nom if kind == NOMINAL else SVar
                out.extend(cls(n, s) for n in self.tab.names(kind, s))
        return out

    def symbol(self, sort=None):
        return self.choice(self.symbols(sort))

    def svar(self, sort=None):
        return self.choice(self.symbols(sort, (SVAR,)))

    def sort(self):
        return self.choice(self.sig.sorts)

    def leaf(self, sort):
        leaves = [Prop(p, sort) for p in self.tab.names(PROP, sort)]
        leaves.extend(self.symbols(sort))
        leaves.append(Top(sort))
        return self.choice(leaves)

    def formula(self, sort, depth=3):
        """Random formula of ``sort`` with nesting depth at most ``depth``."""
        if depth <= 0 or self.rng.random() < 0.25:
            return self.leaf(sort)
        shapes = ["neg", "or"]
        ops = self.sig.ops_with_result(sort)
        if ops:
            shapes.append("app")
        if self.at and self.symbols():
            shapes.append("at")
        if self.binders and self.symbols(kinds=(SVAR,)):
            shapes.append("forall")
        shape = self.choice(shapes)
        if shape == "neg":
            return Neg(self.formula(sort, depth - 1))
        if shape == "or":
            return Or(self.formula(sort, depth - 1), self.formula(sort, depth - 1))
        if shape == "app":
            op = self.choice(ops)
            args = tuple(self.formula(s, depth - 1) for s in op.arg_sorts)
            return App(op.name, args, sort)
        if shape == "at":
            z = self.symbol()
            return At(z, self.formula(z.sort, depth - 1), sort)
        return Forall(self.svar(), self.formula(sort, depth - 1))

    def formulas(self, sorts, depth=3):
        return tuple(self.formula(s, depth) for s in sorts)

    def operator(self, arg_sort=None):
        """Random ``(op, pos)`` with at least one argument, optionally of a sort."""
        pairs = [
            (op, i + 1)
            for op in self.sig.operators
            for i, s in enumerate(op.arg_sorts)
            if arg_sort is None or s == arg_sort
        ]
        return self.choice(pairs)

    def side(self, op, pos, depth=3):
        sorts = op.arg_sorts[: pos - 1] + op.arg_sorts[pos:]
        return self.formulas(sorts, depth)

    def filler(self, sort):
        """Hole-free context of ``sort``."""
        consts = [op for op in self.sig.ops_with_result(sort) if op.arity == 0]
        if consts and self.rng.random() < 0.3:
            return OpCtx(self.choice(consts).name, (), sort)
        return CtxTop(sort)

    def context(self, hole_sort, depth=2):
        """Random nominal context whose hole has ``hole_sort``."""
        eta = Hole(hole_sort)
        for _ in range(int(self.rng.integers(depth + 1))):
            op, pos = self.operator(eta.sort)
            args = [self.filler(s) for s in op.arg_sorts]
            args[pos - 1] = eta
            eta = OpCtx(op.name, tuple(args), op.result_sort)
        return eta

    def tautology(self, sort, depth=2):
        """Instance of a random propositional tautology shape."""
        a, b, c = (self.formula(sort, depth) for _ in range(3))
        shapes = (
            lambda: Or(a, Neg(a)),
            lambda: implies(a, implies(b, a)),
            lambda: implies(
                implies(a, implies(b, c)), implies(implies(a, b), implies(a, c))
            ),
            lambda: implies(implies(Neg(a), Neg(b)), implies(b, a)),
            lambda: implies(conj(a, b), a),
            lambda: implies(a, Or(b, a)),
            lambda: iff(a, Neg(Neg(a))),
            lambda: implies(implies(implies(a, b), a), a),
        )
        return self.choice(shapes)()


def _op_bindings(smp, depth, arg_sort=None):
    op, pos = smp.operator(arg_sort)
    return {"op": op.name, "pos": pos, "side": smp.side(op, pos, depth)}, op, pos


def _sample_bindings(scheme, smp, depth):
    """Random bindings for one scheme; may raise `_Resample`."""
    if scheme == "TAUT":
        return {"phi": smp.tautology(smp.sort(), max(depth - 1, 0))}
    if scheme in ("K_SIGMA_AX", "BARCAN", "BACK", "BRIDGE"):
        b, op, pos = _op_bindings(smp, depth)
        s = op.arg_sorts[pos - 1]
        if scheme == "K_SIGMA_AX":
            b.update(phi=smp.formula(s, depth), chi=smp.formula(s, depth))
        elif scheme == "BARCAN":
            b.update(x=smp.svar(), phi=smp.formula(s, depth))
        elif scheme == "BACK":
            b.update(z=smp.symbol(s), psi=smp.formula(s, depth))
        else:
            b.update(z=smp.symbol(s), phi=smp.formula(s, depth))
        return b
    if scheme == "DUAL":
        op = smp.choice(smp.sig.operators)
        return {"op": op.name, "args": smp.formulas(op.arg_sorts, depth)}
    if scheme in ("K_AT", "SELFDUAL", "AGREE", "REF", "NOM_Z", "SYM"):
        z = smp.symbol()
        b = {"z": z, "sort": smp.sort()}
        if scheme in ("K_AT", "SELFDUAL", "AGREE", "NOM_Z"):
            b["phi"] = smp.formula(z.sort, depth)
        if scheme == "K_AT":
            b["psi"] = smp.formula(z.sort, depth)
        elif scheme == "AGREE":
            b["y"] = smp.symbol()
        elif scheme in ("NOM_Z", "SYM"):
            b["y"] = smp.symbol(z.sort)
        return b
    if scheme in ("INTRO", "AT_ELIM"):
        z = smp.symbol()
        return {"z": z, "phi": smp.formula(z.sort, depth)}
    if scheme == "Q1":
        s = smp.sort()
        return {
            "x": smp.svar(),
            "phi": smp.formula(s, depth),
            "psi": smp.formula(s, depth),
        }
    if scheme == "Q2":
        x = smp.svar()
        return {"x": x, "y": smp.symbol(x.sort), "phi": smp.formula(smp.sort(), depth)}
    if scheme == "NAME":
        return {"x": smp.svar()}
    if scheme == "BARCAN_AT":
        z = smp.symbol()
        return {
            "x": smp.svar(),
            "z": z,
            "sort": smp.sort(),
            "phi": smp.formula(z.sort, depth),
        }
    if scheme == "NOM":
        x = smp.svar()
        eta = smp.context(x.sort)
        for _ in range(MAX_RESAMPLE):
            theta = smp.context(x.sort)
            if theta.sort == eta.sort:
                break
        else:
            theta = eta
        return {"x": x, "eta": eta, "theta": theta, "phi": smp.formula(x.sort, depth)}
    if scheme == "NOM_X":
        x = smp.svar()
        return {
            "x": x,
            "y": smp.symbol(x.sort),
            "z": smp.symbol(x.sort),
            "sort": smp.sort(),
        }
    raise ValueError(f"no sampler for scheme {scheme!r}")


def random_instance(scheme, sig, tab, rng, depth=3):
    """Draw a random instance of ``scheme`` whose side conditions hold.

    Returns
    -------
    SchemeInstance, Formula
        The instance and its formula, or ``(None, None)`` when no valid
        instance was found in ``MAX_RESAMPLE`` draws.
    """
    smp = FormulaSampler(sig, tab, rng)
    for _ in range(MAX_RESAMPLE):
        try:
            inst = SchemeInstance(scheme, _sample_bindings(scheme, smp, depth))
            return inst, instantiate_scheme(inst, sig, tab)
        except (_Resample, SideConditionError, NotSubstitutableError):
            continue
    return None, None


class Counterexample(NamedTuple):
    """A falsified instance: the formula fails at ``world`` under ``assignment``."""

    scheme: str
    trial: int
    instance: SchemeInstance
    formula: object
    model: object
    world: str
    assignment: dict


class SweepReport(NamedTuple):
    """Outcome of sweeping one scheme.

    Parameters
    ----------
    scheme : str
    trials : int
        Number of trials run.
    skipped : int
        Trials where no instance satisfying the side conditions was drawn.
    counterexamples : list of Counterexample
        One per falsifying world and assignment, ordered by trial index and
        then as `falsifying_points` yields them.
    """

    scheme: str
    trials: int
    skipped: int
    counterexamples: list

    @property
    def ok(self):
        return not self.counterexamples


def _trial(args):
    scheme, trial, seed, sig, tab, size_bounds, depth, density = args
    rng = np.random.default_rng([seed, trial])
    inst, phi = random_instance(scheme, sig, tab, rng, depth)
    if inst is None:
        return "skipped"
    model = random_model(sig, tab, size_bounds, rng, density)
    return [
        Counterexample(scheme, trial, inst, phi, model, w, g)
        for g, w in falsifying_points(model, phi)
    ]


def soundness_sweep(
    scheme,
    trials=1000,
    seed=0,
    size_bounds=3,
    depth=3,
    density=0.5,
    jobs=1,
    sig=None,
    tab=None,
):
    """Search for counterexamples to a scheme on random models.

    Each trial draws a random instance (formulas of depth at most ``depth``)
    and a random model from ``numpy.random.default_rng([seed, trial])``, then
    checks the instance at every world under every assignment of its free
    state variables. Every falsifying point becomes a counterexample.

    Parameters
    ----------
    scheme : str
        A key of ``SCHEMES``.
    trials, seed, size_bounds, depth, density
        See above and `random_model`.
    jobs : int
        Worker processes; the report does not depend on it.
    sig, tab : Signature, SymbolTable, optional
        Default: `sweep_signature`.

    Returns
    -------
    SweepReport
    """
    errorif(scheme not in SCHEMES, ValueError, f"unknown scheme {scheme!r}")
    if sig is None:
        sig, tab = sweep_signature()
    args = [
        (scheme, i, seed, sig, tab, size_bounds, depth, density) for i in range(trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunksize = max(1, trials // (4 * jobs))
            results = list(pool.map(_trial, args, chunksize=chunksize))
    else:
        results = [_trial(a) for a in args]
    skipped = sum(r == "skipped" for r in results)
    found = [cx for r in results if r != "skipped" for cx in r]
    logger.info(
        "%s: %d trials, %d skipped, %d counterexamples",
        scheme,
        trials,
        skipped,
        len(found),
    )
    return SweepReport(scheme, trials, skipped, found)


def system_schemes(system, theorems=True):
    """Schemes of a system, plus the derived theorems valid in its language."""
    errorif(system not in SYSTEMS, ValueError, f"unknown system {system!r}")
    names = list(SYSTEMS[system].schemes)
    if theorems and "At" not in SYSTEMS[system].forbidden:
        names.extend(THEOREM_SCHEMES)
    return names


def formula_sweep(phi, sig, tab, trials=200, seed=0, size_bounds=3, density=0.5):
    """Check one formula on random models; return the falsifying points found.

    Returns
    -------
    list of (int, Model, str, dict)
        Trial index, model, world and assignment of each failure.
    """
    out = []
    for i in range(trials):
        model = random_model(sig, tab, size_bounds, [seed, i], density)
        out.extend((i, model, w, g) for g, w in falsifying_points(model, phi))
    return out
