"""Standard translation into many-sorted first-order logic, and its evaluator.

The correspondence language has equality, a unary predicate ``P_p`` for every
propositional variable ``p``, a relation ``R_op`` of arity ``n + 1`` for every
``n``-ary operator and a constant ``c_j`` for every nominal ``j``. State
variables of the modal language are first-order variables of the same name;
translation-introduced variables are drawn from ``y1, y2, ...``, skipping
every name already in use.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from . import syntax
from .parsing import Atom, read_one
from .semantics import random_assignment, random_model, satisfies, valid_in_model
from .syntax import NOMINAL, PROP, free_state_vars, state_symbols
from .utils import FormulaSyntaxError, SortError, UnboundSymbolError, errorif

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Var:
    """First-order variable."""

    name: str
    sort: str


@dataclass(frozen=True)
class Const:
    """Constant ``c_j`` naming the denotation of nominal ``j``."""

    name: str
    sort: str


class FOFormula:
    """Base class of first-order formulas."""

    __slots__ = ()


@dataclass(frozen=True)
class Eq(FOFormula):
    left: object
    right: object


@dataclass(frozen=True)
class Pred(FOFormula):
    name: str
    term: object


@dataclass(frozen=True)
class Rel(FOFormula):
    name: str
    terms: Tuple[object, ...]


@dataclass(frozen=True)
class Not(FOFormula):
    arg: FOFormula


@dataclass(frozen=True)
class Or(FOFormula):
    left: FOFormula
    right: FOFormula


@dataclass(frozen=True)
class And(FOFormula):
    """Conjunction of two or more formulas."""

    parts: Tuple[FOFormula, ...]


@dataclass(frozen=True)
class Exists(FOFormula):
    var: Var
    body: FOFormula


@dataclass(frozen=True)
class ForallFO(FOFormula):
    var: Var
    body: FOFormula


def pred_name(p):
    return "P_" + p


def rel_name(op):
    return "R_" + op


def const_name(j):
    return "c_" + j


class VarSupply:
    """Fresh variables ``y1, y2, ...`` avoiding a set of reserved names."""

    def __init__(self, reserved=()):
        self.reserved = set(reserved)
        self.count = 0

    def fresh(self, sort):
        while True:
            self.count += 1
            name = f"y{self.count}"
            if name not in self.reserved:
                self.reserved.add(name)
                return Var(name, sort)


def _term(sym):
    if isinstance(sym, syntax.Nom):
        return Const(const_name(sym.name), sym.sort)
    return Var(sym.name, sym.sort)


def standard_translate(phi, x="x", supply=None):
    """Translate a modal formula into a first-order formula about ``x``.

    Parameters
    ----------
    phi : Formula
        A well-sorted formula.
    x : str, Var or Const
        The pivot. A string names a variable of the sort of ``phi``.
    supply : VarSupply, optional
        Source of fresh variables. By default a new supply reserving every
        state symbol of ``phi`` and the pivot's name.

    Returns
    -------
    FOFormula

    Raises
    ------
    SortError
        If the pivot's sort differs from the sort of ``phi``.
    ValueError
        If a variable pivot has the name of a free state variable of ``phi``;
        the two would denote the same first-order variable. `fresh_pivot`
        gives a name that is always safe.
    """
    if isinstance(x, str):
        x = Var(x, phi.sort)
    if x.sort != phi.sort:
        raise SortError((), phi.sort, x.sort, "pivot sort")
    errorif(
        isinstance(x, Var) and x.name in {v.name for v in free_state_vars(phi)},
        ValueError,
        f"pivot {x.name} is a free state variable of the formula",
    )
    if supply is None:
        supply = VarSupply({s.name for s in state_symbols(phi)} | {x.name})

    def st(node, t):
        if isinstance(node, syntax.Prop):
            return Pred(pred_name(node.name), t)
        if isinstance(node, (syntax.Nom, syntax.SVar)):
            return Eq(t, _term(node))
        if isinstance(node, syntax.Top):
            return Eq(t, t)
        if isinstance(node, syntax.Neg):
            return Not(st(node.arg, t))
        if isinstance(node, syntax.Or):
            return Or(st(node.left, t), st(node.right, t))
        if isinstance(node, syntax.App):
            ys = [supply.fresh(a.sort) for a in node.args]
            parts = [Rel(rel_name(node.op), (t, *ys))]
            parts.extend(st(a, y) for a, y in zip(node.args, ys))
            out = parts[0] if len(parts) == 1 else And(tuple(parts))
            for y in reversed(ys):
                out = Exists(y, out)
            return out
        if isinstance(node, syntax.At):
            return st(node.body, _term(node.symbol))
        if isinstance(node, syntax.Forall):
            y = Var(node.var.name, node.var.sort)
            if isinstance(t, Var) and t.name == y.name:
                # re-pivot so the binder does not capture the pivot
                u = supply.fresh(t.sort)
                return Exists(u, And((Eq(u, t), ForallFO(y, st(node.body, u)))))
            return ForallFO(y, st(node.body, t))
        raise TypeError(f"not a formula: {node!r}")

    return st(phi, x)


def free_fo_vars(psi):
    """Free variables of a first-order formula."""
    if isinstance(psi, Eq):
        return {t for t in (psi.left, psi.right) if isinstance(t, Var)}
    if isinstance(psi, Pred):
        return {psi.term} if isinstance(psi.term, Var) else set()
    if isinstance(psi, Rel):
        return {t for t in psi.terms if isinstance(t, Var)}
    if isinstance(psi, Not):
        return free_fo_vars(psi.arg)
    if isinstance(psi, Or):
        return free_fo_vars(psi.left) | free_fo_vars(psi.right)
    if isinstance(psi, And):
        return set().union(*(free_fo_vars(p) for p in psi.parts))
    return free_fo_vars(psi.body) - {psi.var}


def check_fo(sig, tab, psi):
    """Raise `SortError` unless every atom of ``psi`` is sort-correct."""

    def sort_of(term):
        if isinstance(term, Const):
            entry = tab.lookup(term.name[2:]) if term.name.startswith("c_") else None
            errorif(
                entry is None or entry[0] != NOMINAL,
                UnboundSymbolError,
                term.name,
            )
            if entry[1] != term.sort:
                raise SortError((), entry[1], term.sort, f"constant {term.name}")
        return term.sort

    def go(node):
        if isinstance(node, Eq):
            a, b = sort_of(node.left), sort_of(node.right)
            if a != b:
                raise SortError((), a, b, "equation")
        elif isinstance(node, Pred):
            entry = tab.lookup(node.name[2:])
            errorif(entry is None or entry[0] != PROP, UnboundSymbolError, node.name)
            if entry[1] != sort_of(node.term):
                raise SortError((), entry[1], node.term.sort, node.name)
        elif isinstance(node, Rel):
            op = sig.op(node.name[2:])
            expected = (op.result_sort,) + op.arg_sorts
            found = tuple(sort_of(t) for t in node.terms)
            if expected != found:
                raise SortError((), " ".join(expected), " ".join(found), node.name)
        elif isinstance(node, Not):
            go(node.arg)
        elif isinstance(node, Or):
            go(node.left)
            go(node.right)
        elif isinstance(node, And):
            for p in node.parts:
                go(p)
        else:
            go(node.body)

    go(psi)


class FOStructure(NamedTuple):
    """Finite many-sorted first-order structure.

    Parameters
    ----------
    domains : dict
        Sort name to a tuple of elements.
    predicates : dict
        ``P_p`` to a set of elements.
    relations : dict
        ``R_op`` to a set of tuples.
    constants : dict
        ``c_j`` to an element.
    """

    domains: dict
    predicates: dict
    relations: dict
    constants: dict

    @classmethod
    def from_model(cls, model):
        """The structure a model already is, renamed into the FO vocabulary."""
        return cls(
            dict(model.worlds),
            {pred_name(p): set(v) for p, v in model.valuation.items()},
            {
                rel_name(op.name): set(model.relations.get(op.name, ()))
                for op in model.sig.operators
            },
            {const_name(j): w for j, w in model.nominals.items()},
        )


def eval_fo(structure, env, psi):
    """Classical truth of ``psi`` in a finite structure under ``env``.

    Raises
    ------
    UnboundSymbolError
        If a free variable of ``psi`` is missing from ``env`` or a symbol has
        no interpretation.
    """

    def val(term, env):
        table = structure.constants if isinstance(term, Const) else env
        try:
            return table[term.name]
        except KeyError:
            raise UnboundSymbolError(term.name) from None

    def go(node, env):
        if isinstance(node, Eq):
            return val(node.left, env) == val(node.right, env)
        if isinstance(node, Pred):
            return val(node.term, env) in structure.predicates.get(node.name, ())
        if isinstance(node, Rel):
            if node.name not in structure.relations:
                raise UnboundSymbolError(node.name)
            args = tuple(val(t, env) for t in node.terms)
            return args in structure.relations[node.name]
        if isinstance(node, Not):
            return not go(node.arg, env)
        if isinstance(node, Or):
            return go(node.left, env) or go(node.right, env)
        if isinstance(node, And):
            return all(go(p, env) for p in node.parts)
        quant = any if isinstance(node, Exists) else all
        name = node.var.name
        return quant(
            go(node.body, {**env, name: d}) for d in structure.domains[node.var.sort]
        )

    return go(psi, dict(env))


def fresh_pivot(phi, avoid=()):
    """Pivot name for `standard_translate` that no state symbol of ``phi`` uses.

    ``x`` when it is free, else the first unused ``y<n>``. Names in ``avoid``
    are treated as used too.
    """
    used = {s.name for s in state_symbols(phi)} | set(avoid)
    return "x" if "x" not in used else VarSupply(used).fresh(phi.sort).name


def correspondence_check(model, g, w, phi):
    """Whether ``phi`` at ``w`` agrees with its translation pivoted at ``w``.

    The assignment ``g`` doubles as the first-order environment of the free
    state variables.
    """
    x = fresh_pivot(phi, g)
    psi = standard_translate(phi, x)
    env = {v.name: g[v.name] for v in free_state_vars(phi)}
    env[x] = w
    fo = eval_fo(FOStructure.from_model(model), env, psi)
    return satisfies(model, g, w, phi) == fo


def global_correspondence_check(model, phi):
    """Whether model validity agrees with truth of the universal closure of ST."""
    x = fresh_pivot(phi)
    psi = ForallFO(Var(x, phi.sort), standard_translate(phi, x))
    for v in sorted(free_state_vars(phi), key=lambda v: v.name, reverse=True):
        psi = ForallFO(Var(v.name, v.sort), psi)
    fo = eval_fo(FOStructure.from_model(model), {}, psi)
    return valid_in_model(model, phi) == fo


class CorrespondenceFailure(NamedTuple):
    """A case where modal truth and first-order truth disagree."""

    trial: int
    formula: object
    model: object
    world: str
    assignment: dict


def correspondence_sweep(
    sig,
    tab,
    trials=1000,
    seed=0,
    depth=4,
    size_bounds=3,
    density=0.5,
    model=None,
    formula=None,
):
    """Run `correspondence_check` on random cases.

    Each trial draws from ``numpy.random.default_rng([seed, trial])`` a model
    (unless ``model`` is fixed), a formula of depth at most ``depth`` (unless
    ``formula`` is fixed), a world of the formula's sort and an assignment.

    Returns
    -------
    list of CorrespondenceFailure
    """
    from .soundness import FormulaSampler

    failures = []
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        m = model if model is not None else random_model(
            sig, tab, size_bounds, rng, density
        )
        if formula is None:
            sort = sig.sorts[int(rng.integers(len(sig.sorts)))]
            phi = FormulaSampler(sig, tab, rng).formula(sort, depth)
        else:
            phi = formula
        ws = m.worlds[phi.sort]
        w = ws[int(rng.integers(len(ws)))]
        g = {**m.assignment, **random_assignment(m, tab, rng)}
        if not correspondence_check(m, g, w, phi):
            failures.append(CorrespondenceFailure(trial, phi, m, w, g))
    logger.info("correspondence: %d trials, %d failures", trials, len(failures))
    return failures


def _print_term(t):
    return t.name


def export_fo(psi):
    """Print a first-order formula as fully parenthesized prefix text."""
    if isinstance(psi, Eq):
        return f"(= {_print_term(psi.left)} {_print_term(psi.right)})"
    if isinstance(psi, Pred):
        return f"(pred {psi.name} {_print_term(psi.term)})"
    if isinstance(psi, Rel):
        terms = " ".join(_print_term(t) for t in psi.terms)
        return f"(rel {psi.name} {terms})" if terms else f"(rel {psi.name})"
    if isinstance(psi, Not):
        return f"(not {export_fo(psi.arg)})"
    if isinstance(psi, Or):
        return f"(or {export_fo(psi.left)} {export_fo(psi.right)})"
    if isinstance(psi, And):
        return "(and " + " ".join(export_fo(p) for p in psi.parts) + ")"
    head = "exists" if isinstance(psi, Exists) else "forall"
    return f"({head} ({psi.var.name}:{psi.var.sort}) {export_fo(psi.body)})"


def parse_fo(text, sig, tab, free=None):
    """Read text printed by `export_fo` back into a formula.

    Parameters
    ----------
    text : str
    sig : Signature
    tab : SymbolTable
        Nominals determine the constants; state variables are free variables.
    free : dict, optional
        Sorts of further free variables, such as the pivot. Free variables in
        predicate or relation position take the sort the symbol requires.
    """
    known = dict(free or {})
    consts = {}
    for s in sig.sorts:
        for j in tab.names(NOMINAL, s):
            consts[const_name(j)] = s

    def term(node, env, expected):
        if not isinstance(node, Atom):
            raise FormulaSyntaxError("expected a term", node.pos)
        name = node.text
        if name in env:
            return Var(name, env[name])
        if name in consts:
            return Const(name, consts[name])
        entry = tab.lookup(name)
        sort = known.get(name) or (entry[1] if entry else None) or expected
        if sort is None:
            raise FormulaSyntaxError(f"cannot determine the sort of {name!r}", node.pos)
        return Var(name, sort)

    def head(node):
        if not isinstance(node, Atom) or not node.text:
            raise FormulaSyntaxError("expected a symbol", node.pos)
        return node.text

    def go(node, env):
        if isinstance(node, Atom) or not node.items:
            raise FormulaSyntaxError("expected a formula", node.pos)
        kw, rest = head(node.items[0]), node.items[1:]
        if kw == "=" and len(rest) == 2:
            try:
                left = term(rest[0], env, None)
            except FormulaSyntaxError:
                right = term(rest[1], env, None)
                return Eq(term(rest[0], env, right.sort), right)
            return Eq(left, term(rest[1], env, left.sort))
        if kw == "pred" and len(rest) == 2:
            name = head(rest[0])
            entry = tab.lookup(name[2:])
            if not name.startswith("P_") or entry is None or entry[0] != PROP:
                raise FormulaSyntaxError(f"unknown predicate {name!r}", rest[0].pos)
            return Pred(name, term(rest[1], env, entry[1]))
        if kw == "rel" and rest:
            name = head(rest[0])
            if not name.startswith("R_") or not sig.has_op(name[2:]):
                raise FormulaSyntaxError(f"unknown relation {name!r}", rest[0].pos)
            op = sig.op(name[2:])
            sorts = (op.result_sort,) + op.arg_sorts
            if len(rest) - 1 != len(sorts):
                raise FormulaSyntaxError(f"{name} takes {len(sorts)} terms", node.pos)
            return Rel(name, tuple(term(a, env, s) for a, s in zip(rest[1:], sorts)))
        if kw == "not" and len(rest) == 1:
            return Not(go(rest[0], env))
        if kw == "or" and len(rest) == 2:
            return Or(go(rest[0], env), go(rest[1], env))
        if kw == "and" and len(rest) >= 2:
            return And(tuple(go(r, env) for r in rest))
        if kw in ("exists", "forall") and len(rest) == 2:
            binder = rest[0]
            if isinstance(binder, Atom) or len(binder.items) != 1:
                raise FormulaSyntaxError("expected (name:sort)", binder.pos)
            name, _, sort = head(binder.items[0]).partition(":")
            if sort not in sig.sorts:
                raise FormulaSyntaxError(f"unknown sort {sort!r}", binder.pos)
            var = Var(name, sort)
            body = go(rest[1], {**env, name: sort})
            return Exists(var, body) if kw == "exists" else ForallFO(var, body)
        raise FormulaSyntaxError(f"malformed {kw!r} formula", node.pos)

    return go(read_one(text), {})


def all_binders_fresh(psi):
    """Whether no variable is bound twice along any branch of ``psi``."""

    def go(node, bound):
        if isinstance(node, (Eq, Pred, Rel)):
            return True
        if isinstance(node, Not):
            return go(node.arg, bound)
        if isinstance(node, Or):
            return go(node.left, bound) and go(node.right, bound)
        if isinstance(node, And):
            return all(go(p, bound) for p in node.parts)
        if node.var.name in bound:
            return False
        return go(node.body, bound | {node.var.name})

    return go(psi, frozenset())

