"""Finite many-sorted Kripke models and the satisfaction relation."""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

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
    Or,
    Prop,
    SVar,
    Top,
    atoms,
    free_state_vars,
    hole_count,
)
from .utils import (
    ModelError,
    ResourceLimitError,
    SortError,
    UnboundSymbolError,
    errorif,
    setdefault,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Model:
    """A finite (S, Sigma)-model with an optional default assignment.

    Parameters
    ----------
    sig : Signature
        Signature the model interprets.
    worlds : dict
        Sort name -> tuple of world ids. World ids are strings, unique across
        sorts, and every sort of ``sig`` has at least one world.
    relations : dict
        Operator name -> set of tuples ``(w, w1, ..., wn)``, sort-correct for
        the operator. Missing operators have the empty relation.
    valuation : dict
        Propositional variable name -> set of worlds (all of one sort).
    nominals : dict
        Nominal name -> the single world it denotes.
    assignment : dict
        State variable name -> world, used when no assignment is passed.
    """

    sig: object
    worlds: dict
    relations: dict = field(default_factory=dict)
    valuation: dict = field(default_factory=dict)
    nominals: dict = field(default_factory=dict)
    assignment: dict = field(default_factory=dict)
    _sort: dict = field(init=False, repr=False, compare=False)
    _succ: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        sig = self.sig
        worlds = {s: tuple(self.worlds.get(s, ())) for s in sig.sorts}
        errorif(
            set(self.worlds) - set(sig.sorts),
            ModelError,
            f"unknown sorts {sorted(set(self.worlds) - set(sig.sorts))}",
        )
        sort_of = {}
        for s, ws in worlds.items():
            errorif(not ws, ModelError, f"sort {s} has no worlds")
            for w in ws:
                errorif(w in sort_of, ModelError, f"duplicate world id {w!r}")
                sort_of[w] = s
        relations, succ = {}, {}
        for name, tuples in self.relations.items():
            op = sig.op(name)
            want = (op.result_sort,) + op.arg_sorts
            rel = frozenset(tuple(t) for t in tuples)
            for t in rel:
                errorif(
                    len(t) != len(want)
                    or any(sort_of.get(w) != s for w, s in zip(t, want)),
                    ModelError,
                    f"tuple {t} does not fit {name} : {want}",
                )
                succ.setdefault(name, {}).setdefault(t[0], []).append(t[1:])
            relations[name] = rel
        valuation = {}
        for p, ws in self.valuation.items():
            ws = frozenset(ws)
            errorif(
                any(w not in sort_of for w in ws),
                ModelError,
                f"valuation of {p} uses unknown worlds",
            )
            errorif(
                len({sort_of[w] for w in ws}) > 1,
                ModelError,
                f"valuation of {p} mixes sorts",
            )
            valuation[p] = ws
        for name, w in itertools.chain(self.nominals.items(), self.assignment.items()):
            errorif(
                not isinstance(w, str) or w not in sort_of,
                ModelError,
                f"{name} must denote exactly one known world, got {w!r}",
            )
        for attr, value in (
            ("worlds", worlds),
            ("relations", relations),
            ("valuation", valuation),
            ("nominals", dict(self.nominals)),
            ("assignment", dict(self.assignment)),
            ("_sort", sort_of),
            ("_succ", succ),
        ):
            object.__setattr__(self, attr, value)

    def __hash__(self):
        return hash((self.sig, tuple(sorted(self._sort.items()))))

    def sort_of(self, w):
        """Sort of a world id."""
        try:
            return self._sort[w]
        except KeyError:
            raise ModelError(f"unknown world {w!r}") from None

    def successors(self, op, w):
        """Argument tuples ``(w1, ..., wn)`` with ``(w, w1, ..., wn)`` in ``R_op``."""
        return self._succ.get(op, {}).get(w, ())

    def all_worlds(self):
        """Every world id, sorts in signature order."""
        return tuple(w for s in self.sig.sorts for w in self.worlds[s])

    def frame(self):
        """The underlying frame: same worlds and relations, nothing else."""
        return Model(self.sig, self.worlds, self.relations)

    def with_valuation(self, valuation, nominals=None, assignment=None):
        """A model on the same frame with a new valuation."""
        return Model(
            self.sig,
            self.worlds,
            self.relations,
            valuation,
            setdefault(nominals, self.nominals),
            setdefault(assignment, self.assignment),
        )

    def check_symbols(self, tab):
        """Raise `ModelError` if the valuation disagrees with the symbol table sorts."""
        for name, ws in self.valuation.items():
            entry = tab.lookup(name)
            errorif(
                entry is None or entry[0] != PROP,
                ModelError,
                f"{name} is not a propositional variable",
            )
            errorif(
                any(self._sort[w] != entry[1] for w in ws),
                ModelError,
                f"valuation of {name} leaves sort {entry[1]}",
            )
        for kind, table in ((NOMINAL, self.nominals), (SVAR, self.assignment)):
            for name, w in table.items():
                entry = tab.lookup(name)
                errorif(
                    entry != (kind, self._sort[w]),
                    ModelError,
                    f"{name} is not a {kind} of sort {self._sort[w]}",
                )
        for s in self.sig.sorts:
            for name in tab.names(NOMINAL, s):
                errorif(
                    name not in self.nominals,
                    ModelError,
                    f"nominal {name} has no denotation",
                )


def denotation(model, g, sym):
    """World denoted by a nominal or state variable."""
    if isinstance(sym, Nom):
        try:
            return model.nominals[sym.name]
        except KeyError:
            raise UnboundSymbolError(f"nominal {sym.name} has no denotation") from None
    try:
        return g[sym.name]
    except KeyError:
        raise UnboundSymbolError(f"state variable {sym.name} is unassigned") from None


def _sat(model, g, w, phi):
    if isinstance(phi, Prop):
        return w in model.valuation.get(phi.name, ())
    if isinstance(phi, (Nom, SVar)):
        return w == denotation(model, g, phi)
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Neg):
        return not _sat(model, g, w, phi.arg)
    if isinstance(phi, Or):
        return _sat(model, g, w, phi.left) or _sat(model, g, w, phi.right)
    if isinstance(phi, App):
        return any(
            all(_sat(model, g, v, a) for v, a in zip(tup, phi.args))
            for tup in model.successors(phi.op, w)
        )
    if isinstance(phi, At):
        return _sat(model, g, denotation(model, g, phi.symbol), phi.body)
    if isinstance(phi, Forall):
        x = phi.var.name
        return all(
            _sat(model, {**g, x: v}, w, phi.body) for v in model.worlds[phi.var.sort]
        )
    raise TypeError(f"not a formula: {phi!r}")


def satisfies(model, g, w, phi):
    """Decide ``M, g, w |= phi``.

    Parameters
    ----------
    model : Model
    g : dict or None
        State variable name -> world. None uses ``model.assignment``.
    w : str
        World of the same sort as ``phi``.
    phi : Formula
        Well-sorted formula.

    Returns
    -------
    bool

    Raises
    ------
    UnboundSymbolError
        If a free state variable is unassigned or a nominal has no denotation.
    SortError
        If ``w`` is not of the sort of ``phi``.
    """
    g = model.assignment if g is None else g
    if model.sort_of(w) != phi.sort:
        raise SortError((), phi.sort, model.sort_of(w))
    return _sat(model, g, w, phi)


def assignments(model, svars, base=None):
    """Every assignment of ``svars`` to worlds of their sorts, over ``base``."""
    svars = sorted(svars, key=lambda x: x.name)
    base = {} if base is None else dict(base)
    pools = [model.worlds[x.sort] for x in svars]
    for combo in itertools.product(*pools):
        g = dict(base)
        g.update({x.name: v for x, v in zip(svars, combo)})
        yield g


def valid_in_model(model, phi):
    """Whether ``phi`` is true at every world of its sort under every assignment.

    Only the free state variables of ``phi`` are quantified over.
    """
    for g in assignments(model, free_state_vars(phi)):
        for w in model.worlds[phi.sort]:
            if not _sat(model, g, w, phi):
                return False
    return True


def falsifying_points(model, phi):
    """Every ``(g, w)`` at which ``phi`` fails.

    Assignments are enumerated as in `assignments`, worlds in declaration
    order within each assignment.

    Yields
    ------
    g, w : dict, str
    """
    for g in assignments(model, free_state_vars(phi)):
        for w in model.worlds[phi.sort]:
            if not _sat(model, g, w, phi):
                yield g, w


def falsifying_point(model, phi):
    """First ``(g, w)`` at which ``phi`` fails, or None when valid."""
    return next(falsifying_points(model, phi), None)


def valuations(frame, letters):
    """Enumerate valuations of the given propositional variables and nominals.

    Yields
    ------
    valuation, nominals : dict, dict
    """
    props = sorted((a for a in letters if isinstance(a, Prop)), key=lambda a: a.name)
    noms = sorted((a for a in letters if isinstance(a, Nom)), key=lambda a: a.name)
    prop_choices = []
    for p in props:
        ws = frame.worlds[p.sort]
        prop_choices.append(
            [
                frozenset(w for w, keep in zip(ws, bits) if keep)
                for bits in itertools.product((False, True), repeat=len(ws))
            ]
        )
    nom_choices = [frame.worlds[j.sort] for j in noms]
    for vals in itertools.product(*prop_choices):
        for dens in itertools.product(*nom_choices):
            yield (
                {p.name: v for p, v in zip(props, vals)},
                {j.name: d for j, d in zip(noms, dens)},
            )


def valid_in_frame(frame, phi, max_models=100000):
    """Whether ``phi`` is valid in every model based on ``frame``.

    Valuations are enumerated only for the propositional variables and
    nominals occurring in ``phi``.

    Parameters
    ----------
    frame : Model
        Only worlds and relations are used.
    phi : Formula
    max_models : int
        Upper bound on the number of valuations to enumerate.

    Raises
    ------
    ResourceLimitError
        If more than ``max_models`` valuations would be needed.
    """
    letters = atoms(phi)
    count = 1
    for a in letters:
        size = len(frame.worlds[a.sort])
        count *= 2**size if isinstance(a, Prop) else size
    if count > max_models:
        raise ResourceLimitError(
            f"{count} valuations exceed the limit of {max_models}"
        )
    logger.debug("checking %d valuations", count)
    base = frame.frame()
    for valuation, nominals in valuations(base, letters):
        if not valid_in_model(base.with_valuation(valuation, nominals, {}), phi):
            return False
    return True


def random_model(sig, tab, size_bounds=3, seed=0, density=0.5):
    """Draw a random finite model.

    Parameters
    ----------
    sig : Signature
    tab : SymbolTable
    size_bounds : int or dict
        Maximum number of worlds per sort (at least 1). A dict maps sort
        names to bounds; missing sorts use 3.
    seed : int, sequence of int or numpy.random.Generator
        Seed for ``numpy.random.default_rng``; equal seeds give equal models.
    density : float
        Probability that a relation tuple or valuation membership is present.

    Returns
    -------
    Model
        Worlds are named ``<sort>:<i>``. Every state variable of ``tab`` gets
        a default assignment and every nominal a denotation.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    worlds = {}
    for s in sig.sorts:
        bound = size_bounds.get(s, 3) if isinstance(size_bounds, dict) else size_bounds
        errorif(bound < 1, ValueError, f"size bound for {s} must be at least 1")
        n = int(rng.integers(1, bound + 1))
        worlds[s] = tuple(f"{s}:{i}" for i in range(n))
    relations = {}
    for op in sig.operators:
        tuples = list(
            itertools.product(*(worlds[s] for s in (op.result_sort,) + op.arg_sorts))
        )
        keep = rng.random(len(tuples)) < density
        relations[op.name] = {t for t, k in zip(tuples, keep) if k}
    valuation, nominals, assignment = {}, {}, {}
    for s in sig.sorts:
        ws = worlds[s]
        for p in tab.names(PROP, s):
            keep = rng.random(len(ws)) < density
            valuation[p] = {w for w, k in zip(ws, keep) if k}
        for j in tab.names(NOMINAL, s):
            nominals[j] = ws[int(rng.integers(len(ws)))]
        for x in tab.names(SVAR, s):
            assignment[x] = ws[int(rng.integers(len(ws)))]
    return Model(sig, worlds, relations, valuation, nominals, assignment)


def random_assignment(model, tab, rng):
    """Random assignment of every state variable of ``tab``."""
    g = {}
    for s in model.sig.sorts:
        ws = model.worlds[s]
        for x in tab.names(SVAR, s):
            g[x] = ws[int(rng.integers(len(ws)))]
    return g


def generated_submodel(model, roots):
    """Submodel generated by a set of worlds.

    The world set is the least superset of ``roots`` closed under taking the
    argument worlds of relation tuples that start inside it. Relations,
    valuation, nominals and the default assignment are restricted to it.

    A sort left without worlds gets one fresh isolated world with an empty
    valuation. A nominal or assigned state variable whose world is dropped
    is moved to the fresh world of its sort, added if needed.

    Formulas without ``@`` and binders keep their truth value at every
    kept world, under the default assignments of the two models. With
    ``@`` or ``forall`` they may change, since both can reach fresh worlds.
    `context_reach` from a root stays inside the generated world set.
    """
    keep = set(roots)
    for w in keep:
        model.sort_of(w)
    frontier = list(keep)
    while frontier:
        w = frontier.pop()
        for op in model.sig.operators:
            for tup in model.successors(op.name, w):
                for v in tup:
                    if v not in keep:
                        keep.add(v)
                        frontier.append(v)
    worlds = {s: [w for w in model.worlds[s] if w in keep] for s in model.sig.sorts}
    pads = {}

    def pad(sort):
        if sort not in pads:
            name, i = f"{sort}:pad", 0
            while name in model._sort:
                i += 1
                name = f"{sort}:pad{i}"
            pads[sort] = name
            worlds[sort].append(name)
        return pads[sort]

    for s in model.sig.sorts:
        if not worlds[s]:
            pad(s)

    def moved(table):
        return {
            name: w if w in keep else pad(model.sort_of(w)) for name, w in table.items()
        }

    nominals = moved(model.nominals)
    assignment = moved(model.assignment)
    relations = {
        op: {t for t in rel if t[0] in keep} for op, rel in model.relations.items()
    }
    valuation = {p: ws & keep for p, ws in model.valuation.items()}
    return Model(model.sig, worlds, relations, valuation, nominals, assignment)


def context_formula(eta):
    """The formula of a hole-free context."""
    errorif(hole_count(eta) != 0, ValueError, "context still has a hole")
    if isinstance(eta, CtxTop):
        return Top(eta.sort)
    return App(eta.op, tuple(context_formula(a) for a in eta.args), eta.sort)


def context_reach(model, eta, w):
    """Worlds reached from ``w`` along the hole path of a nominal context.

    ``eta(phi)`` is true at ``w`` iff ``phi`` is true at some returned world,
    and the dual ``eta^box(phi)`` iff ``phi`` is true at all of them. The
    returned worlds lie in ``generated_submodel(model, {w})``, so for ``phi``
    without ``@`` and binders ``eta(phi)`` holds at ``w`` in the submodel
    iff it holds in ``model``.
    """
    if isinstance(eta, Hole):
        return frozenset({w})
    errorif(not isinstance(eta, OpCtx), ValueError, "context has no hole")
    i = next(k for k, a in enumerate(eta.args) if hole_count(a))
    others = [
        (k, context_formula(a)) for k, a in enumerate(eta.args) if k != i
    ]
    out = set()
    for tup in model.successors(eta.op, w):
        if all(_sat(model, {}, tup[k], f) for k, f in others):
            out |= context_reach(model, eta.args[i], tup[i])
    return frozenset(out)


def parse_model(text, sig):
    """Parse a ``.mdl`` file.

    Lines are ``world <sort> <id>``, ``rel <op> <w> <w1> ... <wn>``,
    ``val <prop> <w>``, ``nomval <nom> <w>`` and ``assign <svar> <w>``;
    ``#`` starts a comment. A ``val`` line with no world declares an empty
    valuation.
    """
    worlds, relations, valuation, nominals, assignment = {}, {}, {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        head = words[0]
        if head == "world" and len(words) == 3:
            worlds.setdefault(words[1], []).append(words[2])
        elif head == "rel" and len(words) >= 3:
            relations.setdefault(words[1], set()).add(tuple(words[2:]))
        elif head == "val" and len(words) in (2, 3):
            valuation.setdefault(words[1], set()).update(words[2:])
        elif head in ("nomval", "assign") and len(words) == 3:
            table = nominals if head == "nomval" else assignment
            errorif(
                table.get(words[1], words[2]) != words[2],
                ModelError,
                f"line {lineno}: {words[1]} must denote exactly one world",
            )
            table[words[1]] = words[2]
        else:
            raise ModelError(f"line {lineno}: cannot parse {raw.strip()!r}")
    try:
        return Model(sig, worlds, relations, valuation, nominals, assignment)
    except Exception as e:
        if isinstance(e, ModelError):
            raise
        raise ModelError(str(e)) from e


def format_model(model):
    """Inverse of `parse_model`, in a canonical order."""
    lines = []
    for s in model.sig.sorts:
        lines.extend(f"world {s} {w}" for w in model.worlds[s])
    for op in model.sig.operators:
        for t in sorted(model.relations.get(op.name, ())):
            lines.append(" ".join(("rel", op.name) + t))
    for p in sorted(model.valuation):
        ws = sorted(model.valuation[p])
        if not ws:
            lines.append(f"val {p}")
        lines.extend(f"val {p} {w}" for w in ws)
    lines.extend(f"nomval {j} {w}" for j, w in sorted(model.nominals.items()))
    lines.extend(f"assign {x} {w}" for x, w in sorted(model.assignment.items()))
    return "\n".join(lines) + "\n"
