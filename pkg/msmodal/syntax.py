"""Sorted signatures, symbol tables, the formula AST, contexts and substitution.

Formulas are immutable trees. The core connectives are negation, binary
disjunction, operator application (the polyadic diamond), the satisfaction
operator ``@`` and the universal binder; everything else (conjunction,
implication, biconditional, falsum, dual boxes and the existential binder) is
built from these by the constructor functions at the bottom of this module.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Tuple

from .utils import (
    ContextError,
    NotSubstitutableError,
    SignatureError,
    SortError,
    errorif,
)

RESERVED = frozenset(
    {"not", "or", "and", "->", "<->", "op", "box", "@", "forall", "exists"}
)


def _check_identifier(name, what):
    errorif(
        not isinstance(name, str)
        or not name
        or name in RESERVED
        or any(c.isspace() or c in "():;{}#=\"" for c in name)
        or name.startswith("true:")
        or name.startswith("false:"),
        SignatureError,
        f"invalid {what} name {name!r}",
    )


class Operator(NamedTuple):
    """Sorted operator symbol ``name : arg_sorts -> result_sort``."""

    name: str
    arg_sorts: Tuple[str, ...]
    result_sort: str

    @property
    def arity(self):
        """Number of arguments."""
        return len(self.arg_sorts)


@dataclass(frozen=True)
class Signature:
    """A many-sorted signature: sorts plus sorted operator symbols.

    Parameters
    ----------
    sorts : tuple of str
        Declared sort names, unique.
    operators : tuple of Operator
        Operator symbols, unique by name. Every sort they mention must be
        declared. Zero-ary operators are allowed.
    """

    sorts: Tuple[str, ...]
    operators: Tuple[Operator, ...] = ()
    _ops: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sorts", tuple(self.sorts))
        ops = tuple(
            Operator(op.name, tuple(op.arg_sorts), op.result_sort)
            for op in (Operator(*o) for o in self.operators)
        )
        object.__setattr__(self, "operators", ops)
        errorif(
            len(set(self.sorts)) != len(self.sorts),
            SignatureError,
            "duplicate sort names",
        )
        for s in self.sorts:
            _check_identifier(s, "sort")
        table = {}
        for op in ops:
            _check_identifier(op.name, "operator")
            errorif(op.name in table, SignatureError, f"duplicate operator {op.name}")
            for s in op.arg_sorts + (op.result_sort,):
                errorif(
                    s not in self.sorts,
                    SignatureError,
                    f"operator {op.name} uses undeclared sort {s}",
                )
            table[op.name] = op
        object.__setattr__(self, "_ops", table)

    def op(self, name):
        """Look up an operator by name."""
        try:
            return self._ops[name]
        except KeyError:
            raise SignatureError(f"unknown operator {name!r}") from None

    def has_op(self, name):
        """Whether an operator of that name is declared."""
        return name in self._ops

    def ops_with_result(self, sort):
        """Operators whose result sort is ``sort``, in declaration order."""
        return tuple(op for op in self.operators if op.result_sort == sort)


PROP, NOMINAL, SVAR = "prop", "nom", "svar"


@dataclass(frozen=True)
class SymbolTable:
    """Sorted propositional variables, nominals and state variables.

    Each family maps a sort to a set of names. A name is registered at most
    once across all sorts and all three families, so a bare identifier
    determines its kind and sort.
    """

    props: dict = field(default_factory=dict)
    noms: dict = field(default_factory=dict)
    svars: dict = field(default_factory=dict)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        families = (
            (PROP, "props", self.props),
            (NOMINAL, "noms", self.noms),
            (SVAR, "svars", self.svars),
        )
        for kind, attr, family in families:
            frozen = {}
            for sort in sorted(family):
                names = frozenset(family[sort])
                for name in sorted(names):
                    _check_identifier(name, kind)
                    errorif(
                        name in index,
                        SignatureError,
                        f"symbol {name!r} registered twice",
                    )
                    index[name] = (kind, sort)
                frozen[sort] = names
            object.__setattr__(self, attr, frozen)
        object.__setattr__(self, "_index", index)

    def __hash__(self):
        return hash(tuple(sorted(self._index.items())))

    def lookup(self, name):
        """Return ``(kind, sort)`` of a registered name, or None."""
        return self._index.get(name)

    def names(self, kind, sort):
        """Sorted names of the given kind and sort."""
        family = {PROP: self.props, NOMINAL: self.noms, SVAR: self.svars}[kind]
        return tuple(sorted(family.get(sort, ())))

    def atom(self, name):
        """Build the atomic formula for a registered name."""
        entry = self.lookup(name)
        errorif(entry is None, SignatureError, f"unknown symbol {name!r}")
        kind, sort = entry
        return {PROP: Prop, NOMINAL: Nom, SVAR: SVar}[kind](name, sort)

    def check_against(self, sig):
        """Raise if a symbol is registered under a sort the signature lacks."""
        for name, (kind, sort) in self._index.items():
            errorif(
                sort not in sig.sorts,
                SignatureError,
                f"{kind} {name} has undeclared sort {sort}",
            )


class Formula:
    """Base class of formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Prop(Formula):
    """Propositional variable."""

    name: str
    sort: str


@dataclass(frozen=True)
class Nom(Formula):
    """Nominal; true at exactly one world of its sort."""

    name: str
    sort: str


@dataclass(frozen=True)
class SVar(Formula):
    """State variable; true at the world assigned to it."""

    name: str
    sort: str


@dataclass(frozen=True)
class Top(Formula):
    """Truth constant of a sort."""

    sort: str


@dataclass(frozen=True)
class Neg(Formula):
    """Negation."""

    arg: Formula

    @property
    def sort(self):
        return self.arg.sort


@dataclass(frozen=True)
class Or(Formula):
    """Binary disjunction."""

    left: Formula
    right: Formula

    @property
    def sort(self):
        return self.left.sort


@dataclass(frozen=True)
class App(Formula):
    """Operator application ``op(args)``, the polyadic diamond."""

    op: str
    args: Tuple[Formula, ...]
    sort: str

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class At(Formula):
    """Satisfaction operator ``@_symbol^sort body``."""

    symbol: Formula
    body: Formula
    sort: str


@dataclass(frozen=True)
class Forall(Formula):
    """Universal binder over a state variable."""

    var: SVar
    body: Formula

    @property
    def sort(self):
        return self.body.sort


def is_state_symbol(phi):
    """Whether ``phi`` is a nominal or a state variable."""
    return isinstance(phi, (Nom, SVar))


def children(phi):
    """Immediate subformulas, state-symbol subscripts excluded."""
    if isinstance(phi, Neg):
        return (phi.arg,)
    if isinstance(phi, Or):
        return (phi.left, phi.right)
    if isinstance(phi, App):
        return phi.args
    if isinstance(phi, (At, Forall)):
        return (phi.body,)
    return ()


def depth(phi):
    """Nesting depth; atoms have depth 0."""
    kids = children(phi)
    return 1 + max(depth(k) for k in kids) if kids else 0


def constructs(phi):
    """Names of the node classes used in ``phi`` (subscripts and binders count)."""
    out = {type(phi).__name__}
    if isinstance(phi, At):
        out.add(type(phi.symbol).__name__)
    if isinstance(phi, Forall):
        out.add("SVar")
    for k in children(phi):
        out |= constructs(k)
    return frozenset(out)


def state_symbols(phi):
    """Every nominal and state variable occurring in ``phi``, bound or free."""
    if is_state_symbol(phi):
        return frozenset({phi})
    out = set()
    if isinstance(phi, At):
        out.add(phi.symbol)
    if isinstance(phi, Forall):
        out.add(phi.var)
    for k in children(phi):
        out |= state_symbols(k)
    return frozenset(out)


def free_state_vars(phi):
    """State variables with an occurrence not under a binder for them.

    Subscripts of ``@`` count as occurrences.

    Parameters
    ----------
    phi : Formula
        Well-sorted formula.

    Returns
    -------
    frozenset of SVar
    """
    if isinstance(phi, SVar):
        return frozenset({phi})
    if isinstance(phi, Forall):
        return free_state_vars(phi.body) - {phi.var}
    out = set()
    if isinstance(phi, At) and isinstance(phi.symbol, SVar):
        out.add(phi.symbol)
    for k in children(phi):
        out |= free_state_vars(k)
    return frozenset(out)


def atoms(phi):
    """Propositional variables and nominals occurring in ``phi``."""
    if isinstance(phi, (Prop, Nom)):
        return frozenset({phi})
    out = set()
    if isinstance(phi, At) and isinstance(phi.symbol, Nom):
        out.add(phi.symbol)
    for k in children(phi):
        out |= atoms(k)
    return frozenset(out)


def _check_symbol(tab, sym, path):
    kind = {Prop: "prop", Nom: "nom", SVar: "svar"}[type(sym)]
    entry = tab.lookup(sym.name)
    if entry is None:
        raise SortError(path, sym.sort, "undeclared", f"undeclared symbol {sym.name!r}")
    if entry != (kind, sym.sort):
        raise SortError(path, f"{entry[0]}:{entry[1]}", f"{kind}:{sym.sort}")


def _sort_of(sig, tab, phi, path):
    if isinstance(phi, (Prop, Nom, SVar)):
        _check_symbol(tab, phi, path)
        return phi.sort
    if isinstance(phi, Top):
        if phi.sort not in sig.sorts:
            raise SortError(path, "declared sort", phi.sort)
        return phi.sort
    if isinstance(phi, Neg):
        return _sort_of(sig, tab, phi.arg, path + (0,))
    if isinstance(phi, Or):
        left = _sort_of(sig, tab, phi.left, path + (0,))
        right = _sort_of(sig, tab, phi.right, path + (1,))
        if left != right:
            raise SortError(path + (1,), left, right)
        return left
    if isinstance(phi, App):
        found = [_sort_of(sig, tab, a, path + (i,)) for i, a in enumerate(phi.args)]
        if not sig.has_op(phi.op):
            raise SortError(path, "declared operator", phi.op)
        op = sig.op(phi.op)
        if len(found) != op.arity:
            raise SortError(path, f"{op.arity} arguments", f"{len(found)} arguments")
        for i, (want, got) in enumerate(zip(op.arg_sorts, found)):
            if want != got:
                raise SortError(path + (i,), want, got)
        if phi.sort != op.result_sort:
            raise SortError(path, op.result_sort, phi.sort)
        return phi.sort
    if isinstance(phi, At):
        body = _sort_of(sig, tab, phi.body, path + (0,))
        if not is_state_symbol(phi.symbol):
            raise SortError(path, "state symbol", type(phi.symbol).__name__)
        _check_symbol(tab, phi.symbol, path)
        if phi.symbol.sort != body:
            raise SortError(path + (0,), phi.symbol.sort, body)
        if phi.sort not in sig.sorts:
            raise SortError(path, "declared sort", phi.sort)
        return phi.sort
    if isinstance(phi, Forall):
        body = _sort_of(sig, tab, phi.body, path + (0,))
        if not isinstance(phi.var, SVar):
            raise SortError(path, "state variable", type(phi.var).__name__)
        _check_symbol(tab, phi.var, path)
        return body
    raise SortError(path, "formula", type(phi).__name__)


def check_well_sorted(sig, tab, phi, sort=None):
    """Check that ``phi`` is a well-formed formula, optionally of a given sort.

    The first ill-sorted subterm in leftmost-innermost order is reported.

    Parameters
    ----------
    sig : Signature
    tab : SymbolTable
    phi : Formula
    sort : str, optional
        Sort ``phi`` must have. If None only internal consistency is checked.

    Returns
    -------
    sort : str
        The sort of ``phi``.

    Raises
    ------
    SortError
        With ``path`` (child indices from the root), ``expected`` and ``found``.
    """
    found = _sort_of(sig, tab, phi, ())
    if sort is not None and found != sort:
        raise SortError((), sort, found)
    return found


def well_sorted(sig, tab, phi, sort=None):
    """Boolean form of `check_well_sorted`."""
    try:
        check_well_sorted(sig, tab, phi, sort)
    except SortError:
        return False
    return True


def substitute(phi, x, z):
    """Replace the free occurrences of state variable ``x`` by state symbol ``z``.

    Occurrences as ``@`` subscripts are replaced too. No bound variable is
    renamed: if a free occurrence of ``x`` lies under a binder for ``z`` the
    substitution is refused.

    Parameters
    ----------
    phi : Formula
    x : SVar
    z : Nom or SVar
        Same sort as ``x``.

    Returns
    -------
    Formula

    Raises
    ------
    NotSubstitutableError
        If ``z`` is not substitutable for ``x`` in ``phi``.
    """
    errorif(
        not isinstance(x, SVar), TypeError, "can only substitute for a state variable"
    )
    errorif(not is_state_symbol(z), TypeError, "can only substitute a state symbol")
    if x.sort != z.sort:
        raise SortError((), x.sort, z.sort)

    def replace(sym, captured):
        if sym != x:
            return sym
        if captured:
            raise NotSubstitutableError(
                f"{z.name} is captured when substituted for {x.name}"
            )
        return z

    def go(node, captured):
        if isinstance(node, SVar):
            return replace(node, captured)
        if isinstance(node, (Prop, Nom, Top)):
            return node
        if isinstance(node, Neg):
            return Neg(go(node.arg, captured))
        if isinstance(node, Or):
            return Or(go(node.left, captured), go(node.right, captured))
        if isinstance(node, App):
            return App(node.op, tuple(go(a, captured) for a in node.args), node.sort)
        if isinstance(node, At):
            symbol = replace(node.symbol, captured)
            return At(symbol, go(node.body, captured), node.sort)
        if isinstance(node, Forall):
            if node.var == x:
                return node
            return Forall(node.var, go(node.body, captured or node.var == z))
        raise TypeError(f"not a formula: {node!r}")

    return go(phi, False)


def substitutable(phi, x, z):
    """Whether `substitute` succeeds."""
    try:
        substitute(phi, x, z)
    except NotSubstitutableError:
        return False
    return True


class Context:
    """Base class of context nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Hole(Context):
    """The hole ``#_sort``."""

    sort: str


@dataclass(frozen=True)
class CtxTop(Context):
    """A truth-constant filler."""

    sort: str


@dataclass(frozen=True)
class OpCtx(Context):
    """Operator node of a context."""

    op: str
    args: Tuple[Context, ...]
    sort: str

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


def hole_count(eta):
    """Number of holes in a context."""
    if isinstance(eta, Hole):
        return 1
    if isinstance(eta, OpCtx):
        return sum(hole_count(a) for a in eta.args)
    return 0


_ONE_HOLE = "context must have exactly one hole"


def is_nominal_context(eta):
    """Whether ``eta`` has exactly one hole."""
    return hole_count(eta) == 1


def hole_sort(eta):
    """Sort of the unique hole of a nominal context."""
    errorif(not is_nominal_context(eta), ContextError, _ONE_HOLE)
    if isinstance(eta, Hole):
        return eta.sort
    for a in eta.args:
        if hole_count(a):
            return hole_sort(a)


def check_context(sig, eta):
    """Raise `SortError` unless every operator node of ``eta`` fits the signature."""

    def go(node, path):
        if isinstance(node, (Hole, CtxTop)):
            if node.sort not in sig.sorts:
                raise SortError(path, "declared sort", node.sort)
            return node.sort
        found = [go(a, path + (i,)) for i, a in enumerate(node.args)]
        if not sig.has_op(node.op):
            raise SortError(path, "declared operator", node.op)
        op = sig.op(node.op)
        if len(found) != op.arity:
            raise SortError(path, f"{op.arity} arguments", f"{len(found)} arguments")
        for i, (want, got) in enumerate(zip(op.arg_sorts, found)):
            if want != got:
                raise SortError(path + (i,), want, got)
        if node.sort != op.result_sort:
            raise SortError(path, op.result_sort, node.sort)
        return node.sort

    return go(eta, ())


def apply_context(eta, phi):
    """Plug ``phi`` into the hole of a nominal context.

    ``CtxTop`` fillers become `Top` formulas.

    Raises
    ------
    ContextError
        If ``eta`` does not have exactly one hole or the hole sort differs from
        the sort of ``phi``.
    """
    want = hole_sort(eta)
    errorif(
        want != phi.sort,
        ContextError,
        f"hole of sort {want} cannot take a formula of sort {phi.sort}",
    )

    def go(node):
        if isinstance(node, Hole):
            return phi
        if isinstance(node, CtxTop):
            return Top(node.sort)
        return App(node.op, tuple(go(a) for a in node.args), node.sort)

    return go(eta)


def dual_context(eta):
    """Return the dual ``eta^box`` of a nominal context as a formula macro.

    The dual maps ``phi`` to ``not eta(not phi)``.
    """
    errorif(not is_nominal_context(eta), ContextError, _ONE_HOLE)

    def eta_box(phi):
        return Neg(apply_context(eta, Neg(phi)))

    return eta_box


def top(sort):
    """Truth constant."""
    return Top(sort)


def bottom(sort):
    """Falsum, ``not true``."""
    return Neg(Top(sort))


def conj(a, b):
    """Conjunction ``not (not a or not b)``."""
    return Neg(Or(Neg(a), Neg(b)))


def implies(a, b):
    """Implication ``not a or b``."""
    return Or(Neg(a), b)


def iff(a, b):
    """Biconditional ``(a -> b) and (b -> a)``."""
    return conj(implies(a, b), implies(b, a))


def exists(x, phi):
    """Existential binder ``not forall x not phi``."""
    return Neg(Forall(x, Neg(phi)))


def app(sig, name, args=()):
    """Apply a declared operator, taking the result sort from the signature."""
    return App(name, tuple(args), sig.op(name).result_sort)


def box(sig, name, args=()):
    """Dual operator ``not op(not a1, ..., not an)``."""
    return Neg(App(name, tuple(Neg(a) for a in args), sig.op(name).result_sort))


def put(seq, pos, item):
    """Insert ``item`` into ``seq`` at 1-based argument position ``pos``."""
    seq = tuple(seq)
    errorif(not 1 <= pos <= len(seq) + 1, ValueError, f"position {pos} out of range")
    return seq[: pos - 1] + (item,) + seq[pos - 1 :]


def split_implication(phi):
    """Return ``(a, b)`` if ``phi`` is ``a -> b``, else None."""
    if isinstance(phi, Or) and isinstance(phi.left, Neg):
        return phi.left.arg, phi.right
    return None
