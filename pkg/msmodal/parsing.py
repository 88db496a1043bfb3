"""Concrete syntax: s-expression formulas and contexts, and ``.sig`` files.

Formula grammar::

    f ::= ident | true:<sort> | false:<sort>
        | (not f) | (or f f) | (and f f) | (-> f f) | (<-> f f)
        | (op <name> f ...) | (box <name> f ...)
        | (@ <statesym> <sort> f) | (forall <svar> f) | (exists <svar> f)

Sugar expands at parse time. The printer re-sugars ``<->``, ``and``,
``exists`` and ``->`` (tried in that order); boxes and falsum print expanded.
"""

import re
from typing import NamedTuple

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
    check_context,
    check_well_sorted,
    conj,
    exists,
    iff,
    implies,
)
from .utils import FormulaSyntaxError, SignatureError

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")


class Atom(NamedTuple):
    """A bare token with its character offset."""

    text: str
    pos: int


class SList(NamedTuple):
    """A parenthesized list with the offset of its opening paren."""

    items: tuple
    pos: int


def read_sexpr(text, start=0):
    """Read one s-expression from ``text``.

    Returns
    -------
    node : Atom or SList
    end : int
        Offset just past the expression.
    """
    stack = []
    pos = start
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError("unexpected end of input", len(text))
        pos = m.end()
        if m.group(1):
            stack.append((m.start(1), []))
            continue
        if m.group(2):
            if not stack:
                raise FormulaSyntaxError("unbalanced ')'", m.start(2))
            open_pos, items = stack.pop()
            node = SList(tuple(items), open_pos)
        else:
            node = Atom(m.group(3), m.start(3))
        if not stack:
            return node, pos
        stack[-1][1].append(node)


def read_one(text):
    """Read exactly one s-expression, rejecting trailing input."""
    node, end = read_sexpr(text)
    rest = text[end:]
    if rest.strip():
        raise FormulaSyntaxError("trailing input", len(text) - len(rest.lstrip()))
    return node


def split_sexprs(text):
    """Split text holding several s-expressions into their source strings."""
    out, pos = [], 0
    while text[pos:].strip():
        _, end = read_sexpr(text, pos)
        out.append(text[pos:end].strip())
        pos = end
    return out


def _expect_atom(node, what):
    if not isinstance(node, Atom):
        raise FormulaSyntaxError(f"expected {what}", node.pos)
    return node.text


def _sorted_constant(node, sig):
    head, _, sort = node.text.partition(":")
    if sort not in sig.sorts:
        raise FormulaSyntaxError(f"unknown sort {sort!r}", node.pos)
    return head, sort


def _state_symbol(node, tab):
    name = _expect_atom(node, "state symbol")
    entry = tab.lookup(name)
    if entry is None or entry[0] not in (NOMINAL, SVAR):
        raise FormulaSyntaxError(f"{name!r} is not a state symbol", node.pos)
    kind, sort = entry
    return Nom(name, sort) if kind == NOMINAL else SVar(name, sort)


def _formula(node, sig, tab):
    if isinstance(node, Atom):
        text = node.text
        if text.startswith(("true:", "false:")):
            head, sort = _sorted_constant(node, sig)
            return Top(sort) if head == "true" else Neg(Top(sort))
        entry = tab.lookup(text)
        if entry is None:
            raise FormulaSyntaxError(f"unknown symbol {text!r}", node.pos)
        kind, sort = entry
        return {PROP: Prop, NOMINAL: Nom, SVAR: SVar}[kind](text, sort)
    if not node.items:
        raise FormulaSyntaxError("empty list", node.pos)
    head = _expect_atom(node.items[0], "connective")
    rest = node.items[1:]

    def arity(n):
        if len(rest) != n:
            raise FormulaSyntaxError(
                f"{head} takes {n} arguments, got {len(rest)}", node.pos
            )

    if head == "not":
        arity(1)
        return Neg(_formula(rest[0], sig, tab))
    if head in ("or", "and", "->", "<->"):
        arity(2)
        a, b = (_formula(r, sig, tab) for r in rest)
        build = {"or": Or, "and": conj, "->": implies, "<->": iff}[head]
        return build(a, b)
    if head in ("op", "box"):
        if not rest:
            raise FormulaSyntaxError(f"{head} needs an operator name", node.pos)
        name = _expect_atom(rest[0], "operator name")
        if not sig.has_op(name):
            raise FormulaSyntaxError(f"unknown operator {name!r}", rest[0].pos)
        args = tuple(_formula(r, sig, tab) for r in rest[1:])
        sort = sig.op(name).result_sort
        if head == "op":
            return App(name, args, sort)
        return Neg(App(name, tuple(Neg(a) for a in args), sort))
    if head == "@":
        arity(3)
        sym = _state_symbol(rest[0], tab)
        sort = _expect_atom(rest[1], "sort")
        if sort not in sig.sorts:
            raise FormulaSyntaxError(f"unknown sort {sort!r}", rest[1].pos)
        return At(sym, _formula(rest[2], sig, tab), sort)
    if head in ("forall", "exists"):
        arity(2)
        var = _state_symbol(rest[0], tab)
        if not isinstance(var, SVar):
            raise FormulaSyntaxError("binders take state variables", rest[0].pos)
        body = _formula(rest[1], sig, tab)
        return Forall(var, body) if head == "forall" else exists(var, body)
    raise FormulaSyntaxError(f"unknown connective {head!r}", node.items[0].pos)


def parse_formula(text, sig, tab, sort=None, check=True):
    """Parse formula text into the core AST.

    Parameters
    ----------
    text : str
        Formula in prefix s-expression syntax.
    sig : Signature
    tab : SymbolTable
    sort : str, optional
        If given (and ``check``), the formula must have this sort.
    check : bool
        Run `check_well_sorted` on the result.

    Returns
    -------
    Formula

    Raises
    ------
    FormulaSyntaxError
        On malformed text, with the character offset.
    SortError
        If ``check`` and the formula is ill-sorted.
    """
    phi = _formula(read_one(text), sig, tab)
    if check:
        check_well_sorted(sig, tab, phi, sort)
    return phi


def _split_iff(phi):
    pair = _split_and(phi)
    if pair is None:
        return None
    left, right = (_split_implies(p) for p in pair)
    if left is None or right is None:
        return None
    if left[0] == right[1] and left[1] == right[0]:
        return left
    return None


def _split_and(phi):
    if (
        isinstance(phi, Neg)
        and isinstance(phi.arg, Or)
        and isinstance(phi.arg.left, Neg)
        and isinstance(phi.arg.right, Neg)
    ):
        return phi.arg.left.arg, phi.arg.right.arg
    return None


def _split_implies(phi):
    if isinstance(phi, Or) and isinstance(phi.left, Neg):
        return phi.left.arg, phi.right
    return None


def _split_exists(phi):
    if (
        isinstance(phi, Neg)
        and isinstance(phi.arg, Forall)
        and isinstance(phi.arg.body, Neg)
    ):
        return phi.arg.var, phi.arg.body.arg
    return None


def print_formula(phi):
    """Print a formula in the concrete syntax, one line, single spaces."""
    parts = []

    def emit(node):
        sugar = _split_iff(node)
        if sugar is not None:
            return group("<->", sugar)
        sugar = _split_and(node)
        if sugar is not None:
            return group("and", sugar)
        sugar = _split_exists(node)
        if sugar is not None:
            parts.append("(exists " + sugar[0].name + " ")
            emit(sugar[1])
            parts.append(")")
            return
        sugar = _split_implies(node)
        if sugar is not None:
            return group("->", sugar)
        if isinstance(node, (Prop, Nom, SVar)):
            parts.append(node.name)
        elif isinstance(node, Top):
            parts.append("true:" + node.sort)
        elif isinstance(node, Neg):
            group("not", (node.arg,))
        elif isinstance(node, Or):
            group("or", (node.left, node.right))
        elif isinstance(node, App):
            group("op " + node.op, node.args)
        elif isinstance(node, At):
            group(f"@ {node.symbol.name} {node.sort}", (node.body,))
        elif isinstance(node, Forall):
            group("forall " + node.var.name, (node.body,))
        else:
            raise TypeError(f"not a formula: {node!r}")

    def group(head, args):
        parts.append("(" + head)
        for a in args:
            parts.append(" ")
            emit(a)
        parts.append(")")

    emit(phi)
    return "".join(parts)


def _context(node, sig):
    if isinstance(node, Atom):
        if node.text.startswith("#:"):
            return Hole(_sorted_constant(node, sig)[1])
        if node.text.startswith("true:"):
            return CtxTop(_sorted_constant(node, sig)[1])
        raise FormulaSyntaxError(f"unexpected {node.text!r} in context", node.pos)
    if len(node.items) < 2 or _expect_atom(node.items[0], "op") != "op":
        raise FormulaSyntaxError("contexts are built with (op ...)", node.pos)
    name = _expect_atom(node.items[1], "operator name")
    if not sig.has_op(name):
        raise FormulaSyntaxError(f"unknown operator {name!r}", node.items[1].pos)
    args = tuple(_context(a, sig) for a in node.items[2:])
    return OpCtx(name, args, sig.op(name).result_sort)


def parse_context(text, sig):
    """Parse a context: ``#:<sort>``, ``true:<sort>`` or ``(op <name> c ...)``."""
    eta = _context(read_one(text), sig)
    check_context(sig, eta)
    return eta


def print_context(eta):
    """Print a context in the syntax read by `parse_context`."""
    if isinstance(eta, Hole):
        return "#:" + eta.sort
    if isinstance(eta, CtxTop):
        return "true:" + eta.sort
    return "(op " + " ".join([eta.op] + [print_context(a) for a in eta.args]) + ")"


def parse_signature(text):
    """Parse a ``.sig`` file.

    Lines are ``sort <name>``, ``op <name> : <s1> ... <sn> -> <s>``,
    ``prop|nom|svar <name> : <s>``; ``#`` starts a comment.

    Returns
    -------
    sig : Signature
    tab : SymbolTable
    """
    sorts, ops = [], []
    families = {"prop": {}, "nom": {}, "svar": {}}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        try:
            if words[0] == "sort" and len(words) == 2:
                sorts.append(words[1])
            elif words[0] == "op" and words[2] == ":" and words[-2] == "->":
                ops.append(Operator(words[1], tuple(words[3:-2]), words[-1]))
            elif words[0] in families and len(words) == 4 and words[2] == ":":
                families[words[0]].setdefault(words[3], set()).add(words[1])
            else:
                raise IndexError
        except IndexError:
            msg = f"line {lineno}: cannot parse {raw.strip()!r}"
            raise SignatureError(msg) from None
    sig = Signature(tuple(sorts), tuple(ops))
    tab = SymbolTable(families["prop"], families["nom"], families["svar"])
    tab.check_against(sig)
    return sig, tab


def format_signature(sig, tab):
    """Inverse of `parse_signature`, in a canonical order."""
    lines = ["sort " + s for s in sig.sorts]
    for op in sig.operators:
        words = ["op", op.name, ":", *op.arg_sorts, "->", op.result_sort]
        lines.append(" ".join(words))
    for kind in (PROP, NOMINAL, SVAR):
        for s in sig.sorts:
            lines.extend(f"{kind} {name} : {s}" for name in tab.names(kind, s))
    return "\n".join(lines) + "\n"
