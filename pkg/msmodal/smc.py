"""The SMC machine case study.

The signature encodes the syntax and the machine states of a small
imperative language as sorts and operators; the theory states the machine's
transitions as dynamic logic axioms over ``config(vs, mem)`` formulas.
``[pi] gamma`` is the dual of the two-argument operator ``exec``:
``box(exec, pi, gamma) = not exec(not pi, not gamma)``.

`smc_run` is an independent concrete interpreter for the same transitions;
`build_pprime_proof` replays the proof that the example program leaves
``m`` set to 1.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import NamedTuple

from .library import LibraryEntry, ProofBuilder
from .proof import AxiomGenerator, Theory
from .syntax import (
    App,
    At,
    Neg,
    Operator,
    Prop,
    Signature,
    SVar,
    SymbolTable,
    box,
    conj,
    iff,
    implies,
    split_implication,
)
from .utils import (
    FormulaSyntaxError,
    OutOfFuelError,
    SideConditionError,
    SignatureError,
    StuckError,
    errorif,
    setdefault,
)

logger = logging.getLogger(__name__)

SMC_SORTS = (
    "Nat",
    "Var",
    "Bool",
    "AExp",
    "BExp",
    "Stmt",
    "Val",
    "ValStack",
    "Mem",
    "CtrlStack",
    "Config",
)

# fixed operators; numerals and program variables are added per signature
_OPERATORS = (
    ("true", (), "Bool"),
    ("false", (), "Bool"),
    ("nat2aexp", ("Nat",), "AExp"),
    ("var2aexp", ("Var",), "AExp"),
    ("add", ("AExp", "AExp"), "AExp"),
    ("le", ("AExp", "AExp"), "BExp"),
    ("assign", ("Var", "AExp"), "Stmt"),
    ("ite", ("BExp", "Stmt", "Stmt"), "Stmt"),
    ("while", ("BExp", "Stmt"), "Stmt"),
    ("skip", (), "Stmt"),
    ("stmt_seq", ("Stmt", "Stmt"), "Stmt"),
    ("nat2val", ("Nat",), "Val"),
    ("bool2val", ("Bool",), "Val"),
    ("nil", (), "ValStack"),
    ("cons", ("Val", "ValStack"), "ValStack"),
    ("empty", (), "Mem"),
    ("set", ("Mem", "Var", "Nat"), "Mem"),
    ("get", ("Var", "Nat"), "Mem"),
    ("c_a", ("AExp",), "CtrlStack"),
    ("c_b", ("BExp",), "CtrlStack"),
    ("c_s", ("Stmt",), "CtrlStack"),
    ("asgn", ("Var",), "CtrlStack"),
    ("plus", (), "CtrlStack"),
    ("leq", (), "CtrlStack"),
    ("test", ("Val",), "CtrlStack"),
    ("seq", ("CtrlStack", "CtrlStack"), "CtrlStack"),
    ("union", ("CtrlStack", "CtrlStack"), "CtrlStack"),
    ("star", ("CtrlStack",), "CtrlStack"),
    ("config", ("ValStack", "Mem"), "Config"),
    ("exec", ("CtrlStack", "Config"), "Config"),
)

DEFAULT_VARIABLES = ("i1", "i2", "m", "x", "y")
DEFAULT_MAX_NAT = 8
DEFAULT_FUEL = 10000

PGM_TEXT = "i1 := 1; i2 := 2; if i1 <= i2 then m := i1 else m := i2"


class SMCBundle(NamedTuple):
    """The SMC signature with the symbols the theory axioms are stated in.

    Parameters
    ----------
    sig : Signature
    tab : SymbolTable
        Props ``vs : ValStack``, ``mem : Mem``, ``gamma : Config``, ``pi,
        pi2 : CtrlStack`` and the state variable ``mem2 : Mem``.
    variables : tuple of str
        Program variables, each a constant of sort ``Var``.
    max_nat : int
        Numerals ``0`` to ``max_nat`` are constants of sort ``Nat``.
    """

    sig: Signature
    tab: SymbolTable
    variables: tuple
    max_nat: int


def build_smc_signature(variables=DEFAULT_VARIABLES, max_nat=DEFAULT_MAX_NAT):
    """Build the SMC signature bundle.

    Parameters
    ----------
    variables : sequence of str
        Program variable names.
    max_nat : int
        Largest numeral constant.

    Returns
    -------
    SMCBundle
    """
    errorif(max_nat < 1, ValueError, "max_nat must be at least 1")
    variables = tuple(dict.fromkeys(variables))
    numerals = tuple(Operator(str(n), (), "Nat") for n in range(max_nat + 1))
    names = tuple(Operator(x, (), "Var") for x in variables)
    ops = numerals + names + tuple(Operator(*o) for o in _OPERATORS)
    sig = Signature(SMC_SORTS, ops)
    tab = SymbolTable(
        props={
            "ValStack": {"vs"},
            "Mem": {"mem"},
            "Config": {"gamma"},
            "CtrlStack": {"pi", "pi2"},
        },
        svars={"Mem": {"mem2"}},
    )
    tab.check_against(sig)
    return SMCBundle(sig, tab, variables, max_nat)


def _op(name, *args):
    sort = _RESULT.get(name, "Nat" if name.isdigit() else "Var")
    return App(name, tuple(args), sort)


_RESULT = {name: result for name, _, result in _OPERATORS}


def nat_term(sig, n):
    """Numeral constant for ``n``."""
    errorif(
        isinstance(n, bool) or not isinstance(n, int) or not sig.has_op(str(n)),
        SignatureError,
        f"no numeral {n!r} in the signature",
    )
    return _op(str(n))


def var_term(sig, x):
    """Program variable constant ``x``."""
    errorif(
        not sig.has_op(x) or sig.op(x).result_sort != "Var",
        SignatureError,
        f"no program variable {x!r} in the signature",
    )
    return _op(x)


def val_term(sig, v):
    """Value term: ``bool2val(true|false)`` for booleans, ``nat2val(n)`` else."""
    if isinstance(v, bool):
        return _op("bool2val", _op("true" if v else "false"))
    return _op("nat2val", nat_term(sig, v))


def stack_term(sig, values, tail=None):
    """Value stack term, top first, ending in ``tail`` (default ``nil``)."""
    out = _op("nil") if tail is None else tail
    for v in reversed(tuple(values)):
        out = _op("cons", val_term(sig, v), out)
    return out


def memory_term(sig, memory, base=None):
    """Memory term setting each ``(x, n)`` in order on top of ``base``."""
    out = _op("empty") if base is None else base
    items = memory.items() if hasattr(memory, "items") else memory
    for x, n in items:
        out = _op("set", out, var_term(sig, x), nat_term(sig, n))
    return out


def config_term(sig, values, memory):
    """``config(stack, memory)`` for concrete contents."""
    return _op("config", stack_term(sig, values), memory_term(sig, memory))


def exec_box(sig, ctrl, gamma):
    """``[ctrl] gamma``."""
    return box(sig, "exec", (ctrl, gamma))


def _seq(*items):
    out = items[-1]
    for item in reversed(items[:-1]):
        out = _op("seq", item, out)
    return out


def _same_value(a, b):
    return type(a) is type(b) and a == b


@dataclass(frozen=True)
class ConcreteConfig:
    """Machine state: value stack (top first) and memory.

    Identifiers missing from ``memory`` read as 0.
    """

    stack: tuple = ()
    memory: dict = field(default_factory=dict)

    def lookup(self, x):
        return self.memory.get(x, 0)

    def assign(self, x, n):
        """Copy with ``x`` set to ``n``."""
        return ConcreteConfig(self.stack, {**self.memory, x: n})

    def push(self, v):
        return ConcreteConfig((v,) + self.stack, self.memory)

    def term(self, sig):
        """The ground ``Config`` formula of this state."""
        return config_term(sig, self.stack, self.memory)

    def __str__(self):
        stack = " . ".join(_show_value(v) for v in self.stack + ("nil",))
        mem = ", ".join(f"{x}={n}" for x, n in sorted(self.memory.items()))
        return f"stack: {stack}\nmemory: {{{mem}}}"


def _show_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def parse_memory(text):
    """Parse ``"i=3,j=4"`` into a memory dict."""
    memory = {}
    for item in text.split(","):
        if not item.strip():
            continue
        x, eq, n = item.partition("=")
        errorif(
            not eq or not x.strip() or not n.strip().isdigit(),
            ValueError,
            f"bad memory entry {item.strip()!r}",
        )
        memory[x.strip()] = int(n)
    return memory


def _nat_value(t):
    errorif(
        not (isinstance(t, App) and t.op.isdigit()),
        ValueError,
        f"not a numeral: {t!r}",
    )
    return int(t.op)


def _value(t):
    if isinstance(t, App) and t.op == "nat2val":
        return _nat_value(t.args[0])
    if isinstance(t, App) and t.op == "bool2val" and t.args[0].op in ("true", "false"):
        return t.args[0].op == "true"
    raise ValueError(f"not a ground value: {t!r}")


def _memory(t):
    if isinstance(t, App) and t.op == "empty":
        return {}
    if isinstance(t, App) and t.op == "set":
        base = _memory(t.args[0])
        x = t.args[1]
        errorif(not isinstance(x, App) or x.args, ValueError, f"not a variable: {x!r}")
        base[x.op] = _nat_value(t.args[2])
        return base
    raise ValueError(f"not a ground memory: {t!r}")


def concrete_config(term):
    """Read a ground ``config(stack, memory)`` formula back into a state.

    Raises
    ------
    ValueError
        If the formula is not built from ``cons``/``nil`` and
        ``set``/``empty`` over constants.
    """
    errorif(
        not (isinstance(term, App) and term.op == "config"),
        ValueError,
        "expected a config(..) term",
    )
    stack, t = [], term.args[0]
    while isinstance(t, App) and t.op == "cons":
        stack.append(_value(t.args[0]))
        t = t.args[1]
    ends_in_nil = isinstance(t, App) and t.op == "nil"
    errorif(not ends_in_nil, ValueError, "stack does not end in nil")
    return ConcreteConfig(tuple(stack), _memory(term.args[1]))


def split_step_axiom(phi):
    """Split ``pre -> [ctrl] post`` into ``(pre, ctrl, post)``, else None."""
    parts = split_implication(phi)
    if parts is None:
        return None
    pre, boxed = parts
    if not (
        isinstance(boxed, Neg)
        and isinstance(boxed.arg, App)
        and boxed.arg.op == "exec"
        and all(isinstance(a, Neg) for a in boxed.arg.args)
    ):
        return None
    ctrl, post = (a.arg for a in boxed.arg.args)
    return pre, ctrl, post


# -- theory axioms --------------------------------------------------------


def _nat(sig, name, n):
    try:
        return nat_term(sig, n)
    except SignatureError as e:
        raise SideConditionError(name, str(e)) from None


def _var(sig, name, x):
    try:
        return var_term(sig, x)
    except SignatureError as e:
        raise SideConditionError(name, str(e)) from None


def _val(sig, name, v):
    try:
        return val_term(sig, v)
    except SignatureError as e:
        raise SideConditionError(name, str(e)) from None


def _a_union(sig, pi, pi2, gamma):
    return iff(
        exec_box(sig, _op("union", pi, pi2), gamma),
        conj(exec_box(sig, pi, gamma), exec_box(sig, pi2, gamma)),
    )


def _a_seq(sig, pi, pi2, gamma):
    return iff(
        exec_box(sig, _op("seq", pi, pi2), gamma),
        exec_box(sig, pi, exec_box(sig, pi2, gamma)),
    )


def _a_star(sig, pi, gamma):
    star = _op("star", pi)
    return iff(
        exec_box(sig, star, gamma),
        conj(gamma, exec_box(sig, pi, exec_box(sig, star, gamma))),
    )


def _a_test(sig, v, vs, mem):
    val = _val(sig, "A_TEST", v)
    return implies(
        _op("config", _op("cons", val, vs), mem),
        exec_box(sig, _op("test", val), _op("config", vs, mem)),
    )


def _a_neg_test(sig, v, v2, vs, mem, gamma):
    if _same_value(v, v2):
        raise SideConditionError("A_NEG_TEST", "the two values must be distinct")
    return implies(
        _op("config", _op("cons", _val(sig, "A_NEG_TEST", v), vs), mem),
        exec_box(sig, _op("test", _val(sig, "A_NEG_TEST", v2)), gamma),
    )


def _cstmt(sig, s1, s2):
    return iff(
        _op("c_s", _op("stmt_seq", s1, s2)),
        _seq(_op("c_s", s1), _op("c_s", s2)),
    )


def _amem0(sig, x):
    get = _op("get", _var(sig, "AMEM0", x), _nat(sig, "AMEM0", 0))
    return implies(_op("empty"), get)


def _amem1(sig, mem, x, n):
    xv, nv = _var(sig, "AMEM1", x), _nat(sig, "AMEM1", n)
    return implies(_op("set", mem, xv, nv), _op("get", xv, nv))


def _amem2(sig, mem, x, n, y, m):
    if x == y:
        raise SideConditionError("AMEM2", "x and y must be distinct")
    xv, nv = _var(sig, "AMEM2", x), _nat(sig, "AMEM2", n)
    yv, mv = _var(sig, "AMEM2", y), _nat(sig, "AMEM2", m)
    return iff(
        _op("set", _op("set", mem, xv, nv), yv, mv),
        _op("set", _op("set", mem, yv, mv), xv, nv),
    )


def _amem3(sig, mem, x, n, m):
    xv = _var(sig, "AMEM3", x)
    nv, mv = _nat(sig, "AMEM3", n), _nat(sig, "AMEM3", m)
    return implies(_op("set", _op("set", mem, xv, nv), xv, mv), _op("set", mem, xv, mv))


def _aint(sig, n, vs, mem):
    nv = _nat(sig, "AINT", n)
    return implies(
        _op("config", vs, mem),
        exec_box(
            sig,
            _op("c_a", _op("nat2aexp", nv)),
            _op("config", _op("cons", _op("nat2val", nv), vs), mem),
        ),
    )


def _aid(sig, x, n, vs, mem):
    xv, nv = _var(sig, "AID", x), _nat(sig, "AID", n)
    stored = _op("set", mem, xv, nv)
    return implies(
        _op("config", vs, stored),
        exec_box(
            sig,
            _op("c_a", _op("var2aexp", xv)),
            _op("config", _op("cons", _op("nat2val", nv), vs), stored),
        ),
    )


def _dplus(sig, a1, a2):
    return iff(
        _op("c_a", _op("add", a1, a2)),
        _seq(_op("c_a", a1), _op("c_a", a2), _op("plus")),
    )


def _aplus(sig, n1, n2, vs, mem, n=None):
    total = n1 + n2
    if n is not None and n != total:
        raise SideConditionError("APLUS", f"n must be n1 + n2 = {total}, got {n}")
    top = _op("cons", _val(sig, "APLUS", n2), _op("cons", _val(sig, "APLUS", n1), vs))
    return implies(
        _op("config", top, mem),
        exec_box(
            sig,
            _op("plus"),
            _op("config", _op("cons", _val(sig, "APLUS", total), vs), mem),
        ),
    )


def _dleq(sig, a1, a2):
    return iff(
        _op("c_b", _op("le", a1, a2)),
        _seq(_op("c_a", a2), _op("c_a", a1), _op("leq")),
    )


def _aleq(sig, n1, n2, vs, mem, t=None):
    truth = n1 <= n2
    if t is not None and not _same_value(t, truth):
        raise SideConditionError("ALEQ", f"t must be the truth value of {n1} <= {n2}")
    top = _op("cons", _val(sig, "ALEQ", n1), _op("cons", _val(sig, "ALEQ", n2), vs))
    return implies(
        _op("config", top, mem),
        exec_box(
            sig,
            _op("leq"),
            _op("config", _op("cons", _val(sig, "ALEQ", truth), vs), mem),
        ),
    )


def _askip(sig, gamma):
    return implies(gamma, exec_box(sig, _op("c_s", _op("skip")), gamma))


def _dasgn(sig, x, a):
    xv = _var(sig, "DASGN", x)
    return iff(_op("c_s", _op("assign", xv, a)), _seq(_op("c_a", a), _op("asgn", xv)))


def _aasgn(sig, n, x, vs, mem):
    xv, nv = _var(sig, "AASGN", x), _nat(sig, "AASGN", n)
    return implies(
        _op("config", _op("cons", _op("nat2val", nv), vs), mem),
        exec_box(sig, _op("asgn", xv), _op("config", vs, _op("set", mem, xv, nv))),
    )


def _branch(flag, body):
    return _seq(_op("test", _op("bool2val", _op("true" if flag else "false"))), body)


def _dif(sig, b, s1, s2):
    return iff(
        _op("c_s", _op("ite", b, s1, s2)),
        _seq(
            _op("c_b", b),
            _op("union", _branch(True, _op("c_s", s1)), _branch(False, _op("c_s", s2))),
        ),
    )


def _dwhile(sig, b, s):
    body = _branch(True, _seq(_op("c_s", s), _op("c_b", b)))
    exit_test = _op("test", _op("bool2val", _op("false")))
    return iff(
        _op("c_s", _op("while", b, s)),
        _seq(_op("c_b", b), _op("star", body), exit_test),
    )


def _noconfusion(sig, phi1, psi1, phi2, psi2):
    return implies(
        conj(_op("config", phi1, psi1), _op("config", phi2, psi2)),
        _op("config", conj(phi1, phi2), conj(psi1, psi2)),
    )


def _gen(name, params, build, description, optional=()):
    return AxiomGenerator(name, params, build, description, optional)


_F = "formula"

SMC_GENERATORS = {
    g.name: g
    for g in (
        _gen(
            "A_UNION",
            (("pi", _F), ("pi2", _F), ("gamma", _F)),
            _a_union,
            "[pi u pi2]gamma <-> [pi]gamma and [pi2]gamma",
        ),
        _gen(
            "A_SEQ",
            (("pi", _F), ("pi2", _F), ("gamma", _F)),
            _a_seq,
            "[pi ; pi2]gamma <-> [pi][pi2]gamma",
        ),
        _gen(
            "A_STAR",
            (("pi", _F), ("gamma", _F)),
            _a_star,
            "[pi*]gamma <-> gamma and [pi][pi*]gamma",
        ),
        _gen(
            "A_TEST",
            (("v", "value"), ("vs", _F), ("mem", _F)),
            _a_test,
            "config(v.vs, mem) -> [v?]config(vs, mem)",
        ),
        _gen(
            "A_NEG_TEST",
            (("v", "value"), ("v2", "value"), ("vs", _F), ("mem", _F), ("gamma", _F)),
            _a_neg_test,
            "config(v.vs, mem) -> [v2?]gamma, v and v2 distinct",
        ),
        _gen(
            "CSTMT",
            (("s1", _F), ("s2", _F)),
            _cstmt,
            "c(s1 ; s2) <-> c(s1) ; c(s2)",
        ),
        _gen("AMEM0", (("x", "var"),), _amem0, "empty -> get(x, 0)"),
        _gen(
            "AMEM1",
            (("mem", _F), ("x", "var"), ("n", "nat")),
            _amem1,
            "set(mem, x, n) -> get(x, n)",
        ),
        _gen(
            "AMEM2",
            (("mem", _F), ("x", "var"), ("n", "nat"), ("y", "var"), ("m", "nat")),
            _amem2,
            "set(set(mem, x, n), y, m) <-> set(set(mem, y, m), x, n), x and y distinct",
        ),
        _gen(
            "AMEM3",
            (("mem", _F), ("x", "var"), ("n", "nat"), ("m", "nat")),
            _amem3,
            "set(set(mem, x, n), x, m) -> set(mem, x, m)",
        ),
        _gen(
            "AINT",
            (("n", "nat"), ("vs", _F), ("mem", _F)),
            _aint,
            "config(vs, mem) -> [c(n)]config(n.vs, mem)",
        ),
        _gen(
            "AID",
            (("x", "var"), ("n", "nat"), ("vs", _F), ("mem", _F)),
            _aid,
            "config(vs, set(mem, x, n)) -> [c(x)]config(n.vs, set(mem, x, n))",
        ),
        _gen(
            "DPLUS",
            (("a1", _F), ("a2", _F)),
            _dplus,
            "c(a1 + a2) <-> c(a1) ; c(a2) ; plus",
        ),
        _gen(
            "APLUS",
            (("n1", "nat"), ("n2", "nat"), ("vs", _F), ("mem", _F), ("n", "nat")),
            _aplus,
            "config(n2.n1.vs, mem) -> [plus]config(n.vs, mem), n = n1 + n2",
            optional=("n",),
        ),
        _gen(
            "DLEQ",
            (("a1", _F), ("a2", _F)),
            _dleq,
            "c(a1 <= a2) <-> c(a2) ; c(a1) ; leq",
        ),
        _gen(
            "ALEQ",
            (("n1", "nat"), ("n2", "nat"), ("vs", _F), ("mem", _F), ("t", "value")),
            _aleq,
            "config(n1.n2.vs, mem) -> [leq]config(t.vs, mem), t = (n1 <= n2)",
            optional=("t",),
        ),
        _gen("ASKIP", (("gamma", _F),), _askip, "gamma -> [c(skip)]gamma"),
        _gen(
            "DASGN", (("x", "var"), ("a", _F)), _dasgn, "c(x := a) <-> c(a) ; asgn(x)"
        ),
        _gen(
            "AASGN",
            (("n", "nat"), ("x", "var"), ("vs", _F), ("mem", _F)),
            _aasgn,
            "config(n.vs, mem) -> [asgn(x)]config(vs, set(mem, x, n))",
        ),
        _gen(
            "DIF",
            (("b", _F), ("s1", _F), ("s2", _F)),
            _dif,
            "c(if b then s1 else s2) <-> c(b) ; ((true? ; c(s1)) u (false? ; c(s2)))",
        ),
        _gen(
            "DWHILE",
            (("b", _F), ("s", _F)),
            _dwhile,
            "c(while b do s) <-> c(b) ; (true? ; c(s) ; c(b))* ; false?",
        ),
        _gen(
            "NOCONFUSION",
            (("phi1", _F), ("psi1", _F), ("phi2", _F), ("psi2", _F)),
            _noconfusion,
            "config(phi1, psi1) and config(phi2, psi2)"
            " -> config(phi1 and phi2, psi1 and psi2)",
        ),
    )
}


def smc_theory(sig=None, tab=None):
    """The SMC theory over ``sig`` (default: `build_smc_signature`)."""
    if sig is None:
        bundle = build_smc_signature()
        sig, tab = bundle.sig, setdefault(tab, bundle.tab)
    return Theory("smc", sig, setdefault(tab, SymbolTable()), SMC_GENERATORS)


def axiom_instance(name, params, bundle=None):
    """One instance of an SMC theory axiom, side conditions evaluated.

    Raises
    ------
    SideConditionError
        E.g. ``APLUS`` with ``n`` other than ``n1 + n2``, or ``AMEM2`` with
        ``x == y``.
    MissingBindingError
    """
    bundle = build_smc_signature() if bundle is None else bundle
    return smc_theory(bundle.sig, bundle.tab).instance(name, params)


# -- programs ---------------------------------------------------------------

_PROGRAM_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(:=|<=|\+|;|\(|\)))")
_KEYWORDS = frozenset({"skip", "if", "then", "else", "while", "do"})


def _tokenize(text):
    tokens, pos = [], 0
    while True:
        m = _PROGRAM_TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:]
            if rest.strip():
                where = len(text) - len(rest.lstrip())
                raise FormulaSyntaxError(
                    f"unexpected character {rest.lstrip()[0]!r}", where
                )
            tokens.append(("end", "", len(text)))
            return tokens
        pos = m.end()
        kind = "num" if m.group(1) else "name" if m.group(2) else "punct"
        word = m.group(m.lastindex)
        if kind == "name" and word in _KEYWORDS:
            kind = "kw"
        tokens.append((kind, word, m.start(m.lastindex)))


class _ProgramParser:
    def __init__(self, text, sig):
        self.tokens = _tokenize(text)
        self.i = 0
        self.sig = sig

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, word=None):
        tok = self.tokens[self.i]
        bad_kind = kind is not None and tok[0] != kind
        if bad_kind or (word is not None and tok[1] != word):
            got = tok[1] or "end of input"
            raise FormulaSyntaxError(f"expected {word or kind}, got {got!r}", tok[2])
        self.i += 1
        return tok

    def program(self):
        stmt = self.sequence()
        self.take("end")
        return stmt

    def sequence(self):
        units = [self.unit()]
        while self.peek()[1] == ";":
            self.take()
            units.append(self.unit())
        out = units[-1]
        for u in reversed(units[:-1]):
            out = _op("stmt_seq", u, out)
        return out

    def unit(self):
        kind, word, pos = self.peek()
        if word == "skip":
            self.take()
            return _op("skip")
        if word == "if":
            self.take()
            b = self.bexp()
            self.take("kw", "then")
            s1 = self.unit()
            self.take("kw", "else")
            return _op("ite", b, s1, self.unit())
        if word == "while":
            self.take()
            b = self.bexp()
            self.take("kw", "do")
            return _op("while", b, self.unit())
        if word == "(":
            self.take()
            stmt = self.sequence()
            self.take("punct", ")")
            return stmt
        if kind == "name":
            x = self.variable(self.take())
            self.take("punct", ":=")
            return _op("assign", x, self.aexp())
        got = word or "end of input"
        raise FormulaSyntaxError(f"expected a statement, got {got!r}", pos)

    def bexp(self):
        a1 = self.aexp()
        self.take("punct", "<=")
        return _op("le", a1, self.aexp())

    def aexp(self):
        out = self.term()
        while self.peek()[1] == "+":
            self.take()
            out = _op("add", out, self.term())
        return out

    def term(self):
        kind, word, pos = self.peek()
        if kind == "num":
            self.take()
            try:
                return _op("nat2aexp", nat_term(self.sig, int(word)))
            except SignatureError as e:
                raise FormulaSyntaxError(str(e), pos) from None
        if kind == "name":
            return _op("var2aexp", self.variable(self.take()))
        if word == "(":
            self.take()
            a = self.aexp()
            self.take("punct", ")")
            return a
        got = word or "end of input"
        raise FormulaSyntaxError(f"expected an expression, got {got!r}", pos)

    def variable(self, tok):
        try:
            return var_term(self.sig, tok[1])
        except SignatureError as e:
            raise FormulaSyntaxError(str(e), tok[2]) from None


def program_signature(text):
    """A signature whose variables and numerals cover the program ``text``."""
    tokens = _tokenize(text)
    names = [w for k, w, _ in tokens if k == "name"]
    numbers = [int(w) for k, w, _ in tokens if k == "num"]
    return build_smc_signature(
        DEFAULT_VARIABLES + tuple(names), max(numbers + [DEFAULT_MAX_NAT])
    )


def encode_program(text, bundle=None):
    """Parse program text into a ``Stmt`` formula.

    Grammar::

        seq  ::= unit (";" unit)*
        unit ::= "skip" | x ":=" aexp | "if" bexp "then" unit "else" unit
               | "while" bexp "do" unit | "(" seq ")"
        bexp ::= aexp "<=" aexp
        aexp ::= term ("+" term)*
        term ::= n | x | "(" aexp ")"

    ``;`` nests to the right and ``+`` to the left.

    Parameters
    ----------
    text : str
    bundle : SMCBundle, optional
        Default: `program_signature` of the text.

    Raises
    ------
    FormulaSyntaxError
    """
    bundle = program_signature(text) if bundle is None else bundle
    return _ProgramParser(text, bundle.sig).program()


def _print_aexp(a, nested=False):
    if a.op == "nat2aexp":
        return a.args[0].op
    if a.op == "var2aexp":
        return a.args[0].op
    text = f"{_print_aexp(a.args[0])} + {_print_aexp(a.args[1], True)}"
    return f"({text})" if nested else text


def _print_unit(s):
    text = print_program(s)
    return f"({text})" if s.op == "stmt_seq" else text


def print_program(stmt):
    """Print a ``Stmt`` formula in the syntax read by `encode_program`."""
    op, args = stmt.op, stmt.args
    if op == "skip":
        return "skip"
    if op == "assign":
        return f"{args[0].op} := {_print_aexp(args[1])}"
    if op == "ite":
        b = args[0]
        cond = f"{_print_aexp(b.args[0])} <= {_print_aexp(b.args[1])}"
        return f"if {cond} then {_print_unit(args[1])} else {_print_unit(args[2])}"
    if op == "while":
        b = args[0]
        cond = f"{_print_aexp(b.args[0])} <= {_print_aexp(b.args[1])}"
        return f"while {cond} do {_print_unit(args[1])}"
    if op == "stmt_seq":
        return f"{_print_unit(args[0])}; {print_program(args[1])}"
    raise ValueError(f"not a statement: {stmt!r}")


# -- interpreter ------------------------------------------------------------


def _expand(item):
    """Decompose a compound control item; None for a primitive one."""
    op, args = item.op, item.args
    if not all(isinstance(a, App) for a in args):
        return None
    if op == "seq":
        return list(args)
    if op == "c_s":
        s = args[0]
        if s.op == "skip":
            return []
        if s.op == "stmt_seq":
            return [_op("c_s", s.args[0]), _op("c_s", s.args[1])]
        if s.op == "assign":
            return [_op("c_a", s.args[1]), _op("asgn", s.args[0])]
        if s.op == "ite":
            b, s1, s2 = s.args
            return [
                _op("c_b", b),
                _op(
                    "union",
                    _branch(True, _op("c_s", s1)),
                    _branch(False, _op("c_s", s2)),
                ),
            ]
        if s.op == "while":
            b, body = s.args
            loop = _branch(True, _seq(_op("c_s", body), _op("c_b", b)))
            done = _op("test", _op("bool2val", _op("false")))
            return [_op("c_b", b), _op("star", loop), done]
    if op == "c_a" and args[0].op == "add":
        a1, a2 = args[0].args
        return [_op("c_a", a1), _op("c_a", a2), _op("plus")]
    if op == "c_b" and args[0].op == "le":
        a1, a2 = args[0].args
        return [_op("c_a", a2), _op("c_a", a1), _op("leq")]
    return None


def _leading(ctrl):
    while ctrl.op == "seq":
        ctrl = ctrl.args[0]
    return ctrl


def _guard(ctrl):
    """Value tested first by ``ctrl``, or None if it does not start with a test."""
    head = _leading(ctrl)
    return _value(head.args[0]) if head.op == "test" else None


def smc_run(cfg, ctrl, fuel=DEFAULT_FUEL):
    """Run the SMC machine from ``cfg`` on the control stack ``ctrl``.

    Parameters
    ----------
    cfg : ConcreteConfig
    ctrl : Formula
        Ground ``CtrlStack`` term.
    fuel : int
        Maximum number of machine steps.

    Returns
    -------
    ConcreteConfig
        State once the control stack is empty.

    Raises
    ------
    OutOfFuelError
        If the machine has not halted after ``fuel`` steps.
    StuckError
        If no transition applies, e.g. a failed test or a missing operand.

    Notes
    -----
    A union takes its first branch whose leading test accepts the top of the
    value stack; a star unrolls while the leading test of its body accepts it
    and stops otherwise. A branch or body without a leading test is always
    accepted, except a star body, which is not entered.
    """
    stack = list(reversed(cfg.stack))
    memory = dict(cfg.memory)
    todo = [ctrl]

    def stuck(msg):
        return StuckError(msg, ConcreteConfig(tuple(reversed(stack)), dict(memory)))

    def pop_nat():
        if not stack or isinstance(stack[-1], bool):
            raise stuck("expected a number on the value stack")
        return stack.pop()

    def accepts(guard):
        return guard is None or (bool(stack) and _same_value(guard, stack[-1]))

    steps = 0
    while todo:
        if steps >= fuel:
            raise OutOfFuelError(f"machine did not halt within {fuel} steps")
        steps += 1
        item = todo.pop()
        errorif(not isinstance(item, App), StuckError, f"not a control item: {item!r}")
        logger.debug("step %d: %s, stack %s", steps, item.op, stack[::-1])
        parts = _expand(item)
        if parts is not None:
            todo.extend(reversed(parts))
            continue
        op, args = item.op, item.args
        arg = args[0].op if args and isinstance(args[0], App) else None
        if op == "c_a" and arg == "nat2aexp":
            stack.append(_nat_value(args[0].args[0]))
        elif op == "c_a" and arg == "var2aexp":
            stack.append(memory.get(args[0].args[0].op, 0))
        elif op == "plus":
            n2 = pop_nat()
            n1 = pop_nat()
            stack.append(n1 + n2)
        elif op == "leq":
            n1 = pop_nat()
            n2 = pop_nat()
            stack.append(n1 <= n2)
        elif op == "asgn":
            memory[args[0].op] = pop_nat()
        elif op == "test":
            v = _value(args[0])
            if not accepts(v):
                raise stuck(f"test {_show_value(v)}? failed")
            stack.pop()
        elif op == "union":
            for branch in args:
                if accepts(_guard(branch)):
                    todo.append(branch)
                    break
            else:
                raise stuck("no branch of the union applies")
        elif op == "star":
            guard = _guard(args[0])
            if guard is not None and accepts(guard):
                todo.extend((item, args[0]))
        else:
            raise stuck(f"no transition for {op}")
    logger.debug("halted after %d steps", steps)
    return ConcreteConfig(tuple(reversed(stack)), memory)


# -- the program property ---------------------------------------------------


def build_pprime_proof(bundle=None):
    """Replay the proof of ``config(vs, mem) -> [c(pgm)] @mem2 get(m, 1)``.

    Hypotheses ``h1``, ``config(vs, mem) -> [c(pgm)]config(vs, mf)``, and
    ``h2``, ``config(vs, mem) -> [c(pgm)]config(vs, mem2)``, are lines (1)
    and (2); ``mf`` is ``set(set(set(mem, i2, 2), i1, 1), m, 1)``. Lines
    (3) to (15) are expanded into primitive steps in H_AT under the SMC
    theory. Step (10) is the single ``AMEM1`` instance
    ``set(mf0, m, 1) -> get(m, 1)`` with ``mf0 = set(set(mem, i2, 2), i1, 1)``.

    Returns
    -------
    LibraryEntry
        Named ``P_PRIME``; ``marks`` maps ``"(1)"`` ... ``"(15)"`` to lines.
    """
    bundle = build_smc_signature() if bundle is None else bundle
    sig, tab = bundle.sig, bundle.tab
    pb = ProofBuilder(sig, tab, smc_theory(sig, tab))

    vs, mem = Prop("vs", "ValStack"), Prop("mem", "Mem")
    mem2 = SVar("mem2", "Mem")
    pgm = _op("c_s", encode_program(PGM_TEXT, bundle))
    side = (pgm,)
    mf0 = memory_term(sig, (("i2", 2), ("i1", 1)), base=mem)
    mf = memory_term(sig, (("m", 1),), base=mf0)
    vv = conj(vs, vs)

    def cfg(a, b):
        return _op("config", a, b)

    def bx(f):
        return exec_box(sig, pgm, f)

    at_mf = At(mem2, mf, "Config")
    get_m1 = _op("get", var_term(sig, "m"), nat_term(sig, 1))
    start = cfg(vs, mem)

    pb.mark("(1)", pb.hyp("h1", implies(start, bx(cfg(vs, mf)))))
    pb.mark("(2)", pb.hyp("h2", implies(start, bx(cfg(vs, mem2)))))
    both = conj(bx(cfg(vs, mf)), bx(cfg(vs, mem2)))
    pb.mark("(3)", pb.pl(implies(start, both), pb.marks["(1)"], pb.marks["(2)"]))
    pb.mark("(4)", pb.box_and("exec", 2, side, cfg(vs, mf), cfg(vs, mem2)))
    pb.mark("(5)", pb.theory_axiom("NOCONFUSION", phi1=vs, psi1=mf, phi2=vs, psi2=mem2))

    intro = pb.axiom("INTRO", z=mem2, phi=mf)
    named = pb.pl(implies(conj(mf, mem2), At(mem2, mf, "Mem")), intro)
    pb.mark("(6)", pb.dia_mono("config", 2, (vv,), named))
    pb.mark("(7)", pb.axiom("BACK", op="config", pos=2, side=(vv,), z=mem2, psi=mf))
    pb.mark("(8)", pb.ug("exec", 2, pb.marks["(7)"], side))
    k = pb.axiom(
        "K_SIGMA_AX",
        op="exec",
        pos=2,
        side=side,
        phi=cfg(vv, At(mem2, mf, "Mem")),
        chi=at_mf,
    )
    pb.mark("(9)", pb.mp(pb.marks["(8)"], k))
    pb.mark("(10)", pb.theory_axiom("AMEM1", mem=mf0, x="m", n=1))
    pb.mark("(11)", pb.at_mono(mem2, "Config", pb.marks["(10)"]))
    pb.mark("(12)", pb.box_mono("exec", 2, side, pb.marks["(11)"]))
    pb.mark("(13)", pb.box_mono("exec", 2, side, pb.marks["(5)"]))
    pb.mark("(14)", pb.box_mono("exec", 2, side, pb.marks["(6)"]))
    target = implies(start, bx(At(mem2, get_m1, "Config")))
    premises = ("(3)", "(4)", "(13)", "(14)", "(9)", "(12)")
    pb.mark("(15)", pb.pl(target, *(pb.marks[p] for p in premises)))

    return LibraryEntry(
        "P_PRIME",
        "H_AT",
        sig,
        tab,
        dict(pb.hypotheses),
        list(pb.lines),
        pb.lines[-1].formula,
        pb.theory,
        dict(pb.marks),
    )
