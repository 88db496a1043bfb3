"""Hilbert-style proof lines, theories and the proof checker."""

import logging
import re
from dataclasses import dataclass
from typing import Callable, NamedTuple, Tuple

from .parsing import (
    parse_context,
    parse_formula,
    print_context,
    print_formula,
    split_sexprs,
)
from .schemes import SCHEMES, SYSTEMS, SchemeInstance, instantiate_scheme
from .syntax import (
    App,
    At,
    Context,
    Forall,
    Formula,
    Nom,
    SVar,
    box,
    check_well_sorted,
    conj,
    constructs,
    put,
    split_implication,
    state_symbols,
    well_sorted,
)
from .utils import (
    FormulaSyntaxError,
    MissingBindingError,
    MsmodalError,
    ProofVerdict,
    SideConditionError,
    SortError,
    TooManyAtomsError,
    errorif,
)

logger = logging.getLogger(__name__)


class AxiomGenerator(NamedTuple):
    """A parameterized family of theory axioms.

    Parameters
    ----------
    name : str
    params : tuple of (str, str)
        Parameter names and kinds: ``formula``, ``nat``, ``var`` or ``value``.
    build : callable
        ``build(sig, **params) -> Formula``; raises `SideConditionError` when
        a computed side condition fails.
    description : str
    optional : tuple of str
        Parameters that may be left out; ``build`` computes them.
    """

    name: str
    params: Tuple[Tuple[str, str], ...]
    build: Callable
    description: str
    optional: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Theory:
    """Non-logical axioms over a signature."""

    name: str
    sig: object
    tab: object
    generators: dict

    def instance(self, name, params):
        """Build and sort-check one axiom instance."""
        try:
            gen = self.generators[name]
        except KeyError:
            msg = f"no axiom {name} in theory {self.name}"
            raise SideConditionError(name, msg) from None
        names = [p for p, _ in gen.params]
        missing = [p for p in names if p not in params and p not in gen.optional]
        if missing:
            raise MissingBindingError(f"{name}: missing {', '.join(missing)}")
        extra = sorted(set(params) - set(names))
        if extra:
            raise SideConditionError(name, f"unexpected parameters {', '.join(extra)}")
        phi = gen.build(self.sig, **{p: params[p] for p in names if p in params})
        check_well_sorted(self.sig, self.tab, phi)
        return phi


@dataclass(frozen=True)
class Hypothesis:
    name: str


@dataclass(frozen=True)
class Axiom:
    instance: SchemeInstance


@dataclass(frozen=True)
class TheoryAxiom:
    name: str
    params: dict


@dataclass(frozen=True)
class MP:
    """Modus ponens from ``minor`` and ``major = minor -> this``."""

    minor: int
    major: int


@dataclass(frozen=True)
class UG:
    """Universal generalization into argument ``pos`` of ``box op``."""

    op: str
    pos: int
    premise: int
    side: Tuple[Formula, ...]


@dataclass(frozen=True)
class Gen:
    var: SVar
    premise: int


@dataclass(frozen=True)
class GenAt:
    symbol: Formula
    premise: int


@dataclass(frozen=True)
class Broadcast:
    sort: str
    premise: int


@dataclass(frozen=True)
class Paste0:
    symbol: Formula
    premise: int


@dataclass(frozen=True)
class Paste1:
    symbol: Formula
    premise: int


RULE_NAMES = {
    MP: "MP",
    UG: "UG",
    Gen: "GEN",
    GenAt: "GEN_AT",
    Broadcast: "BROADCAST",
    Paste0: "PASTE0",
    Paste1: "PASTE1",
}
GENERALIZING = (UG, Gen, GenAt, Broadcast, Paste0, Paste1)


class ProofLine(NamedTuple):
    """One proof step: a formula of a sort and its justification."""

    index: int
    formula: Formula
    sort: str
    justification: object


def _hypothesis_map(hypotheses):
    if hypotheses is None:
        return {}
    if isinstance(hypotheses, dict):
        return dict(hypotheses)
    return {f"h{i}": h for i, h in enumerate(hypotheses, 1)}


class _Reject(Exception):
    def __init__(self, reason, detail=""):
        self.reason = reason
        self.detail = detail


def _premises(just):
    if isinstance(just, MP):
        return (just.minor, just.major)
    if isinstance(just, GENERALIZING):
        return (just.premise,)
    return ()


def _check_paste(just, line, premise):
    y = just.symbol
    if not isinstance(y, (Nom, SVar)):
        raise _Reject("PASTE_MISMATCH", "pasted symbol is not a state symbol")
    concl, prem = split_implication(line.formula), split_implication(premise)
    if concl is None or prem is None or concl[1] != prem[1]:
        raise _Reject(
            "PASTE_MISMATCH", "premise and conclusion must share the consequent"
        )
    c_at, p_at = concl[0], prem[0]
    if not (
        isinstance(c_at, At)
        and isinstance(p_at, At)
        and c_at.symbol == p_at.symbol
        and c_at.sort == p_at.sort
    ):
        raise _Reject(
            "PASTE_MISMATCH", "antecedents must be @ formulas at the same symbol"
        )
    if isinstance(just, Paste0):
        ok = p_at.body == conj(y, c_at.body)
    else:
        c, p = c_at.body, p_at.body
        ok = (
            isinstance(c, App)
            and isinstance(p, App)
            and c.op == p.op
            and len(c.args) == len(p.args)
            and any(
                p.args[i] == conj(y, c.args[i])
                and p.args[:i] == c.args[:i]
                and p.args[i + 1 :] == c.args[i + 1 :]
                for i in range(len(c.args))
            )
        )
    if not ok:
        raise _Reject("PASTE_MISMATCH", "premise is not the pasted form of this line")
    if y == c_at.symbol or y in state_symbols(line.formula):
        raise _Reject("FRESHNESS", f"{y.name} must not occur in the conclusion")


def _check_line(system, sig, tab, theory, hyps, seen, line):
    just = line.justification
    if isinstance(just, Hypothesis):
        if just.name not in hyps:
            raise _Reject("UNKNOWN_HYPOTHESIS", just.name)
        if hyps[just.name] != line.formula:
            raise _Reject("HYPOTHESIS_MISMATCH", just.name)
        return True
    if isinstance(just, Axiom):
        name = just.instance.scheme
        if name not in system.schemes:
            raise _Reject("SCHEME_NOT_IN_SYSTEM", name)
        try:
            phi = instantiate_scheme(just.instance, sig, tab)
        except MissingBindingError as e:
            raise _Reject("MISSING_BINDING", str(e))
        except TooManyAtomsError as e:
            raise _Reject("TOO_MANY_ATOMS", str(e))
        except SideConditionError as e:
            reason = "NOT_TAUTOLOGY" if name == "TAUT" else "SIDE_CONDITION"
            raise _Reject(reason, str(e))
        except SortError as e:
            raise _Reject("SIDE_CONDITION", str(e))
        if phi != line.formula:
            raise _Reject("AXIOM_MISMATCH", name)
        return False
    if isinstance(just, TheoryAxiom):
        if theory is None:
            raise _Reject("NO_THEORY", just.name)
        try:
            phi = theory.instance(just.name, just.params)
        except MsmodalError as e:
            raise _Reject("THEORY_AXIOM", str(e))
        if phi != line.formula:
            raise _Reject("THEORY_MISMATCH", just.name)
        return False

    rule = RULE_NAMES.get(type(just))
    if rule is None:
        raise _Reject("BAD_REF", f"unknown justification {just!r}")
    if rule not in system.rules:
        raise _Reject("RULE_NOT_IN_SYSTEM", rule)
    refs = _premises(just)
    for i in refs:
        if i not in seen:
            raise _Reject("BAD_REF", f"line {i}")
    flags = [seen[i][1] for i in refs]
    if isinstance(just, GENERALIZING) and any(flags):
        raise _Reject("HYP_DEPENDENT", f"premise {refs[0]} depends on a hypothesis")
    premise = seen[refs[0]][0]

    if isinstance(just, MP):
        major = seen[just.major][0]
        parts = split_implication(major.formula)
        if parts is None:
            raise _Reject("MP_SHAPE", f"line {just.major}")
        if (
            parts[0] != premise.formula
            or parts[1] != line.formula
            or major.sort != line.sort
            or premise.sort != line.sort
        ):
            raise _Reject("MP_MISMATCH", f"lines {just.minor}, {just.major}")
    elif isinstance(just, UG):
        try:
            want = box(sig, just.op, put(just.side, just.pos, premise.formula))
        except (MsmodalError, ValueError) as e:
            raise _Reject("UG_MISMATCH", str(e))
        if want != line.formula:
            raise _Reject("UG_MISMATCH", f"line {just.premise}")
    elif isinstance(just, Gen):
        if line.formula != Forall(just.var, premise.formula):
            raise _Reject("GEN_MISMATCH", f"line {just.premise}")
    elif isinstance(just, GenAt):
        if line.formula != At(just.symbol, premise.formula, line.sort) or (
            just.symbol.sort != premise.sort
        ):
            raise _Reject("GEN_AT_MISMATCH", f"line {just.premise}")
    elif isinstance(just, Broadcast):
        p, c = premise.formula, line.formula
        if not (
            isinstance(p, At)
            and isinstance(c, At)
            and p.symbol == c.symbol
            and p.body == c.body
            and c.sort == just.sort
            and line.sort == just.sort
        ):
            raise _Reject("BROADCAST_MISMATCH", f"line {just.premise}")
    else:
        if premise.sort != line.sort:
            raise _Reject("PASTE_MISMATCH", "premise has another sort")
        _check_paste(just, line, premise.formula)
    return any(flags)


def check_proof(system, sig, tab, proof, hypotheses=None, theory=None):
    """Check a Hilbert-style proof line by line.

    Parameters
    ----------
    system : str
        One of ``K_SIGMA``, ``H_AT``, ``H_FORALL``, ``H_AT_FORALL``.
    sig : Signature
    tab : SymbolTable
    proof : sequence of ProofLine
    hypotheses : dict or sequence of Formula, optional
        Named hypotheses. A sequence is named ``h1``, ``h2``, ...
    theory : Theory, optional
        Source of ``TheoryAxiom`` lines.

    Returns
    -------
    ProofVerdict
        ``ok`` is True if every line checks; otherwise ``line`` is the index of
        the first rejected line and ``reason`` a key of ``REASONS``.

    Notes
    -----
    Hypothesis lines, and lines depending on them, cannot be the premise of a
    generalization rule (UG, Gen, Gen@, Broadcast, Paste0, Paste1). Axiom and
    theory axiom lines do not depend on hypotheses.
    """
    errorif(system not in SYSTEMS, ValueError, f"unknown system {system!r}")
    sysdef = SYSTEMS[system]
    hyps = _hypothesis_map(hypotheses)
    seen = {}
    last = None
    for line in proof:
        try:
            if last is not None and line.index <= last:
                raise _Reject("BAD_INDEX", f"{line.index} after {last}")
            last = line.index
            if not well_sorted(sig, tab, line.formula, line.sort):
                raise _Reject("SORT", f"expected sort {line.sort}")
            used = constructs(line.formula) & set(sysdef.forbidden)
            if used:
                raise _Reject("LANGUAGE", ", ".join(sorted(used)))
            flag = _check_line(sysdef, sig, tab, theory, hyps, seen, line)
        except _Reject as r:
            logger.debug("line %s rejected: %s %s", line.index, r.reason, r.detail)
            return ProofVerdict(False, line.index, r.reason, r.detail)
        seen[line.index] = (line, flag)
    return ProofVerdict(True, None, "OK")


def dependent_lines(proof):
    """Indices of lines that depend on a hypothesis."""
    out = set()
    for line in proof:
        just = line.justification
        if isinstance(just, Hypothesis) or any(i in out for i in _premises(just)):
            out.add(line.index)
    return out


_LINE = re.compile(r'^\s*(-?\d+)\s+(\S+)\s+"([^"]*)"\s+(\S+)\s*(.*)$')


def _format_value(v):
    if isinstance(v, Formula):
        if isinstance(v, (Nom, SVar)):
            return v.name
        return print_formula(v)
    if isinstance(v, Context):
        return print_context(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return "[" + " ".join(_format_value(f) for f in v) + "]"
    return str(v)


def _format_bindings(bindings):
    return "{" + ";".join(f"{k}={_format_value(v)}" for k, v in bindings.items()) + "}"


def format_proof(proof):
    """Render proof lines in the ``.prf`` line format."""
    out = []
    for line in proof:
        j = line.justification
        if isinstance(j, Hypothesis):
            tail = f"hyp {j.name}"
        elif isinstance(j, Axiom):
            tail = f"ax {j.instance.scheme} {_format_bindings(j.instance.bindings)}"
        elif isinstance(j, TheoryAxiom):
            tail = f"thax {j.name} {_format_bindings(j.params)}"
        elif isinstance(j, MP):
            tail = f"mp {j.minor} {j.major}"
        elif isinstance(j, UG):
            tail = f"ug {j.op} {j.pos} {j.premise} {_format_value(j.side)}"
        elif isinstance(j, Gen):
            tail = f"gen {j.var.name} {j.premise}"
        elif isinstance(j, GenAt):
            tail = f"genat {j.symbol.name} {j.premise}"
        elif isinstance(j, Broadcast):
            tail = f"bcast {j.sort} {j.premise}"
        else:
            kw = "paste0" if isinstance(j, Paste0) else "paste1"
            tail = f"{kw} {j.symbol.name} {j.premise}"
        out.append(f'{line.index} {line.sort} "{print_formula(line.formula)}" {tail}')
    return "\n".join(out) + "\n"


def _parse_value(kind, text, sig, tab):
    text = text.strip()
    if kind == "formula":
        return parse_formula(text, sig, tab)
    if kind == "formulas":
        if not (text.startswith("[") and text.endswith("]")):
            raise FormulaSyntaxError(f"expected [..] list, got {text!r}")
        return tuple(parse_formula(t, sig, tab) for t in split_sexprs(text[1:-1]))
    if kind in ("symbol", "svar"):
        sym = tab.atom(text)
        if not isinstance(sym, (Nom, SVar)):
            raise FormulaSyntaxError(f"{text!r} is not a state symbol")
        return sym
    if kind == "context":
        return parse_context(text, sig)
    if kind in ("pos", "nat"):
        return int(text)
    if kind == "value":
        if text in ("true", "false"):
            return text == "true"
        return int(text)
    return text


def _parse_bindings(text, kinds, sig, tab):
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise FormulaSyntaxError(f"expected {{..}} bindings, got {text!r}")
    out = {}
    for item in text[1:-1].split(";"):
        if not item.strip():
            continue
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq:
            raise FormulaSyntaxError(f"binding {item.strip()!r} lacks '='")
        out[key] = _parse_value(kinds.get(key, "formula"), value, sig, tab)
    return out


def parse_proof(text, sig, tab, theory=None):
    """Parse a ``.prf`` file into proof lines.

    Each non-blank line that does not start with ``#`` reads
    ``<idx> <sort> "<formula>" <justification>``.
    """
    proof = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        m = _LINE.match(raw)
        if m is None:
            raise FormulaSyntaxError(f"line {lineno}: cannot parse proof line")
        idx, sort, ftext, kw, rest = m.groups()
        words = rest.split()
        try:
            phi = parse_formula(ftext, sig, tab, check=False)
            if kw == "hyp":
                just = Hypothesis(rest.strip())
            elif kw == "ax":
                name, _, binds = rest.partition(" ")
                kinds = dict(SCHEMES[name].metavars) if name in SCHEMES else {}
                bindings = _parse_bindings(binds, kinds, sig, tab)
                just = Axiom(SchemeInstance(name, bindings))
            elif kw == "thax":
                name, _, binds = rest.partition(" ")
                gen = theory.generators.get(name) if theory is not None else None
                kinds = dict(gen.params) if gen is not None else {}
                just = TheoryAxiom(name, _parse_bindings(binds, kinds, sig, tab))
            elif kw == "mp":
                just = MP(int(words[0]), int(words[1]))
            elif kw == "ug":
                side = rest.split(None, 3)[3] if len(words) > 3 else "[]"
                just = UG(
                    words[0],
                    int(words[1]),
                    int(words[2]),
                    _parse_value("formulas", side, sig, tab),
                )
            elif kw == "gen":
                just = Gen(_parse_value("svar", words[0], sig, tab), int(words[1]))
            elif kw == "genat":
                just = GenAt(_parse_value("symbol", words[0], sig, tab), int(words[1]))
            elif kw == "bcast":
                just = Broadcast(words[0], int(words[1]))
            elif kw in ("paste0", "paste1"):
                cls = Paste0 if kw == "paste0" else Paste1
                just = cls(_parse_value("symbol", words[0], sig, tab), int(words[1]))
            else:
                raise FormulaSyntaxError(f"unknown justification {kw!r}")
        except (IndexError, ValueError, KeyError) as e:
            if isinstance(e, FormulaSyntaxError):
                raise FormulaSyntaxError(f"line {lineno}: {e}") from e
            raise FormulaSyntaxError(
                f"line {lineno}: malformed {kw} justification"
            ) from e
        proof.append(ProofLine(int(idx), phi, sort, just))
    return proof
