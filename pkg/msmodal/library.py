"""Proof builder and the library of replayable derivations.

`ProofBuilder` appends checked-shape lines and offers derived steps that
expand into primitive TAUT/MP/UG/K chains: ``pl`` for propositional
reasoning, ``dia_mono``/``box_mono``/``dia_split`` for operator reasoning
and ``at_mono``/``at_iff`` for reasoning under ``@``.
"""

from typing import NamedTuple

from .proof import (
    MP,
    UG,
    Axiom,
    Broadcast,
    Gen,
    GenAt,
    Hypothesis,
    Paste0,
    Paste1,
    ProofLine,
    TheoryAxiom,
    check_proof,
)
from .schemes import SchemeInstance, instantiate_scheme
from .syntax import (
    App,
    At,
    Forall,
    Neg,
    Nom,
    Operator,
    Or,
    Signature,
    SymbolTable,
    box,
    conj,
    iff,
    implies,
    put,
    split_implication,
)
from .utils import errorif


class ProofBuilder:
    """Assemble a proof line by line.

    Every method appends one or more lines and returns the index of the last
    one. Indices start at 1. ``marks`` records labelled lines.
    """

    def __init__(self, sig, tab, theory=None):
        self.sig = sig
        self.tab = tab
        self.theory = theory
        self.lines = []
        self.hypotheses = {}
        self.marks = {}

    def __len__(self):
        return len(self.lines)

    def _add(self, phi, just, sort=None):
        index = len(self.lines) + 1
        sort = phi.sort if sort is None else sort
        self.lines.append(ProofLine(index, phi, sort, just))
        return index

    def formula(self, i):
        """Formula of line ``i``."""
        return self.lines[i - 1].formula

    def mark(self, label, i=None):
        """Label line ``i`` (default: the last line)."""
        self.marks[label] = len(self.lines) if i is None else i
        return self.marks[label]

    def hyp(self, name, phi):
        self.hypotheses[name] = phi
        return self._add(phi, Hypothesis(name))

    def axiom(self, scheme, **bindings):
        inst = SchemeInstance(scheme, bindings)
        return self._add(instantiate_scheme(inst, self.sig, self.tab), Axiom(inst))

    def taut(self, phi):
        return self.axiom("TAUT", phi=phi)

    def theory_axiom(self, name, **params):
        errorif(self.theory is None, ValueError, "builder has no theory")
        return self._add(self.theory.instance(name, params), TheoryAxiom(name, params))

    def mp(self, minor, major):
        parts = split_implication(self.formula(major))
        errorif(parts is None, ValueError, f"line {major} is not an implication")
        return self._add(parts[1], MP(minor, major))

    def ug(self, op, pos, i, side=()):
        side = tuple(side)
        phi = box(self.sig, op, put(side, pos, self.formula(i)))
        return self._add(phi, UG(op, pos, i, side))

    def gen(self, x, i):
        return self._add(Forall(x, self.formula(i)), Gen(x, i))

    def gen_at(self, z, i, sort):
        return self._add(At(z, self.formula(i), sort), GenAt(z, i))

    def broadcast(self, sort, i):
        phi = self.formula(i)
        return self._add(At(phi.symbol, phi.body, sort), Broadcast(sort, i))

    def paste0(self, y, i):
        at, psi = split_implication(self.formula(i))
        body = split_implication(at.body.arg)[1] if isinstance(at.body, Neg) else None
        errorif(body is None, ValueError, f"line {i} is not @z(y and phi) -> psi")
        phi = body.arg
        return self._add(implies(At(at.symbol, phi, at.sort), psi), Paste0(y, i))

    def paste1(self, y, i):
        at, psi = split_implication(self.formula(i))
        app = at.body
        args = list(app.args)
        for k, a in enumerate(args):
            if (
                isinstance(a, Neg)
                and isinstance(a.arg, Or)
                and a.arg.left == Neg(y)
                and isinstance(a.arg.right, Neg)
            ):
                args[k] = a.arg.right.arg
                break
        else:
            raise ValueError(f"line {i} has no argument y and phi")
        new = At(at.symbol, App(app.op, tuple(args), app.sort), at.sort)
        return self._add(implies(new, psi), Paste1(y, i))

    def pl(self, target, *premises):
        """Derive ``target`` from ``premises`` by one tautology and MP steps."""
        chain = target
        for i in reversed(premises):
            chain = implies(self.formula(i), chain)
        last = self.taut(chain)
        for i in premises:
            last = self.mp(i, last)
        return last

    def dia_mono(self, op, pos, side, i):
        """From ``a -> b`` at line ``i`` derive ``op(.., a, ..) -> op(.., b, ..)``."""
        a, b = split_implication(self.formula(i))
        side = tuple(side)
        neg_side = tuple(Neg(s) for s in side)
        contra = self.pl(implies(Neg(b), Neg(a)), i)
        boxed = self.ug(op, pos, contra, neg_side)
        k = self.axiom(
            "K_SIGMA_AX", op=op, pos=pos, side=neg_side, phi=Neg(b), chi=Neg(a)
        )
        step = self.mp(boxed, k)
        dual_a = self.axiom("DUAL", op=op, args=put(side, pos, a))
        dual_b = self.axiom("DUAL", op=op, args=put(side, pos, b))
        s = self.sig.op(op).result_sort
        target = implies(App(op, put(side, pos, a), s), App(op, put(side, pos, b), s))
        return self.pl(target, step, dual_a, dual_b)

    def box_mono(self, op, pos, side, i):
        """From ``a -> b`` derive ``box op(.., a, ..) -> box op(.., b, ..)``."""
        a, b = split_implication(self.formula(i))
        boxed = self.ug(op, pos, i, side)
        k = self.axiom("K_SIGMA_AX", op=op, pos=pos, side=tuple(side), phi=a, chi=b)
        return self.mp(boxed, k)

    def box_and(self, op, pos, side, a, b):
        """Derive ``box(.., a, ..) and box(.., b, ..) -> box(.., a and b, ..)``."""
        side = tuple(side)
        ab = conj(a, b)
        t = self.taut(implies(a, implies(b, ab)))
        boxed = self.ug(op, pos, t, side)
        k1 = self.axiom(
            "K_SIGMA_AX", op=op, pos=pos, side=side, phi=a, chi=implies(b, ab)
        )
        s1 = self.mp(boxed, k1)
        k2 = self.axiom("K_SIGMA_AX", op=op, pos=pos, side=side, phi=b, chi=ab)

        def bx(f):
            return box(self.sig, op, put(side, pos, f))

        return self.pl(implies(conj(bx(a), bx(b)), bx(ab)), s1, k2)

    def dia_split(self, op, pos, side, a, b):
        """Derive ``op(.., a or b, ..) -> op(.., a, ..) or op(.., b, ..)``."""
        side = tuple(side)
        neg_side = tuple(Neg(s) for s in side)
        s = self.sig.op(op).result_sort
        both = self.box_and(op, pos, neg_side, Neg(a), Neg(b))
        # box(.., not a and not b, ..) -> box(.., not (a or b), ..)
        t = self.taut(implies(conj(Neg(a), Neg(b)), Neg(Or(a, b))))
        mono = self.box_mono(op, pos, neg_side, t)
        duals = [
            self.axiom("DUAL", op=op, args=put(side, pos, f))
            for f in (a, b, Or(a, b))
        ]

        def dia(f):
            return App(op, put(side, pos, f), s)

        target = implies(dia(Or(a, b)), Or(dia(a), dia(b)))
        return self.pl(target, both, mono, *duals)

    def at_mono(self, z, sort, i):
        """From ``a -> b`` derive ``@z a -> @z b`` at the given sort."""
        a, b = split_implication(self.formula(i))
        g = self.gen_at(z, i, sort)
        k = self.axiom("K_AT", z=z, sort=sort, phi=a, psi=b)
        return self.mp(g, k)

    def at_iff(self, z, sort, a, b):
        """Derive ``@z (a <-> b) <-> (@z a <-> @z b)``."""

        def at(f):
            return At(z, f, sort)

        i1, i2 = implies(a, b), implies(b, a)
        fwd = []
        for part, (x, y) in ((i1, (a, b)), (i2, (b, a))):
            t = self.taut(implies(iff(a, b), part))
            fwd.append(self.at_mono(z, sort, t))
            fwd.append(self.axiom("K_AT", z=z, sort=sort, phi=x, psi=y))
        bwd = []
        for part, (x, y) in ((i1, (a, b)), (i2, (b, a))):
            left = self.at_mono(z, sort, self.taut(implies(Neg(x), part)))
            right = self.at_mono(z, sort, self.taut(implies(y, part)))
            dual = self.axiom("SELFDUAL", z=z, sort=sort, phi=x)
            bwd.extend((left, right, dual))
        t = self.taut(implies(i1, implies(i2, conj(i1, i2))))
        g = self.gen_at(z, t, sort)
        k1 = self.axiom("K_AT", z=z, sort=sort, phi=i1, psi=implies(i2, conj(i1, i2)))
        s1 = self.mp(g, k1)
        k2 = self.axiom("K_AT", z=z, sort=sort, phi=i2, psi=conj(i1, i2))
        bwd.extend((s1, k2))
        target = iff(at(iff(a, b)), iff(at(a), at(b)))
        return self.pl(target, *fwd, *bwd)

    def check(self, system, hypotheses=None):
        """Run `check_proof` on the lines built so far."""
        hyps = self.hypotheses if hypotheses is None else hypotheses
        return check_proof(system, self.sig, self.tab, self.lines, hyps, self.theory)


class LibraryEntry(NamedTuple):
    """A replayable derivation.

    Parameters
    ----------
    name : str
    system : str
        System the proof is checked in.
    sig, tab : Signature, SymbolTable
    hypotheses : dict
    proof : list of ProofLine
    conclusion : Formula
        Formula of the last line.
    theory : Theory or None
    marks : dict
        Labels of the lines that correspond to the steps of the written
        derivation, e.g. ``"(5)"``.
    checks : bool
        Whether the proof is expected to check.
    """

    name: str
    system: str
    sig: object
    tab: object
    hypotheses: dict
    proof: list
    conclusion: object
    theory: object = None
    marks: object = None
    checks: bool = True

    def check(self, hypotheses=None):
        hyps = self.hypotheses if hypotheses is None else hypotheses
        return check_proof(
            self.system, self.sig, self.tab, self.proof, hyps, self.theory
        )


def demo_signature():
    """Small two-sorted signature the library derivations are stated over.

    Sorts ``s`` and ``t``; ``f : s t -> s``, ``g : t -> t``, ``c : -> t``;
    props ``p : s``, ``q : t``; nominals ``i : s``, ``j, k : t``; state
    variables ``x : s``, ``y, u : t``.
    """
    sig = Signature(
        ("s", "t"),
        (
            Operator("f", ("s", "t"), "s"),
            Operator("g", ("t",), "t"),
            Operator("c", (), "t"),
        ),
    )
    tab = SymbolTable(
        props={"s": {"p"}, "t": {"q"}},
        noms={"s": {"i"}, "t": {"j", "k"}},
        svars={"s": {"x"}, "t": {"y", "u"}},
    )
    return sig, tab


def derive_nom_z(pb, z, y, sort, phi):
    """Append a derivation of ``@z y -> (@z phi <-> @y phi)``; marks (1)-(8)."""
    t = z.sort
    inner = iff(phi, At(y, phi, t))
    pb.mark("(1)", pb.axiom("INTRO", z=y, phi=phi))
    pb.mark("(2)", pb.gen_at(z, pb.marks["(1)"], sort))
    pb.mark("(3)", pb.axiom("K_AT", z=z, sort=sort, phi=y, psi=inner))
    pb.mark("(4)", pb.mp(pb.marks["(2)"], pb.marks["(3)"]))
    pb.mark("(5)", pb.at_iff(z, sort, phi, At(y, phi, t)))
    line6 = implies(At(z, y, sort), iff(At(z, phi, sort), At(z, At(y, phi, t), sort)))
    pb.mark("(6)", pb.pl(line6, pb.marks["(4)"], pb.marks["(5)"]))
    pb.mark("(7)", pb.axiom("AGREE", y=z, z=y, sort=sort, phi=phi))
    target = implies(At(z, y, sort), iff(At(z, phi, sort), At(y, phi, sort)))
    return pb.mark("(8)", pb.pl(target, pb.marks["(6)"], pb.marks["(7)"]))


def derive_bridge(pb, op, pos, side, z, phi):
    """Append a derivation of ``op(.., z, ..) and @z phi -> op(.., phi, ..)``.

    Line (1) reads ``op(.., z, ..) and box(.., not phi, ..) -> op(.., z and not
    phi, ..)``; marks (1)-(10).
    """
    side = tuple(side)
    neg_side = tuple(Neg(a) for a in side)
    o = pb.sig.op(op)
    s, si = o.result_sort, o.arg_sorts[pos - 1]

    def dia(f):
        return App(op, put(side, pos, f), s)

    z_not_phi = conj(z, Neg(phi))
    blocked = box(pb.sig, op, put(neg_side, pos, Neg(phi)))

    split = pb.taut(implies(z, Or(phi, z_not_phi)))
    mono = pb.dia_mono(op, pos, side, split)
    spread = pb.dia_split(op, pos, side, phi, z_not_phi)
    dual_phi = pb.axiom("DUAL", op=op, args=put(side, pos, phi))
    line1 = implies(conj(dia(z), blocked), dia(z_not_phi))
    pb.mark("(1)", pb.pl(line1, mono, spread, dual_phi))

    intro = pb.axiom("INTRO", z=z, phi=Neg(phi))
    pb.mark("(2)", pb.pl(implies(z_not_phi, At(z, Neg(phi), si)), intro))
    pb.mark("(3)", pb.dia_mono(op, pos, side, pb.marks["(2)"]))
    pb.mark("(4)", pb.axiom("BACK", op=op, pos=pos, side=side, z=z, psi=Neg(phi)))
    at_neg = At(z, Neg(phi), s)
    line5 = implies(dia(z_not_phi), at_neg)
    pb.mark("(5)", pb.pl(line5, pb.marks["(3)"], pb.marks["(4)"]))
    pb.mark(
        "(6)",
        pb.pl(implies(conj(dia(z), blocked), at_neg), pb.marks["(1)"], pb.marks["(5)"]),
    )
    pb.mark("(7)", pb.pl(implies(dia(z), implies(blocked, at_neg)), pb.marks["(6)"]))
    line8 = implies(dia(z), implies(Neg(at_neg), Neg(blocked)))
    pb.mark("(8)", pb.pl(line8, pb.marks["(7)"]))
    selfdual = pb.axiom("SELFDUAL", z=z, sort=s, phi=phi)
    line9 = implies(dia(z), implies(At(z, phi, s), dia(phi)))
    pb.mark("(9)", pb.pl(line9, pb.marks["(8)"], selfdual, dual_phi))
    target = implies(conj(dia(z), At(z, phi, s)), dia(phi))
    return pb.mark("(10)", pb.pl(target, pb.marks["(9)"]))


def derive_sym(pb, z, y, sort):
    """Append a derivation of ``@z y -> @y z`` from Nom_z with phi := z and Ref."""
    nom = derive_nom_z(pb, z, y, sort, z)
    ref = pb.axiom("REF", z=z, sort=sort)
    return pb.mark("sym", pb.pl(implies(At(z, y, sort), At(y, z, sort)), nom, ref))


def sym_as_printed(sig, tab, z, y, sort):
    """The Sym derivation as it is commonly printed; it does not check.

    Line 4, ``(@z y -> @z y) -> @z y``, is not a tautology.
    """
    a, b = At(y, z, sort), At(z, y, sort)
    formulas = [
        implies(conj(a, b), b),
        implies(implies(conj(a, b), b), implies(a, implies(b, b))),
        implies(a, implies(b, b)),
        implies(implies(b, b), b),
        implies(a, b),
        implies(b, a),
        iff(b, a),
    ]
    proof = []
    for k, phi in enumerate(formulas, 1):
        just = MP(1, 2) if k == 3 else Axiom(SchemeInstance("TAUT", {"phi": phi}))
        proof.append(ProofLine(k, phi, sort, just))
    return proof


def _entry(name, pb, system, checks=True):
    return LibraryEntry(
        name,
        system,
        pb.sig,
        pb.tab,
        dict(pb.hypotheses),
        list(pb.lines),
        pb.lines[-1].formula,
        pb.theory,
        dict(pb.marks),
        checks,
    )


def theorem_library():
    """Replayable derivations keyed by name.

    ``NOM_Z``, ``SYM`` and ``BRIDGE`` are stated over `demo_signature`;
    ``SYM_AS_PRINTED`` is a fixture that is expected to fail at line 4;
    ``P_PRIME`` is the SMC program property, checked under the SMC theory.

    Returns
    -------
    dict of str -> LibraryEntry
    """
    from .smc import build_pprime_proof

    sig, tab = demo_signature()
    j, k = Nom("j", "t"), Nom("k", "t")
    q = tab.atom("q")
    lib = {}

    pb = ProofBuilder(sig, tab)
    derive_nom_z(pb, j, k, "s", q)
    lib["NOM_Z"] = _entry("NOM_Z", pb, "H_AT")

    pb = ProofBuilder(sig, tab)
    derive_sym(pb, j, k, "s")
    lib["SYM"] = _entry("SYM", pb, "H_AT")

    pb = ProofBuilder(sig, tab)
    derive_bridge(pb, "f", 2, (tab.atom("p"),), j, q)
    lib["BRIDGE"] = _entry("BRIDGE", pb, "H_AT")

    printed = sym_as_printed(sig, tab, j, k, "s")
    lib["SYM_AS_PRINTED"] = LibraryEntry(
        "SYM_AS_PRINTED",
        "H_AT",
        sig,
        tab,
        {},
        printed,
        printed[-1].formula,
        checks=False,
    )

    lib["P_PRIME"] = build_pprime_proof()
    return lib
