"""Tests for the replayable derivations."""

import pathlib

import numpy as np
import pytest

from msmodal.library import ProofBuilder, demo_signature, derive_nom_z, theorem_library
from msmodal.parsing import parse_formula
from msmodal.proof import MP, Axiom, check_proof, parse_proof
from msmodal.schemes import SchemeInstance, instantiate_scheme
from msmodal.semantics import random_model, valid_in_model
from msmodal.syntax import Nom, Prop

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

sig, tab = demo_signature()


@pytest.fixture(scope="module")
def library():
    return theorem_library()


class TestDerivedTheorems:
    """The derived schemes check as proofs and agree with their scheme forms."""

    @pytest.mark.regression
    @pytest.mark.parametrize("name", ["NOM_Z", "SYM", "BRIDGE"])
    def test_checks(self, library, name):
        entry = library[name]
        verdict = entry.check()
        assert verdict.ok, verdict
        assert entry.checks
        assert entry.proof[-1].formula == entry.conclusion

    @pytest.mark.unit
    def test_conclusions(self, library):
        want = {
            "NOM_Z": "(-> (@ j s k) (<-> (@ j s q) (@ k s q)))",
            "SYM": "(-> (@ j s k) (@ k s j))",
            "BRIDGE": "(-> (and (op f p j) (@ j s q)) (op f p q))",
        }
        for name, text in want.items():
            assert library[name].conclusion == parse_formula(text, sig, tab)

    @pytest.mark.unit
    def test_matches_scheme(self, library):
        j, k = Nom("j", "t"), Nom("k", "t")
        q = Prop("q", "t")
        inst = SchemeInstance("NOM_Z", {"z": j, "y": k, "sort": "s", "phi": q})
        assert instantiate_scheme(inst, sig, tab) == library["NOM_Z"].conclusion
        inst = SchemeInstance("SYM", {"z": j, "y": k, "sort": "s"})
        assert instantiate_scheme(inst, sig, tab) == library["SYM"].conclusion
        inst = SchemeInstance(
            "BRIDGE",
            {"op": "f", "pos": 2, "side": (Prop("p", "s"),), "z": j, "phi": q},
        )
        assert instantiate_scheme(inst, sig, tab) == library["BRIDGE"].conclusion

    @pytest.mark.unit
    def test_marks(self, library):
        marks = library["NOM_Z"].marks
        ordered = sorted(marks, key=lambda m: int(m[1:-1]))
        assert ordered == [f"({n})" for n in range(1, 9)]
        assert marks["(8)"] == len(library["NOM_Z"].proof)
        assert set(library["BRIDGE"].marks) >= {"(1)", "(10)"}

    @pytest.mark.unit
    def test_only_at_schemes(self, library):
        for name in ("NOM_Z", "SYM", "BRIDGE"):
            schemes = {
                line.justification.instance.scheme
                for line in library[name].proof
                if isinstance(line.justification, Axiom)
            }
            assert not schemes & {"NOM_Z", "SYM", "BRIDGE", "AT_ELIM"}

    @pytest.mark.regression
    @pytest.mark.parametrize("name", ["NOM_Z", "SYM", "BRIDGE"])
    def test_conclusion_valid_on_random_models(self, library, name):
        entry = library[name]
        for trial in range(50):
            model = random_model(sig, tab, 3, seed=[2, trial])
            assert valid_in_model(model, entry.conclusion)

    @pytest.mark.unit
    def test_other_instances(self):
        # Nom_z for another symbol pair and body, at sort t
        pb = ProofBuilder(sig, tab)
        derive_nom_z(pb, Nom("k", "t"), Nom("j", "t"), "t", Prop("q", "t"))
        assert pb.check("H_AT").ok


class TestPrintedSym:
    """The commonly printed Sym derivation is rejected."""

    @pytest.mark.regression
    def test_fails_at_line_four(self, library):
        entry = library["SYM_AS_PRINTED"]
        assert not entry.checks
        verdict = entry.check()
        assert not verdict.ok
        np.testing.assert_equal(verdict.line, 4)
        assert verdict.reason == "NOT_TAUTOLOGY"

    @pytest.mark.unit
    def test_other_lines_fine(self, library):
        entry = library["SYM_AS_PRINTED"]
        assert check_proof("H_AT", sig, tab, entry.proof[:3]).ok


def _referenced(proof):
    refs = set()
    for line in proof:
        just = line.justification
        if isinstance(just, MP):
            refs |= {just.minor, just.major}
        elif getattr(just, "premise", None) is not None:
            refs.add(just.premise)
    return refs


@pytest.fixture(scope="module")
def accepted(library):
    proofs = {"nomz.prf": parse_proof((DATA / "nomz.prf").read_text(), sig, tab)}
    for name in ("NOM_Z", "SYM", "BRIDGE"):
        proofs[name] = library[name].proof
    return proofs


class TestAcceptedProofs:
    """Proofs accepted without hypotheses or theory, checked against models."""

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["nomz.prf", "NOM_Z", "SYM", "BRIDGE"])
    def test_every_line_valid_on_random_models(self, accepted, name):
        proof = accepted[name]
        assert check_proof("H_AT", sig, tab, proof).ok
        formulas = {line.formula for line in proof}
        for trial in range(200):
            model = random_model(sig, tab, 3, seed=[7, trial])
            for phi in formulas:
                assert valid_in_model(model, phi), (trial, phi)

    @pytest.mark.regression
    @pytest.mark.parametrize("name", ["nomz.prf", "NOM_Z", "SYM", "BRIDGE"])
    def test_pruning_unreferenced_lines(self, accepted, name):
        rng = np.random.default_rng(len(name))
        proof = list(accepted[name])
        while len(proof) > 1:
            refs = _referenced(proof)
            loose = [n for n, line in enumerate(proof) if line.index not in refs]
            assert loose
            del proof[loose[int(rng.integers(len(loose)))]]
            verdict = check_proof("H_AT", sig, tab, proof)
            assert verdict.ok, verdict
