"""Tests for the standard translation and the first-order evaluator."""

import pathlib

import numpy as np
import pytest

from msmodal.library import demo_signature
from msmodal.parsing import parse_formula
from msmodal.semantics import parse_model, random_model
from msmodal.soundness import FormulaSampler, sweep_signature
from msmodal.syntax import App, At, Forall, Neg, Nom, Prop, SVar, Top
from msmodal.translation import (
    And,
    Const,
    Eq,
    Exists,
    ForallFO,
    FOStructure,
    Pred,
    Rel,
    Var,
    VarSupply,
    all_binders_fresh,
    check_fo,
    correspondence_check,
    correspondence_sweep,
    eval_fo,
    export_fo,
    free_fo_vars,
    fresh_pivot,
    global_correspondence_check,
    parse_fo,
    standard_translate,
)
from msmodal.utils import FormulaSyntaxError, SortError, UnboundSymbolError

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

sig, tab = demo_signature()
p, q = Prop("p", "s"), Prop("q", "t")
j, k = Nom("j", "t"), Nom("k", "t")
y, u = SVar("y", "t"), SVar("u", "t")


class TestTranslate:
    """Clause by clause translation."""

    @pytest.mark.unit
    def test_atoms(self):
        assert export_fo(standard_translate(p)) == "(pred P_p x)"
        assert export_fo(standard_translate(Top("s"))) == "(= x x)"
        assert standard_translate(k, "w") == Eq(Var("w", "t"), Const("c_k", "t"))
        assert standard_translate(y, "w") == Eq(Var("w", "t"), Var("y", "t"))

    @pytest.mark.unit
    def test_at_repivots(self):
        assert export_fo(standard_translate(At(j, j, "s"))) == "(= c_j c_j)"
        psi = standard_translate(At(u, q, "s"))
        assert psi == Pred("P_q", Var("u", "t"))

    @pytest.mark.unit
    def test_operator_clause(self):
        psi = standard_translate(App("f", (p, q), "s"))
        assert export_fo(psi) == (
            "(exists (y1:s) (exists (y2:t) "
            "(and (rel R_f x y1 y2) (pred P_p y1) (pred P_q y2))))"
        )

    @pytest.mark.unit
    def test_constant_operator(self):
        assert export_fo(standard_translate(App("c", (), "t"))) == "(rel R_c x)"

    @pytest.mark.unit
    def test_binder(self):
        psi = standard_translate(Forall(y, y), "w")
        assert export_fo(psi) == "(forall (y:t) (= w y))"
        assert free_fo_vars(psi) == {Var("w", "t")}

    @pytest.mark.unit
    def test_binder_on_pivot(self):
        psi = standard_translate(Forall(y, q), "y")
        assert export_fo(psi) == (
            "(exists (y1:t) (and (= y1 y) (forall (y:t) (pred P_q y1))))"
        )
        assert free_fo_vars(psi) == {Var("y", "t")}

    @pytest.mark.unit
    def test_fresh_names_skip_used(self):
        supply = VarSupply({"y1", "y3"})
        assert [supply.fresh("s").name for _ in range(3)] == ["y2", "y4", "y5"]
        phi = App("g", (App("g", (q,), "t"),), "t")
        psi = standard_translate(phi, Var("y1", "t"))
        assert "y1:t" not in export_fo(psi)
        assert all_binders_fresh(psi)

    @pytest.mark.unit
    def test_pivot_sort(self):
        with pytest.raises(SortError):
            standard_translate(p, Var("w", "t"))

    @pytest.mark.unit
    def test_pivot_clashing_with_free_state_variable(self):
        x = SVar("x", "s")
        with pytest.raises(ValueError):
            standard_translate(x)
        with pytest.raises(ValueError):
            standard_translate(Neg(x), "x")
        # bound occurrences do not clash
        assert standard_translate(Forall(x, x), "x") is not None
        pivot = fresh_pivot(Neg(x))
        assert pivot != "x"
        psi = standard_translate(Neg(x), pivot)
        assert export_fo(psi) == f"(not (= {pivot} x))"
        assert fresh_pivot(p) == "x"
        assert fresh_pivot(p, avoid={"x"}) == "y1"

    @pytest.mark.unit
    def test_negated_state_variable_is_satisfiable(self):
        # x is assigned w1, so not-x holds at w0 in both readings
        model = parse_model((DATA / "m.mdl").read_text(), sig)
        phi = Neg(SVar("x", "s"))
        g = dict(model.assignment)
        for w in model.worlds["s"]:
            assert correspondence_check(model, g, w, phi)
        pivot = fresh_pivot(phi)
        psi = standard_translate(phi, pivot)
        st = FOStructure.from_model(model)
        assert eval_fo(st, {"x": "w1", pivot: "w0"}, psi)
        assert not eval_fo(st, {"x": "w1", pivot: "w1"}, psi)

    @pytest.mark.unit
    def test_sorts_check(self):
        phi = parse_formula("(forall y (@ y s (op g (or y q))))", sig, tab)
        psi = standard_translate(phi)
        check_fo(sig, tab, psi)
        with pytest.raises(SortError):
            check_fo(sig, tab, Pred("P_p", Var("w", "t")))
        with pytest.raises(SortError):
            check_fo(sig, tab, Rel("R_g", (Var("a", "t"), Var("b", "s"))))
        with pytest.raises(UnboundSymbolError):
            check_fo(sig, tab, Eq(Const("c_z", "t"), Const("c_z", "t")))

    @pytest.mark.unit
    def test_random_translations_well_formed(self):
        rng = np.random.default_rng(4)
        smp = FormulaSampler(sig, tab, rng)
        for _ in range(100):
            phi = smp.formula(smp.sort(), depth=4)
            psi = standard_translate(phi, "w")
            check_fo(sig, tab, psi)
            names = {v.name for v in free_fo_vars(psi)}
            assert names <= {"w"} | {"x", "y", "u"}


class TestEvaluation:
    """First-order evaluation and modal correspondence."""

    model = parse_model((DATA / "m.mdl").read_text(), sig)

    @pytest.mark.unit
    def test_eval(self):
        st = FOStructure.from_model(self.model)
        psi = standard_translate(App("g", (q,), "t"), "w")
        assert eval_fo(st, {"w": "v0"}, psi)
        assert not eval_fo(st, {"w": "v2"}, psi)
        with pytest.raises(UnboundSymbolError):
            eval_fo(st, {}, psi)

    @pytest.mark.unit
    def test_missing_relation_is_empty(self):
        m = random_model(sig, tab, 2, seed=0)
        bare = type(m)(sig, m.worlds, {}, m.valuation, m.nominals, m.assignment)
        st = FOStructure.from_model(bare)
        assert st.relations["R_g"] == set()
        psi = standard_translate(App("g", (q,), "t"), "w")
        assert not eval_fo(st, {"w": m.worlds["t"][0]}, psi)

    @pytest.mark.unit
    def test_correspondence_fixed_model(self):
        phi = parse_formula("(-> (@ j s k) (<-> (@ j s q) (@ k s q)))", sig, tab)
        g = dict(self.model.assignment)
        for w in self.model.worlds["s"]:
            assert correspondence_check(self.model, g, w, phi)
        assert global_correspondence_check(self.model, phi)

    @pytest.mark.unit
    def test_pivot_avoids_state_variable_x(self):
        phi = Forall(SVar("x", "s"), App("f", (SVar("x", "s"), q), "s"))
        g = dict(self.model.assignment)
        for w in self.model.worlds["s"]:
            assert correspondence_check(self.model, g, w, phi)

    @pytest.mark.regression
    def test_global_correspondence(self):
        rng = np.random.default_rng(9)
        smp = FormulaSampler(sig, tab, rng)
        for _ in range(100):
            phi = smp.formula(smp.sort(), depth=3)
            assert global_correspondence_check(self.model, phi)

    @pytest.mark.regression
    def test_sweep_demo_signature(self):
        assert correspondence_sweep(sig, tab, trials=200, seed=0) == []

    @pytest.mark.regression
    def test_sweep_fixed_formula(self):
        phi = parse_formula("(exists y (and y (op g (not y))))", sig, tab)
        assert correspondence_sweep(sig, tab, trials=100, formula=phi) == []

    @pytest.mark.slow
    def test_sweep_three_sorts(self):
        ssig, stab = sweep_signature()
        assert correspondence_sweep(ssig, stab, trials=1000, seed=1, depth=4) == []


class TestExport:
    """The prefix export format."""

    @pytest.mark.unit
    def test_parse_back(self):
        phi = parse_formula("(forall y (@ y s (op g (or y q))))", sig, tab)
        psi = standard_translate(phi)
        assert parse_fo(export_fo(psi), sig, tab, free={"x": "s"}) == psi

    @pytest.mark.unit
    def test_parse_back_random(self):
        rng = np.random.default_rng(13)
        smp = FormulaSampler(sig, tab, rng)
        for _ in range(50):
            phi = smp.formula("t", depth=3)
            psi = standard_translate(phi, "w")
            assert parse_fo(export_fo(psi), sig, tab, free={"w": "t"}) == psi

    @pytest.mark.unit
    def test_conjunction_is_flat(self):
        psi = parse_fo("(and (= x x) (= x x) (= x x))", sig, tab, free={"x": "s"})
        assert isinstance(psi, And)
        assert len(psi.parts) == 3

    @pytest.mark.unit
    def test_errors(self):
        with pytest.raises(FormulaSyntaxError):
            parse_fo("(pred P_r x)", sig, tab, free={"x": "s"})
        with pytest.raises(FormulaSyntaxError):
            parse_fo("(rel R_g x)", sig, tab, free={"x": "t"})
        with pytest.raises(FormulaSyntaxError):
            parse_fo("(exists (v:z) (= v v))", sig, tab)
        with pytest.raises(FormulaSyntaxError):
            parse_fo("(= a b)", sig, tab)

    @pytest.mark.unit
    def test_binders_fresh(self):
        v = Var("y1", "t")
        dup = Exists(v, Exists(v, Eq(v, v)))
        assert not all_binders_fresh(dup)
        assert all_binders_fresh(ForallFO(Var("y", "t"), Pred("P_q", Var("y", "t"))))
