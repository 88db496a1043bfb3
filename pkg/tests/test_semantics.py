"""Tests for models, satisfaction and validity."""

import numpy as np
import pytest

from msmodal.library import demo_signature
from msmodal.semantics import (
    Model,
    context_reach,
    falsifying_point,
    format_model,
    generated_submodel,
    parse_model,
    random_assignment,
    random_model,
    satisfies,
    valid_in_frame,
    valid_in_model,
)
from msmodal.soundness import FormulaSampler
from msmodal.syntax import (
    App,
    At,
    Forall,
    Hole,
    Neg,
    Nom,
    OpCtx,
    Or,
    Prop,
    SVar,
    Top,
    apply_context,
    box,
    conj,
    dual_context,
    exists,
    iff,
    implies,
)
from msmodal.utils import ModelError, ResourceLimitError, SortError, UnboundSymbolError

sig, tab = demo_signature()
p, q = Prop("p", "s"), Prop("q", "t")
i, j, k = Nom("i", "s"), Nom("j", "t"), Nom("k", "t")
x, y, u = SVar("x", "s"), SVar("y", "t"), SVar("u", "t")

M = Model(
    sig,
    {"s": ("a0", "a1"), "t": ("b0", "b1", "b2")},
    {
        "f": {("a0", "a1", "b0"), ("a1", "a1", "b1")},
        "g": {("b0", "b1"), ("b1", "b2")},
        "c": {("b2",)},
    },
    {"p": {"a1"}, "q": {"b1", "b2"}},
    {"i": "a0", "j": "b1", "k": "b2"},
    {"x": "a1", "y": "b0", "u": "b1"},
)


class TestSatisfies:
    """The satisfaction relation on a fixed model."""

    @pytest.mark.unit
    def test_atoms(self):
        assert satisfies(M, None, "a1", p)
        assert not satisfies(M, None, "b0", q)
        assert satisfies(M, None, "b1", j)
        assert satisfies(M, None, "b0", y)
        assert satisfies(M, {"y": "b2"}, "b2", y)
        assert satisfies(M, None, "a0", Top("s"))

    @pytest.mark.unit
    def test_diamond(self):
        assert not satisfies(M, None, "a0", App("f", (p, q), "s"))
        assert satisfies(M, None, "a0", App("f", (p, Neg(q)), "s"))
        assert satisfies(M, None, "a1", App("f", (p, q), "s"))
        assert satisfies(M, None, "b0", App("g", (q,), "t"))
        assert not satisfies(M, None, "b2", App("g", (Top("t"),), "t"))

    @pytest.mark.unit
    def test_constant_operator(self):
        assert satisfies(M, None, "b2", App("c", (), "t"))
        assert not satisfies(M, None, "b0", App("c", (), "t"))

    @pytest.mark.unit
    def test_box_vacuous(self):
        assert satisfies(M, None, "b2", box(sig, "g", (Neg(Top("t")),)))

    @pytest.mark.unit
    def test_at(self):
        assert satisfies(M, None, "a0", At(j, q, "s"))
        assert not satisfies(M, None, "a0", At(y, q, "s"))
        assert satisfies(M, None, "a0", At(u, q, "s"))

    @pytest.mark.unit
    def test_binders(self):
        assert satisfies(M, None, "b1", exists(y, conj(y, q)))
        assert not satisfies(M, None, "b0", exists(y, conj(y, q)))
        assert satisfies(M, None, "b0", Forall(y, At(y, Or(q, Neg(q)), "t")))
        # the binder ignores the default value of y
        assert satisfies(M, None, "b2", exists(y, y))

    @pytest.mark.unit
    def test_errors(self):
        with pytest.raises(UnboundSymbolError):
            satisfies(M, {}, "b0", y)
        with pytest.raises(SortError):
            satisfies(M, None, "a0", q)


class TestValidity:
    """Validity in models and frames."""

    @pytest.mark.unit
    def test_universal_closure(self):
        assert valid_in_model(M, At(k, k, "s"))
        assert valid_in_model(M, Or(y, Neg(y)))
        assert not valid_in_model(M, y)
        assert falsifying_point(M, y) == ({"y": "b0"}, "b1")
        assert falsifying_point(M, At(k, k, "s")) is None

    @pytest.mark.unit
    def test_frame(self):
        dual = iff(App("g", (q,), "t"), Neg(box(sig, "g", (Neg(q),))))
        assert valid_in_frame(M.frame(), dual)
        assert not valid_in_frame(M.frame(), implies(q, App("g", (q,), "t")))

    @pytest.mark.unit
    def test_reflexive_frame(self):
        frame = Model(
            sig,
            {"s": ("a",), "t": ("b0", "b1")},
            {"g": {("b0", "b0"), ("b1", "b1"), ("b0", "b1")}},
        )
        assert valid_in_frame(frame, implies(q, App("g", (q,), "t")))
        assert valid_in_frame(frame, implies(k, App("g", (k,), "t")))

    @pytest.mark.unit
    def test_resource_limit(self):
        with pytest.raises(ResourceLimitError):
            valid_in_frame(M.frame(), q, max_models=1)


class TestModels:
    """Model construction, files and random models."""

    @pytest.mark.unit
    def test_bad_tuple(self):
        with pytest.raises(ModelError):
            Model(sig, {"s": ("a",), "t": ("b",)}, {"g": {("a", "b")}})

    @pytest.mark.unit
    def test_empty_sort(self):
        with pytest.raises(ModelError):
            Model(sig, {"s": ("a",), "t": ()})

    @pytest.mark.unit
    def test_file_round_trip(self):
        text = format_model(M)
        assert parse_model(text, sig) == M
        assert "rel c b2" in text

    @pytest.mark.unit
    def test_random_model_seeded(self):
        m1 = random_model(sig, tab, 4, seed=3)
        m2 = random_model(sig, tab, 4, seed=3)
        assert m1 == m2
        assert format_model(m1) == format_model(m2)
        m1.check_symbols(tab)
        for s in sig.sorts:
            assert 1 <= len(m1.worlds[s]) <= 4
            assert all(w.startswith(s + ":") for w in m1.worlds[s])

    @pytest.mark.unit
    def test_size_bounds_per_sort(self):
        m = random_model(sig, tab, {"s": 1, "t": 2}, seed=1)
        assert len(m.worlds["s"]) == 1
        assert len(m.worlds["t"]) <= 2

    @pytest.mark.unit
    def test_density_extremes(self):
        full = random_model(sig, tab, 2, seed=0, density=1.0)
        empty = random_model(sig, tab, 2, seed=0, density=0.0)
        assert len(full.relations["g"]) == len(full.worlds["t"]) ** 2
        assert not empty.relations["g"]


class TestGeneratedSubmodel:
    """Generated submodels and context reach."""

    @pytest.mark.unit
    def test_closure(self):
        sub = generated_submodel(M, {"b0"})
        assert sub.worlds["t"] == ("b0", "b1", "b2")
        assert sub.worlds["s"] == ("s:pad",)
        assert sub.nominals["i"] == "s:pad"
        assert sub.relations["g"] == M.relations["g"]

    @pytest.mark.unit
    def test_reach(self):
        eta = OpCtx("g", (OpCtx("g", (Hole("t"),), "t"),), "t")
        assert context_reach(M, eta, "b0") == {"b2"}
        assert context_reach(M, eta, "b1") == frozenset()
        assert satisfies(M, None, "b0", apply_context(eta, k))

    @pytest.mark.regression
    def test_reach_agrees_with_plugging(self):
        agree = 0
        for trial in range(200):
            r = np.random.default_rng([11, trial])
            m = random_model(sig, tab, 3, r)
            smp = FormulaSampler(sig, tab, r)
            hole = smp.sort()
            eta = smp.context(hole, depth=3)
            phi = smp.formula(hole, depth=2)
            g = random_assignment(m, tab, r)
            ws = m.worlds[eta.sort]
            w = ws[int(r.integers(len(ws)))]
            reach = context_reach(m, eta, w)
            assert reach <= set(generated_submodel(m, {w}).worlds[hole])
            here = {v for v in reach if satisfies(m, g, v, phi)}
            assert satisfies(m, g, w, apply_context(eta, phi)) == bool(here)
            assert satisfies(m, g, w, dual_context(eta)(phi)) == (here == set(reach))
            agree += 1
        np.testing.assert_equal(agree, 200)

    @pytest.mark.regression
    def test_context_truth_kept_in_generated_submodel(self):
        for trial in range(200):
            r = np.random.default_rng([12, trial])
            m = random_model(sig, tab, 3, r)
            smp = FormulaSampler(sig, tab, r, at=False, binders=False)
            hole = smp.sort()
            eta = smp.context(hole, depth=3)
            phi = apply_context(eta, smp.formula(hole, depth=2))
            ws = m.worlds[eta.sort]
            w = ws[int(r.integers(len(ws)))]
            sub = generated_submodel(m, {w})
            assert satisfies(sub, None, w, phi) == satisfies(m, None, w, phi)
