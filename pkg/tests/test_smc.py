"""Tests for the SMC signature, theory, interpreter and program property."""

import numpy as np
import pytest

from msmodal.library import theorem_library
from msmodal.proof import TheoryAxiom, check_proof, format_proof, parse_proof
from msmodal.smc import (
    PGM_TEXT,
    SMC_GENERATORS,
    ConcreteConfig,
    axiom_instance,
    build_smc_signature,
    concrete_config,
    encode_program,
    memory_term,
    parse_memory,
    print_program,
    program_signature,
    smc_run,
    split_step_axiom,
    stack_term,
)
from msmodal.syntax import App, well_sorted
from msmodal.utils import (
    FormulaSyntaxError,
    MissingBindingError,
    OutOfFuelError,
    SideConditionError,
    StuckError,
)

bundle = build_smc_signature()
sig, tab = bundle.sig, bundle.tab
VARS = bundle.variables


def _run(text, cfg=None, fuel=1000):
    stmt = encode_program(text, bundle)
    return smc_run(cfg or ConcreteConfig(), App("c_s", (stmt,), "CtrlStack"), fuel)


def _random_config(rng, max_value=None):
    top = bundle.max_nat if max_value is None else max_value
    stack = []
    for _ in range(int(rng.integers(4))):
        if rng.random() < 0.3:
            stack.append(bool(rng.integers(2)))
        else:
            stack.append(int(rng.integers(top + 1)))
    keys = rng.permutation(len(VARS))[: int(rng.integers(len(VARS) + 1))]
    memory = {VARS[i]: int(rng.integers(top + 1)) for i in keys}
    return ConcreteConfig(tuple(stack), memory)


class TestSignature:
    """The SMC signature bundle."""

    @pytest.mark.unit
    def test_contents(self):
        assert sig.op("exec").arg_sorts == ("CtrlStack", "Config")
        assert sig.op("3").result_sort == "Nat"
        assert sig.op("i1").result_sort == "Var"
        assert tab.lookup("mem2") == ("svar", "Mem")
        assert len(SMC_GENERATORS) == 22

    @pytest.mark.unit
    def test_program_signature(self):
        b = program_signature("z := 12")
        assert b.sig.has_op("z")
        assert b.sig.has_op("12")
        assert b.max_nat == 12

    @pytest.mark.unit
    def test_bad_bound(self):
        with pytest.raises(ValueError):
            build_smc_signature(max_nat=0)


class TestPrograms:
    """Program text and its encoding."""

    @pytest.mark.unit
    def test_print_round_trip(self):
        stmt = encode_program(PGM_TEXT, bundle)
        assert well_sorted(sig, tab, stmt, "Stmt")
        assert print_program(stmt) == PGM_TEXT

    @pytest.mark.unit
    def test_nesting(self):
        text = "x := 1 + 2 + y; while x <= 5 do (x := x + 1; skip)"
        stmt = encode_program(text, bundle)
        assert print_program(stmt) == text
        assert encode_program(print_program(stmt), bundle) == stmt

    @pytest.mark.unit
    def test_errors(self):
        with pytest.raises(FormulaSyntaxError):
            encode_program("x := ", bundle)
        with pytest.raises(FormulaSyntaxError):
            encode_program("x := 1 $ 2", bundle)
        with pytest.raises(FormulaSyntaxError):
            encode_program("q := 1", bundle)
        with pytest.raises(FormulaSyntaxError):
            encode_program("x := 99", bundle)

    @pytest.mark.unit
    def test_memory(self):
        assert parse_memory("i1=3, m=0") == {"i1": 3, "m": 0}
        assert parse_memory("") == {}
        with pytest.raises(ValueError):
            parse_memory("i1=x")


class TestInterpreter:
    """The concrete machine."""

    @pytest.mark.unit
    def test_program_sets_m(self):
        out = _run(PGM_TEXT)
        assert out.memory == {"i1": 1, "i2": 2, "m": 1}
        assert out.stack == ()

    @pytest.mark.regression
    def test_program_from_random_states(self):
        for trial in range(100):
            cfg = _random_config(np.random.default_rng([3, trial]))
            out = _run(PGM_TEXT, cfg)
            assert out.lookup("m") == 1
            assert out.stack == cfg.stack
            assert out.memory == {**cfg.memory, "i1": 1, "i2": 2, "m": 1}

    @pytest.mark.unit
    def test_while(self):
        out = _run("x := 0; while x <= 2 do x := x + 1")
        assert out.memory == {"x": 3}

    @pytest.mark.unit
    def test_else_branch(self):
        assert _run("if 2 <= 1 then m := 1 else m := 2").lookup("m") == 2

    @pytest.mark.unit
    def test_uninitialized_reads_zero(self):
        assert _run("y := x + 1").memory == {"y": 1}

    @pytest.mark.unit
    def test_out_of_fuel(self):
        with pytest.raises(OutOfFuelError):
            _run("while 1 <= 1 do skip", fuel=100)

    @pytest.mark.unit
    def test_stuck(self):
        ctrl = App("plus", (), "CtrlStack")
        with pytest.raises(StuckError) as e:
            smc_run(ConcreteConfig((True,)), ctrl)
        assert e.value.config.stack == (True,)

    @pytest.mark.unit
    def test_config_terms(self):
        cfg = ConcreteConfig((1, False), {"x": 2})
        assert concrete_config(cfg.term(sig)) == cfg
        with pytest.raises(ValueError):
            concrete_config(stack_term(sig, [1]))


class TestTheory:
    """Theory axioms, side conditions and agreement with the interpreter."""

    @pytest.mark.unit
    def test_instances_well_sorted(self):
        vs, mem = stack_term(sig, [1]), memory_term(sig, {"x": 1})
        phi = axiom_instance("APLUS", {"n1": 1, "n2": 2, "vs": vs, "mem": mem}, bundle)
        assert well_sorted(sig, tab, phi, "Config")
        assert axiom_instance(
            "APLUS", {"n1": 1, "n2": 2, "vs": vs, "mem": mem, "n": 3}, bundle
        ) == phi

    @pytest.mark.unit
    def test_side_conditions(self):
        vs, mem = stack_term(sig, []), memory_term(sig, {})
        with pytest.raises(SideConditionError):
            axiom_instance("APLUS", {"n1": 1, "n2": 2, "vs": vs, "mem": mem, "n": 4})
        with pytest.raises(SideConditionError):
            axiom_instance("ALEQ", {"n1": 1, "n2": 2, "vs": vs, "mem": mem, "t": False})
        with pytest.raises(SideConditionError):
            axiom_instance("AMEM2", {"mem": mem, "x": "m", "n": 1, "y": "m", "m": 2})
        with pytest.raises(SideConditionError):
            axiom_instance(
                "A_NEG_TEST", {"v": 1, "v2": 1, "vs": vs, "mem": mem, "gamma": mem}
            )
        with pytest.raises(SideConditionError):
            axiom_instance("AINT", {"n": 99, "vs": vs, "mem": mem})
        with pytest.raises(MissingBindingError):
            axiom_instance("AINT", {"n": 1, "vs": vs})

    @pytest.mark.unit
    def test_bool_and_nat_values_differ(self):
        vs, mem = stack_term(sig, []), memory_term(sig, {})
        gamma = ConcreteConfig().term(sig)
        params = {"v": True, "v2": 1, "vs": vs, "mem": mem, "gamma": gamma}
        assert axiom_instance("A_NEG_TEST", params, bundle) is not None

    @pytest.mark.regression
    def test_step_axioms_agree_with_interpreter(self):
        checked = 0
        for trial in range(60):
            rng = np.random.default_rng([17, trial])
            cfg = _random_config(rng, max_value=3)
            vs, mem = stack_term(sig, cfg.stack), memory_term(sig, cfg.memory)
            n1, n2 = (int(v) for v in rng.integers(4, size=2))
            x = VARS[int(rng.integers(len(VARS)))]
            cases = [
                ("AINT", {"n": n1, "vs": vs, "mem": mem}),
                ("AID", {"x": x, "n": n1, "vs": vs, "mem": mem}),
                ("APLUS", {"n1": n1, "n2": n2, "vs": vs, "mem": mem}),
                ("ALEQ", {"n1": n1, "n2": n2, "vs": vs, "mem": mem}),
                ("AASGN", {"n": n1, "x": x, "vs": vs, "mem": mem}),
                ("A_TEST", {"v": n2 == 0, "vs": vs, "mem": mem}),
                ("ASKIP", {"gamma": cfg.term(sig)}),
            ]
            for name, params in cases:
                phi = axiom_instance(name, params, bundle)
                pre, ctrl, post = split_step_axiom(phi)
                out = smc_run(concrete_config(pre), ctrl)
                assert out == concrete_config(post), name
                checked += 1
        np.testing.assert_equal(checked, 60 * 7)

    @pytest.mark.unit
    def test_split_step_axiom(self):
        skip = App("skip", (), "Stmt")
        phi = axiom_instance("CSTMT", {"s1": skip, "s2": skip}, bundle)
        assert split_step_axiom(phi) is None


class TestProgramProperty:
    """The replayed proof that the program leaves m set to 1."""

    @pytest.fixture(scope="class")
    @classmethod
    def entry(cls):
        return theorem_library()["P_PRIME"]

    @pytest.mark.regression
    def test_checks(self, entry):
        verdict = entry.check()
        assert verdict.ok, verdict
        assert sorted(entry.hypotheses) == ["h1", "h2"]
        assert entry.marks["(15)"] == len(entry.proof)

    @pytest.mark.regression
    def test_missing_hypothesis(self, entry):
        verdict = entry.check({"h2": entry.hypotheses["h2"]})
        assert (verdict.line, verdict.reason) == (1, "UNKNOWN_HYPOTHESIS")

    @pytest.mark.regression
    def test_mutated_justification(self, entry):
        i = entry.marks["(10)"]
        line = entry.proof[i - 1]
        params = {**line.justification.params, "n": 2}
        bad = line._replace(justification=TheoryAxiom("AMEM1", params))
        proof = entry.proof[: i - 1] + [bad] + entry.proof[i:]
        verdict = check_proof("H_AT", sig, tab, proof, entry.hypotheses, entry.theory)
        assert (verdict.line, verdict.reason) == (i, "THEORY_MISMATCH")

    @pytest.mark.regression
    def test_needs_theory(self, entry):
        verdict = check_proof("H_AT", sig, tab, entry.proof, entry.hypotheses)
        assert verdict.reason == "NO_THEORY"
        assert verdict.line == entry.marks["(5)"]

    @pytest.mark.regression
    def test_file_round_trip(self, entry):
        text = format_proof(entry.proof)
        assert parse_proof(text, sig, tab, entry.theory) == entry.proof
