"""Tests for the msmodal command line."""

import json
import pathlib

import pytest

from msmodal.cli import EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK, main, parse_size_bounds
from msmodal.library import theorem_library
from msmodal.parsing import print_formula
from msmodal.smc import PGM_TEXT

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"
SIG = str(DATA / "k.sig")
MODEL = str(DATA / "m.mdl")


def _records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


class TestBasics:
    """Version, usage errors and formula checking."""

    @pytest.mark.unit
    def test_version(self, capsys):
        assert main(["--version"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("msmodal ")
        assert "H_AT_FORALL:" in out
        assert "GEN_AT" in out

    @pytest.mark.unit
    def test_usage_errors(self, capsys):
        assert main([]) == EXIT_ERROR
        assert main(["frobnicate"]) == EXIT_ERROR
        bad_system = ["prove", "--system", "S5", "--sig", SIG, "--proof", "x"]
        assert main(bad_system) == EXIT_ERROR

    @pytest.mark.unit
    def test_check(self, capsys):
        assert main(["check", "--sig", SIG, "--formula", "(box g q)"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "(not (op g (not q))) : t"

    @pytest.mark.unit
    def test_check_errors(self, capsys):
        assert main(["check", "--sig", SIG, "--formula", "(or p q)"]) == EXIT_ERROR
        wrong_sort = ["check", "--sig", SIG, "--formula", "q", "--sort", "s"]
        assert main(wrong_sort) == EXIT_ERROR
        assert main(["check", "--sig", "missing.sig", "--formula", "q"]) == EXIT_ERROR
        assert "error" in capsys.readouterr().err

    @pytest.mark.unit
    def test_size_bounds(self):
        assert parse_size_bounds("4") == 4
        assert parse_size_bounds("s=2,t=3") == {"s": 2, "t": 3}


class TestModelChecking:
    """The mc subcommand on the bundled model."""

    @pytest.mark.unit
    def test_at_world(self, capsys):
        args = ["mc", "--sig", SIG, "--model", MODEL, "--formula", "(op g q)"]
        assert main(args + ["--world", "v0"]) == EXIT_OK
        assert main(args + ["--world", "v2"]) == EXIT_NEGATIVE
        assert capsys.readouterr().out.split() == ["true", "false"]

    @pytest.mark.unit
    def test_validity(self, capsys):
        phi = "(-> (@ j s k) (<-> (@ j s q) (@ k s q)))"
        assert main(["mc", "--sig", SIG, "--model", MODEL, "--formula", phi]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "valid"

    @pytest.mark.unit
    def test_falsified_json(self, capsys):
        args = ["mc", "--sig", SIG, "--model", MODEL, "--formula", "(or y q)"]
        assert main(args + ["--all-worlds", "--format", "json-lines"]) == EXIT_NEGATIVE
        (record,) = _records(capsys.readouterr().out)
        assert record["command"] == "mc"
        assert record["valid"] is False
        assert record["world"] == "v0"
        assert set(record["assignment"]) == {"y"}

    @pytest.mark.unit
    def test_unknown_world(self, capsys):
        args = ["mc", "--sig", SIG, "--model", MODEL, "--formula", "q", "--world", "zz"]
        assert main(args) == EXIT_ERROR


class TestProofs:
    """The prove and library subcommands."""

    @pytest.mark.regression
    def test_bundled_proof(self, capsys):
        proof = str(DATA / "nomz.prf")
        assert main(["prove", "--system", "H_AT", "--sig", SIG, "--proof", proof]) == 0
        assert capsys.readouterr().out.strip() == "OK: 20 lines checked in H_AT"
        code = main(["prove", "--system", "K_SIGMA", "--sig", SIG, "--proof", proof])
        assert code == EXIT_NEGATIVE
        assert capsys.readouterr().out.startswith("line 1: LANGUAGE")

    @pytest.mark.unit
    def test_hypotheses(self, tmp_path, capsys):
        proof = tmp_path / "h.prf"
        proof.write_text('1 t "q" hyp h1\n')
        args = ["prove", "--system", "K_SIGMA", "--sig", SIG, "--proof", str(proof)]
        assert main(args + ["--hyp", "q"]) == EXIT_OK
        assert main(args + ["--format", "json-lines"]) == EXIT_NEGATIVE
        records = _records(capsys.readouterr().out.split("\n", 1)[1])
        assert records[0]["reason"] == "UNKNOWN_HYPOTHESIS"
        assert records[0]["line"] == 1

    @pytest.mark.regression
    @pytest.mark.parametrize(
        "name, code", [("SYM", EXIT_OK), ("SYM_AS_PRINTED", EXIT_NEGATIVE)]
    )
    def test_library_round_trip(self, tmp_path, capsys, name, code):
        proof, sig = tmp_path / "p.prf", tmp_path / "p.sig"
        emit = ["library", name, "--proof-out", str(proof), "--sig-out", str(sig)]
        assert main(emit) == EXIT_OK
        capsys.readouterr()
        args = ["prove", "--system", "H_AT", "--sig", str(sig), "--proof", str(proof)]
        assert main(args) == code
        if code == EXIT_NEGATIVE:
            assert capsys.readouterr().out.startswith("line 4: NOT_TAUTOLOGY")

    @pytest.mark.slow
    def test_pprime_file_round_trip(self, tmp_path, capsys):
        proof, sig = tmp_path / "p.prf", tmp_path / "p.sig"
        main(["library", "P_PRIME", "--proof-out", str(proof), "--sig-out", str(sig)])
        entry = theorem_library()["P_PRIME"]
        hyps = []
        for name in ("h1", "h2"):
            hyps += ["--hyp", print_formula(entry.hypotheses[name])]
        args = ["prove", "--system", "H_AT", "--sig", str(sig), "--proof", str(proof)]
        assert main(args + ["--theory", "smc"] + hyps) == EXIT_OK
        # without the theory the axiom parameters cannot be read
        assert main(args + hyps) == EXIT_ERROR

    @pytest.mark.unit
    def test_translate(self, tmp_path, capsys):
        out = tmp_path / "st.txt"
        args = ["translate", "--sig", SIG, "--formula", "(@ j s j)", "--out", str(out)]
        assert main(args) == EXIT_OK
        assert capsys.readouterr().out.strip() == "(= c_j c_j)"
        assert out.read_text() == "(= c_j c_j)\n"
        assert main(["translate", "--sig", SIG, "--formula", "p"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "(pred P_p x)"

    @pytest.mark.unit
    def test_translate_avoids_state_variable_x(self, capsys):
        args = ["translate", "--sig", SIG, "--formula", "(not x)"]
        assert main(args + ["--format", "json-lines"]) == EXIT_OK
        (record,) = _records(capsys.readouterr().out)
        assert record["pivot"] == "y1"
        assert record["fo"] == "(not (= y1 x))"
        assert main(args + ["--pivot", "x"]) == EXIT_ERROR


class TestSweeps:
    """The randomized subcommands."""

    @pytest.mark.regression
    def test_correspond(self, capsys):
        args = ["correspond", "--sig", SIG, "--model", MODEL, "--trials", "30"]
        assert main(args) == EXIT_OK
        assert capsys.readouterr().out.strip() == "30 trials, 0 disagreements"

    @pytest.mark.regression
    def test_soundness(self, capsys):
        args = ["soundness", "--trials", "30", "--format", "json-lines"]
        assert main(args + ["--scheme", "K_AT", "--scheme", "NOM_Z"]) == EXIT_OK
        records = _records(capsys.readouterr().out)
        assert [r["scheme"] for r in records] == ["K_AT", "NOM_Z"]
        assert all(r["counterexamples"] == 0 for r in records)

    @pytest.mark.regression
    def test_soundness_finds_at_elim(self, capsys):
        args = ["soundness", "--trials", "200", "--scheme", "AT_ELIM"]
        assert main(args) == EXIT_NEGATIVE
        assert "fails at" in capsys.readouterr().out

    @pytest.mark.unit
    def test_soundness_seed_reproducible(self, capsys):
        args = ["soundness", "--trials", "40", "--scheme", "AT_ELIM", "--seed", "5"]
        main(args)
        first = capsys.readouterr().out
        main(args + ["--jobs", "2"])
        assert capsys.readouterr().out == first


class TestSMC:
    """The smc subcommands."""

    @pytest.mark.unit
    def test_run(self, tmp_path, capsys):
        program = tmp_path / "pgm.imp"
        program.write_text(PGM_TEXT + "\n")
        args = ["smc", "run", "--program", str(program), "--mem", "x=4"]
        assert main(args + ["--format", "json-lines"]) == EXIT_OK
        (record,) = _records(capsys.readouterr().out)
        assert record["command"] == "smc run"
        assert record["memory"] == {"i1": 1, "i2": 2, "m": 1, "x": 4}
        assert record["stack"] == []

    @pytest.mark.unit
    def test_run_bundled_program(self, capsys):
        assert main(["smc", "run", "--program", str(DATA / "pgm.imp")]) == EXIT_OK
        assert "m=1" in capsys.readouterr().out

    @pytest.mark.unit
    def test_out_of_fuel(self, tmp_path):
        program = tmp_path / "loop.imp"
        program.write_text("while 0 <= 1 do skip\n")
        args = ["smc", "run", "--program", str(program), "--fuel", "50"]
        assert main(args) == EXIT_NEGATIVE

    @pytest.mark.regression
    def test_verify(self, capsys):
        assert main(["smc", "verify", "--pprime"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[-1] == "P' proof checked"
        assert all(line.split()[-1] == "ok" for line in lines[:-1])
