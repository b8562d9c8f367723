import json
from pathlib import Path

import numpy as np
import pytest

from qwad.cli import main

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_usage_error(self, capsys):
        code, _, err = run(capsys, "parse")
        assert code == 1

    def test_unknown_command(self, capsys):
        code, _, _ = run(capsys, "frobnicate")
        assert code == 1

    def test_parse_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.qw"
        bad.write_text("qubit q1\nskip[q1")
        code, _, err = run(capsys, "parse", str(bad))
        assert code == 2
        assert "parse error" in err

    def test_semantic_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.qw"
        bad.write_text("qubit q1\nskip[q2]")
        code, _, err = run(capsys, "parse", str(bad))
        assert code == 3

    def test_numeric_error(self, capsys, tmp_path):
        obs = tmp_path / "obs.json"
        obs.write_text(json.dumps([[0, [0, 1]], [0, 0]]))  # not Hermitian
        code, _, err = run(
            capsys, "grad", "--param", "1", "--theta", "0.5",
            "--obs", f"file:{obs}", str(PROGRAMS / "rx.qw"),
        )
        assert code == 4

    def test_missing_file(self, capsys):
        code, _, _ = run(capsys, "parse", "no/such/file.qw")
        assert code == 1


class TestCommands:
    def test_parse_echoes_normal_form(self, capsys):
        code, out, _ = run(capsys, "parse", str(PROGRAMS / "simple_case.qw"))
        assert code == 0
        assert out.startswith("qubit q1\nparams 1\n")
        assert "case M[q1] =" in out

    def test_diff_prints_gadget(self, capsys):
        code, out, _ = run(capsys, "diff", "--param", "1", str(PROGRAMS / "rx.qw"))
        assert code == 0
        assert "A1,q1 := Rx'(th1)[A1,q1]" in out
        assert out.startswith("qubit A1\n")

    def test_diff_of_guarded_example(self, capsys):
        code, out, _ = run(
            capsys, "diff", "--param", "1", str(PROGRAMS / "simple_case.qw")
        )
        assert code == 0
        # branch 0 becomes the additive choice of gadgetizing either gate
        assert "A1,q1 := Rx'(th1)[A1,q1];" in out
        assert "[]" in out
        assert "A1,q1 := Ry'(th1)[A1,q1]" in out
        assert "A1,q1 := Rz'(th1)[A1,q1]" in out
        # and the printed transform parses back
        from qwad.autodiff import differentiate
        from qwad.syntax import parse

        src = (PROGRAMS / "simple_case.qw").read_text()
        d = differentiate(parse(src).body, 1)
        assert parse(out).body == d.transformed

    def test_grad_example_value(self, capsys):
        code, out, _ = run(
            capsys, "grad", "--param", "1", "--theta", "1.0472",
            "--obs", "Z:q1", "--rho", "basis:0", str(PROGRAMS / "rx.qw"),
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["grad"][0] == pytest.approx(-np.sin(1.0472), abs=1e-5)
        assert doc["grad"][0] == pytest.approx(-0.86603, abs=1e-4)
        assert doc["nna"] == [1] and doc["oc"] == [1]

    def test_compile_all_abort_program(self, capsys, tmp_path):
        f = tmp_path / "aa.qw"
        f.write_text("qubit q1\nabort[q1] [] abort[q1]\n")
        code, out, _ = run(capsys, "compile", str(f))
        assert code == 0
        doc = json.loads(out)
        assert doc["members"] == ["abort[q1]"]

    def test_run_final_state(self, capsys):
        code, out, _ = run(
            capsys, "run", "--theta", "3.141592653589793", "--rho", "basis:0",
            str(PROGRAMS / "rx.qw"),
        )
        assert code == 0
        doc = json.loads(out)
        state = np.array([[complex(a, b) for a, b in row] for row in doc["state"]])
        assert np.allclose(state, [[0, 0], [0, 1]], atol=1e-12)

    def test_run_with_observable_and_bitstring_state(self, capsys):
        code, out, _ = run(
            capsys, "run", "--theta", "0", "--rho", "basis:1",
            "--obs", "Z:q1", str(PROGRAMS / "rx.qw"),
        )
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(-1.0)

    def test_sampled_grad_seeded_byte_identical(self, capsys):
        args = (
            "grad", "--param", "1", "--theta", "1.0472", "--obs", "Z:q1",
            "--sampled", "--delta", "0.2", "--seed", "9",
            str(PROGRAMS / "rx.qw"),
        )
        code1, out1, _ = run(capsys, *args)
        code2, out2, _ = run(capsys, *args)
        assert code1 == code2 == 0
        assert out1 == out2
        doc = json.loads(out1)
        assert doc["method"] == "sampled"
        assert doc["shots"] == json.loads(out1)["shots"] > 0

    def test_train_csv(self, capsys):
        code, out, _ = run(
            capsys, "train", "--model", "p1", "--epochs", "2", "--seed", "5"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "epoch,loss"
        assert len(lines) == 4

    def test_bench_report(self, capsys):
        code, out, _ = run(
            capsys, "bench", "--family", "qaoa", "--scale", "s",
            "--control", "while", "--report-only",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["qubits"] == 3
        assert doc["headline_nna"] <= doc["headline_oc"]

    def test_bench_prints_program_and_report(self, capsys):
        code, out, _ = run(
            capsys, "bench", "--family", "vqe", "--scale", "s", "--control", "basic"
        )
        assert code == 0
        assert "qubit q1" in out and '"gates"' in out

    def test_out_flag_writes_file(self, capsys, tmp_path):
        target = tmp_path / "echo.qw"
        code, out, _ = run(
            capsys, "parse", str(PROGRAMS / "rx.qw"), "--out", str(target)
        )
        assert code == 0
        assert out == ""
        assert "Rx(th1)" in target.read_text()

    def test_additive_run_needs_observable(self, capsys):
        code, _, err = run(
            capsys, "run", "--theta", "0,0,0", str(PROGRAMS / "generic_case.qw")
        )
        assert code == 3
        code, out, _ = run(
            capsys, "run", "--theta", "0,0,0", "--obs", "Z:q2",
            str(PROGRAMS / "generic_case.qw"),
        )
        assert code == 0
