"""End-to-end CLI tests: commands, exit codes, files, JSON output."""

from __future__ import annotations

import json

import pytest

from groupeqn import cli


def run(capsys, *argv) -> tuple[int, str]:
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_analyze_s4(capsys):
    code, out = run(capsys, "analyze", "s4")
    assert code == 0
    assert "FitL=3" in out
    assert "24 >= 12 >= 4 >= 1" in out
    assert "inapplicable" in out


def test_analyze_json(capsys):
    code, out = run(capsys, "analyze", "g168", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["fitting_length"] == 3
    assert data["scan"]["applicable"] is True


def test_analyze_unknown_group(capsys):
    assert cli.main(["analyze", "mystery"]) == 2


def test_find_kh_writes_certificate(tmp_path, capsys):
    out_file = tmp_path / "cert.json"
    code, out = run(capsys, "find-kh", "g168", "--out", str(out_file))
    assert code == 0
    data = json.loads(out_file.read_text())
    assert data["group_order"] == 168
    assert len(data["K"]) == 56


def test_find_kh_nilpotent(capsys):
    assert cli.main(["find-kh", "d4"]) == 2


def test_and_program_verify_and_save(tmp_path, capsys):
    out_file = tmp_path / "and.prog"
    code, out = run(capsys, "and-program", "s4", "6", "--verify", "--out", str(out_file))
    assert code == 0
    assert "verification: pass" in out
    assert out_file.read_text().startswith("group s4 inputs 6")


def test_reduce_writes_files(tmp_path, capsys):
    graph = tmp_path / "edge.txt"
    graph.write_text("2 1\n0 1\n")
    base = tmp_path / "out"
    code, out = run(
        capsys, "reduce", "g168", str(graph), "--sat", "--out", str(base), "--budget", "20000000"
    )
    assert code == 0
    assert (tmp_path / "out.meta").exists()
    assert (tmp_path / "out.expr").exists()


def test_reduce_budget_exit_code(tmp_path, capsys):
    graph = tmp_path / "tri.txt"
    graph.write_text("3 3\n0 1\n1 2\n0 2\n")
    base = tmp_path / "tri"
    code, _ = run(
        capsys,
        "reduce", "g168", str(graph), "--id",
        "--out", str(base), "--budget", "1000", "--out-requires-expr",
    )
    assert code == 3
    assert (tmp_path / "tri.meta").exists()


def test_reduce_inapplicable_group(tmp_path, capsys):
    graph = tmp_path / "e.txt"
    graph.write_text("2 1\n0 1\n")
    assert cli.main(["reduce", "s4", str(graph), "--sat"]) == 1


def test_decide_agreement_and_exit_codes(tmp_path, capsys):
    tri = tmp_path / "tri.txt"
    tri.write_text("3 3\n0 1\n1 2\n0 2\n")
    code, out = run(capsys, "decide", "g168", str(tri))
    assert code == 0
    assert "sat=True" in out and "agreement: True" in out

    k4 = tmp_path / "k4.col"
    k4.write_text("p edge 4 6\n" + "".join(f"e {i+1} {j+1}\n" for i in range(4) for j in range(i + 1, 4)))
    code, out = run(capsys, "decide", "g168", str(k4))
    assert code == 1
    assert "sat=False" in out and "agreement: True" in out


def test_solve_eqn(tmp_path, capsys):
    f = tmp_path / "e.expr"
    f.write_text("group s4 vars 2\nx0 X1\n")
    code, out = run(capsys, "solve-eqn", str(f), "--group", "s4")
    assert code == 0
    assert "satisfiable: True" in out

    f2 = tmp_path / "bad.expr"
    f2.write_text("group s4 vars 0\ng5\n")
    assert cli.main(["solve-eqn", str(f2), "--group", "s4"]) == 1

    code, out = run(capsys, "solve-eqn", str(f), "--group", "s4", "--id")
    assert code == 1  # x0 * x1^-1 is not an identity


def test_solve_eqn_budget(tmp_path, capsys):
    f = tmp_path / "big.expr"
    f.write_text("group s4 vars 6\nx0 x1 x2 x3 x4 x5\n")
    assert cli.main(["solve-eqn", str(f), "--group", "s4", "--budget", "100"]) == 3


def test_solve_eqn_budget_many_variables(tmp_path, capsys):
    # compiled instances carry hundreds of thousands of variables; the
    # budget refusal must stay a clean exit 3
    f = tmp_path / "huge.expr"
    body = " ".join(f"x{i}" for i in range(5000))
    f.write_text(f"group g168 vars 5000\n{body}\n")
    assert cli.main(["solve-eqn", str(f), "--group", "g168"]) == 3


def test_scan_catalog_table_and_files(tmp_path, capsys):
    code, out = run(capsys, "scan-catalog", "--out-dir", str(tmp_path))
    assert code == 0
    assert "g168" in out and "applicable" in out
    assert (tmp_path / "catalog_scan.csv").exists()
    assert (tmp_path / "catalog_scan.png").exists()
    csv_text = (tmp_path / "catalog_scan.csv").read_text()
    assert "g432,432,4" in csv_text


def test_report_and_lengths(tmp_path, capsys):
    code, out = run(capsys, "report", "and-lengths", "--group", "s4", "--max-n", "8", "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "and_lengths_s4.csv").exists()
    assert (tmp_path / "and_lengths_s4.png").exists()


def test_report_delta_sizes(tmp_path, capsys):
    code, out = run(capsys, "report", "delta-sizes", "--group", "g168", "--max-m", "10", "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "delta_sizes_g168.csv").exists()
    assert (tmp_path / "delta_sizes_g168.png").exists()
    assert "bound" in out


def test_config_file_budget(tmp_path, capsys):
    cfg = tmp_path / "cfg"
    cfg.write_text("budget = 100\n")
    f = tmp_path / "big.expr"
    f.write_text("group s4 vars 6\nx0 x1 x2 x3 x4 x5\n")
    assert cli.main(["--config", str(cfg), "solve-eqn", str(f), "--group", "s4"]) == 3


def test_missing_file_is_input_error(capsys):
    assert cli.main(["solve-eqn", "/nonexistent.expr", "--group", "s4"]) == 2


@pytest.mark.slow
def test_verify_all_passes(capsys):
    code, out = run(capsys, "verify-all")
    assert code == 0
    assert "all checks passed" in out
    assert out.count("PASS") >= 10 and "FAIL" not in out
