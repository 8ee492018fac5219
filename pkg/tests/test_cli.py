import csv
import subprocess
import sys

import numpy as np
import pytest

from robuststl import cli
from robuststl.synth import SyntheticSpec, generate


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(header)}


@pytest.fixture
def generated(tmp_path):
    path = tmp_path / "series.csv"
    assert cli.main(["generate", "--seed", "1", "--out", str(path)]) == 0
    return path


def test_generate_writes_full_precision(generated):
    table = read(generated)
    assert table["t"].tolist() == list(range(1, 751))
    series, truth = generate(SyntheticSpec(seed=1))
    np.testing.assert_array_equal(table["value"], series.values)
    np.testing.assert_array_equal(table["trend"], truth.trend)
    np.testing.assert_array_equal(table["noise"], truth.noise)


def test_generate_is_deterministic(tmp_path, generated):
    again = tmp_path / "again.csv"
    cli.main(["generate", "--seed", "1", "--out", str(again)])
    assert again.read_bytes() == generated.read_bytes()


def test_clean_generate_sums_exactly(tmp_path):
    path = tmp_path / "clean.csv"
    cli.main(["generate", "--noise-variance", "0", "--level-changes", "0", "--anomalies", "0",
              "--max-shift", "0", "--out", str(path)])
    table = read(path)
    np.testing.assert_array_equal(table["value"], table["trend"] + table["seasonal"])


def test_decompose_and_evaluate(tmp_path, generated, capsys):
    out, diag = tmp_path / "dec.csv", tmp_path / "diag.csv"
    code = cli.main(["decompose", "--in", str(generated), "--period", "50", "--out", str(out),
                     "--lambda1", "10", "--lambda2", "0.5", "--season-k", "2", "--season-h", "5",
                     "--diagnostics", str(diag), "--baseline", "classical"])
    assert code == 0
    printed = capsys.readouterr().out
    assert "converged=true" in printed
    table = read(out)
    np.testing.assert_allclose(table["trend"] + table["seasonal"] + table["remainder"], table["value"],
                               rtol=0, atol=1e-9)
    iterations = int(printed.split("iterations=")[1].split()[0])
    assert read(diag)["iteration"].tolist() == list(range(1, iterations + 1))

    assert cli.main(["evaluate", "--result", str(out), "--truth", str(generated)]) == 0
    metrics = dict(line.split("=") for line in capsys.readouterr().out.split())
    assert float(metrics["trend_mse"]) < float(metrics["baseline_trend_mse"])
    assert float(metrics["season_mse"]) < 0.08


def test_evaluate_truth_against_itself(generated, capsys):
    assert cli.main(["evaluate", "--result", str(generated), "--truth", str(generated)]) == 0
    lines = capsys.readouterr().out.split()
    assert lines == ["trend_mse=0", "trend_mae=0", "season_mse=0", "season_mae=0"]


def test_output_feeds_the_next_stage(tmp_path, generated):
    # a decomposition file is itself a valid series file
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["decompose", "--in", str(generated), "--period", "50", "--out", str(first)]) == 0
    assert cli.main(["decompose", "--in", str(first), "--period", "50", "--out", str(second)]) == 0
    np.testing.assert_array_equal(read(first)["trend"], read(second)["trend"])


def test_constant_file(tmp_path):
    src, out = tmp_path / "flat.csv", tmp_path / "out.csv"
    cli.write_table(src, {"value": np.full(60, 2.5)})
    assert cli.main(["decompose", "--in", str(src), "--period", "7", "--out", str(out)]) == 0
    table = read(out)
    np.testing.assert_array_equal(table["trend"], 2.5)
    np.testing.assert_array_equal(table["seasonal"], 0.0)
    np.testing.assert_array_equal(table["remainder"], 0.0)


def test_nan_cell_names_the_row(tmp_path, capsys):
    src = tmp_path / "bad.csv"
    values = np.arange(40.0)
    cli.write_table(src, {"value": values})
    lines = src.read_text().splitlines()
    lines[13] = "13,nan"
    src.write_text("\n".join(lines) + "\n")
    assert cli.main(["decompose", "--in", str(src), "--period", "5", "--out", str(tmp_path / "o.csv")]) == 2
    assert "row 14" in capsys.readouterr().err


@pytest.mark.parametrize("body, fragment", [
    ("t,val\n1,2\n", "missing column"),
    ("t,value\n1,1\n3,2\n", "expected 2"),
    ("t,value\n1,1,4\n", "cells"),
    ("", "empty"),
])
def test_malformed_files(tmp_path, capsys, body, fragment):
    src = tmp_path / "in.csv"
    src.write_text(body)
    assert cli.main(["decompose", "--in", str(src), "--period", "2", "--out", str(tmp_path / "o.csv")]) == 2
    assert fragment in capsys.readouterr().err


def test_exit_codes(tmp_path, generated):
    out = str(tmp_path / "o.csv")
    assert cli.main(["decompose", "--in", str(tmp_path / "missing.csv"), "--period", "50", "--out", out]) == 3
    assert cli.main(["decompose", "--in", str(generated), "--period", "50",
                     "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 3
    assert cli.main(["decompose", "--in", str(generated), "--period", "1", "--out", out]) == 2
    assert cli.main(["decompose", "--in", str(generated), "--period", "50", "--out", out,
                     "--lambda1", "-1"]) == 2
    assert cli.main(["generate", "--max-shift", "30", "--out", out]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["decompose", "--period", "50"])
    assert info.value.code == 2


def test_budget_exhaustion_still_writes(tmp_path, generated, capsys):
    out = tmp_path / "o.csv"
    code = cli.main(["decompose", "--in", str(generated), "--period", "50", "--out", str(out),
                     "--max-iterations", "2"])
    assert code == 4
    assert out.exists()
    assert "converged=false" in capsys.readouterr().out


def test_length_mismatch(tmp_path, generated):
    other = tmp_path / "short.csv"
    cli.main(["generate", "--periods", "10", "--out", str(other)])
    assert cli.main(["evaluate", "--result", str(other), "--truth", str(generated)]) == 6


def test_solver_failure_exit_code(tmp_path, generated, monkeypatch):
    from robuststl import core

    def failing(*args, **kwargs):
        raise core.SolverDidNotConverge("budget spent")

    monkeypatch.setattr(cli.pipeline, "decompose", failing)
    assert cli.main(["decompose", "--in", str(generated), "--period", "50",
                     "--out", str(tmp_path / "o.csv")]) == 5


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "robuststl.cli", "generate", "--periods", "4",
                           "--out", str(tmp_path / "s.csv")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "wrote 200 rows" in proc.stdout
