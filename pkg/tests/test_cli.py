import json
import subprocess
import sys

import pytest

from bosontsp.cli import main
from bosontsp.encodings import QuboParams
from bosontsp.experiment import ExperimentSpec, compare_formulations, run_experiment, strip_timing
from bosontsp.instances import load_bundled
from bosontsp.optimizer import TrainingConfig, TrainingTrace


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_lengths(capsys):
    code, out = run(capsys, "lengths", "26")
    assert code == 0
    assert json.loads(out) == {"n_locations": 26, "penalty_free": 94, "binary_penalty": 125, "qubo": 625}


def test_oracle(capsys):
    code, out = run(capsys, "oracle", "--instance", "bundled:4")
    assert code == 0 and json.loads(out)["distance"] == 10


def test_oracle_from_csv(capsys, tmp_path):
    p = tmp_path / "m.dat"
    p.write_text("0,1,5,2\n1,0,3,6\n5,3,0,4\n2,6,4,0\n")
    code, out = run(capsys, "oracle", "--instance", str(p), "--format", "csv")
    assert json.loads(out)["distance"] == 10


def test_solve_writes_outputs(capsys, tmp_path):
    code, out = run(
        capsys, "solve", "--instance", "bundled:4", "--formulation", "binary-penalty", "--iterations", "5",
        "--batch", "10", "--seeds", "2", "--out", str(tmp_path),
    )
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["formulation"] == "binary_penalty" and summary["bit_length"] == 6
    assert [r["seed"] for r in summary["runs"]] == [0, 1]
    trace = TrainingTrace.from_csv((tmp_path / "trace_1.csv").read_text())
    assert len(trace) == 5 * 4


def test_solve_shift_rule_and_best_known(capsys, tmp_path):
    code, _ = run(
        capsys, "solve", "--instance", "bundled:4", "--optimizer", "shift-rule", "--iterations", "2",
        "--batch", "5", "--best-known", "20", "--out", str(tmp_path),
    )
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["reference_length"] == 20
    assert summary["runs"][0]["n_evaluations"] == 1 + 2 * 2 * 2


def test_compare(capsys, tmp_path):
    code, out = run(capsys, "compare", "--instance", "bundled:4", "--iterations", "3", "--batch", "5",
                    "--out", str(tmp_path))
    assert code == 0
    for name in ("penalty_free", "binary_penalty", "qubo"):
        assert name in out
        assert (tmp_path / name / "summary.json").exists()
    rows = json.loads((tmp_path / "comparison.json").read_text())
    assert [r["bit_length"] for r in rows] == [3, 6, 9]


def test_sampler_check(capsys):
    code, out = run(capsys, "sampler-check", "--modes", "4", "--photons", "2", "--samples", "20000")
    doc = json.loads(out)
    assert code == 0 and doc["pass"] and doc["max_chain_rule_error"] < 1e-9


def test_qubo_export(capsys, tmp_path):
    path = tmp_path / "q.json"
    code, _ = run(capsys, "qubo", "--instance", "bundled:4", "--qubo-A", "40", "--out", str(path))
    qp = QuboParams.from_json(path.read_text())
    assert qp.A == 40 and qp.Q.shape == (9, 9)


def test_bad_input_reports_error(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0,1\n1\n")
    code = main(["oracle", "--instance", str(p)])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_argparse_rejects_unknown_formulation():
    with pytest.raises(SystemExit):
        main(["solve", "--instance", "bundled:4", "--formulation", "hobo"])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "bosontsp", "lengths", "4"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["qubo"] == 9


def test_experiment_reproducible_across_jobs():
    spec = ExperimentSpec(load_bundled(5), "penalty-free", TrainingConfig(iterations=5, samples_per_estimate=10), 3)
    a, _ = run_experiment(spec)
    b, _ = run_experiment(spec, n_jobs=2)
    assert strip_timing(a) == strip_timing(b)


def test_compare_rows_direct():
    rows = compare_formulations(load_bundled(4), TrainingConfig(iterations=3, samples_per_estimate=5))
    assert [r["formulation"] for r in rows] == ["penalty_free", "binary_penalty", "qubo"]
    assert rows[0]["validity_rate"] == 1.0


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(load_bundled(4), "penalty_free", TrainingConfig(), repetitions=0)
