"""Seeded experiment runs, result files and formulation comparison tables."""

import json
import os
import statistics
import tempfile
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .encodings import FORMULATIONS, bit_length, make_formulation, normalize_formulation
from .instances import InstanceFile
from .optimizer import TrainingConfig, train

SUMMARY_SCHEMA_VERSION = 1
TIMING_FIELDS = ("runtime_s", "total_runtime_s")


@dataclass(frozen=True)
class ExperimentSpec:
    instance: InstanceFile
    formulation: str
    training: TrainingConfig
    repetitions: int = 1
    rho: float = 5.0
    qubo_A: float | None = None
    best_known: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "formulation", normalize_formulation(self.formulation))
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")

    @property
    def seeds(self):
        return [self.training.seed + r for r in range(self.repetitions)]

    @property
    def bit_length(self):
        return bit_length(self.formulation, self.instance.n_locations)

    @property
    def reference_length(self):
        return self.best_known if self.best_known is not None else self.instance.best_known


def _atomic_write(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _run_one(spec, seed):
    form = make_formulation(spec.formulation, rho=spec.rho, qubo_A=spec.qubo_A).fit(spec.instance.payload)
    if form.n_bits_ != spec.bit_length:
        raise ValueError("formulation bit length disagrees with the sampler mode count")
    tc = replace(spec.training, seed=seed)
    return seed, train(spec.instance.payload, form, tc, best_known=spec.reference_length)


def _run_summary(seed, result):
    best = result.best
    q = result.quality
    return {
        "seed": seed,
        "best_energy": best.energy,
        "best_bits": "".join(map(str, best.bits)),
        "best_tour": list(best.tour.order) if best.tour is not None else None,
        "valid": best.valid,
        "q_sol_percent": q.q_sol_percent if q else None,
        "inverse_quality_percent": q.inverse_percent if q else None,
        "validity_rate": result.validity_rate,
        "n_evaluations": result.n_evaluations,
        "n_samples": result.n_samples,
        "iterations_run": result.iterations_run,
        "runtime_s": result.runtime_s,
    }


def _aggregate(runs):
    qs = [r["q_sol_percent"] for r in runs if r["q_sol_percent"] is not None]
    n_samples = sum(r["n_samples"] for r in runs)
    n_valid = sum(r["validity_rate"] * r["n_samples"] for r in runs)
    return {
        # lowest found length relative to the reference; 100 is optimal
        "best_q_sol_percent": min(qs) if qs else None,
        "median_q_sol_percent": statistics.median(qs) if qs else None,
        "n_runs_with_tour": sum(r["valid"] for r in runs),
        "validity_rate": n_valid / n_samples if n_samples else None,
        "best_energy": min(r["best_energy"] for r in runs),
    }


def run_experiment(spec, out_dir=None, n_jobs=1):
    """Run every seed of ``spec``; write ``trace_<seed>.csv`` and ``summary.json``.

    Returns ``(summary_dict, {seed: TrainingResult})``.
    """
    start = time.perf_counter()
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
    outcomes = Parallel(n_jobs=n_jobs)(delayed(_run_one)(spec, seed) for seed in spec.seeds)
    results = dict(outcomes)
    runs = [_run_summary(seed, results[seed]) for seed in spec.seeds]
    summary = {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "instance": spec.instance.name,
        "n_locations": spec.instance.n_locations,
        "formulation": spec.formulation,
        "bit_length": spec.bit_length,
        "reference_length": spec.reference_length,
        "rho": spec.rho,
        "qubo_A": spec.qubo_A,
        "training": _config_dict(spec.training),
        "runs": runs,
        "aggregate": _aggregate(runs),
        "total_runtime_s": time.perf_counter() - start,
    }
    if out_dir is not None:
        for seed in spec.seeds:
            _atomic_write(out_dir / f"trace_{seed}.csv", results[seed].trace.to_csv())
        _atomic_write(out_dir / "summary.json", json.dumps(summary, indent=2) + "\n")
    return summary, results


def _config_dict(tc):
    d = asdict(tc)
    d["optimizer_kind"] = tc.optimizer_kind.value
    return d


def strip_timing(summary):
    """Copy of a summary without wall-clock fields, for reproducibility checks."""
    out = {k: v for k, v in summary.items() if k not in TIMING_FIELDS}
    out["runs"] = [{k: v for k, v in r.items() if k not in TIMING_FIELDS} for r in summary["runs"]]
    return out


def _trajectory(result, fraction=0.1):
    """Mean energy over the first and last ``fraction`` of iterations, all configurations."""
    records = result.trace.records
    if not records:
        return None, None
    iters = sorted({r.iteration for r in records})
    k = max(1, int(len(iters) * fraction))
    head, tail = set(iters[:k]), set(iters[-k:])
    first = np.mean([r.mean_energy for r in records if r.iteration in head])
    last = np.mean([r.mean_energy for r in records if r.iteration in tail])
    return float(first), float(last)


def compare_formulations(instance, training, repetitions=1, rho=5.0, qubo_A=None, out_dir=None, n_jobs=1):
    """Run all three formulations under one budget; one table row per formulation."""
    rows = []
    for name in FORMULATIONS:
        spec = ExperimentSpec(instance, name, training, repetitions, rho, qubo_A)
        sub = None if out_dir is None else Path(out_dir) / name
        summary, results = run_experiment(spec, sub, n_jobs=n_jobs)
        firsts, lasts = zip(*(_trajectory(r) for r in results.values()))
        agg = summary["aggregate"]
        rows.append(
            {
                "formulation": name,
                "bit_length": spec.bit_length,
                "validity_rate": agg["validity_rate"],
                "best_q_sol_percent": agg["best_q_sol_percent"],
                "runs_with_tour": agg["n_runs_with_tour"],
                "mean_energy_first": None if firsts[0] is None else float(np.mean(firsts)),
                "mean_energy_last": None if lasts[0] is None else float(np.mean(lasts)),
            }
        )
    if out_dir is not None:
        _atomic_write(Path(out_dir) / "comparison.json", json.dumps(rows, indent=2) + "\n")
    return rows


def format_table(rows):
    headers = ["formulation", "bits", "valid rate", "best Q_sol %", "runs w/ tour", "E first 10%", "E last 10%"]
    keys = [
        "formulation",
        "bit_length",
        "validity_rate",
        "best_q_sol_percent",
        "runs_with_tour",
        "mean_energy_first",
        "mean_energy_last",
    ]

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)

    table = [headers] + [[cell(r[k]) for k in keys] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)) for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
