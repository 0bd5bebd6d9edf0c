"""Classical feedback loop that tunes the beam-splitter angles.

Each objective estimate draws a batch of samples from each of the four
sampling configurations, decodes them with a formulation and averages the
energies. Angles are updated by SPSA or by a shift-rule gradient.
"""

import csv
import enum
import io
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .encodings import BaseFormulation, make_formulation
from .sampler import (
    cascade_transfer_tables,
    default_photon_number,
    four_configurations,
    parity_map,
    sample_batch,
)
from .tsp import BRUTE_FORCE_MAX_N, DistanceMatrix, brute_force_optimum, solution_quality

N_CONFIGS = 4

# spawn-key prefixes keeping the random streams of a run disjoint
_INIT_STREAM, _DIRECTION_STREAM, _SAMPLE_STREAM = 0, 1, 2


class OptimizerKind(str, enum.Enum):
    SPSA = "spsa"
    SHIFT_RULE = "shift_rule"


@dataclass(frozen=True)
class TrainingConfig:
    iterations: int = 100
    learning_rate: float = 0.01
    optimizer_kind: OptimizerKind = OptimizerKind.SPSA
    samples_per_estimate: int = 50
    spsa_perturbation: float = 0.1
    shift_amount: float = math.pi / 2
    shift_mode: str = "exact"
    seed: int = 0
    early_stop_patience: int | None = None
    n_photons: int | None = None
    independent_configs: bool = False
    # divide energies fed to the optimizer by this; "initial" uses |objective at the start|
    objective_scale: float | str = "initial"

    def __post_init__(self):
        kind = self.optimizer_kind
        if not isinstance(kind, OptimizerKind):
            kind = OptimizerKind(str(kind).replace("-", "_").lower())
        object.__setattr__(self, "optimizer_kind", kind)
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.samples_per_estimate < 1:
            raise ValueError(f"samples_per_estimate must be >= 1, got {self.samples_per_estimate}")
        if not self.spsa_perturbation > 0 or not self.shift_amount > 0:
            raise ValueError("perturbation and shift must be positive")
        if self.shift_mode not in ("exact", "finite_difference"):
            raise ValueError(f"unknown shift_mode {self.shift_mode!r}")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be a positive integer or None")
        if isinstance(self.objective_scale, str):
            if self.objective_scale not in ("initial", "none"):
                raise ValueError("objective_scale must be 'initial', 'none' or a positive number")
        elif not self.objective_scale > 0:
            raise ValueError(f"objective_scale must be positive, got {self.objective_scale}")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    config_id: int
    mean_energy: float
    min_energy: float


@dataclass
class TrainingTrace:
    records: list = field(default_factory=list)

    def series(self, config_id):
        return [r for r in self.records if r.config_id == config_id]

    @property
    def n_series(self):
        return N_CONFIGS

    def __len__(self):
        return len(self.records)

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iteration", "config_id", "mean_energy", "min_energy"])
        for r in self.records:
            writer.writerow([r.iteration, r.config_id, repr(r.mean_energy), repr(r.min_energy)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text):
        rows = csv.DictReader(io.StringIO(text))
        return cls(
            [
                TraceRecord(int(r["iteration"]), int(r["config_id"]), float(r["mean_energy"]), float(r["min_energy"]))
                for r in rows
            ]
        )


@dataclass(frozen=True)
class BestRecord:
    energy: float
    bits: tuple
    tour: object
    config_id: int
    iteration: int

    @property
    def valid(self):
        return self.tour is not None


@dataclass(frozen=True)
class Estimate:
    mean_energy: np.ndarray  # per configuration
    min_energy: np.ndarray
    n_valid: int
    n_samples: int

    @property
    def objective(self):
        return float(np.mean(self.mean_energy))


class ObjectiveEstimator:
    """Sample, decode and average; keeps the running best and usage counters.

    The random stream of every batch depends only on ``(seed, config_id, key)``,
    so repeated calls with the same key reuse the same draws (common random
    numbers across the probes of one optimizer step).
    """

    def __init__(self, formulation, batch, seed=0, n_photons=None):
        if not isinstance(formulation, BaseFormulation) or not hasattr(formulation, "n_bits_"):
            raise TypeError("formulation must be a fitted BaseFormulation")
        self.formulation = formulation
        self.n_modes = formulation.n_bits_
        if self.n_modes < 1:
            raise ValueError(
                f"{formulation.name} needs {self.n_modes} bits for N={formulation.n_locations_}; "
                "nothing to sample"
            )
        self.batch = int(batch)
        self.seed = int(seed)
        self.n_photons = default_photon_number(self.n_modes) if n_photons is None else n_photons
        self.best = None
        self.n_evaluations = 0
        self.n_samples = 0
        self.n_valid = 0
        self._reset_accumulator()

    def _reset_accumulator(self):
        self._acc_sum = np.zeros(N_CONFIGS)
        self._acc_count = np.zeros(N_CONFIGS, dtype=np.int64)
        self._acc_min = np.full(N_CONFIGS, np.inf)

    def configurations(self, thetas):
        return four_configurations(self.n_modes, thetas, self.n_photons)

    def _rng(self, config_id, key):
        ss = np.random.SeedSequence(self.seed, spawn_key=(_SAMPLE_STREAM, config_id, *key))
        return np.random.default_rng(ss)

    def estimate(self, thetas, key=(0,), iteration=0, config_ids=range(N_CONFIGS)):
        thetas = np.asarray(thetas, dtype=float)
        if thetas.shape != (self.n_modes - 1,):
            raise ValueError(f"expected {self.n_modes - 1} angles, got shape {thetas.shape}")
        self.n_evaluations += 1
        means = np.full(N_CONFIGS, np.nan)
        mins = np.full(N_CONFIGS, np.nan)
        n_valid = 0
        configs = self.configurations(thetas)
        tables = cascade_transfer_tables(thetas, self.n_photons)
        for cid in config_ids:
            config = configs[cid]
            occ, _ = sample_batch(config, self.batch, self._rng(cid, key), tables)
            bits = parity_map(occ, config.parity_polarity)
            energies, valid = self.formulation.evaluate_batch(bits)
            means[cid] = energies.mean()
            mins[cid] = energies.min()
            n_valid += int(valid.sum())
            self._acc_sum[cid] += energies.sum()
            self._acc_count[cid] += energies.size
            self._acc_min[cid] = min(self._acc_min[cid], mins[cid])
            self._offer(energies, bits, cid, iteration)
        n = self.batch * len(config_ids)
        self.n_samples += n
        self.n_valid += n_valid
        return Estimate(means, mins, n_valid, n)

    def _offer(self, energies, bits, config_id, iteration):
        i = int(np.argmin(energies))
        if self.best is not None and not energies[i] < self.best.energy:
            return
        outcome = self.formulation.decode(bits[i])
        self.best = BestRecord(float(outcome.energy), tuple(int(b) for b in bits[i]), outcome.tour, config_id, iteration)

    def flush(self, iteration):
        """Trace records for everything sampled since the last flush."""
        records = []
        for cid in range(N_CONFIGS):
            if self._acc_count[cid]:
                mean = self._acc_sum[cid] / self._acc_count[cid]
                records.append(TraceRecord(iteration, cid, float(mean), float(min(self._acc_min[cid], mean))))
        self._reset_accumulator()
        return records

    @property
    def validity_rate(self):
        return self.n_valid / self.n_samples if self.n_samples else float("nan")


def estimate_objective(thetas, formulation, batch, seed_ctx=(0, 0), best=None):
    """Per-configuration mean energies at ``thetas`` and the updated running best.

    ``seed_ctx`` is ``(seed, iteration)``.
    """
    seed, iteration = seed_ctx
    est = ObjectiveEstimator(formulation, batch, seed)
    est.best = best
    result = est.estimate(thetas, key=(iteration,), iteration=iteration)
    return result.mean_energy, est.best


def rademacher(rng, size):
    return rng.integers(0, 2, size=size) * 2 - 1


def spsa_step(thetas, estimate_fn, learning_rate, perturbation, rng):
    """One SPSA update from exactly two objective evaluations."""
    if not perturbation > 0:
        raise ValueError(f"perturbation must be positive, got {perturbation}")
    thetas = np.asarray(thetas, dtype=float)
    delta = rademacher(rng, thetas.shape)
    f_plus = estimate_fn(thetas + perturbation * delta)
    f_minus = estimate_fn(thetas - perturbation * delta)
    grad = (f_plus - f_minus) / (2 * perturbation * delta)
    return thetas - learning_rate * grad


def shift_rule_gradient(thetas, estimate_fn, shift, mode="exact"):
    """Gradient from two shifted evaluations per parameter.

    ``mode='exact'`` divides by 2 sin(shift) (the parameter-shift form);
    ``mode='finite_difference'`` divides by 2 shift.
    """
    if not shift > 0:
        raise ValueError(f"shift must be positive, got {shift}")
    thetas = np.asarray(thetas, dtype=float)
    denom = 2 * math.sin(shift) if mode == "exact" else 2 * shift
    grad = np.zeros_like(thetas)
    for i in range(thetas.size):
        e = np.zeros_like(thetas)
        e[i] = shift
        grad[i] = (estimate_fn(thetas + e) - estimate_fn(thetas - e)) / denom
    return grad


def initial_thetas(n, seed):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_INIT_STREAM,)))
    return rng.uniform(0.1, math.pi / 2 - 0.1, size=n)


@dataclass
class TrainingResult:
    trace: TrainingTrace
    best: BestRecord
    quality: object
    thetas: np.ndarray
    initial_thetas: np.ndarray
    n_evaluations: int
    n_samples: int
    validity_rate: float
    iterations_run: int
    runtime_s: float


def _resolve_best_known(dm, best_known):
    if best_known is not None:
        return float(best_known)
    if dm.n_locations <= BRUTE_FORCE_MAX_N:
        return brute_force_optimum(dm)[1]
    raise ValueError(
        f"a best-known distance is required to report quality for N={dm.n_locations} > {BRUTE_FORCE_MAX_N}"
    )


def train(instance, formulation, tc, best_known=None, compute_quality=True, rho=5.0, qubo_A=None):
    """Run the variational loop; returns a :class:`TrainingResult`."""
    dm = instance if isinstance(instance, DistanceMatrix) else DistanceMatrix(instance)
    if isinstance(formulation, BaseFormulation):
        form = formulation if hasattr(formulation, "n_bits_") else formulation.fit(dm)
    else:
        form = make_formulation(formulation, rho=rho, qubo_A=qubo_A).fit(dm)
    d_best = _resolve_best_known(dm, best_known) if compute_quality else None

    start = time.perf_counter()
    est = ObjectiveEstimator(form, tc.samples_per_estimate, tc.seed, tc.n_photons)
    n_params = est.n_modes - 1
    theta0 = initial_thetas(n_params, tc.seed)
    direction_rng = np.random.default_rng(np.random.SeedSequence(tc.seed, spawn_key=(_DIRECTION_STREAM,)))

    start_estimate = est.estimate(theta0, key=(0,), iteration=0)
    est.flush(0)
    scale = _objective_scale(tc.objective_scale, start_estimate.objective)

    if tc.independent_configs:
        thetas = np.tile(theta0, (N_CONFIGS, 1))
    else:
        thetas = theta0.copy()

    trace = TrainingTrace()
    since_improvement = 0
    iterations_run = 0
    for it in range(1, tc.iterations + 1):
        best_before = est.best.energy
        if tc.independent_configs:
            for cid in range(N_CONFIGS):
                thetas[cid] = _update(est, thetas[cid], tc, it, direction_rng, scale, config_ids=(cid,))
        else:
            thetas = _update(est, thetas, tc, it, direction_rng, scale)
        trace.records.extend(est.flush(it))
        iterations_run = it
        if est.best.energy < best_before:
            since_improvement = 0
        else:
            since_improvement += 1
        if tc.early_stop_patience is not None and since_improvement >= tc.early_stop_patience:
            break
    runtime = time.perf_counter() - start

    quality = None
    if d_best is not None and est.best.valid:
        quality = solution_quality(est.best.energy, d_best)
    return TrainingResult(
        trace=trace,
        best=est.best,
        quality=quality,
        thetas=thetas,
        initial_thetas=theta0,
        n_evaluations=est.n_evaluations,
        n_samples=est.n_samples,
        validity_rate=est.validity_rate,
        iterations_run=iterations_run,
        runtime_s=runtime,
    )


def _objective_scale(setting, initial_objective):
    if setting == "none":
        return 1.0
    if setting == "initial":
        return abs(initial_objective) if initial_objective != 0 and np.isfinite(initial_objective) else 1.0
    return float(setting)


def _update(est, thetas, tc, iteration, direction_rng, scale=1.0, config_ids=range(N_CONFIGS)):
    def objective(th):
        r = est.estimate(th, key=(iteration,), iteration=iteration, config_ids=config_ids)
        return float(np.nanmean(r.mean_energy)) / scale

    if tc.optimizer_kind is OptimizerKind.SPSA:
        return spsa_step(thetas, objective, tc.learning_rate, tc.spsa_perturbation, direction_rng)
    grad = shift_rule_gradient(thetas, objective, tc.shift_amount, tc.shift_mode)
    return thetas - tc.learning_rate * grad


def with_seed(tc, seed):
    return replace(tc, seed=seed)
