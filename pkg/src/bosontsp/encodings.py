"""Bit-string formulations of the TSP.

Three encodings map a sampler bit string to a problem energy:

* penalty-free: bits index into a shrinking list of unvisited locations, so
  every bit string is a valid tour;
* binary-penalty: bits are fixed-width binary location labels, with a constant
  penalty for duplicate or out-of-range labels;
* QUBO: a one-hot (N-1) x (N-1) vertex/position matrix scored by x^T Q x.

Each formulation is available as plain functions over single bit strings and as
a scikit-learn style transformer (``fit`` on a distance matrix, ``transform``
batches of bit strings into energies).
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_bit_batch, check_bits, check_n_locations, check_positive
from .tsp import (
    BRUTE_FORCE_MAX_N,
    DistanceMatrix,
    Tour,
    brute_force_optimum,
    greedy_upper_bound,
    tour_distance,
)

FORMULATIONS = ("penalty_free", "binary_penalty", "qubo")


def _ceil_log2(m):
    return (m - 1).bit_length() if m > 1 else 0


def penalty_free_length(n_locations):
    """Sum of ceil(log2 i) for i = 1..N-1."""
    n = check_n_locations(n_locations)
    return sum(_ceil_log2(i) for i in range(1, n))


def binary_penalty_length(n_locations):
    n = check_n_locations(n_locations)
    return _ceil_log2(n) * (n - 1)


def qubo_length(n_locations):
    n = check_n_locations(n_locations)
    return (n - 1) ** 2


def bit_length(formulation, n_locations):
    lengths = {
        "penalty_free": penalty_free_length,
        "binary_penalty": binary_penalty_length,
        "qubo": qubo_length,
    }
    try:
        return lengths[normalize_formulation(formulation)](n_locations)
    except KeyError:
        raise ValueError(f"unknown formulation {formulation!r}") from None


def normalize_formulation(name):
    key = str(name).replace("-", "_").lower()
    if key not in FORMULATIONS:
        raise ValueError(f"unknown formulation {name!r}; expected one of {FORMULATIONS}")
    return key


@dataclass(frozen=True)
class DecodedOutcome:
    energy: float
    tour: Tour | None
    valid: bool


@dataclass(frozen=True)
class PenaltyParams:
    """Constant penalty for invalid label lists: ``rho * sum_i D[0][i]``."""

    rho: float
    h_pen: float

    @classmethod
    def for_instance(cls, dm, rho=5.0, verify=True):
        rho = check_positive(rho, "rho")
        d = _matrix(dm)
        h_pen = rho * math.fsum(d[0, :])
        if verify:
            _check_penalty_dominates(h_pen, d)
        return cls(rho, h_pen)


def _check_penalty_dominates(h_pen, d):
    # a greedy tour bounds the optimum from above; exhaustive search only if needed
    if h_pen > greedy_upper_bound(d):
        return
    if d.shape[0] <= BRUTE_FORCE_MAX_N:
        _, best = brute_force_optimum(d)
        if not h_pen > best:
            raise ValueError(
                f"penalty {h_pen:g} does not exceed the optimal tour length {best:g}; increase rho"
            )


def _matrix(dm):
    return dm.d if isinstance(dm, DistanceMatrix) else DistanceMatrix(dm).d


def _bits_to_int(bits):
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


# -- penalty-free ----------------------------------------------------------


def decode_penalty_free(bits, dm):
    """Decode a bit string into a tour by repeated selection from an ordered list.

    Each index field is read most-significant bit first and reduced modulo the
    number of remaining locations, so every bit string yields a valid tour.
    """
    d = _matrix(dm)
    n = d.shape[0]
    b = check_bits(bits, penalty_free_length(n))
    ordered = list(range(n))
    cycle = [ordered.pop(0)]
    pos = 0
    for j in range(1, n - 1):
        m = n - j
        width = _ceil_log2(m)
        p = _bits_to_int(b[pos : pos + width])
        pos += width
        cycle.append(ordered.pop(p % m))
    cycle.append(ordered.pop())
    tour = Tour(tuple(cycle))
    return DecodedOutcome(tour_distance(tour, d), tour, True)


def _penalty_free_tours(bits, n):
    """Vectorized decode of a (n_samples, L1) batch into an (n_samples, N) tour array."""
    n_samples = bits.shape[0]
    remaining = np.ones((n_samples, n), dtype=bool)
    remaining[:, 0] = False
    tours = np.zeros((n_samples, n), dtype=np.intp)
    rows = np.arange(n_samples)
    pos = 0
    for j in range(1, n - 1):
        m = n - j
        width = _ceil_log2(m)
        weights = 1 << np.arange(width - 1, -1, -1)
        p = bits[:, pos : pos + width].astype(np.int64) @ weights if width else np.zeros(n_samples, np.int64)
        pos += width
        q = p % m
        # position of the (q+1)-th remaining location in each row
        pick = np.argmax(np.cumsum(remaining, axis=1) == (q + 1)[:, None], axis=1)
        tours[:, j] = pick
        remaining[rows, pick] = False
    if n > 1:
        tours[:, n - 1] = np.argmax(remaining, axis=1)
    return tours


def _cycle_lengths(tours, d):
    return d[tours, np.roll(tours, -1, axis=1)].sum(axis=1)


# -- binary labels with penalty ------------------------------------------


def decode_binary_penalty(bits, dm, pen=None):
    """Decode N-1 fixed-width location labels; the last location is found by elimination."""
    d = _matrix(dm)
    n = d.shape[0]
    if pen is None:
        pen = PenaltyParams.for_instance(d)
    width = _ceil_log2(n)
    b = check_bits(bits, binary_penalty_length(n))
    labels = [_bits_to_int(b[k * width : (k + 1) * width]) for k in range(n - 1)]
    if any(v >= n for v in labels) or len(set(labels)) != len(labels):
        return DecodedOutcome(pen.h_pen, None, False)
    (missing,) = set(range(n)) - set(labels)
    tour = Tour.from_cycle(labels + [missing])
    return DecodedOutcome(tour_distance(tour, d), tour, True)


def _binary_labels(bits, n):
    width = _ceil_log2(n)
    weights = 1 << np.arange(width - 1, -1, -1)
    return bits.reshape(bits.shape[0], n - 1, width).astype(np.int64) @ weights


# -- QUBO ------------------------------------------------------------------


@dataclass(frozen=True)
class QuboParams:
    """Dense symmetric QUBO over x[v, j], v, j in 1..N-1, flattened row-major.

    ``energy = x^T Q x + offset`` equals the tour length on permutation matrices.
    """

    A: float
    Q: np.ndarray
    offset: float
    n_locations: int

    def to_json(self, path=None):
        doc = {
            "n_locations": self.n_locations,
            "n_variables": int(self.Q.shape[0]),
            "A": self.A,
            "offset": self.offset,
            "variable_order": "row-major x[vertex, position], vertex and position in 1..N-1",
            "Q": self.Q.tolist(),
        }
        text = json.dumps(doc, indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        Q = np.asarray(doc["Q"], dtype=np.float64)
        return cls(float(doc["A"]), Q, float(doc["offset"]), int(doc["n_locations"]))


def default_qubo_weight(dm):
    d = _matrix(dm)
    return d.shape[0] * float(d.max()) + 1.0


def qubo_build(dm, A=None):
    d = _matrix(dm)
    n = d.shape[0]
    A = default_qubo_weight(d) if A is None else check_positive(A, "A")
    k = n - 1
    size = k * k

    def idx(v, j):
        return (v - 1) * k + (j - 1)

    Q = np.zeros((size, size))

    def add(i, j, w):
        if i == j:
            Q[i, i] += w
        else:
            Q[i, j] += w / 2
            Q[j, i] += w / 2

    # tour length: vertex 0 is pinned to position 0
    for v in range(1, n):
        add(idx(v, 1), idx(v, 1), d[0, v])
        add(idx(v, k), idx(v, k), d[v, 0])
    for j in range(1, k):
        for u in range(1, n):
            for v in range(1, n):
                if u != v and d[u, v] != 0:
                    add(idx(u, j), idx(v, j + 1), d[u, v])

    # (1 - sum x)^2 = 1 - sum x + 2 sum_{a<b} x_a x_b for binary x
    groups = [[idx(v, j) for j in range(1, n)] for v in range(1, n)]
    groups += [[idx(v, j) for v in range(1, n)] for j in range(1, n)]
    for g in groups:
        for a_pos, a in enumerate(g):
            Q[a, a] -= A
            for b in g[a_pos + 1 :]:
                add(a, b, 2 * A)
    offset = 2 * A * k
    Q.setflags(write=False)
    return QuboParams(float(A), Q, float(offset), n)


def _permutation_tour(x, n):
    k = n - 1
    mat = x.reshape(k, k)
    if not (np.all(mat.sum(axis=0) == 1) and np.all(mat.sum(axis=1) == 1)):
        return None
    # column j holds the vertex placed at position j + 1
    vertices = np.argmax(mat, axis=0) + 1
    return Tour((0, *vertices.tolist()))


def qubo_evaluate(bits, qp):
    x = check_bits(bits, qp.Q.shape[0]).astype(np.float64)
    energy = float(x @ qp.Q @ x + qp.offset)
    tour = _permutation_tour(x.astype(np.uint8), qp.n_locations)
    return DecodedOutcome(energy, tour, tour is not None)


# -- estimator wrappers --------------------------------------------------


class BaseFormulation(TransformerMixin, BaseEstimator):
    """Fit on a distance matrix; transform bit strings into energies."""

    name = None

    def fit(self, X, y=None):
        self.distance_matrix_ = X if isinstance(X, DistanceMatrix) else DistanceMatrix(X)
        self.n_locations_ = self.distance_matrix_.n_locations
        self.n_bits_ = bit_length(self.name, self.n_locations_)
        self._prepare()
        return self

    def _prepare(self):
        pass

    def transform(self, X):
        energies, _ = self.evaluate_batch(X)
        return energies

    def evaluate_batch(self, bits):
        """Energies and validity mask for a (n_samples, n_bits) batch."""
        check_is_fitted(self, "n_bits_")
        batch = check_bit_batch(bits, self.n_bits_)
        return self._evaluate(batch)

    def decode(self, bits):
        check_is_fitted(self, "n_bits_")
        return self._decode(bits)


class PenaltyFreeFormulation(BaseFormulation):
    name = "penalty_free"

    def _evaluate(self, batch):
        tours = _penalty_free_tours(batch, self.n_locations_)
        energies = _cycle_lengths(tours, self.distance_matrix_.d)
        return energies, np.ones(batch.shape[0], dtype=bool)

    def _decode(self, bits):
        return decode_penalty_free(bits, self.distance_matrix_)


class BinaryPenaltyFormulation(BaseFormulation):
    name = "binary_penalty"

    def __init__(self, rho=5.0):
        self.rho = rho

    def _prepare(self):
        self.penalty_ = PenaltyParams.for_instance(self.distance_matrix_, self.rho)

    def _evaluate(self, batch):
        n = self.n_locations_
        d = self.distance_matrix_.d
        labels = _binary_labels(batch, n)
        ordered = np.sort(labels, axis=1)
        valid = (labels.max(axis=1) < n) & np.all(np.diff(ordered, axis=1) != 0, axis=1)
        energies = np.full(batch.shape[0], self.penalty_.h_pen)
        if valid.any():
            good = labels[valid]
            missing = n * (n - 1) // 2 - good.sum(axis=1)
            cycles = np.hstack([good, missing[:, None]])
            energies[valid] = _cycle_lengths(cycles, d)
        return energies, valid

    def _decode(self, bits):
        return decode_binary_penalty(bits, self.distance_matrix_, self.penalty_)


class QuboFormulation(BaseFormulation):
    name = "qubo"

    def __init__(self, A=None):
        self.A = A

    def _prepare(self):
        self.qubo_ = qubo_build(self.distance_matrix_, self.A)

    def _evaluate(self, batch):
        x = batch.astype(np.float64)
        energies = ((x @ self.qubo_.Q) * x).sum(axis=1) + self.qubo_.offset
        k = self.n_locations_ - 1
        mats = batch.reshape(-1, k, k)
        valid = np.all(mats.sum(axis=1) == 1, axis=1) & np.all(mats.sum(axis=2) == 1, axis=1)
        return energies, valid

    def _decode(self, bits):
        return qubo_evaluate(bits, self.qubo_)


def make_formulation(name, rho=5.0, qubo_A=None):
    key = normalize_formulation(name)
    if key == "penalty_free":
        return PenaltyFreeFormulation()
    if key == "binary_penalty":
        return BinaryPenaltyFormulation(rho=rho)
    return QuboFormulation(A=qubo_A)
