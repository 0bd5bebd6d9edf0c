"""Travelling salesman instances, cycle lengths and the exhaustive optimum oracle."""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_distance_array, check_positive

BRUTE_FORCE_MAX_N = 12


@dataclass(frozen=True)
class DistanceMatrix:
    """An N x N matrix of nonnegative edge distances.

    Asymmetric matrices are allowed; ``symmetric`` records which kind was loaded.
    """

    d: np.ndarray
    name: str = ""
    symmetric: bool = field(init=False)

    def __post_init__(self):
        arr = check_distance_array(self.d, name="distance matrix")
        object.__setattr__(self, "d", arr)
        object.__setattr__(self, "symmetric", bool(np.array_equal(arr, arr.T)))

    @property
    def n_locations(self):
        return self.d.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return np.array_equal(self.d, other.d)

    def __hash__(self):
        return hash(self.d.tobytes())

    @classmethod
    def from_coordinates(cls, coords, name="", rounding="nint"):
        """Pairwise Euclidean distances; ``rounding='nint'`` follows TSPLIB EUC_2D."""
        xy = np.asarray(coords, dtype=np.float64)
        diff = xy[:, None, :] - xy[None, :, :]
        dist = np.sqrt((diff**2).sum(axis=-1))
        if rounding == "nint":
            dist = np.floor(dist + 0.5)
        elif rounding is not None:
            raise ValueError(f"unknown rounding {rounding!r}")
        return cls(dist, name=name)


@dataclass(frozen=True)
class Tour:
    """A Hamiltonian cycle in canonical form (starts at location 0)."""

    order: tuple

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        n = len(order)
        if n < 2 or sorted(order) != list(range(n)):
            raise ValueError(f"tour must be a permutation of 0..N-1, got {order}")
        if order[0] != 0:
            raise ValueError(f"canonical tours start at 0, got {order}")
        object.__setattr__(self, "order", order)

    @classmethod
    def from_cycle(cls, cycle):
        """Rotate an arbitrary cyclic ordering so that location 0 comes first."""
        cycle = [int(v) for v in cycle]
        if 0 not in cycle:
            raise ValueError(f"cycle {cycle} does not visit location 0")
        k = cycle.index(0)
        return cls(tuple(cycle[k:] + cycle[:k]))

    def __len__(self):
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def as_list(self):
        return list(self.order)


@dataclass(frozen=True)
class QualityReport:
    d_min_exp: float
    d_min_best: float
    q_sol_percent: float
    # 100 * best / found, where lower-than-100 means sub-optimal
    inverse_percent: float


def _as_order(tour):
    return tour.order if isinstance(tour, Tour) else tuple(int(v) for v in tour)


def _as_matrix(dm):
    return dm.d if isinstance(dm, DistanceMatrix) else check_distance_array(dm)


def tour_distance(tour, dm):
    """Length of the closed cycle, returning to the start after the last location.

    Uses ``math.fsum`` so the result does not depend on summation order; rotated
    or (for symmetric matrices) reversed tours compare exactly equal.
    """
    order = _as_order(tour)
    d = _as_matrix(dm)
    n = d.shape[0]
    if len(order) != n:
        raise ValueError(f"tour has {len(order)} locations but the matrix has {n}")
    if sorted(order) != list(range(n)):
        raise ValueError(f"tour {order} is not a permutation of 0..{n - 1}")
    return math.fsum(d[order[i], order[(i + 1) % n]] for i in range(n))


def brute_force_optimum(dm, max_n=BRUTE_FORCE_MAX_N, chunk_size=200_000):
    """Exhaustive search over all (N-1)! tours fixed to start at 0.

    Returns ``(Tour, distance)``. Among equal-length tours the lexicographically
    smallest order wins.
    """
    d = _as_matrix(dm)
    n = d.shape[0]
    if n > max_n:
        raise ValueError(f"exhaustive search refused for N={n} > {max_n}")
    if n == 2:
        order = (0, 1)
        return Tour(order), tour_distance(order, d)

    rest = range(1, n)
    perms = itertools.permutations(rest)
    best_len = math.inf
    candidates = []
    # numpy pass finds near-minimal candidates; fsum settles exact ties
    while True:
        block = np.array(list(itertools.islice(perms, chunk_size)), dtype=np.intp)
        if block.size == 0:
            break
        full = np.hstack([np.zeros((block.shape[0], 1), dtype=np.intp), block])
        lengths = d[full, np.roll(full, -1, axis=1)].sum(axis=1)
        block_min = float(lengths.min())
        tol = 1e-9 * max(1.0, abs(block_min))
        if block_min < best_len - tol:
            best_len, candidates = block_min, []
        if block_min <= best_len + tol:
            near = np.flatnonzero(lengths <= best_len + tol)
            candidates.extend(tuple(int(v) for v in full[i]) for i in near)

    exact = [(tour_distance(c, d), c) for c in candidates]
    best = min(e for e, _ in exact)
    order = min(c for e, c in exact if e == best)
    return Tour(order), best


def solution_quality(d_min_exp, d_min_best):
    """Found distance as a percentage of the best known distance (100 is optimal)."""
    d_min_best = check_positive(d_min_best, "d_min_best")
    d_min_exp = check_positive(d_min_exp, "d_min_exp", strict=False)
    q = 100.0 * d_min_exp / d_min_best
    inv = 100.0 * d_min_best / d_min_exp if d_min_exp > 0 else math.inf
    return QualityReport(d_min_exp, d_min_best, q, inv)


def greedy_upper_bound(dm):
    """Nearest-neighbour tour length from location 0; a cheap upper bound on the optimum."""
    d = _as_matrix(dm)
    n = d.shape[0]
    order = [0]
    left = set(range(1, n))
    while left:
        here = order[-1]
        nxt = min(left, key=lambda v: (d[here, v], v))
        order.append(nxt)
        left.remove(nxt)
    return tour_distance(order, d)
