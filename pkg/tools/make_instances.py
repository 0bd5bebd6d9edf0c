"""Regenerate the bundled instances in src/bosontsp/data/.

Coordinates are seeded uniform draws on a 1000 x 1000 grid. Best known tour
lengths come from exhaustive search (N <= 5), Held-Karp dynamic programming
(N = 15) and the best of repeated LKH runs via ``elkai`` (N >= 26). ``elkai``
is only needed here, not by the package.

    python tools/make_instances.py
"""

import itertools
from pathlib import Path

import numpy as np

from bosontsp.instances import InstanceFile, InstanceFormat, to_tsplib
from bosontsp.tsp import DistanceMatrix, brute_force_optimum, tour_distance

DATA = Path(__file__).resolve().parents[1] / "src" / "bosontsp" / "data"

UNIT4 = [
    [0, 1, 5, 2],
    [1, 0, 3, 6],
    [5, 3, 0, 4],
    [2, 6, 4, 0],
]

LAYOUT = {
    5: InstanceFormat.TSPLIB_FULL_MATRIX,
    15: InstanceFormat.TSPLIB_UPPER_ROW,
    26: InstanceFormat.TSPLIB_EUC_2D,
    42: InstanceFormat.TSPLIB_EUC_2D,
    48: InstanceFormat.TSPLIB_EUC_2D,
}


def held_karp(d):
    n = d.shape[0]
    full = 1 << (n - 1)
    cost = np.full((full, n - 1), np.inf)
    for v in range(n - 1):
        cost[1 << v, v] = d[0, v + 1]
    for size in range(2, n):
        for combo in itertools.combinations(range(n - 1), size):
            mask = sum(1 << v for v in combo)
            for v in combo:
                prev = mask ^ (1 << v)
                cost[mask, v] = min(cost[prev, u] + d[u + 1, v + 1] for u in combo if u != v)
    return min(cost[full - 1, v] + d[v + 1, 0] for v in range(n - 1))


def lkh_best(d, runs=20):
    import elkai

    best = np.inf
    ints = d.astype(int).tolist()
    for _ in range(runs):
        order = elkai.DistanceMatrix(ints).solve_tsp()[:-1]
        best = min(best, tour_distance(order, d))
    return best


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    dm = DistanceMatrix(UNIT4, name="unit4")
    _, opt = brute_force_optimum(dm)
    inst = InstanceFile("unit4", InstanceFormat.TSPLIB_FULL_MATRIX, dm, opt)
    (DATA / "unit4.tsp").write_text(to_tsplib(inst, comment="hand-checkable 4-location unit-test matrix"))

    for n, fmt in LAYOUT.items():
        rng = np.random.default_rng(1000 + n)
        coords = rng.integers(0, 1000, size=(n, 2)).astype(float)
        dm = DistanceMatrix.from_coordinates(coords, name=f"rand{n}")
        if n <= 10:
            best, how = brute_force_optimum(dm)[1], "exhaustive search"
        elif n <= 16:
            best, how = held_karp(dm.d), "Held-Karp"
        else:
            best, how = lkh_best(dm.d), "best of 20 LKH runs"
        inst = InstanceFile(f"rand{n}", fmt, dm, best, coords)
        comment = f"seeded synthetic {n}-location instance; BEST_KNOWN from {how}"
        (DATA / f"rand{n}.tsp").write_text(to_tsplib(inst, comment=comment))
        print(n, best, how)


if __name__ == "__main__":
    main()
