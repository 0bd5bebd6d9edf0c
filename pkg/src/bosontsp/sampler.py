"""Exact simulation of a single-loop time-bin boson sampler.

A train of ``n_modes`` pulses enters the device; pulse ``i`` meets the content
of a fibre loop on beam splitter ``i - 1``. One output port leaves as output
time bin ``i - 1`` and is measured, the other is stored back in the loop. The
loop itself is measured as the final output bin.

Because measured bins never re-enter the loop, the conditional state left
after each measurement lives on the loop mode alone. That makes exact
sampling cheap: one Born-rule draw per time bin.

Beam splitters act as the real rotation a^dag -> cos t a^dag + sin t b^dag,
b^dag -> -sin t a^dag + cos t b^dag, with ``a`` the loop-side mode.
"""

import enum
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

PROBABILITY_DEFICIT_TOL = 1e-6
ORACLE_MAX_MODES = 10
ORACLE_MAX_PHOTONS = 4


class Polarity(enum.Enum):
    EVEN_TO_ZERO = "even->0"
    EVEN_TO_ONE = "even->1"


@dataclass(frozen=True)
class SamplerConfig:
    n_modes: int
    n_photons: int
    thetas: tuple
    parity_polarity: Polarity = Polarity.EVEN_TO_ZERO
    config_id: int = 0
    input_pattern: tuple = field(default=None)

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")
        if not 0 <= self.n_photons <= self.n_modes:
            raise ValueError(f"n_photons must lie in [0, {self.n_modes}], got {self.n_photons}")
        thetas = tuple(float(t) for t in np.asarray(self.thetas, dtype=float).ravel())
        if len(thetas) != self.n_modes - 1:
            raise ValueError(f"need {self.n_modes - 1} beam-splitter angles, got {len(thetas)}")
        object.__setattr__(self, "thetas", thetas)
        pattern = self.input_pattern
        if pattern is None:
            pattern = (1,) * self.n_photons + (0,) * (self.n_modes - self.n_photons)
        pattern = tuple(int(v) for v in pattern)
        if len(pattern) != self.n_modes or any(v not in (0, 1) for v in pattern):
            raise ValueError(f"input_pattern must hold n_modes entries in {{0, 1}}, got {pattern}")
        if sum(pattern) != self.n_photons:
            raise ValueError(f"input_pattern carries {sum(pattern)} photons, expected {self.n_photons}")
        object.__setattr__(self, "input_pattern", pattern)
        object.__setattr__(self, "parity_polarity", Polarity(self.parity_polarity))

    def with_thetas(self, thetas):
        return SamplerConfig(
            self.n_modes, self.n_photons, thetas, self.parity_polarity, self.config_id, self.input_pattern
        )


@dataclass(frozen=True)
class FockState:
    occupations: tuple

    def __post_init__(self):
        occ = tuple(int(v) for v in self.occupations)
        if any(v < 0 for v in occ):
            raise ValueError(f"occupations must be nonnegative, got {occ}")
        object.__setattr__(self, "occupations", occ)

    @property
    def n_photons(self):
        return sum(self.occupations)

    def __len__(self):
        return len(self.occupations)

    def __iter__(self):
        return iter(self.occupations)


@dataclass(frozen=True)
class SampleRecord:
    fock: FockState
    bits: np.ndarray
    config_id: int


class LoopState:
    """Amplitudes of the loop mode over photon numbers 0..max_photons."""

    def __init__(self, max_photons, occupation=0):
        self.amplitudes = np.zeros(max_photons + 1)
        self.amplitudes[occupation] = 1.0

    @property
    def norm(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2))


# -- beam splitter ---------------------------------------------------------


def beam_splitter_fock_transform(theta, occ_a, occ_b):
    """Amplitudes of ``BS(theta)|occ_a, occ_b>`` as a dict ``{(a', b'): amplitude}``.

    Expands (c a^dag + s b^dag)^na (-s a^dag + c b^dag)^nb with the
    sqrt(n!) normalisation of Fock states. Zero amplitudes are dropped.
    """
    if occ_a < 0 or occ_b < 0:
        raise ValueError("occupations must be nonnegative")
    c, s = math.cos(theta), math.sin(theta)
    out = {}
    for j in range(occ_a + 1):
        wa = math.comb(occ_a, j) * c**j * s ** (occ_a - j)
        for k in range(occ_b + 1):
            w = wa * math.comb(occ_b, k) * (-s) ** k * c ** (occ_b - k)
            key = (j + k, occ_a + occ_b - j - k)
            out[key] = out.get(key, 0.0) + w
    norm_in = math.sqrt(math.factorial(occ_a) * math.factorial(occ_b))
    result = {}
    for (p, q), w in out.items():
        amp = w * math.sqrt(math.factorial(p) * math.factorial(q)) / norm_in
        if amp != 0.0:
            result[(p, q)] = amp
    return result


@lru_cache(maxsize=64)
def _sqrt_binomials(max_photons):
    # sqrt(C(k, a)) for 0 <= a <= k <= max_photons, zero elsewhere
    size = max_photons + 2
    table = np.zeros((size, size))
    for k in range(max_photons + 1):
        for a in range(k + 1):
            table[k, a] = math.sqrt(math.comb(k, a))
    table.setflags(write=False)
    return table


def transfer_tables(theta, max_photons):
    """Output-port amplitudes for a loop holding ``k`` photons meeting 0 or 1 incoming.

    Returns ``(T0, T1)``, each of shape (max_photons + 1, max_photons + 2);
    ``T_s[k, a]`` is the amplitude of ``a`` photons leaving the output bin
    (and ``k + s - a`` staying in the loop) for input ``|k, s>``.
    """
    t0, t1 = cascade_transfer_tables([theta], max_photons)
    return t0[0], t1[0]


def _power_table(x, n):
    # x[:, None] ** arange(n) by repeated multiplication; exact for 0 ** 0 and negative bases
    steps = np.repeat(x[:, None], n - 1, axis=1)
    return np.cumprod(np.hstack([np.ones((x.size, 1)), steps]), axis=1)


def cascade_transfer_tables(thetas, max_photons):
    """:func:`transfer_tables` for every angle at once, stacked on a leading axis.

    The tables for fewer photons are the leading sub-blocks, so one stack
    serves every configuration sharing ``thetas``.
    """
    th = np.asarray(thetas, dtype=float).ravel()
    n_out = max_photons + 2
    binom = _sqrt_binomials(max_photons)[: max_photons + 1, :n_out]
    k = np.arange(max_photons + 1)[:, None]
    a = np.arange(n_out)[None, :]
    cos, sin = np.cos(th), np.sin(th)
    c_pow = _power_table(cos, n_out)
    s_pow = _power_table(sin, n_out)
    lower = k - a >= 0
    base = binom * c_pow[:, None, :] * np.where(lower, s_pow[:, np.where(lower, k - a, 0)], 0.0)
    # the leaving photons come from the rotated loop (cos) or the rotated pulse (-sin)
    stay = np.sqrt(np.maximum(k + 1 - a, 0))
    shifted = np.zeros_like(base)
    shifted[:, :, 1:] = base[:, :, :-1]
    t1 = cos[:, None, None] * stay * base - sin[:, None, None] * np.sqrt(a) * shifted
    return base, t1


# -- samplers --------------------------------------------------------------


def _uniforms(n_samples, n_modes, rng_seed):
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return rng.random((n_samples, n_modes))


def _draw(probs, u):
    """Inverse-CDF draw per row of ``probs`` (n_rows, n_outcomes) with uniforms ``u``."""
    total = probs.sum(axis=1)
    if np.any(np.abs(total - 1.0) > PROBABILITY_DEFICIT_TOL):
        raise RuntimeError(f"outcome probabilities sum to {total.min()!r}..{total.max()!r}")
    cdf = np.cumsum(probs, axis=1)
    idx = np.minimum((cdf <= (u * total)[:, None]).sum(axis=1), probs.shape[1] - 1)
    rows = np.arange(probs.shape[0])
    stuck = probs[rows, idx] == 0
    if stuck.any():
        # rounding pushed the draw past the last possible outcome
        tail = probs[stuck]
        idx[stuck] = tail.shape[1] - 1 - np.argmax(tail[:, ::-1] > 0, axis=1)
    return idx


def sample_sequential(config, rng_seed, return_probability=False):
    """One exact sample, tracking the loop mode as a full amplitude vector.

    With ``return_probability=True`` also returns the product of the Born-rule
    factors of the drawn outcome (its exact probability).
    """
    n = config.n_modes
    m = config.n_photons
    u = _uniforms(1, n, rng_seed)[0]
    pattern = config.input_pattern
    loop = LoopState(m + 1, pattern[0])
    out = []
    prob = 1.0
    for i in range(1, n):
        s = pattern[i]
        theta = config.thetas[i - 1]
        joint = np.zeros((m + 2, m + 3))  # [a_out, b_loop]
        for k, amp in enumerate(loop.amplitudes):
            if amp == 0.0:
                continue
            for (a, b), w in beam_splitter_fock_transform(theta, k, s).items():
                joint[a, b] += amp * w
        p_out = np.sum(joint**2, axis=1)
        a = int(_draw(p_out[None, :], u[i - 1 : i])[0])
        prob *= p_out[a]
        collapsed = joint[a] / math.sqrt(p_out[a])
        loop.amplitudes = collapsed[: m + 2]
        if abs(loop.norm - 1.0) > 1e-9:
            raise RuntimeError(f"loop state norm drifted to {loop.norm!r}")
        out.append(a)
    p_last = np.abs(loop.amplitudes) ** 2
    k = int(_draw(p_last[None, :], u[n - 1 :])[0])
    prob *= p_last[k]
    out.append(k)
    fock = FockState(tuple(out))
    return (fock, prob) if return_probability else fock


def sample_batch(config, n_samples, rng_seed, tables=None):
    """``n_samples`` exact samples as an (n_samples, n_modes) int array.

    Photon-number conservation fixes the loop content after every measurement,
    so the loop is tracked as an integer count per sample. Consumes the same
    uniform draws as :func:`sample_sequential` and reproduces its outcomes.
    Also returns the exact probability of each sample. ``tables`` may carry
    precomputed :func:`cascade_transfer_tables` for at least ``n_photons``.
    """
    n = config.n_modes
    m = config.n_photons
    u = _uniforms(n_samples, n, rng_seed)
    pattern = config.input_pattern
    loop = np.full(n_samples, pattern[0], dtype=np.intp)
    out = np.empty((n_samples, n), dtype=np.intp)
    prob = np.ones(n_samples)
    if tables is None:
        tables = cascade_transfer_tables(config.thetas, m)
    t0, t1 = tables
    for i in range(1, n):
        s = pattern[i]
        table = (t1 if s else t0)[i - 1, loop, : m + 2] ** 2
        a = _draw(table, u[:, i - 1])
        prob *= table[np.arange(n_samples), a]
        out[:, i - 1] = a
        loop = loop + s - a
    out[:, n - 1] = loop
    return out, prob


def exact_distribution(config):
    """Full output distribution by evolving the multimode Fock vector.

    Returns ``{FockState: probability}`` for every pattern with nonzero weight.
    """
    n, m = config.n_modes, config.n_photons
    if n > ORACLE_MAX_MODES or m > ORACLE_MAX_PHOTONS:
        raise ValueError(
            f"state space too large for the oracle (n_modes={n}, n_photons={m}; "
            f"limits {ORACLE_MAX_MODES}, {ORACLE_MAX_PHOTONS})"
        )
    state = {config.input_pattern: 1.0}
    for i in range(1, n):
        theta = config.thetas[i - 1]
        new = {}
        for occ, amp in state.items():
            for (a, b), w in beam_splitter_fock_transform(theta, occ[i - 1], occ[i]).items():
                key = occ[: i - 1] + (a, b) + occ[i + 1 :]
                new[key] = new.get(key, 0.0) + amp * w
        state = new
    return {FockState(occ): amp**2 for occ, amp in state.items() if amp**2 > 0.0}


def distribution_to_json(config, dist):
    doc = {
        "n_modes": config.n_modes,
        "n_photons": config.n_photons,
        "input_pattern": list(config.input_pattern),
        "thetas": list(config.thetas),
        "distribution": [
            {"occupations": list(f.occupations), "probability": p}
            for f, p in sorted(dist.items(), key=lambda kv: kv[0].occupations)
        ],
    }
    return json.dumps(doc, indent=1)


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


# -- parity and configurations ---------------------------------------------


def parity_map(fock, polarity=Polarity.EVEN_TO_ZERO):
    """Bit per mode from the parity of its photon count. Accepts batches."""
    occ = np.asarray(fock.occupations if isinstance(fock, FockState) else fock)
    bits = (occ % 2).astype(np.uint8)
    if Polarity(polarity) is Polarity.EVEN_TO_ONE:
        bits = 1 - bits
    return bits


def default_photon_number(n_modes):
    return (n_modes + 1) // 2


def four_configurations(n_modes, thetas, n_photons=None):
    """The {M, M-1} photons x {even->0, even->1} runs, sharing one angle vector."""
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    m = default_photon_number(n_modes) if n_photons is None else int(n_photons)
    if not 1 <= m <= n_modes:
        raise ValueError(f"photon number must lie in [1, {n_modes}], got {m}")
    thetas = tuple(float(t) for t in thetas)
    configs = []
    for photons in (m, m - 1):
        for polarity in (Polarity.EVEN_TO_ZERO, Polarity.EVEN_TO_ONE):
            configs.append(SamplerConfig(n_modes, photons, thetas, polarity, config_id=len(configs)))
    return configs


def sample_records(config, n_samples, rng_seed):
    occ, _ = sample_batch(config, n_samples, rng_seed)
    bits = parity_map(occ, config.parity_polarity)
    return [SampleRecord(FockState(tuple(o)), b, config.config_id) for o, b in zip(occ, bits)]
