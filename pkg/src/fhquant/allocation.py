"""Bit and power allocation across quantized parallel streams.

All schemes maximize the sum of per-stream rates under a total power budget
``P`` and a total integer bit budget ``b_tot``. Singular values are always
taken in descending order and every returned allocation spans all ``r``
streams (inactive ones carry zeros).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .quantizer import ConvergenceError, DistortionModel, default_model
from .rate_model import LN2, StreamAllocation, stream_rates

ORACLE_MAX_STREAMS = 4
ORACLE_MAX_BITS = 16


@dataclass
class AllocationProblem:
    singulars: np.ndarray
    power: float
    noise_var: float
    bit_budget: int
    model: DistortionModel = field(default_factory=default_model)

    def __post_init__(self):
        self.singulars = np.asarray(self.singulars, dtype=float)
        s = self.singulars
        if s.ndim != 1 or s.size == 0:
            raise ValueError("at least one singular value is required")
        if np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ValueError("singular values must be positive and finite")
        if np.any(np.diff(s) > 0):
            raise ValueError("singular values must be in descending order")
        if not (self.power > 0 and math.isfinite(self.power)):
            raise ValueError("power budget must be positive")
        if not (self.noise_var > 0 and math.isfinite(self.noise_var)):
            raise ValueError("noise variance must be positive")
        if int(self.bit_budget) != self.bit_budget or self.bit_budget < 0:
            raise ValueError("bit budget must be a nonnegative integer")
        self.bit_budget = int(self.bit_budget)

    @property
    def rank(self) -> int:
        return self.singulars.size


@dataclass(frozen=True)
class SolverSettings:
    bisection_tolerance: float = 1e-10
    max_bisection_iterations: int = 200
    bracket_growth_factor: float = 2.0

    def __post_init__(self):
        if self.bisection_tolerance <= 0:
            raise ValueError("bisection_tolerance must be positive")
        if self.max_bisection_iterations < 1:
            raise ValueError("max_bisection_iterations must be positive")
        if self.bracket_growth_factor <= 1:
            raise ValueError("bracket_growth_factor must exceed 1")


DEFAULT_SETTINGS = SolverSettings()


def _descending(singulars):
    s = np.asarray(singulars, dtype=float)
    if s.size == 0 or np.any(s <= 0):
        raise ValueError("singular values must be positive")
    if np.any(np.diff(s) > 0):
        raise ValueError("singular values must be in descending order")
    return s


# -- classical water-filling ---------------------------------------------------


def water_fill(singulars, power: float, noise_var: float) -> np.ndarray:
    """Classical water-filling ``p_i = max(0, level - sigma^2 / s_i^2)``.

    Solved exactly: the active set is the largest prefix of the descending
    streams whose water level lies above every floor in it.
    """
    s = _descending(singulars)
    if power <= 0 or noise_var <= 0:
        raise ValueError("power and noise_var must be positive")
    floors = noise_var / s**2
    counts = np.arange(1, s.size + 1)
    levels = (power + np.cumsum(floors)) / counts
    n_active = int(np.flatnonzero(levels > floors)[-1]) + 1
    f = floors[:n_active]
    p = np.zeros(s.size)
    # level - f_i written as (P + sum_j (f_j - f_i)) / n avoids cancelling
    # a large floor against a level only slightly above it
    p[:n_active] = (power + np.sum(f[None, :] - f[:, None], axis=1)) / n_active
    return p


# -- continuous bit levels ---------------------------------------------------------


def bit_waterlevel(powers, singulars, bit_budget: float) -> np.ndarray:
    """Real-valued bits ``max(0, mu + log2(sqrt(p_i s_i^2)))`` summing to ``bit_budget``.

    ``mu`` is found exactly by scanning active sets of the sorted offsets.
    Streams with ``p_i s_i^2 = 0`` get no bits.
    """
    p = np.asarray(powers, dtype=float)
    s = np.asarray(singulars, dtype=float)[: p.size]
    if bit_budget < 0:
        raise ValueError("bit budget must be nonnegative")
    g = p * s**2
    usable = g > 0
    if not np.any(usable):
        raise ValueError("at least one stream needs p_i * s_i^2 > 0")
    offsets = np.full(p.size, -np.inf)
    offsets[usable] = 0.5 * np.log2(g[usable])
    ordered = np.sort(offsets[usable])[::-1]
    counts = np.arange(1, ordered.size + 1)
    mus = (bit_budget - np.cumsum(ordered)) / counts
    # budget(mu) is increasing and piecewise linear; the consistent piece is
    # the largest k whose k-th offset is still above the water line
    k = int(np.flatnonzero(mus + ordered >= 0)[-1])
    bits = np.maximum(0.0, mus[k] + offsets)
    bits[~usable] = 0.0
    return bits


def round_and_fix(real_bits, bit_budget: int, powers, singulars, noise_var: float, model: DistortionModel | None = None) -> np.ndarray:
    """Round to nearest integers, then repair the total one bit at a time.

    Surplus bits are taken from the stream losing the least rate, missing
    bits go to the stream gaining the most; ties favour the lower index.
    """
    if bit_budget < 0:
        raise ValueError("bit budget must be nonnegative")
    model = model or default_model()
    real_bits = np.asarray(real_bits, dtype=float)
    p = np.asarray(powers, dtype=float)
    s = np.asarray(singulars, dtype=float)[: p.size]
    bits = np.floor(real_bits + 0.5).astype(np.int64)
    delta = int(bits.sum()) - int(bit_budget)

    def rates(b):
        return stream_rates(p, s, noise_var, model.beta(b))

    while delta > 0:
        current = rates(bits)
        loss = current - rates(np.maximum(bits - 1, 0))
        loss[bits == 0] = np.inf
        i = int(np.argmin(loss))
        bits[i] -= 1
        delta -= 1
    while delta < 0:
        current = rates(bits)
        gain = rates(bits + 1) - current
        i = int(np.argmax(gain))
        bits[i] += 1
        delta += 1
    return bits


def _zero_bit_allocation(problem: AllocationProblem, scheme: str) -> StreamAllocation:
    # no bits: every stream has beta = 1 and rate 0 whatever the powers
    p = water_fill(problem.singulars, problem.power, problem.noise_var)
    return StreamAllocation.build(
        p, np.zeros(problem.rank, dtype=np.int64), problem.singulars, problem.noise_var,
        problem.model, scheme=scheme, solver_calls=1,
    )


def jbp_candidates(problem: AllocationProblem):
    """Yield the JBP allocation for each number of candidate streams ``r' = 1..r``.

    The strongest ``r'`` streams are water-filled, the high-rate bit levels
    are solved over the streams that received power, then rounded and
    repaired. Each candidate records its two solver calls.
    """
    s, r = problem.singulars, problem.rank
    for n in range(1, r + 1):
        p = water_fill(s[:n], problem.power, problem.noise_var)
        n_on = int(np.count_nonzero(p > 0))
        real = bit_waterlevel(p[:n_on], s[:n_on], problem.bit_budget)
        ints = round_and_fix(real, problem.bit_budget, p[:n_on], s[:n_on], problem.noise_var, problem.model)
        powers = np.zeros(r)
        powers[:n] = p
        bits = np.zeros(r, dtype=np.int64)
        bits[:n_on] = ints
        yield StreamAllocation.build(powers, bits, s, problem.noise_var, problem.model, scheme="JBP", solver_calls=2)


def _best_candidate(candidates):
    best, calls = None, 0
    for cand in candidates:
        calls += cand.solver_calls
        # strict improvement keeps ties on the smaller r'
        if best is None or cand.sum_rate > best.sum_rate:
            best = cand
    best.solver_calls = calls
    return best


def jbp_alloc(problem: AllocationProblem, settings: SolverSettings = DEFAULT_SETTINGS) -> StreamAllocation:
    """Joint bit and power allocation: the best of :func:`jbp_candidates`.

    Runs ``2 r`` closed-form searches in total (water level and bit level per
    candidate).
    """
    if problem.bit_budget == 0:
        return _zero_bit_allocation(problem, "JBP")
    return _best_candidate(jbp_candidates(problem))


# -- quantization-aware water-filling ----------------------------------------------


def g(x, beta):
    """Rate of a stream with normalized SNR ``x`` and distortion ``beta``."""
    x = np.asarray(x, dtype=float)
    return np.log1p((1.0 - beta) * x / (beta * x + 1.0)) / LN2


def g_prime(x, beta):
    x = np.asarray(x, dtype=float)
    return (1.0 - beta) / ((1.0 + x) * (1.0 + beta * x) * LN2)


def _g_prime_inverse(c, beta):
    # root of beta x^2 + (1+beta) x + 1 - c = 0 in cancellation-free form
    c = np.asarray(c, dtype=float)
    b1 = 1.0 + beta
    excess = np.maximum(c - 1.0, 0.0)
    return 2.0 * excess / (b1 + np.sqrt(b1 * b1 + 4.0 * beta * excess))


def g_prime_inverse(y: float, beta: float) -> float:
    """The ``x >= 0`` with ``g'(x) = y``; 0 when ``y >= g'(0)``."""
    if y <= 0:
        raise ValueError("derivative value must be positive")
    if not 0 <= beta < 1:
        raise ValueError("beta must lie in [0, 1)")
    return float(_g_prime_inverse((1.0 - beta) / (y * LN2), beta))


def quantized_water_fill(singulars, noise_var: float, distortions, power: float, settings: SolverSettings = DEFAULT_SETTINGS) -> np.ndarray:
    """Optimal powers for fixed distortion factors.

    ``p_i = (sigma^2/s_i^2) * g'^{-1}(sigma^2 / (nu s_i^2); beta_i)`` with
    ``nu`` bisected until the powers sum to ``power``. Streams with
    ``beta_i = 1`` carry no information and get no power. The result is
    rescaled to meet the budget exactly.
    """
    s = np.asarray(singulars, dtype=float)
    beta = np.asarray(distortions, dtype=float)
    if beta.shape != s.shape:
        raise ValueError("one distortion factor per stream is required")
    if power <= 0 or noise_var <= 0:
        raise ValueError("power and noise_var must be positive")
    usable = beta < 1.0
    if not np.any(usable):
        raise ValueError("every stream has beta = 1; no power allocation is meaningful")
    gain = s[usable] ** 2 / noise_var
    bu = beta[usable]
    slope = (1.0 - bu) * gain / LN2
    b1 = 1.0 + bu
    b1sq = b1 * b1
    four_b = 4.0 * bu

    def total(nu):
        excess = np.maximum(slope * nu - 1.0, 0.0)
        x = 2.0 * excess / (b1 + np.sqrt(b1sq + four_b * excess))
        q = x / gain
        return float(q.sum()), q

    tol = settings.bisection_tolerance * power
    # below lo no stream is switched on
    lo = float(np.min(1.0 / slope))
    hi = lo * settings.bracket_growth_factor
    for _ in range(settings.max_bisection_iterations):
        t_hi, q = total(hi)
        if t_hi >= power:
            break
        lo, hi = hi, hi * settings.bracket_growth_factor
    else:
        raise ConvergenceError("could not bracket the power budget", last_iterate=q)

    if abs(t_hi - power) > tol:
        for _ in range(settings.max_bisection_iterations):
            mid = 0.5 * (lo + hi)
            t_mid, q = total(mid)
            # a collapsed bracket means nu is resolved to machine precision;
            # the final rescale absorbs what is left
            if abs(t_mid - power) <= tol or mid in (lo, hi):
                break
            if t_mid < power:
                lo = mid
            else:
                hi = mid
        else:
            raise ConvergenceError(
                f"power bisection missed the budget by {abs(t_mid - power):.3g}", last_iterate=q
            )

    p = np.zeros(s.size)
    p[usable] = q * (power / q.sum())
    return p


def uniform_bits(bit_budget: int, n: int) -> np.ndarray:
    """``floor(b/n)`` bits each, the remainder one apiece to the strongest streams."""
    base, extra = divmod(int(bit_budget), n)
    bits = np.full(n, base, dtype=np.int64)
    bits[:extra] += 1
    return bits


def ub_candidates(problem: AllocationProblem, settings: SolverSettings = DEFAULT_SETTINGS):
    """Yield the uniform-bit candidate for each ``r' = 1..r``.

    Bits of streams left without power are spread uniformly over the
    powered ones and the power is solved once more.
    """
    s, r, model = problem.singulars, problem.rank, problem.model
    for n in range(1, r + 1):
        bits = uniform_bits(problem.bit_budget, n)
        p = quantized_water_fill(s[:n], problem.noise_var, model.beta(bits), problem.power, settings)
        calls = 1
        idle = (p == 0) & (bits > 0)
        if np.any(idle):
            on = np.flatnonzero(p > 0)
            bits = np.zeros(n, dtype=np.int64)
            bits[on] = uniform_bits(problem.bit_budget, on.size)
            p = quantized_water_fill(s[:n], problem.noise_var, model.beta(bits), problem.power, settings)
            calls += 1
        powers = np.zeros(r)
        powers[:n] = p
        full_bits = np.zeros(r, dtype=np.int64)
        full_bits[:n] = bits
        yield StreamAllocation.build(powers, full_bits, s, problem.noise_var, model, scheme="UB", solver_calls=calls)


def ub_alloc(problem: AllocationProblem, settings: SolverSettings = DEFAULT_SETTINGS) -> StreamAllocation:
    """Uniform bits with quantization-aware power; the best of :func:`ub_candidates`."""
    if problem.bit_budget == 0:
        return _zero_bit_allocation(problem, "UB")
    return _best_candidate(ub_candidates(problem, settings))


def greedy_alloc(problem: AllocationProblem, settings: SolverSettings = DEFAULT_SETTINGS) -> StreamAllocation:
    """Add bits one at a time where the re-optimized sum rate grows most.

    Every round tries one extra bit on each of the ``r`` streams and solves
    the quantization-aware power allocation for each trial, so the power
    solver runs exactly ``b_tot * r`` times.
    """
    if problem.bit_budget == 0:
        return _zero_bit_allocation(problem, "Greedy")
    s, r, model = problem.singulars, problem.rank, problem.model
    sigma2 = problem.noise_var
    bits = np.zeros(r, dtype=np.int64)
    powers = None
    calls = 0
    for _ in range(problem.bit_budget):
        best_rate, best_i, best_p = -np.inf, 0, None
        for i in range(r):
            bits[i] += 1
            beta = model.beta(bits)
            p = quantized_water_fill(s, sigma2, beta, problem.power, settings)
            calls += 1
            rate = float(np.sum(stream_rates(p, s, sigma2, beta)))
            bits[i] -= 1
            # strict improvement keeps ties on the stronger stream
            if rate > best_rate:
                best_rate, best_i, best_p = rate, i, p
        bits[best_i] += 1
        powers = best_p
    return StreamAllocation.build(powers, bits, s, sigma2, model, scheme="Greedy", solver_calls=calls)


def unaware_wf_alloc(problem: AllocationProblem, settings: SolverSettings = DEFAULT_SETTINGS) -> StreamAllocation:
    """Classical water-filling with bits spread uniformly over the powered streams.

    The rate is still evaluated with the quantized model.
    """
    s = problem.singulars
    p = water_fill(s, problem.power, problem.noise_var)
    n_on = int(np.count_nonzero(p > 0))
    bits = np.zeros(problem.rank, dtype=np.int64)
    bits[:n_on] = uniform_bits(problem.bit_budget, n_on)
    return StreamAllocation.build(p, bits, s, problem.noise_var, problem.model, scheme="UnawareWF", solver_calls=1)


# -- exhaustive oracle -----------------------------------------------------------


def compositions(total: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def simplex_grid(parts: int, resolution: int) -> np.ndarray:
    """Points ``k / resolution`` of the probability simplex, one row each."""
    return np.array(list(compositions(resolution, parts)), dtype=float) / resolution


def oracle_guard(rank: int, bit_budget: int) -> bool:
    return rank <= ORACLE_MAX_STREAMS and bit_budget <= ORACLE_MAX_BITS


def brute_force_alloc(problem: AllocationProblem, grid_resolution: int = 20, settings: SolverSettings = DEFAULT_SETTINGS) -> StreamAllocation:
    """Exhaustive search over integer bit vectors.

    For every composition of ``b_tot`` the power is chosen as the better of
    the quantization-aware water-filling solution and the best point of a
    simplex grid. Limited to small instances.
    """
    r, b_tot = problem.rank, problem.bit_budget
    if not oracle_guard(r, b_tot):
        raise ValueError(
            f"brute force limited to r <= {ORACLE_MAX_STREAMS} and b_tot <= {ORACLE_MAX_BITS}, "
            f"got r={r}, b_tot={b_tot}"
        )
    if grid_resolution < 1:
        raise ValueError("grid_resolution must be positive")
    if b_tot == 0:
        return _zero_bit_allocation(problem, "Oracle")
    s, model, sigma2, P = problem.singulars, problem.model, problem.noise_var, problem.power
    grid = P * simplex_grid(r, grid_resolution)
    grid_snr = grid * (s**2 / sigma2)
    best_rate, best_p, best_b = -np.inf, None, None
    calls = 0
    # reverse lexicographic order: among equal rates the stronger streams keep the bits
    for comp in sorted(compositions(b_tot, r), reverse=True):
        bits = np.array(comp, dtype=np.int64)
        beta = model.beta(bits)
        p = quantized_water_fill(s, sigma2, beta, P, settings)
        calls += 1
        rate = float(np.sum(stream_rates(p, s, sigma2, beta)))
        grid_rates = np.sum(np.log1p((1.0 - beta) * grid_snr / (beta * grid_snr + 1.0)), axis=1) / LN2
        j = int(np.argmax(grid_rates))
        if grid_rates[j] > rate:
            rate, p = float(grid_rates[j]), grid[j]
        if rate > best_rate:
            best_rate, best_p, best_b = rate, p, bits
    return StreamAllocation.build(best_p, best_b, s, sigma2, model, scheme="Oracle", solver_calls=calls)


SCHEMES = {
    "JBP": jbp_alloc,
    "UB": ub_alloc,
    "Greedy": greedy_alloc,
    "UnawareWF": unaware_wf_alloc,
    "Oracle": brute_force_alloc,
}
