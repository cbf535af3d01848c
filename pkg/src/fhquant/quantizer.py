"""Lloyd-Max scalar quantizers for Gaussian inputs and the distortion model.

Codebooks are designed for a unit-variance real Gaussian. Complex samples are
quantized as two independent real quantizations (in-phase and quadrature),
each normalized by the per-dimension standard deviation, so the complex
distortion factor equals the real-Gaussian value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import ndtr, ndtri

HIGH_RATE_CONSTANT = math.sqrt(3.0) * math.pi / 2.0

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ConvergenceError(RuntimeError):
    """Raised when an iterative design or search fails to converge.

    ``last_iterate`` carries whatever the solver had when it gave up.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class LloydMaxCodebook:
    bits: int
    levels: np.ndarray
    thresholds: np.ndarray
    distortion: float

    def to_record(self) -> str:
        """Plain-text export, 12 significant digits."""
        fmt = lambda v: format(float(v), ".12g")
        return "\n".join(
            [
                f"bits={self.bits}",
                "levels=" + ",".join(fmt(v) for v in self.levels),
                "thresholds=" + ",".join(fmt(v) for v in self.thresholds),
                f"distortion={fmt(self.distortion)}",
            ]
        )

    @classmethod
    def from_record(cls, text: str) -> "LloydMaxCodebook":
        fields = {}
        for line in text.strip().splitlines():
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
        parse = lambda s: np.array([float(v) for v in s.split(",") if v], dtype=float)
        return cls(
            bits=int(fields["bits"]),
            levels=parse(fields["levels"]),
            thresholds=parse(fields["thresholds"]),
            distortion=float(fields["distortion"]),
        )


def _pdf(t):
    # exp(-inf) -> 0 handles the open outer cells
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(t))


def _cell_moments(thresholds):
    """Probability mass, first and second moments of N(0,1) on every cell."""
    lo = np.concatenate(([-np.inf], thresholds))
    hi = np.concatenate((thresholds, [np.inf]))
    # upper-tail form on the positive side keeps the outer masses accurate
    mass = np.where(lo > 0, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))
    edges = np.concatenate(([-np.inf], thresholds, [np.inf]))
    pdf = _pdf(edges)
    tpdf = np.zeros_like(edges)
    tpdf[1:-1] = thresholds * pdf[1:-1]
    first = pdf[:-1] - pdf[1:]
    second = mass + tpdf[:-1] - tpdf[1:]
    return mass, first, second


def codebook_mse(levels, thresholds) -> float:
    """Mean-square error of a codebook applied to a unit-variance Gaussian."""
    mass, first, second = _cell_moments(np.asarray(thresholds, dtype=float))
    levels = np.asarray(levels, dtype=float)
    return float(np.sum(second - 2.0 * levels * first + levels**2 * mass))


def centroids(thresholds) -> np.ndarray:
    """Conditional mean of N(0,1) over each cell defined by ``thresholds``."""
    mass, first, _ = _cell_moments(np.asarray(thresholds, dtype=float))
    return first / mass


def _newton_step(thresholds):
    """Newton update of the midpoint/centroid fixed point, a tridiagonal system."""
    mass, first, _ = _cell_moments(thresholds)
    c = first / mass
    pdf_t = _pdf(thresholds)
    # d c_j / d(upper edge) and d c_j / d(lower edge) for the cells around each threshold
    dc_upper = pdf_t * (thresholds - c[:-1]) / mass[:-1]
    dc_lower = pdf_t * (c[1:] - thresholds) / mass[1:]
    residual = thresholds - 0.5 * (c[:-1] + c[1:])
    n = thresholds.size
    banded = np.zeros((3, n))
    banded[1] = 1.0 - 0.5 * (dc_upper + dc_lower)
    # super-diagonal: d c_{j+1} / d t_{j+1}, the upper edge of cell j+1
    banded[0, 1:] = -0.5 * dc_upper[1:]
    # sub-diagonal: d c_j / d t_{j-1}, the lower edge of cell j
    banded[2, :-1] = -0.5 * dc_lower[:-1]
    return thresholds - solve_banded((1, 1), banded, residual)


def design_lloyd_max(bits: int, tolerance: float = 1e-10, max_iterations: int = 10_000) -> LloydMaxCodebook:
    """Design a ``bits``-bit Lloyd-Max quantizer for a unit-variance Gaussian.

    Starts from levels at the Gaussian quantile midpoints and alternates the
    nearest-neighbour (midpoint thresholds) and centroid conditions. Once the
    iterate is close, Newton steps on the same fixed-point equations replace
    the plain Lloyd step whenever they lower the distortion; plain Lloyd
    convergence degrades roughly threefold per extra bit. Stops when the
    relative change of the distortion drops below ``tolerance``.

    Raises
    ------
    ConvergenceError
        If ``max_iterations`` is reached first. The last codebook is attached.
    """
    if not isinstance(bits, (int, np.integer)) or bits < 1 or bits > 12:
        raise ValueError(f"bits must be an integer in [1, 12], got {bits!r}")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if max_iterations < 1:
        raise ValueError("max_iterations must be positive")

    n = 1 << bits
    levels = ndtri((np.arange(n) + 0.5) / n)
    thresholds = 0.5 * (levels[:-1] + levels[1:])
    levels = centroids(thresholds)
    distortion = codebook_mse(levels, thresholds)

    for _ in range(max_iterations):
        lloyd_t = 0.5 * (levels[:-1] + levels[1:])
        lloyd_l = centroids(lloyd_t)
        new = codebook_mse(lloyd_l, lloyd_t)
        thresholds, levels = lloyd_t, lloyd_l
        if abs(distortion - new) / new < 1e-3 and bits > 1:
            cand_t = _newton_step(lloyd_t)
            if np.all(np.diff(cand_t) > 0):
                cand_l = centroids(cand_t)
                cand = codebook_mse(cand_l, cand_t)
                if cand <= new:
                    thresholds, levels, new = cand_t, cand_l, cand
        change = abs(distortion - new) / new
        distortion = new
        if change < tolerance:
            break
    else:
        raise ConvergenceError(
            f"Lloyd-Max design for {bits} bits did not converge in {max_iterations} iterations",
            last_iterate=LloydMaxCodebook(bits, levels, thresholds, distortion),
        )

    # symmetrize away rounding drift; the source is symmetric
    levels = 0.5 * (levels - levels[::-1])
    thresholds = 0.5 * (thresholds - thresholds[::-1])
    return LloydMaxCodebook(bits, levels, thresholds, codebook_mse(levels, thresholds))


def quantize(codebook: LloydMaxCodebook, sample):
    """Map samples to representation levels; a sample on a threshold goes to the upper cell."""
    idx = np.searchsorted(codebook.thresholds, sample, side="right")
    out = codebook.levels[idx]
    return float(out) if np.ndim(out) == 0 else out


def quantize_complex(codebook: LloydMaxCodebook, samples, scale: float):
    """Quantize I and Q separately after normalizing by the per-dimension std ``scale``."""
    samples = np.asarray(samples)
    re = quantize(codebook, samples.real / scale)
    im = quantize(codebook, samples.imag / scale)
    return scale * (np.asarray(re) + 1j * np.asarray(im))


@lru_cache(maxsize=None)
def _lloyd_table(max_bits: int) -> tuple:
    return tuple(design_lloyd_max(b).distortion for b in range(1, max_bits + 1))


@dataclass(frozen=True)
class DistortionModel:
    """Distortion factor as a function of bits per real dimension.

    Tabulated values for small ``b``, the high-rate formula
    ``(sqrt(3)*pi/2) * 2**(-2b)`` beyond the table, and ``beta(0) = 1``.
    """

    table: dict = field(default_factory=dict)
    high_rate_constant: float = HIGH_RATE_CONSTANT

    def __post_init__(self):
        keys = sorted(self.table)
        if keys != list(range(1, len(keys) + 1)):
            raise ValueError("table must cover bits 1..n contiguously")
        values = [1.0] + [self.table[k] for k in keys]
        if any(not (0.0 < v < 1.0) for v in values[1:]):
            raise ValueError("tabulated distortion factors must lie in (0, 1)")
        # lookup array for vectorized evaluation of small bit counts
        n = 64
        lut = np.array([self._scalar(b, values) for b in range(n + 1)])
        if np.any(np.diff(lut) >= 0):
            raise ValueError("distortion model must be strictly decreasing in bits")
        object.__setattr__(self, "_lut", lut)

    def _scalar(self, b, values):
        if b < len(values):
            return values[b]
        return self.high_rate_constant * 2.0 ** (-2 * b)

    @classmethod
    def lloyd_max(cls, max_table_bits: int = 5) -> "DistortionModel":
        """Model whose table comes from this module's own Lloyd-Max designs."""
        values = _lloyd_table(max_table_bits)
        return cls(table={b: v for b, v in enumerate(values, start=1)})

    def beta(self, bits):
        bits = np.asarray(bits)
        if np.any(bits < 0):
            raise ValueError("bits must be nonnegative")
        bits = bits.astype(np.int64)
        lut = self._lut
        out = np.where(
            bits < lut.size,
            lut[np.minimum(bits, lut.size - 1)],
            self.high_rate_constant * np.exp2(-2.0 * bits),
        )
        return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def default_model() -> DistortionModel:
    return DistortionModel.lloyd_max()


def distortion_factor(model: DistortionModel, bits):
    return model.beta(bits)


@dataclass(frozen=True)
class BussgangReport:
    estimated_gain: complex
    cross_correlation_x_eta: complex
    output_power_ratio: float
    sample_count: int


def bussgang_check(
    codebook: LloydMaxCodebook,
    power: float = 1.0,
    channel: complex = 1.0,
    noise_var: float = 1.0,
    sample_count: int = 1_000_000,
    seed: int = 0,
) -> BussgangReport:
    """Monte-Carlo estimates of the Bussgang quantities for ``z = Q(h x + n)``.

    Reports the gain ``E{z y*}/C_y``, the correlation of the distortion with
    the data normalized by ``sqrt(P C_eta)``, and ``C_z / ((1 - beta) C_y)``.
    """
    if power <= 0 or noise_var <= 0:
        raise ValueError("power and noise_var must be positive")
    if sample_count < 1:
        raise ValueError("sample_count must be positive")

    rng = np.random.default_rng(seed)
    cn = lambda var: np.sqrt(var / 2.0) * (
        rng.standard_normal(sample_count) + 1j * rng.standard_normal(sample_count)
    )
    x = cn(power)
    n = cn(noise_var)
    y = channel * x + n
    c_y_theory = power * abs(channel) ** 2 + noise_var
    z = quantize_complex(codebook, y, math.sqrt(c_y_theory / 2.0))

    c_y = np.mean(np.abs(y) ** 2)
    gain = np.mean(z * np.conj(y)) / c_y
    eta = z - gain * y
    c_eta = np.mean(np.abs(eta) ** 2)
    corr = np.mean(eta * np.conj(x)) / math.sqrt(power * c_eta)
    c_z = np.mean(np.abs(z) ** 2)
    ratio = c_z / ((1.0 - codebook.distortion) * c_y)
    return BussgangReport(complex(gain), complex(corr), float(ratio), sample_count)
