"""Achievable rate of quantized parallel streams.

Each stream ``i`` with power ``p``, singular value ``s`` and distortion factor
``beta`` supports ``log2(1 + (1-beta) p s^2 / (beta p s^2 + sigma^2))`` bits
per channel use; the sum over streams is achievable for the MIMO channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quantizer import DistortionModel, default_model

LN2 = math.log(2.0)


def _check_nonnegative(name, value):
    if np.any(np.asarray(value) < 0):
        raise ValueError(f"{name} must be nonnegative")


def stream_rates(powers, singulars, noise_var, distortions):
    """Vectorized per-stream rate in bits per channel use."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    p = np.asarray(powers, dtype=float)
    s = np.asarray(singulars, dtype=float)
    beta = np.asarray(distortions, dtype=float)
    _check_nonnegative("powers", p)
    _check_nonnegative("singulars", s)
    if np.any((beta < 0) | (beta > 1)):
        raise ValueError("distortions must lie in [0, 1]")
    signal = p * s**2
    # log1p in the natural-log domain, one conversion at the end
    return np.log1p((1.0 - beta) * signal / (beta * signal + noise_var)) / LN2


def stream_rate(power: float, singular: float, noise_var: float, distortion: float) -> float:
    return float(stream_rates(power, singular, noise_var, distortion))


@dataclass
class StreamAllocation:
    """Per-stream powers and integer bits with the rates they achieve.

    ``solver_calls`` counts the power/bit-level searches the producing scheme
    ran, so schemes can be compared by work done.
    """

    powers: np.ndarray
    bits: np.ndarray
    distortions: np.ndarray
    stream_rates: np.ndarray
    sum_rate: float
    active_count: int
    scheme: str = ""
    solver_calls: int = 0

    @classmethod
    def build(cls, powers, bits, singulars, noise_var, model: DistortionModel | None = None, **extra):
        """Evaluate the exact rates of ``(powers, bits)`` on the leading ``len(powers)`` streams."""
        model = model or default_model()
        powers = np.asarray(powers, dtype=float)
        bits = np.asarray(bits, dtype=np.int64)
        if powers.shape != bits.shape:
            raise ValueError("powers and bits must have the same length")
        singulars = np.asarray(singulars, dtype=float)
        if powers.size > singulars.size:
            raise ValueError("more streams allocated than singular values available")
        beta = model.beta(bits) if bits.size else np.zeros(0)
        rates = stream_rates(powers, singulars[: powers.size], noise_var, beta)
        return cls(
            powers=powers,
            bits=bits,
            distortions=np.atleast_1d(beta).astype(float),
            stream_rates=rates,
            sum_rate=float(np.sum(rates)),
            active_count=int(np.count_nonzero((powers > 0) & (bits > 0))),
            **extra,
        )

    def describe(self) -> str:
        fmt = lambda xs, f: ",".join(format(float(x), f) for x in xs)
        return "\n".join(
            [
                f"scheme={self.scheme}",
                f"powers={fmt(self.powers, '.12g')}",
                f"bits={','.join(str(int(b)) for b in self.bits)}",
                f"distortions={fmt(self.distortions, '.12g')}",
                f"stream_rates={fmt(self.stream_rates, '.12g')}",
                f"sum_rate={self.sum_rate:.12g}",
                f"active_count={self.active_count}",
                f"total_power={float(np.sum(self.powers)):.12g}",
                f"total_bits={int(np.sum(self.bits))}",
            ]
        )


def sum_rate(alloc: StreamAllocation, singulars, noise_var: float) -> float:
    singulars = np.asarray(singulars, dtype=float)
    if len(alloc.powers) != len(alloc.distortions) or len(alloc.powers) > singulars.size:
        raise ValueError("allocation length does not match the singular values")
    if np.any(np.diff(singulars) > 0):
        raise ValueError("singulars must be in descending order")
    n = len(alloc.powers)
    return float(np.sum(stream_rates(alloc.powers, singulars[:n], noise_var, alloc.distortions)))


def ideal_rate(powers, singulars, noise_var: float) -> float:
    """Unquantized sum rate, the ``beta = 0`` case."""
    powers = np.asarray(powers, dtype=float)
    singulars = np.asarray(singulars, dtype=float)
    if powers.size > singulars.size:
        raise ValueError("more powers than singular values")
    n = powers.size
    return float(np.sum(stream_rates(powers, singulars[:n], noise_var, np.zeros(n))))
