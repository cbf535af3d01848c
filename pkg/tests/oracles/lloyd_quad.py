"""Independent Lloyd-Max oracle: adaptive quadrature, no closed-form Gaussian moments.

Run as a script to regenerate the frozen distortion values used by the tests:

    python -m tests.oracles.lloyd_quad
"""

import math

import numpy as np
from scipy import integrate

_C = 1.0 / math.sqrt(2.0 * math.pi)


def pdf(t):
    return _C * math.exp(-0.5 * t * t)


def _quad(f, a, b):
    return integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-13, limit=200)[0]


def cell_edges(thresholds):
    # +-12 sigma stands in for infinity: the neglected mass is ~1e-33
    return [-12.0] + list(thresholds) + [12.0]


def lloyd_quad(bits, tol=1e-13, max_iter=20000):
    n = 2**bits
    # start from a uniform grid over +-3 sigma, deliberately unlike the package's start
    levels = list(np.linspace(-3.0, 3.0, n + 2)[1:-1]) if n > 1 else [0.0]
    prev = None
    for _ in range(max_iter):
        thresholds = [(levels[i] + levels[i + 1]) / 2 for i in range(n - 1)]
        edges = cell_edges(thresholds)
        levels = []
        for a, b in zip(edges[:-1], edges[1:]):
            mass = _quad(pdf, a, b)
            levels.append(_quad(lambda t: t * pdf(t), a, b) / mass)
        mse = sum(
            _quad(lambda t, l=l: (t - l) ** 2 * pdf(t), a, b)
            for l, a, b in zip(levels, edges[:-1], edges[1:])
        )
        if prev is not None and abs(prev - mse) / mse < tol:
            break
        prev = mse
    return mse, levels


if __name__ == "__main__":
    for b in range(1, 6):
        mse, _ = lloyd_quad(b)
        print(b, repr(mse))
