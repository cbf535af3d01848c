"""Rician MIMO channels between uniform linear arrays, SVD streams, SNR scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RANK_TOLERANCE = 1e-12


@dataclass(frozen=True)
class RicianConfig:
    m: int  # receive antennas
    k: int  # transmit antennas
    kappa: float  # linear Rician factor
    nlos_paths: int = 200
    antenna_spacing: float = 0.5  # in wavelengths

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            raise ValueError("antenna counts must be positive")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValueError("kappa must be finite and nonnegative")
        if self.nlos_paths < 1:
            raise ValueError("nlos_paths must be positive")


@dataclass
class ChannelRealization:
    matrix: np.ndarray
    singulars: np.ndarray
    left_vectors: np.ndarray | None = None
    right_vectors: np.ndarray | None = None

    @classmethod
    def from_matrix(cls, matrix, keep_vectors: bool = False) -> "ChannelRealization":
        matrix = np.asarray(matrix, dtype=complex)
        if not keep_vectors:
            return cls(matrix, svd_streams(matrix))
        u, s, vh = np.linalg.svd(matrix, full_matrices=False)
        r = _rank(s)
        return cls(matrix, s[:r], u[:, :r], vh[:r].conj().T)

    def singulars_record(self) -> str:
        return ",".join(format(float(v), ".12g") for v in self.singulars)


def steering_vector(n: int, angle, spacing: float = 0.5) -> np.ndarray:
    """Unit-norm ULA response; ``angle`` may be an array, giving one column per angle."""
    angle = np.atleast_1d(angle)
    idx = np.arange(n)[:, None]
    return np.exp(-2j * np.pi * spacing * idx * np.sin(angle)[None, :]) / math.sqrt(n)


def generate_rician(config: RicianConfig, seed) -> ChannelRealization:
    """One LOS path plus ``nlos_paths`` scattered paths, normalized to ``E{||H||_F^2} = M K``.

    All azimuths (LOS included) are uniform on [-pi/2, pi/2]; NLOS path gains
    are i.i.d. CN(0, 1).
    """
    rng = np.random.default_rng(seed)
    m, k, L = config.m, config.k, config.nlos_paths
    d = config.antenna_spacing
    los_rx, los_tx = rng.uniform(-np.pi / 2, np.pi / 2, size=2)
    rx_angles = rng.uniform(-np.pi / 2, np.pi / 2, size=L)
    tx_angles = rng.uniform(-np.pi / 2, np.pi / 2, size=L)
    gains = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / math.sqrt(2.0)

    a_rx = steering_vector(m, los_rx, d)
    a_tx = steering_vector(k, los_tx, d)
    los = math.sqrt(m * k) * (a_rx @ a_tx.conj().T)

    A_rx = steering_vector(m, rx_angles, d)
    A_tx = steering_vector(k, tx_angles, d)
    nlos = math.sqrt(m * k / L) * ((A_rx * gains[None, :]) @ A_tx.conj().T)

    kappa = config.kappa
    H = math.sqrt(kappa / (kappa + 1.0)) * los + math.sqrt(1.0 / (kappa + 1.0)) * nlos
    return ChannelRealization(H, svd_streams(H))


def _rank(s):
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > RANK_TOLERANCE * s[0]))


def svd_streams(matrix) -> np.ndarray:
    """Descending nonzero singular values, truncated at ``1e-12 * s_1``."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or not np.any(matrix):
        raise ValueError("channel matrix must be a nonzero 2-D array")
    s = np.linalg.svd(matrix, compute_uv=False)
    return s[: _rank(s)]


def snr(singulars, power: float, noise_var: float, m: int, k: int) -> float:
    """Per-antenna SNR ``P sum(s_i^2) / (M K sigma^2)``."""
    return power * float(np.sum(np.square(singulars))) / (m * k * noise_var)


def scale_to_snr(singulars, power: float, noise_var: float, target_snr: float, m: int, k: int) -> np.ndarray:
    if target_snr <= 0:
        raise ValueError("target_snr must be positive (linear scale)")
    if power <= 0 or noise_var <= 0:
        raise ValueError("power and noise_var must be positive")
    s = np.asarray(singulars, dtype=float)
    if s.size == 0:
        raise ValueError("singulars must be nonempty")
    current = snr(s, power, noise_var, m, k)
    return s * math.sqrt(target_snr / current)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)
