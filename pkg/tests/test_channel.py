import math

import numpy as np
import pytest

from fhquant.channel import (
    ChannelRealization,
    RicianConfig,
    generate_rician,
    scale_to_snr,
    snr,
    steering_vector,
    svd_streams,
)


def test_steering_vectors_unit_norm():
    A = steering_vector(32, np.linspace(-1.5, 1.5, 7))
    np.testing.assert_allclose(np.linalg.norm(A, axis=0), 1.0, rtol=1e-12)


def test_pure_los_energy_and_rank():
    cfg = RicianConfig(m=16, k=8, kappa=1e9)
    ch = generate_rician(cfg, seed=4)
    assert ch.singulars[0] / ch.singulars[1] > 1e3
    assert np.linalg.norm(ch.matrix) ** 2 == pytest.approx(16 * 8, rel=1e-3)


def test_rayleigh_normalization():
    cfg = RicianConfig(m=32, k=8, kappa=0.0)
    energy = [np.linalg.norm(generate_rician(cfg, seed=s).matrix) ** 2 for s in range(100)]
    assert np.mean(energy) == pytest.approx(32 * 8, rel=0.05)


def test_mixed_kappa_normalization():
    cfg = RicianConfig(m=32, k=8, kappa=10.0)
    energy = [np.linalg.norm(generate_rician(cfg, seed=s).matrix) ** 2 for s in range(100)]
    assert np.mean(energy) == pytest.approx(32 * 8, rel=0.05)


def test_full_rank_with_many_paths():
    cfg = RicianConfig(m=128, k=16, kappa=0.0)
    ranks = [generate_rician(cfg, seed=s).singulars.size for s in range(100)]
    assert all(r == 16 for r in ranks)


def test_reproducible():
    cfg = RicianConfig(m=8, k=4, kappa=2.0)
    a = generate_rician(cfg, seed=99)
    b = generate_rician(cfg, seed=99)
    assert np.array_equal(a.matrix, b.matrix)
    assert not np.array_equal(a.matrix, generate_rician(cfg, seed=100).matrix)


def test_config_validation():
    with pytest.raises(ValueError):
        RicianConfig(m=0, k=4, kappa=1.0)
    with pytest.raises(ValueError):
        RicianConfig(m=4, k=4, kappa=math.inf)
    with pytest.raises(ValueError):
        RicianConfig(m=4, k=4, kappa=-1.0)


def test_svd_identity_and_ordering():
    np.testing.assert_allclose(svd_streams(np.eye(2)), [1.0, 1.0])
    np.testing.assert_allclose(svd_streams(np.diag([3.0, 4.0])), [4.0, 3.0])


def test_svd_matches_gram_eigenvalues():
    rng = np.random.default_rng(0)
    H = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    oracle = np.sqrt(np.sort(np.linalg.eigvalsh(H.conj().T @ H))[::-1])
    np.testing.assert_allclose(svd_streams(H), oracle, rtol=1e-10)


def test_svd_drops_null_directions():
    rng = np.random.default_rng(1)
    u = rng.standard_normal((6, 2))
    v = rng.standard_normal((2, 5))
    assert svd_streams(u @ v).size == 2


def test_svd_rejects_zero():
    with pytest.raises(ValueError):
        svd_streams(np.zeros((3, 3)))


def test_compact_svd_reconstruction():
    ch = ChannelRealization.from_matrix(generate_rician(RicianConfig(12, 5, 1.0), 3).matrix, keep_vectors=True)
    U, V = ch.left_vectors, ch.right_vectors
    rebuilt = U @ np.diag(ch.singulars) @ V.conj().T
    assert np.linalg.norm(rebuilt - ch.matrix) / np.linalg.norm(ch.matrix) < 1e-10
    np.testing.assert_allclose(U.conj().T @ U, np.eye(5), atol=1e-12)


def test_singulars_record():
    ch = ChannelRealization.from_matrix(np.diag([2.0, 1.0]))
    assert ch.singulars_record() == "2,1"


def test_scale_to_snr_examples():
    s = scale_to_snr([3.0, 2.0, 1.0], 1.0, 1.0, 10.0, 128, 16)
    assert np.sum(s**2) == pytest.approx(20480.0, rel=1e-12)
    assert s[0] / s[2] == pytest.approx(3.0)
    doubled = scale_to_snr([3.0, 2.0, 1.0], 1.0, 1.0, 20.0, 128, 16)
    np.testing.assert_allclose(doubled, math.sqrt(2) * s, rtol=1e-14)


def test_scale_to_snr_fixed_point_and_exactness():
    s = np.array([4.0, 2.0])
    target = snr(s, 2.0, 0.5, 4, 2)
    np.testing.assert_allclose(scale_to_snr(s, 2.0, 0.5, target, 4, 2), s, rtol=1e-15)
    rng = np.random.default_rng(5)
    for _ in range(50):
        s = np.sort(rng.exponential(size=6))[::-1]
        t = 10 ** rng.uniform(-3, 4)
        out = scale_to_snr(s, 1.3, 0.7, t, 8, 6)
        assert snr(out, 1.3, 0.7, 8, 6) == pytest.approx(t, rel=1e-12)


def test_scale_to_snr_rejects_nonpositive_target():
    with pytest.raises(ValueError):
        scale_to_snr([1.0], 1.0, 1.0, 0.0, 1, 1)
