import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhquant.quantizer import (
    HIGH_RATE_CONSTANT,
    ConvergenceError,
    DistortionModel,
    LloydMaxCodebook,
    bussgang_check,
    centroids,
    default_model,
    design_lloyd_max,
    distortion_factor,
    quantize,
    quantize_complex,
)

# from tests/oracles/lloyd_quad.py (adaptive quadrature Lloyd iteration)
QUAD_ORACLE = {
    1: 0.3633802276324187,
    2: 0.11748184782933455,
    3: 0.03454776078851273,
    4: 0.009501008008204602,
    5: 0.0025046683556882595,
}


@pytest.mark.parametrize("bits", sorted(QUAD_ORACLE))
def test_distortion_matches_quadrature_oracle(bits):
    assert design_lloyd_max(bits).distortion == pytest.approx(QUAD_ORACLE[bits], abs=1e-10)


def test_one_bit_closed_form():
    cb = design_lloyd_max(1)
    a = math.sqrt(2 / math.pi)
    np.testing.assert_allclose(cb.levels, [-a, a], atol=1e-12)
    np.testing.assert_allclose(cb.thresholds, [0.0], atol=1e-15)
    assert cb.distortion == pytest.approx(1 - 2 / math.pi, abs=1e-12)


def test_two_bits():
    assert design_lloyd_max(2).distortion == pytest.approx(0.1175, abs=1e-4)


def test_five_bits_near_high_rate_formula():
    high_rate = HIGH_RATE_CONSTANT * 2.0**-10
    assert abs(design_lloyd_max(5).distortion / high_rate - 1) < 0.15


@pytest.mark.parametrize("bits", range(1, 11))
def test_codebook_invariants(bits):
    cb = design_lloyd_max(bits)
    n = 2**bits
    assert cb.levels.size == n and cb.thresholds.size == n - 1
    assert np.all(np.diff(cb.levels) > 0)
    assert np.all(np.diff(cb.thresholds) > 0)
    assert np.all(cb.levels[:-1] < cb.thresholds) and np.all(cb.thresholds < cb.levels[1:])
    np.testing.assert_array_equal(cb.levels, -cb.levels[::-1])
    # centroid and nearest-neighbour conditions
    np.testing.assert_allclose(centroids(cb.thresholds), cb.levels, atol=5e-10)
    np.testing.assert_allclose(0.5 * (cb.levels[:-1] + cb.levels[1:]), cb.thresholds, atol=1e-8)
    assert 0 < cb.distortion < 1


def test_distortion_strictly_decreasing():
    d = [design_lloyd_max(b).distortion for b in range(1, 13)]
    assert all(b < a for a, b in zip(d, d[1:]))


def test_centroids_match_monte_carlo_conditional_means():
    cb = design_lloyd_max(3)
    x = np.random.default_rng(7).standard_normal(2_000_000)
    cell = np.searchsorted(cb.thresholds, x, side="right")
    for j, level in enumerate(cb.levels):
        members = x[cell == j]
        se = members.std() / math.sqrt(members.size)
        assert abs(members.mean() - level) < 5 * se


def test_nonconvergence_carries_last_iterate():
    with pytest.raises(ConvergenceError) as info:
        design_lloyd_max(6, tolerance=1e-10, max_iterations=2)
    last = info.value.last_iterate
    assert isinstance(last, LloydMaxCodebook) and last.levels.size == 64


@pytest.mark.parametrize("bits", [0, -1, 13, 2.5])
def test_design_rejects_bad_bits(bits):
    with pytest.raises(ValueError):
        design_lloyd_max(bits)


def test_record_round_trip():
    cb = design_lloyd_max(3)
    text = cb.to_record()
    assert text.splitlines()[0] == "bits=3"
    back = LloydMaxCodebook.from_record(text)
    assert back.bits == 3
    np.testing.assert_allclose(back.levels, cb.levels, rtol=1e-11)
    np.testing.assert_allclose(back.thresholds, cb.thresholds, rtol=1e-11, atol=1e-300)
    assert back.distortion == pytest.approx(cb.distortion, rel=1e-11)


# -- distortion model -------------------------------------------------------------


def test_distortion_factor_examples():
    model = default_model()
    assert distortion_factor(model, 0) == 1.0
    assert distortion_factor(model, 6) == pytest.approx(6.642e-4, rel=1e-3)
    assert distortion_factor(model, 6) == HIGH_RATE_CONSTANT * 2.0**-12
    assert distortion_factor(model, 3) == pytest.approx(0.03454, abs=1e-5)


def test_table_comes_from_own_designs():
    model = default_model()
    for b, value in QUAD_ORACLE.items():
        assert model.beta(b) == pytest.approx(value, abs=1e-10)


@given(st.integers(min_value=6, max_value=200))
def test_high_rate_formula_beyond_table(b):
    assert default_model().beta(b) == HIGH_RATE_CONSTANT * 2.0 ** (-2 * b)


def test_model_monotone_and_bounded():
    beta = default_model().beta(np.arange(0, 100))
    assert beta[0] == 1.0
    assert np.all(np.diff(beta) < 0)
    assert np.all((beta[1:] > 0) & (beta[1:] < 1))


def test_model_rejects_bad_tables():
    with pytest.raises(ValueError):
        DistortionModel(table={1: 0.3, 3: 0.03})
    with pytest.raises(ValueError):
        DistortionModel(table={1: 0.3, 2: 0.4})
    with pytest.raises(ValueError):
        default_model().beta(-1)


def test_custom_table():
    model = DistortionModel(table={1: 0.3634, 2: 0.1175})
    assert model.beta(2) == 0.1175
    assert model.beta(3) == HIGH_RATE_CONSTANT * 2.0**-6


# -- quantize --------------------------------------------------------------------------


def test_sign_quantizer():
    cb = design_lloyd_max(1)
    assert quantize(cb, -3.2) == pytest.approx(-math.sqrt(2 / math.pi))


def test_ties_go_to_upper_cell():
    cb = design_lloyd_max(2)
    assert quantize(cb, cb.thresholds[0]) == cb.levels[1]
    # zero is the middle threshold of an even symmetric codebook
    assert quantize(cb, 0.0) == cb.levels[2] == np.min(cb.levels[cb.levels > 0])


def test_quantize_vectorized():
    cb = design_lloyd_max(3)
    x = np.linspace(-5, 5, 101)
    out = quantize(cb, x)
    assert out.shape == x.shape
    assert set(np.unique(out)) <= set(cb.levels)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3), st.integers(min_value=1, max_value=5))
def test_scale_equivariance(sigma, bits):
    cb = design_lloyd_max(bits)
    u = np.random.default_rng(bits).standard_normal(20_000) + 1j * np.random.default_rng(bits + 9).standard_normal(20_000)
    unit = quantize_complex(cb, u, 1.0)
    scaled = quantize_complex(cb, sigma * u, sigma)
    beta_unit = np.mean(np.abs(unit - u) ** 2) / np.mean(np.abs(u) ** 2)
    beta_scaled = np.mean(np.abs(scaled - sigma * u) ** 2) / np.mean(np.abs(sigma * u) ** 2)
    assert beta_scaled == pytest.approx(beta_unit, rel=1e-9)


# -- Bussgang ---------------------------------------------------------------------------


def test_bussgang_three_bits():
    cb = design_lloyd_max(3)
    rep = bussgang_check(cb, 1.0, 1.0, 1.0, 1_000_000, seed=3)
    assert abs(rep.estimated_gain - 0.9655) < 0.005
    assert abs(rep.cross_correlation_x_eta) < 0.01
    assert abs(rep.output_power_ratio - 1) < 0.01
    assert rep.sample_count == 1_000_000


def test_bussgang_complex_channel():
    cb = design_lloyd_max(2)
    rep = bussgang_check(cb, 2.0, 0.6 - 0.8j, 0.5, 400_000, seed=11)
    assert abs(rep.estimated_gain - (1 - cb.distortion)) < 0.01
    assert abs(rep.cross_correlation_x_eta) < 0.02


def test_bussgang_deterministic():
    cb = design_lloyd_max(2)
    assert bussgang_check(cb, sample_count=1000, seed=5) == bussgang_check(cb, sample_count=1000, seed=5)


@pytest.mark.parametrize("kwargs", [{"power": 0.0}, {"noise_var": -1.0}, {"sample_count": 0}])
def test_bussgang_rejects_degenerate(kwargs):
    with pytest.raises(ValueError):
        bussgang_check(design_lloyd_max(1), **kwargs)
