import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as O
from szego_lab.errors import ParameterError, UnderResolvedError
from szego_lab.fields import WeightField
from szego_lab.geometry import make_torus_grid
from szego_lab.regularity import (BOUNDED, DIVERGENT, INCONCLUSIVE, ap_characteristic_interval,
                                  ap_interval_detect, ap_scan_arcs, asymptotic_check,
                                  bidisc_scan, classify_sequence, classify_witness,
                                  detect_interval, dual_exponent, endpoint_witness_bidisc,
                                  endpoint_witness_thullen, fit_log_growth, gamma_alpha,
                                  intsize_beta_oracle, intsize_divergence, intsize_integral,
                                  power_weight, predicted_ap_interval, predicted_thullen_interval,
                                  sin_cos_beta, thullen_constant, thullen_scan)
from szego_lab.szego import sphere_moment


# ---------------------------------------------------------------- classification

def test_classify_sequence_cases():
    assert classify_sequence([1.0, 1.0, 1.0]).verdict == BOUNDED
    assert classify_sequence([1.0, 1.5, 1.75, 1.875, 1.9375]).verdict == BOUNDED
    assert classify_sequence([1.0, 2.0, 3.0, 4.0, 5.0]).verdict == DIVERGENT
    assert classify_sequence([1.0, 2.0, 4.0, 8.0, 16.0]).verdict == DIVERGENT
    assert classify_sequence([1.0, 2.0, 1.5, 2.5, 1.2]).verdict == INCONCLUSIVE
    with pytest.raises(ParameterError):
        classify_sequence([1.0, 2.0])


@given(st.floats(0.05, 0.95), st.floats(0.1, 10.0))
def test_geometric_convergence_is_bounded(q, a):
    v = a * (1 - q ** np.arange(1, 12))
    assert classify_sequence(v).verdict == BOUNDED


@given(st.floats(0.01, 5.0), st.floats(0.1, 10.0))
def test_logarithmic_growth_is_divergent(c, a):
    assert classify_sequence(a + c * np.arange(8)).verdict == DIVERGENT


def test_fit_log_growth_exact():
    x = np.array([32, 64, 128, 256])
    b, a, r2 = fit_log_growth(x, 1.5 + 0.25 * np.log(x))
    assert b == pytest.approx(0.25) and a == pytest.approx(1.5) and r2 == pytest.approx(1.0)


def test_classify_witness():
    sizes = [32, 64, 128, 256]
    assert classify_witness(sizes, [1.0, 1.005, 1.01, 1.0])[0] == BOUNDED
    assert classify_witness(sizes, [1.0, 1.1, 1.2, 1.3])[0] == DIVERGENT
    assert classify_witness(sizes, [1.0, 1.3, 1.1, 1.2])[0] == INCONCLUSIVE


# ---------------------------------------------------------------- characteristics

@pytest.mark.parametrize("s,p", [(0.5, 2.0), (-0.5, 3.0), (1.0, 4.0)])
def test_arc_characteristic_against_quadrature_smooth(s, p):
    # arc away from the singular point: midpoint rule converges fast
    mu = lambda t: np.abs(2 * np.sin(0.5 * (t + 2.0))) ** s  # noqa: E731
    val = ap_characteristic_interval(mu, 0.0, 0.5, p, n_nodes=4096)
    mu0 = lambda t: abs(2 * math.sin(0.5 * (t + 2.0))) ** s  # noqa: E731
    from scipy.integrate import quad
    a = quad(mu0, -0.25, 0.25, epsrel=1e-12)[0] / 0.5
    b = quad(lambda t: mu0(t) ** (-1 / (p - 1)), -0.25, 0.25, epsrel=1e-12)[0] / 0.5
    assert val == pytest.approx(a * b ** (p - 1), rel=1e-6)


@pytest.mark.parametrize("s,p", [(0.5, 2.0), (-0.4, 3.0), (1.0, 4.0)])
def test_arc_characteristic_singular_against_quadrature(s, p):
    val = ap_characteristic_interval(lambda t: np.abs(2 * np.sin(0.5 * t)) ** s, 0.0, 0.5, p,
                                     n_nodes=2**16)
    assert val == pytest.approx(O.arc_characteristic_quad(s, p, 0.5), rel=1e-2)


def test_small_arcs_approach_scale_invariant_limit():
    s, p = 0.5, 3.0
    rep = ap_scan_arcs(lambda t: np.abs(2 * np.sin(0.5 * t)) ** s, p, J=12)
    assert rep.verdict == BOUNDED
    assert rep.characteristics[-1] == pytest.approx(O.power_characteristic(s, p), rel=2e-2)


@given(st.integers(0, 2**32 - 1), st.floats(1.2, 5.0))
def test_characteristic_at_least_one(seed, p):
    rng = np.random.default_rng(seed)
    vals = np.exp(rng.standard_normal(64))
    g = make_torus_grid(1, 64)
    w = WeightField(g, vals)
    assert ap_characteristic_interval(w, 1.0, 1.5, p) >= 1.0 - 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(1.2, 5.0))
def test_duality(seed, p):
    # [w]_p^{1/(p-1)} = [w^{-1/(p-1)}]_{p'}
    rng = np.random.default_rng(seed)
    vals = np.exp(rng.standard_normal(37))
    mu = lambda t: vals  # noqa: E731
    nu = lambda t: vals ** (-1.0 / (p - 1.0))  # noqa: E731
    a = ap_characteristic_interval(mu, 0.0, 1.0, p, n_nodes=37) ** (1.0 / (p - 1.0))
    b = ap_characteristic_interval(nu, 0.0, 1.0, dual_exponent(p), n_nodes=37)
    assert a == pytest.approx(b, rel=1e-10)


def test_grid_characteristic_needs_resolved_arc():
    w = WeightField(make_torus_grid(1, 64), np.ones(64))
    with pytest.raises(UnderResolvedError):
        ap_characteristic_interval(w, 0.0, 0.1, 2.0)
    with pytest.raises(ParameterError):
        ap_characteristic_interval(w, 0.0, 1.0, 1.0)


# ---------------------------------------------------------------- intervals

def test_predicted_intervals():
    assert predicted_ap_interval(1.0) == (1.5, 3.0)
    assert predicted_ap_interval(0.0) == (None, None)
    assert predicted_thullen_interval(2, 2) == pytest.approx((4 / 3, 4.0))
    assert predicted_thullen_interval(2, 3) == pytest.approx((10 / 7, 10 / 3))
    assert predicted_thullen_interval(1, 1) == (None, None)


@pytest.mark.parametrize("alpha,p,verdict", [(1.0, 2.0, BOUNDED), (1.0, 1.4, DIVERGENT),
                                              (1.0, 3.2, DIVERGENT), (0.5, 3.5, BOUNDED)])
def test_power_weight_verdicts(alpha, p, verdict):
    assert ap_scan_arcs(power_weight(alpha, p), p).verdict == verdict


def test_detect_interval_on_synthetic_classifier():
    det = detect_interval(lambda p: BOUNDED if 1.5 < p < 3.25 else DIVERGENT,
                          np.linspace(1.1, 6, 20), tol=1e-3)
    assert det.p_min == pytest.approx(1.5, abs=2e-3) and det.p_max == pytest.approx(3.25, abs=2e-3)
    det = detect_interval(lambda p: BOUNDED, [1.5, 3.0])
    assert det.p_min is None and det.p_max is None


def test_interval_detect_alpha_one():
    det = ap_interval_detect(1.0)
    assert det.within(0.05)


def test_bidisc_scan_verdicts():
    assert bidisc_scan(2.0).verdict == BOUNDED
    assert bidisc_scan(4.5).verdict == DIVERGENT
    assert bidisc_scan(1.25).verdict == DIVERGENT


def test_thullen_scan_verdicts():
    assert thullen_scan(2, 2, 2.0).verdict == BOUNDED
    assert thullen_scan(2, 2, 5.0).verdict == DIVERGENT
    assert thullen_scan(1, 1, 5.0).verdict == BOUNDED


# ---------------------------------------------------------------- witnesses

def test_bidisc_witness_growth_matches_increment_oracle():
    rep = endpoint_witness_bidisc(4.0)
    assert rep.verdict == DIVERGENT and rep.r2 > 0.9
    inc = np.diff(rep.ratios)
    assert inc[-1] == pytest.approx(O.bidisc_witness_increment(), rel=0.02)
    assert max(rep.projection_errors) < 1e-10


def test_bidisc_witness_bounded_at_two():
    rep = endpoint_witness_bidisc(2.0)
    assert rep.verdict == BOUNDED
    # at p = 2 the weight disappears and the ratio is ||S h||^2 / ||h||^2
    assert rep.ratios[-1] == pytest.approx(4.0 / 6.0, rel=1e-10)


def test_thullen_constant():
    assert thullen_constant(0, 0) == 1.0
    assert thullen_constant(2, 2) == pytest.approx(sphere_moment(1, 1) / (2 * math.pi**2))
    assert thullen_constant(2, 2) == pytest.approx(1 / 6)


def test_thullen_witness():
    rep = endpoint_witness_thullen(2, 2, 2.0, sizes=(24, 32, 48))
    assert rep.verdict == BOUNDED and max(rep.projection_errors) < 1e-6


# ---------------------------------------------------------------- lens integrals

@pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0, 2.5])
@pytest.mark.parametrize("delta", [0.1, 0.5, 1.2])
def test_intsize_against_beta_oracle(alpha, delta):
    assert intsize_integral(alpha, delta) == pytest.approx(intsize_beta_oracle(alpha, delta), rel=1e-8)


@pytest.mark.parametrize("alpha,delta", [(0.0, 0.4), (1.0, 0.7), (2.0, 1.0)])
def test_intsize_against_dblquad(alpha, delta):
    assert intsize_integral(alpha, delta) == pytest.approx(O.lens_integral_polar(alpha, delta), rel=1e-7)


def test_intsize_alpha_zero_is_lens_area():
    assert intsize_integral(0.0, 0.5) == pytest.approx(O.lens_area_polar(0.5), rel=1e-9)


def test_gamma_values():
    assert gamma_alpha(0.0) == pytest.approx(math.pi / 2, rel=1e-10)
    assert gamma_alpha(1.0) == pytest.approx(4 / 3, rel=1e-10)
    assert gamma_alpha(2.0) == pytest.approx(math.pi / 2, rel=1e-10)
    assert sin_cos_beta(1.0, 1.0) == pytest.approx(0.5)


def test_cutoff_integral_recovers_full_integral():
    full = intsize_integral(0.5, 0.3)
    assert intsize_integral(0.5, 0.3, eps=1e-12) == pytest.approx(full, rel=1e-6)


def test_intsize_divergence_verdicts():
    assert intsize_divergence(-1.0, 0.3)[0] == DIVERGENT
    assert intsize_divergence(-2.0, 0.3)[0] == DIVERGENT
    assert intsize_divergence(-0.5, 0.3)[0] == BOUNDED
    with pytest.raises(ParameterError):
        intsize_integral(-1.0, 0.3)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 2.0])
def test_asymptotic_ratio_monotone(alpha):
    rep = asymptotic_check(alpha)
    assert rep.monotone and rep.relative_error <= 0.02
