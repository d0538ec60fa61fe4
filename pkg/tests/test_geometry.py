import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as O
from szego_lab.errors import ConfigurationError, DomainError, ParameterError
from szego_lab.geometry import (BALL_VOLUME_CONSTANT, SPHERE3, TORUS, MetricBall, ball_family,
                                ball_volume, disc_integral, doubling_check, engulfing_check,
                                engulfing_holds, forelli_reduce, grid_from_json, grid_from_reference,
                                grid_reference, hermitian, integrate, lens_area, make_sphere3_grid,
                                make_torus_grid, metric_distance, random_sphere_points,
                                sphere3_params, sphere3_points, total_mass)
from szego_lab.szego import sphere_moment


def unit_vectors(draw_count=1):
    comp = st.floats(-1.0, 1.0, allow_nan=False)
    return st.tuples(comp, comp, comp, comp).filter(
        lambda v: sum(x * x for x in v) > 1e-3).map(
        lambda v: np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]]) / math.sqrt(sum(x * x for x in v)))


# ---------------------------------------------------------------- grids

def test_torus_mass_and_weights():
    g = make_torus_grid(2, 16)
    assert g.size == 256
    assert np.allclose(g.weights, (2 * math.pi / 16) ** 2)
    assert integrate(g, np.ones(g.size)) == pytest.approx(total_mass(TORUS, 2), rel=1e-14)


def test_torus_nodes_avoid_diagonal():
    g = make_torus_grid(2, 64)
    x = g.nodes[:, 0] - g.nodes[:, 1]
    assert np.min(np.abs(np.sin(0.5 * x))) > 0.25 * 2 * math.pi / 64 / 2


@pytest.mark.parametrize("k", [(1, 0), (3, -2), (0, 7)])
def test_torus_rule_kills_nonzero_modes(k):
    g = make_torus_grid(2, 16)
    f = np.exp(1j * g.nodes @ np.array(k))
    assert abs(integrate(g, f)) < 1e-12


@pytest.mark.parametrize("N", [3, 5, 2, 7.5])
def test_torus_rejects_bad_resolution(N):
    with pytest.raises(ParameterError):
        make_torus_grid(1, N)


@pytest.mark.parametrize("rule", ["gauss", "midpoint"])
def test_sphere_mass(rule):
    g = make_sphere3_grid(32, 32, 16, rule=rule)
    tol = 1e-13 if rule == "gauss" else 2e-3
    assert np.sum(g.weights) == pytest.approx(2 * math.pi**2, rel=tol)
    assert np.allclose(np.linalg.norm(g.points, axis=1), 1.0)


@pytest.mark.parametrize("a,b", [(1, 1), (0.5, 1.5), (2, 0), (1.5, 2.5)])
def test_sphere_moments_against_hopf_oracle(a, b):
    # Gamma-function closed form against Hopf-coordinate quadrature
    assert sphere_moment(a, b) == pytest.approx(O.hopf_moment(a, b), rel=1e-12)
    g = make_sphere3_grid(48, 48, 8)
    r = np.abs(g.points)
    val = np.sum(r[:, 0] ** (2 * a) * r[:, 1] ** (2 * b) * g.weights)
    assert val == pytest.approx(O.hopf_moment(a, b), rel=1e-7)


def test_sphere_params_roundtrip():
    g = make_sphere3_grid(8, 8, 8)
    back = sphere3_points(sphere3_params(g.points))
    assert np.max(np.abs(back - g.points)) < 1e-13


def test_sphere_rejects_odd_gauss():
    with pytest.raises(ParameterError):
        make_sphere3_grid(9, 8, 8)
    with pytest.raises(ParameterError):
        make_sphere3_grid(8, 8, 8, rule="simpson")


def test_grid_json_roundtrip():
    for g in (make_torus_grid(2, 8), make_sphere3_grid(8, 8, 4)):
        h = grid_from_json(g.to_json())
        assert h.same_as(g)
        assert np.allclose(h.weights, g.weights)
        assert grid_from_reference(grid_reference(g)).same_as(g)


def test_grid_json_rejects_foreign_document():
    with pytest.raises(ConfigurationError):
        grid_from_json('{"format": "other", "version": 1}')


def test_integrate_checks_shape():
    with pytest.raises(ConfigurationError):
        integrate(make_torus_grid(1, 8), np.ones(7))


# ---------------------------------------------------------------- metric

@given(unit_vectors(), unit_vectors(), unit_vectors())
def test_triangle_inequality(a, b, c):
    assert metric_distance(a, b) <= metric_distance(a, c) + metric_distance(c, b) + 1e-12


@given(unit_vectors(), unit_vectors())
def test_distance_symmetric_and_bounded(a, b):
    d = metric_distance(a, b)
    assert d == pytest.approx(metric_distance(b, a), abs=1e-15)
    assert 0.0 <= d <= math.sqrt(2.0) + 1e-12
    assert metric_distance(a, a) < 1e-7


def test_triangle_inequality_bulk():
    rng = np.random.default_rng(7)
    p = random_sphere_points(rng, 30000).reshape(3, 10000, 2)
    lhs = metric_distance(p[0], p[1])
    rhs = metric_distance(p[0], p[2]) + metric_distance(p[2], p[1])
    assert np.all(lhs <= rhs + 1e-12)


def test_hermitian_is_conjugate_linear_in_second_slot():
    a = np.array([1.0, 1j]) / math.sqrt(2)
    b = np.array([1j, 0.0])
    assert hermitian(a, b) == pytest.approx(np.vdot(b, a))


def test_ball_validation():
    with pytest.raises(DomainError):
        MetricBall((1.0, 1.0), 0.1)
    with pytest.raises(ParameterError):
        MetricBall((1.0, 0.0), 1.6)


@pytest.mark.parametrize("delta", [0.1, 0.3, 0.7, 1.0, 1.3, math.sqrt(2.0)])
def test_lens_area_against_polar_quadrature(delta):
    assert lens_area(delta) == pytest.approx(O.lens_area_polar(delta), rel=1e-10, abs=1e-15)


def test_lens_area_small_delta_limit():
    # area ~ (pi / 2) delta^4, hence sigma(Q) ~ pi^2 delta^4
    d = 0.02
    assert 2 * math.pi * lens_area(d) / d**4 == pytest.approx(BALL_VOLUME_CONSTANT, rel=1e-3)


@pytest.mark.parametrize("center", [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8j)])
def test_ball_volume_matches_exact_when_resolved(center):
    g = make_sphere3_grid(96, 96, 96)
    v = ball_volume(g, MetricBall(center, 0.8))
    assert not v.under_resolved
    assert v.volume == pytest.approx(v.exact, rel=0.03)


def test_small_ball_flagged_under_resolved():
    g = make_sphere3_grid(32, 32, 32)
    v = ball_volume(g, MetricBall((0.0, 1.0), 0.1))
    assert v.under_resolved


def test_engulfing_none_for_disjoint_balls():
    g = make_sphere3_grid(16, 16, 16)
    assert engulfing_holds(g, MetricBall((1.0, 0.0), 0.2), MetricBall((0.0, 1.0), 0.2)) is None


def test_ball_family_layout():
    fam = ball_family()
    ids = [c for c, _ in fam]
    assert len(fam) == 24 and ids[0] == "Z1_0" and ids[8] == "Z2_0" and ids[16] == "G_0"
    for _, c in fam:
        assert abs(np.linalg.norm(c) - 1.0) < 1e-12


def test_doubling_and_engulfing_on_coarse_grid():
    g = make_sphere3_grid(48, 48, 48)
    fam = ball_family(per_circle=2, generic=2)
    d = doubling_check(g, fam, radii=(0.4, 0.45))
    assert d.holds and d.max_ratio <= d.bound
    for r, ex in d.exact_ratios.items():
        assert ex == pytest.approx(O.lens_area_polar(3 * r) / O.lens_area_polar(r), rel=1e-9)
    e = engulfing_check(g, fam, radii=(0.3,))
    assert e.holds and e.overlapping > 0


# ---------------------------------------------------------------- Forelli

def test_disc_integral_area():
    assert disc_integral(lambda lam: np.ones_like(lam.real)) == pytest.approx(math.pi, rel=1e-12)


@pytest.mark.parametrize("s", [0.0, 1.0, 2.5])
def test_forelli_ratio(s):
    g = make_sphere3_grid(48, 48, 8)
    red = forelli_reduce(g, lambda z1: np.abs(z1) ** s)
    assert red.integrable
    assert red.ratio.real == pytest.approx(2 * math.pi, rel=1e-6)


def test_forelli_detects_nonintegrable():
    g = make_sphere3_grid(16, 16, 8)
    red = forelli_reduce(g, lambda z1: np.abs(z1) ** -2.5)
    assert not red.integrable


def test_forelli_needs_sphere():
    with pytest.raises(ConfigurationError):
        forelli_reduce(make_torus_grid(2, 8), lambda z: z)


def test_manifold_ids():
    assert make_torus_grid(1, 8).manifold_id == TORUS
    assert make_sphere3_grid(8, 8, 8).manifold_id == SPHERE3
