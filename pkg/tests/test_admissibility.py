import numpy as np
import pytest

from szego_lab.admissibility import (admissibility_report, classify_refinement,
                                     fourier_construct_polydisc, fourier_support, herglotz_quadrature,
                                     herglotz_solve, log_integrability, solution_from_function,
                                     verify_admissible)
from szego_lab.errors import AdmissibilityError, ConfigurationError, PreconditionError
from szego_lab.fields import WeightField
from szego_lab.geometry import make_sphere3_grid, make_torus_grid
from szego_lab.maps import closed_form_density, power

A = 0.5


def sqrt_weight(N, a=A):
    g = make_torus_grid(1, N)
    f = lambda p: np.abs(1 + a * np.atleast_2d(p)[:, 0])  # noqa: E731
    return WeightField(g, f(g.points), provenance="closed-form", func=f)


def test_classify_refinement():
    assert classify_refinement([1.0, 1.001, 1.0011]) == "finite"
    assert classify_refinement([1.0, 2.0, 3.0, 4.0]) == "divergent"
    assert classify_refinement([1.0, 2.0, 3.0, 3.5]) == "inconclusive"
    with pytest.raises(ConfigurationError):
        classify_refinement([1.0, 2.0])


@pytest.mark.parametrize("dom", ["symmetrized_bidisc"] +
                         [f"thullen({m},{k})" for m in (1, 2, 3) for k in (1, 2, 3)] +
                         ["minimal_ball"])
def test_log_integrability_finite(dom):
    g = make_torus_grid(2, 32) if dom == "symmetrized_bidisc" else make_sphere3_grid(16, 16, 16)
    assert log_integrability(closed_form_density(dom, g)).verdict == "finite"


def test_log_integrability_divergent_for_exponential_zero():
    g = make_torus_grid(1, 512)
    f = lambda p: np.exp(-0.01 / np.abs(np.angle(np.atleast_2d(p)[:, 0])))  # noqa: E731
    w = WeightField(g, f(g.points), func=f)
    assert log_integrability(w).verdict == "divergent"
    with pytest.raises(AdmissibilityError):
        herglotz_solve(w)


def test_herglotz_against_square_root_oracle():
    w = sqrt_weight(4096)
    sol = herglotz_solve(w)
    pts = 0.999 * w.grid.points
    oracle = np.sqrt(1 + A * pts[:, 0])
    assert np.max(np.abs(sol.evaluate(pts) - oracle)) < 1e-3
    assert sol.residuals[-1] < 1e-3
    assert sol.zero_free


def test_herglotz_quadrature_agrees_with_spectral_route():
    w = sqrt_weight(4096)
    z = np.array([0.0, 0.5 + 0.3j, -0.9])
    q = herglotz_quadrature(w, z)
    assert np.max(np.abs(q - np.sqrt(1 + A * z))) < 1e-10
    with pytest.raises(PreconditionError):
        herglotz_quadrature(w, [0.999])


def test_herglotz_invariance_for_power_map_density():
    g = make_torus_grid(1, 256)
    phi = power(3)
    w = WeightField(g, np.full(g.size, 3.0))
    sol = herglotz_solve(w, G=phi.group)
    assert sol.invariance_residual < 1e-12
    assert sol.boundary_residual < 1e-12


def test_orthant_supported_log_is_recovered():
    g = make_torus_grid(2, 64)
    h = lambda p: 0.3 * p[:, 0] + 0.2 * p[:, 0] * p[:, 1] - 0.1j * p[:, 1] ** 2  # noqa: E731
    w = WeightField(g, np.abs(np.exp(h(g.points))) ** 2)
    rep = fourier_construct_polydisc(w)
    assert not rep.needs_singular_measure
    pts = 0.9 * g.points
    sol = rep.herglotz
    # g is determined up to a unimodular constant; compare moduli and ratio
    ratio = sol.evaluate(pts) / np.exp(h(pts))
    assert np.max(np.abs(ratio - ratio[0])) < 1e-6 and abs(abs(ratio[0]) - 1) < 1e-6
    assert sol.boundary_residual < 1e-6
    chk = verify_admissible(sol, w)
    assert chk["min_modulus"] > 0 and chk["boundary_residual"] < 1e-6


def test_bidisc_needs_singular_measure():
    g = make_torus_grid(2, 64)
    info, _ = fourier_support(closed_form_density("symmetrized_bidisc", g))
    assert info["needs_singular_measure"]
    assert info["off_orthant_mass"] > 1e-3
    k = info["largest_off_orthant_modes"][0]["k"]
    assert k[0] * k[1] < 0


def test_admissibility_report_shapes():
    g = make_sphere3_grid(16, 16, 16)
    rep = admissibility_report(closed_form_density("thullen(2,3)", g))
    d = rep.to_dict()
    assert d["log_integrability"]["verdict"] == "finite" and d["herglotz"] is None
    rep = admissibility_report(closed_form_density("symmetrized_bidisc", make_torus_grid(2, 32)))
    assert rep.needs_singular_measure and rep.herglotz is None


def test_solution_from_function_records_residuals():
    w = sqrt_weight(512)
    sol = solution_from_function(w.grid, lambda p: np.sqrt(1 + A * p[:, 0]), w)
    assert sol.boundary_residual < 1e-14
    assert sol.residuals[0] > sol.residuals[-1]
