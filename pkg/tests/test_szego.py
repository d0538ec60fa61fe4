import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from szego_lab.errors import ConfigurationError, DomainError, ParameterError, UnderResolvedError
from szego_lab.fields import BoundaryField
from szego_lab.geometry import SPHERE3, TORUS, make_sphere3_grid, make_torus_grid
from szego_lab.maps import power, symmetrize, symmetrize2
from szego_lab.szego import (interior_eval, kernel_constant, kernel_eval, make_projector,
                             poisson_extend, project, sphere_moment)


def inner(g, a, b):
    return np.sum(a * np.conj(b) * g.weights)


def random_field(g, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(g.size) + 1j * rng.standard_normal(g.size)


@pytest.fixture(scope="module")
def sphere():
    return make_sphere3_grid(32, 32, 32)


# ---------------------------------------------------------------- torus

@given(st.integers(0, 2**32 - 1))
def test_torus_projector_idempotent_and_self_adjoint(seed):
    g = make_torus_grid(2, 16)
    S = make_projector(g)
    f, h = random_field(g, seed), random_field(g, seed + 1)
    Sf = S(f).values
    assert np.max(np.abs(S(Sf).values - Sf)) < 1e-10
    assert abs(inner(g, Sf, h) - inner(g, f, S(h).values)) < 1e-10 * (1 + abs(inner(g, f, h)))


def test_torus_reproducing_identity():
    g = make_torus_grid(2, 64)
    z = g.points
    out = make_projector(g)(np.abs(z[:, 0] - z[:, 1]) ** 2 + 0j)
    assert np.max(np.abs(out.values - 2.0)) < 1e-10


def test_torus_keeps_holomorphic_kills_antiholomorphic():
    g = make_torus_grid(2, 32)
    z = g.points
    hol = z[:, 0] ** 3 * z[:, 1] + 2.0
    S = make_projector(g)
    assert np.max(np.abs(S(hol).values - hol)) < 1e-12
    assert np.max(np.abs(S(np.conj(z[:, 0]) * z[:, 1]).values)) < 1e-12


def test_torus_projection_has_interior_extension():
    g = make_torus_grid(2, 32)
    z = g.points
    out = make_projector(g)(z[:, 0] ** 2 + np.conj(z[:, 1]))
    pt = np.array([[0.3 + 0.1j, -0.2j]])
    assert out(pt)[0] == pytest.approx(pt[0, 0] ** 2, abs=1e-12)


# ---------------------------------------------------------------- sphere

def test_sphere_projector_idempotent_and_self_adjoint(sphere):
    S = make_projector(sphere, 12)
    f, h = random_field(sphere, 1), random_field(sphere, 2)
    Sf = S(f).values
    assert np.max(np.abs(S(Sf).values - Sf)) < 1e-10 * np.max(np.abs(Sf))
    lhs, rhs = inner(sphere, Sf, h), inner(sphere, f, S(h).values)
    assert abs(lhs - rhs) < 1e-10 * abs(lhs)


@pytest.mark.parametrize("a,b", [(0, 0), (3, 0), (2, 5), (0, 8)])
def test_sphere_fixes_monomials(sphere, a, b):
    z = sphere.points
    mono = z[:, 0] ** a * z[:, 1] ** b
    assert np.max(np.abs(make_projector(sphere, 12)(mono).values - mono)) < 1e-10


@pytest.mark.parametrize("m,k", [(1, 1), (2, 3), (1, 0)])
def test_sphere_modulus_monomial_projects_to_moment(m, k):
    g = make_sphere3_grid(48, 48, 48)
    r = np.abs(g.points)
    out = make_projector(g)(r[:, 0] ** m * r[:, 1] ** k + 0j)
    C = sphere_moment(0.5 * m, 0.5 * k) / (2 * math.pi**2)
    assert np.max(np.abs(out.values - C)) < 1e-6


def test_sphere_kills_conjugate_monomials(sphere):
    z = sphere.points
    out = make_projector(sphere, 12)(np.conj(z[:, 0]) ** 2 * z[:, 1])
    assert np.max(np.abs(out.values)) < 1e-10


def test_sphere_projector_under_resolved():
    with pytest.raises(UnderResolvedError):
        make_projector(make_sphere3_grid(16, 16, 16), 24)
    with pytest.raises(ParameterError):
        make_projector(make_sphere3_grid(16, 16, 16), -1)


def test_projection_commutes_with_symmetrization():
    g = make_torus_grid(2, 32)
    f = BoundaryField(g, random_field(g, 5))
    G = symmetrize2().group
    S = make_projector(g)
    a = S(symmetrize(f, G)).values
    b = symmetrize(S(f), G).values
    assert np.max(np.abs(a - b)) < 1e-8


def test_projection_commutes_with_symmetrization_on_sphere(sphere):
    z = sphere.points
    vals = np.exp(z[:, 0] + 0.5 * np.conj(z[:, 1])) + z[:, 1] ** 3
    G = power(2, 3).group
    f = BoundaryField(sphere, vals, func=lambda p: np.exp(p[:, 0] + 0.5 * np.conj(p[:, 1])) + p[:, 1] ** 3)
    S = make_projector(sphere, 12)
    a = S(symmetrize(f, G)).values
    Sf = S(f)
    b = symmetrize(Sf, G).values
    assert np.max(np.abs(a - b)) < 1e-8


# ---------------------------------------------------------------- kernels

def test_kernel_constants():
    assert kernel_constant(TORUS, 2) == pytest.approx(1 / (4 * math.pi**2))
    assert kernel_constant(SPHERE3) == pytest.approx(1 / (2 * math.pi**2))
    g = make_sphere3_grid(16, 16, 16)
    assert np.allclose(kernel_eval(SPHERE3, [0, 0], g.points), kernel_constant(SPHERE3))


@pytest.mark.parametrize("manifold", [TORUS, SPHERE3])
def test_kernel_reproduces_polynomials(manifold):
    g = make_torus_grid(2, 64) if manifold == TORUS else make_sphere3_grid(32, 32, 32)
    z = g.points
    f = BoundaryField(g, z[:, 0] ** 2 * z[:, 1] + 1.0)
    pt = np.array([0.3 + 0.2j, -0.1 + 0.4j])
    assert interior_eval(f, pt) == pytest.approx(pt[0] ** 2 * pt[1] + 1.0, abs=1e-10)


def test_kernel_domain_checks():
    with pytest.raises(DomainError):
        kernel_eval(SPHERE3, [0.8, 0.8], [1.0, 0.0])
    with pytest.raises(DomainError):
        kernel_eval(TORUS, [0.1, 0.1], [0.5, 1.0])
    with pytest.raises(ConfigurationError):
        kernel_eval("klein", [0.1], [1.0])


def test_poisson_extension_of_harmonic_polynomial():
    g = make_torus_grid(1, 64)
    th = g.nodes[:, 0]
    f = BoundaryField(g, np.cos(th) + 0.5 * np.sin(3 * th))
    out = poisson_extend(f, 0.7)
    assert np.max(np.abs(out.values - (0.7 * np.cos(th) + 0.5 * 0.7**3 * np.sin(3 * th)))) < 1e-13
    with pytest.raises(DomainError):
        poisson_extend(f, 1.0)


def test_project_dispatch():
    g = make_torus_grid(1, 16)
    assert np.allclose(project(BoundaryField(g, g.points[:, 0])).values, g.points[:, 0])
