import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from szego_lab.errors import (ConfigurationError, NearSingularDivisionError,
                              NumericalConsistencyError, ParameterError, PreconditionError)
from szego_lab.fields import BoundaryField, WeightField
from szego_lab.quotient import (bidisc_context, certify, conformal_context, equivalence_check,
                                orthogonality_residual, power_context, product_map_context,
                                project_quotient, pullback, random_invariant_fields,
                                thullen_context, weighted_norm, _divide)


@pytest.fixture(scope="module")
def pctx():
    return power_context(2, 256)


@pytest.fixture(scope="module")
def prod():
    return product_map_context(32)


def test_power_context_g_is_constant(pctx):
    assert np.max(np.abs(np.abs(pctx.g.boundary) - np.sqrt(2.0))) < 1e-12
    assert pctx.admissibility_residual() < 1e-12


def test_quotient_projection_fixes_holomorphic(pctx):
    f = pullback(pctx, lambda q: q[:, 0] ** 3 + 1.0)
    Tf = project_quotient(pctx, f)
    assert np.max(np.abs(Tf.values - f.values)) < 1e-10


def test_quotient_projection_kills_antiholomorphic(pctx):
    f = pullback(pctx, lambda q: np.conj(q[:, 0]) ** 2)
    assert np.max(np.abs(project_quotient(pctx, f).values)) < 1e-10


def test_quotient_projection_idempotent(pctx):
    f = random_invariant_fields(pctx, 1, seed=3)[0]
    Tf = project_quotient(pctx, f)
    assert np.max(np.abs(project_quotient(pctx, Tf).values - Tf.values)) < 1e-10


def test_orthogonality(pctx):
    f = random_invariant_fields(pctx, 1, seed=4)[0]
    h = pullback(pctx, lambda q: q[:, 0] ** 2 - 0.5j * q[:, 0])
    assert abs(orthogonality_residual(pctx, f, h)) < 1e-10
    with pytest.raises(PreconditionError):
        orthogonality_residual(pctx, f, pullback(pctx, lambda q: np.conj(q[:, 0])))


def test_conformal_context_fixes_the_map():
    ctx = conformal_context((0.0, 1.0, 0.3), 1024)
    f = pullback(ctx, lambda q: q[:, 0])
    Tf = project_quotient(ctx, f)
    assert np.max(np.abs(Tf.values - f.values)) < 1e-8


def test_product_map_projection(prod):
    f = pullback(prod, lambda q: q[:, 0] * q[:, 1] + np.conj(q[:, 1]))
    Tf = project_quotient(prod, f)
    ref = pullback(prod, lambda q: q[:, 0] * q[:, 1])
    assert np.max(np.abs(Tf.values - ref.values)) < 1e-10


def test_certify_rejects_non_invariant(pctx):
    with pytest.raises(PreconditionError):
        certify(pctx, pctx.grid.points[:, 0])


def test_weighted_norm_two_forms_agree(prod):
    f = random_invariant_fields(prod, 1, seed=2)[0]
    a = weighted_norm(f, prod.w, 3.0)
    assert a > 0
    with pytest.raises(NumericalConsistencyError):
        weighted_norm(f.values, prod.w, 3.0, g=1.1 * prod.g.boundary, order=prod.order)
    with pytest.raises(ParameterError):
        weighted_norm(f, prod.w, 1.0)


@given(st.floats(1.1, 6.0))
def test_weighted_norm_identity_on_power_context(p):
    ctx = power_context(2, 64)
    f = random_invariant_fields(ctx, 1, seed=int(p * 100))[0]
    weighted_norm(f, ctx.w, p)


@pytest.mark.parametrize("which", ["power", "product"])
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_equivalence_ratios_agree(pctx, prod, which, p):
    ctx = pctx if which == "power" else prod
    rep = equivalence_check(ctx, p, random_invariant_fields(ctx, 4, seed=7))
    assert rep.agree and rep.max_discrepancy <= 1e-10
    if p == 2.0:
        assert max(rep.quotient_ratios) <= 1.0 + 1e-12


def test_bidisc_without_g_is_g_free():
    ctx = bidisc_context(32)
    fam = random_invariant_fields(ctx, 2, seed=1)
    rep = equivalence_check(ctx, 2.0, fam)
    assert rep.agree is None and len(rep.covering_ratios) == 2
    with pytest.raises(ConfigurationError):
        project_quotient(ctx, fam[0])


def test_bidisc_surrogate_g_is_reported_not_exact():
    ctx = bidisc_context(32, g_surrogate=lambda z: z[:, 0] - z[:, 1] + 0j)
    assert ctx.admissibility_residual() > 0.1
    with pytest.raises(NearSingularDivisionError):
        _divide(np.ones(3), np.array([1.0, 1e-14, 1.0]))


def test_thullen_context_covering_ratios():
    ctx = thullen_context(2, 2, N=24, degree=8)
    fam = random_invariant_fields(ctx, 2, seed=0, band=3)
    rep = equivalence_check(ctx, 2.0, fam)
    assert all(0 < r <= 1 + 1e-10 for r in rep.covering_ratios)


def test_power_context_rejects_incompatible_grid():
    with pytest.raises(ConfigurationError):
        power_context(3, 256)
