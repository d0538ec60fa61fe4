"""Szego projection of a quotient domain, computed on the covering boundary.

A function f on the quotient boundary is represented by its G-invariant
pullback f o Phi on the covering boundary. With g admissible (|g*|^2 = w)
the quotient projection is

    T f = S_X(g* . f o Phi) / g*,

and the pushforward and the 1/|G| factor cancel against the pullback
representation. Norms on the quotient boundary are

    ||f||_p^p = (1/|G|) int |f o Phi|^p w dsigma
              = (1/|G|) int |g* f o Phi|^p w^(1 - p/2) dsigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .admissibility import (HerglotzSolution, fourier_construct_polydisc, herglotz_solve,
                            solution_from_function)
from .errors import (AdmissibilityError, ConfigurationError, NearSingularDivisionError,
                     NumericalConsistencyError, ParameterError, PreconditionError)
from .fields import BoundaryField, WeightField
from .geometry import SPHERE3, TORUS, BoundaryGrid, make_sphere3_grid, make_torus_grid
from .maps import (ProperMapSpec, conformal_1d, density_from_jacobian, invariance_residual,
                   power, symmetrize, symmetrize2)
from .szego import DEFAULT_DEGREE, SzegoProjector, make_projector

INVARIANCE_TOL = 1e-8
DIVISION_FLOOR = 1e-12
NORM_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class QuadrupleContext:
    """Covering map, density, admissible g (if known) and covering projector."""

    phi: ProperMapSpec
    grid: BoundaryGrid
    w: WeightField
    projector: SzegoProjector
    g: Optional[HerglotzSolution] = None
    name: str = ""

    @property
    def group(self):
        return self.phi.group

    @property
    def order(self) -> int:
        return self.phi.group.order

    @property
    def g_boundary(self) -> Optional[np.ndarray]:
        return None if self.g is None else self.g.boundary

    def require_g(self) -> np.ndarray:
        if self.g is None or self.g.boundary is None:
            raise ConfigurationError(f"context {self.name or self.phi.map_id!r} has no admissible g")
        return self.g.boundary

    def admissibility_residual(self) -> Optional[float]:
        if self.g is None:
            return None
        return float(np.max(np.abs(np.abs(self.g.boundary) ** 2 - self.w.values))
                     / np.max(self.w.values))


@dataclass(frozen=True, eq=False)
class QuotientFunction:
    """A G-invariant field on the covering boundary standing for f o Phi."""

    field: BoundaryField
    context: QuadrupleContext
    invariance_residual: float

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def certify(ctx: QuadrupleContext, f, tol: float = INVARIANCE_TOL,
            scale: Optional[float] = None) -> QuotientFunction:
    """Wrap a covering-side field after checking its G-invariance.

    The residual is relative to ``scale`` when it exceeds the field's own
    sup norm (useful when the field is the small output of a projection).
    """
    if isinstance(f, QuotientFunction):
        f = f.field
    if not isinstance(f, BoundaryField):
        f = BoundaryField(ctx.grid, f)
    if not ctx.grid.same_as(f.grid):
        raise ConfigurationError("field lives on a different grid than the context")
    res = invariance_residual(f, ctx.group, scale)
    if res > tol:
        raise PreconditionError(
            f"field is not invariant under the deck group (residual {res:.2e}); "
            "quotient functions must be pullbacks")
    return QuotientFunction(f, ctx, res)


def pullback(ctx: QuadrupleContext, func: Callable) -> QuotientFunction:
    """f o Phi for a function f given on the quotient side (callable on (M, n) points)."""
    phi = ctx.phi

    def lifted(points):
        return np.asarray(func(phi.evaluate(np.atleast_2d(points))))

    return certify(ctx, BoundaryField.from_function(ctx.grid, lifted))


# ---------------------------------------------------------------- contexts

def make_context(phi: ProperMapSpec, grid: BoundaryGrid, g: Optional[HerglotzSolution] = None,
                 degree: int = DEFAULT_DEGREE, name: str = "") -> QuadrupleContext:
    w = density_from_jacobian(phi, grid)
    return QuadrupleContext(phi, grid, w, make_projector(grid, degree), g, name or phi.map_id)


def power_context(m: int = 2, N: int = 256) -> QuadrupleContext:
    """z -> z^m on the disc; w = m and g = sqrt(m)."""
    if N % m:
        raise ConfigurationError(f"N = {N} must be a multiple of the group order {m}")
    phi = power(m)
    grid = make_torus_grid(1, N)
    w = density_from_jacobian(phi, grid)
    g = herglotz_solve(w, G=phi.group)
    return QuadrupleContext(phi, grid, w, make_projector(grid), g, f"power({m})")


def conformal_context(coeffs: Sequence[complex] = (0.0, 1.0, 0.3), N: int = 1024) -> QuadrupleContext:
    phi = conformal_1d(coeffs)
    grid = make_torus_grid(1, N)
    w = density_from_jacobian(phi, grid)
    return QuadrupleContext(phi, grid, w, make_projector(grid), herglotz_solve(w), "conformal_1d")


def product_map_context(N: int = 64) -> QuadrupleContext:
    """(z1, z2) -> (z1^2, z2^2) on the bidisc; w = 4 and g = 2."""
    phi = power(2, 2)
    grid = make_torus_grid(2, N)
    w = density_from_jacobian(phi, grid)
    rep = fourier_construct_polydisc(w, phi.group)
    if rep.herglotz is None:
        raise AdmissibilityError("product-map density unexpectedly failed the orthant test")
    return QuadrupleContext(phi, grid, w, make_projector(grid), rep.herglotz, "product_map")


def bidisc_context(N: int = 64, g_surrogate: Optional[Callable] = None) -> QuadrupleContext:
    """Symmetrized bidisc; an exact g is not constructible, a surrogate may be supplied."""
    phi = symmetrize2()
    grid = make_torus_grid(2, N)
    w = density_from_jacobian(phi, grid)
    g = None
    if g_surrogate is not None:
        g = solution_from_function(grid, g_surrogate, w, G=phi.group)
    return QuadrupleContext(phi, grid, w, make_projector(grid), g, "symmetrized_bidisc")


def thullen_context(m: int, k: int, N: int = 48, degree: int = DEFAULT_DEGREE) -> QuadrupleContext:
    phi = power(m, k)
    grid = make_sphere3_grid(N, N, N)
    return make_context(phi, grid, None, degree, f"thullen({m},{k})")


CONTEXTS = {
    "power": power_context,
    "conformal_1d": conformal_context,
    "product_map": product_map_context,
    "symmetrized_bidisc": bidisc_context,
    "thullen": thullen_context,
}


# ---------------------------------------------------------------- projection

def _divide(num: np.ndarray, g: np.ndarray) -> np.ndarray:
    bad = np.flatnonzero(np.abs(g) < DIVISION_FLOOR)
    if bad.size:
        raise NearSingularDivisionError(
            f"g* is below {DIVISION_FLOOR:g} at {bad.size} node(s)", bad.tolist())
    return num / g


def project_quotient(ctx: QuadrupleContext, f) -> QuotientFunction:
    """T f = S_X(g* f) / g* on the covering boundary."""
    f = f if isinstance(f, QuotientFunction) else certify(ctx, f)
    g = ctx.require_g()
    Sg = ctx.projector(BoundaryField(ctx.grid, g * f.values))
    out = BoundaryField(ctx.grid, _divide(Sg.values, g))
    return certify(ctx, out, scale=f.field.sup_norm())


def _holomorphic_certificate(ctx: QuadrupleContext, h: QuotientFunction, tol: float = 1e-8):
    g = ctx.require_g()
    gh = g * h.values
    dev = np.sqrt(np.sum(np.abs(ctx.projector(BoundaryField(ctx.grid, gh)).values - gh) ** 2
                         * ctx.grid.weights))
    scale = np.sqrt(np.sum(np.abs(gh) ** 2 * ctx.grid.weights))
    if dev > tol * max(scale, 1e-300):
        raise PreconditionError("h is not holomorphic on the quotient (g* h is not fixed by S_X)")


def orthogonality_residual(ctx: QuadrupleContext, f, h) -> complex:
    """<f - T f, h> on the quotient boundary, computed on the covering side."""
    f = f if isinstance(f, QuotientFunction) else certify(ctx, f)
    h = h if isinstance(h, QuotientFunction) else certify(ctx, h)
    _holomorphic_certificate(ctx, h)
    g = ctx.require_g()
    Tf = project_quotient(ctx, f)
    diff = g * (f.values - Tf.values)
    return complex(np.sum(diff * np.conj(g * h.values) * ctx.grid.weights) / ctx.order)


# ---------------------------------------------------------------- norms

def covering_norm(h: np.ndarray, w: WeightField, p: float, order: int = 1) -> float:
    """(1/|G|) int |h|^p w^(1 - p/2) dsigma."""
    _check_p(p)
    return float(np.sum(np.abs(h) ** p * w.power(1.0 - p / 2.0) * w.grid.weights) / order)


def quotient_norm(f_pullback: np.ndarray, w: WeightField, p: float, order: int = 1) -> float:
    """(1/|G|) int |f o Phi|^p w dsigma."""
    _check_p(p)
    return float(np.sum(np.abs(f_pullback) ** p * w.values * w.grid.weights) / order)


def _check_p(p: float) -> None:
    if not (1.0 < p < math.inf):
        raise ParameterError(f"p must lie in (1, inf), got {p!r}")


def weighted_norm(f, w: WeightField, p: float, g: Optional[np.ndarray] = None,
                  order: Optional[int] = None, tol: float = NORM_TOL) -> float:
    """p-th power of the L^p norm of f on the quotient boundary.

    Computed as (1/|G|) int |f o Phi|^p w dsigma and, when g* is known, also
    as (1/|G|) int |g* f o Phi|^p w^(1 - p/2) dsigma; the two must agree.
    """
    if isinstance(f, QuotientFunction):
        ctx = f.context
        if g is None and ctx.g is not None:
            g = ctx.g.boundary
        if order is None:
            order = ctx.order
        vals = f.values
    else:
        vals = np.asarray(getattr(f, "values", f))
    order = order or 1
    w.require_positive()
    a = quotient_norm(vals, w, p, order)
    if g is not None:
        b = covering_norm(g * vals, w, p, order)
        if abs(a - b) > tol * max(abs(a), abs(b), 1e-300):
            raise NumericalConsistencyError(
                f"weighted norm forms disagree: {a!r} vs {b!r} (|g*|^2 != w?)")
    return a


@dataclass(frozen=True)
class EquivalenceReport:
    p: float
    covering_ratios: tuple
    quotient_ratios: tuple
    max_discrepancy: Optional[float]
    agree: Optional[bool]
    tol: float

    def to_dict(self) -> dict:
        return {"p": self.p, "covering_ratios": list(self.covering_ratios),
                "quotient_ratios": list(self.quotient_ratios),
                "max_discrepancy": self.max_discrepancy, "agree": self.agree, "tol": self.tol}


def equivalence_check(ctx: QuadrupleContext, p: float, family: Sequence,
                               tol: float = 1e-10) -> EquivalenceReport:
    """Compare the covering-side and quotient-side operator ratios.

    Covering side: ||S_X(g* f)||^p / ||g* f||^p in L^p(w^(1 - p/2)).
    Quotient side: ||T f||^p / ||f||^p in L^p of the quotient boundary.
    Without g the family members are used directly as covering-side
    invariant fields and only the covering ratios are reported.
    """
    _check_p(p)
    cov, quo = [], []
    g = None if ctx.g is None else ctx.g.boundary
    for f in family:
        f = f if isinstance(f, QuotientFunction) else certify(ctx, f)
        h = f.values if g is None else g * f.values
        Sh = ctx.projector(BoundaryField(ctx.grid, h)).values
        cov.append(covering_norm(Sh, ctx.w, p, ctx.order) / covering_norm(h, ctx.w, p, ctx.order))
        if g is not None:
            Tf = _divide(Sh, g)
            quo.append(quotient_norm(Tf, ctx.w, p, ctx.order)
                       / quotient_norm(f.values, ctx.w, p, ctx.order))
    if g is None:
        return EquivalenceReport(p, tuple(cov), (), None, None, tol)
    disc = max(abs(a - b) / max(abs(a), 1e-300) for a, b in zip(cov, quo)) if cov else 0.0
    return EquivalenceReport(p, tuple(cov), tuple(quo), disc, bool(disc <= tol), tol)


def random_invariant_fields(ctx: QuadrupleContext, count: int, seed: int = 0,
                            band: int = 6) -> list:
    """Random band-limited fields averaged over the deck group."""
    rng = np.random.default_rng(seed)
    grid = ctx.grid
    out = []
    for _ in range(count):
        if grid.manifold_id == TORUS:
            n = grid.dim
            ks = np.array(np.meshgrid(*([np.arange(-band, band + 1)] * n), indexing="ij")
                          ).reshape(n, -1).T
            c = (rng.standard_normal(len(ks)) + 1j * rng.standard_normal(len(ks))) / \
                (1.0 + np.abs(ks).sum(axis=1))
            func = _trig_func(ks, c)
        else:
            c = rng.standard_normal((band + 1, band + 1)) + 1j * rng.standard_normal((band + 1, band + 1))
            func = _sphere_func(c)
        f = symmetrize(BoundaryField.from_function(grid, func), ctx.group)
        out.append(certify(ctx, f))
    return out


def _trig_func(ks: np.ndarray, c: np.ndarray):
    def func(points):
        th = np.angle(np.atleast_2d(points))
        return np.exp(1j * th @ ks.T) @ c
    return func


def _sphere_func(c: np.ndarray):
    def func(points):
        z = np.atleast_2d(points)
        out = np.zeros(len(z), dtype=complex)
        for a in range(c.shape[0]):
            for b in range(c.shape[1]):
                out += c[a, b] * z[:, 0] ** a * np.conj(z[:, 1]) ** b
        return out
    return func
