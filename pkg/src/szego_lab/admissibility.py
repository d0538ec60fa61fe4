"""Admissibility of a density: find holomorphic g with |g*|^2 = w.

For a weight w on T^n with log w integrable, put u = (1/2) log w and let
c_k be its Fourier coefficients. When the coefficients are supported in
Y_n = Z_+^n union (-Z_+^n), the function

    h(z) = c_0 + sum_{0 != k >= 0} 2 c_k z^k

has Re h = u on the boundary and g = exp(h) solves the problem. In one
variable Y_1 = Z, and h is exactly the Herglotz integral of u. When the
coefficients leak outside Y_n (the symmetrized bidisc is the basic
example) the construction needs an extra singular measure; that measure is
not built here, only the obstructing Fourier mass is reported.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AdmissibilityError, ConfigurationError, PreconditionError
from .fields import BoundaryField, WeightField, torus_coefficients, torus_synthesize
from .geometry import (SPHERE3, TORUS, BoundaryGrid, grid_reference, make_sphere3_grid,
                       make_torus_grid)
from .maps import Group
from .szego import _holomorphic_evaluator

DEFAULT_RADII = (0.9, 0.99, 0.999)
CAUCHY_TOL = 0.05
ORTHANT_TOL = 1e-8
LOG_FLOOR = 1e-300


# ---------------------------------------------------------------- log-integrability

@dataclass(frozen=True)
class LogIntegrability:
    levels: tuple
    estimates: tuple
    verdict: str            # finite | divergent | inconclusive

    def to_dict(self) -> dict:
        return {"levels": [list(l) if isinstance(l, tuple) else l for l in self.levels],
                "estimates": list(self.estimates), "verdict": self.verdict}


def _default_levels(grid: BoundaryGrid) -> tuple:
    if grid.manifold_id == TORUS:
        return {1: (512, 1024, 2048, 4096), 2: (32, 64, 128, 256)}.get(
            grid.dim, (8, 16, 32))
    return (16, 32, 64)


def _grid_at(grid: BoundaryGrid, level) -> BoundaryGrid:
    if grid.manifold_id == TORUS:
        return make_torus_grid(grid.dim, int(level))
    res = (level,) * 3 if np.isscalar(level) else tuple(level)
    return make_sphere3_grid(*res, rule=grid.rule)


def classify_refinement(estimates: Sequence[float], tol: float = CAUCHY_TOL) -> str:
    """Verdict for a sequence of estimates at successive grid doublings.

    ``finite`` when the last two relative increments are below ``tol``;
    ``divergent`` when the sequence keeps increasing by non-shrinking
    amounts per doubling (at least linear growth in log N); otherwise
    ``inconclusive``.
    """
    e = np.asarray(estimates, dtype=float)
    if e.size < 3:
        raise ConfigurationError("need at least three refinement levels")
    if not np.all(np.isfinite(e)):
        return "divergent"
    inc = np.diff(e)
    rel = np.abs(inc) / np.maximum(np.abs(e[1:]), 1e-300)
    if np.all(rel[-2:] < tol) or np.all(np.abs(inc[-2:]) < 1e-12):
        return "finite"
    if np.all(inc[-2:] > 0) and inc[-1] >= 0.9 * inc[-2]:
        return "divergent"
    return "inconclusive"


def log_integrability(w: WeightField, levels: Optional[Sequence] = None,
                      tol: float = CAUCHY_TOL) -> LogIntegrability:
    """Estimate int |log w| dsigma over a refinement sequence.

    Coarser and finer grids are sampled through the weight's analytic
    evaluator; without one only the weight's own grid is used and the
    verdict is ``inconclusive`` unless the estimate is exactly zero.
    """
    w.require_positive(LOG_FLOOR)
    if w.func is None:
        est = float(np.sum(np.abs(np.log(w.values)) * w.grid.weights))
        verdict = "finite" if est == 0.0 else "inconclusive"
        return LogIntegrability((w.grid.resolutions,), (est,), verdict)
    levels = tuple(levels) if levels is not None else _default_levels(w.grid)
    est = []
    for lev in levels:
        g = _grid_at(w.grid, lev)
        vals = np.asarray(w.func(g.points), dtype=float)
        if np.any(vals <= LOG_FLOOR):
            raise PreconditionError("weight vanishes at a refined grid node")
        est.append(float(np.sum(np.abs(np.log(vals)) * g.weights)))
    return LogIntegrability(levels, tuple(est), classify_refinement(est, tol))


# ---------------------------------------------------------------- solutions

@dataclass(frozen=True, eq=False)
class HerglotzSolution:
    """A candidate g with diagnostics on interior shells r T^n.

    ``evaluate`` maps (M, n) interior points to g values. ``residuals``
    holds the relative L^1 error || |g_r|^2 - w ||_1 / ||w||_1 per radius
    and ``min_modulus`` the smallest |g| seen on each shell.
    """

    grid: BoundaryGrid
    evaluate: Callable
    radii: tuple
    residuals: tuple
    sup_residuals: tuple
    min_modulus: tuple
    invariance_residual: float
    boundary: Optional[np.ndarray] = None     # g* at the grid nodes
    boundary_residual: Optional[float] = None
    shells: tuple = ()

    @property
    def zero_free(self) -> bool:
        return all(m > 0.0 for m in self.min_modulus)

    def boundary_field(self) -> BoundaryField:
        if self.boundary is None:
            raise ConfigurationError("solution carries no boundary values")
        return BoundaryField(self.grid, self.boundary)

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "residual_l1": list(self.residuals),
                "residual_sup": list(self.sup_residuals),
                "min_modulus": list(self.min_modulus),
                "invariance_residual": self.invariance_residual,
                "boundary_residual": self.boundary_residual}


def _shell_points(grid: BoundaryGrid, r: float) -> np.ndarray:
    return r * grid.points


def _residuals(gvals: np.ndarray, w: np.ndarray, weights: np.ndarray):
    diff = np.abs(np.abs(gvals) ** 2 - w)
    l1 = float(np.sum(diff * weights) / np.sum(np.abs(w) * weights))
    sup = float(np.max(diff) / np.max(np.abs(w)))
    return l1, sup


def _group_residual(evaluate: Callable, pts: np.ndarray, G: Optional[Group]) -> float:
    if G is None:
        return 0.0
    base = evaluate(pts)
    scale = max(float(np.max(np.abs(base))), 1e-300)
    return max(float(np.max(np.abs(evaluate(tau.apply(pts)) - base))) for tau in G) / scale


def _orthant_flags(N: int, n: int):
    k = np.fft.fftfreq(N, 1.0 / N)
    grids = np.meshgrid(*([k] * n), indexing="ij")
    pos = np.ones((N,) * n, dtype=bool)
    neg = np.ones((N,) * n, dtype=bool)
    for kk in grids:
        pos &= kk >= 0
        neg &= kk <= 0
    # the Nyquist index -N/2 has no positive partner on the grid
    nyq = np.zeros((N,) * n, dtype=bool)
    for kk in grids:
        nyq |= kk == -N // 2
    return pos, neg, nyq, grids


def _solution_from_h(w: WeightField, hcoef: np.ndarray, radii, G: Optional[Group],
                     sample: int = 4096) -> HerglotzSolution:
    grid = w.grid
    N, n = grid.resolutions[0], grid.dim
    h_eval = _holomorphic_evaluator(hcoef, N, n)
    k = np.fft.fftfreq(N, 1.0 / N)
    res, sups, mins, shells = [], [], [], []
    for r in radii:
        scale = np.ones((N,) * n)
        for ax in range(n):
            shape = [1] * n
            shape[ax] = N
            scale = scale * (r ** np.abs(k)).reshape(shape)
        g = np.exp(torus_synthesize(grid, hcoef * scale))
        l1, sup = _residuals(g, w.values, grid.weights)
        res.append(l1)
        sups.append(sup)
        mins.append(float(np.min(np.abs(g))))
        shells.append(g)
    gb = np.exp(torus_synthesize(grid, hcoef))
    bres, _ = _residuals(gb, w.values, grid.weights)

    def evaluate(points):
        return np.exp(h_eval(points))

    idx = np.linspace(0, grid.size - 1, min(sample, grid.size)).astype(int)
    pts = _shell_points(grid, max(radii))[idx]
    inv = _group_residual(evaluate, pts, G)
    return HerglotzSolution(grid, evaluate, tuple(radii), tuple(res), tuple(sups),
                            tuple(mins), inv, gb, bres, tuple(shells))


def solution_from_function(grid: BoundaryGrid, func: Callable, w: WeightField,
                           radii: Sequence[float] = DEFAULT_RADII,
                           G: Optional[Group] = None) -> HerglotzSolution:
    """Wrap a user-supplied holomorphic g (callable on (M, n) points)."""
    res, sups, mins, shells = [], [], [], []
    for r in radii:
        g = np.asarray(func(_shell_points(grid, r)), dtype=complex)
        l1, sup = _residuals(g, w.values, grid.weights)
        res.append(l1)
        sups.append(sup)
        mins.append(float(np.min(np.abs(g))))
        shells.append(g)
    gb = np.asarray(func(grid.points), dtype=complex)
    bres, _ = _residuals(gb, w.values, grid.weights)
    inv = _group_residual(func, _shell_points(grid, max(radii)), G)
    return HerglotzSolution(grid, func, tuple(radii), tuple(res), tuple(sups),
                            tuple(mins), inv, gb, bres, tuple(shells))


def herglotz_solve(w: WeightField, radii: Sequence[float] = DEFAULT_RADII,
                   G: Optional[Group] = None, check: bool = True) -> HerglotzSolution:
    """Outer function of w^(1/2) on the disc, from the Fourier series of (1/2) log w."""
    grid = w.grid
    if grid.manifold_id != TORUS or grid.dim != 1:
        raise ConfigurationError("herglotz_solve works on T^1 grids")
    w.require_positive(LOG_FLOOR)
    if check:
        li = log_integrability(w)
        if li.verdict == "divergent":
            raise AdmissibilityError("log w is not integrable; no outer function exists")
    c = torus_coefficients(grid, 0.5 * np.log(w.values))
    return _solution_from_h(w, _h_coefficients(c, grid), radii, G)


def _h_coefficients(c: np.ndarray, grid: BoundaryGrid) -> np.ndarray:
    N, n = grid.resolutions[0], grid.dim
    pos, _, nyq, _ = _orthant_flags(N, n)
    h = np.where(pos & ~nyq, 2.0 * c, 0.0)
    h.flat[0] = c.flat[0]
    return h


def herglotz_quadrature(w: WeightField, z) -> np.ndarray:
    """Direct trapezoid evaluation of the Herglotz integral at interior points.

    g(z) = exp( (1/2pi) int (e^{it} + z)/(e^{it} - z) log w^(1/2)(t) dt ).
    Requires N >= 50 / (1 - |z|) so that the kernel is resolved.
    """
    grid = w.grid
    if grid.manifold_id != TORUS or grid.dim != 1:
        raise ConfigurationError("herglotz_quadrature works on T^1 grids")
    w.require_positive(LOG_FLOOR)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    N = grid.resolutions[0]
    rmax = float(np.max(np.abs(z)))
    if rmax >= 1.0:
        raise PreconditionError("evaluation points must lie in the open disc")
    if N < 50.0 / (1.0 - rmax):
        raise PreconditionError(f"N = {N} does not resolve the kernel at |z| = {rmax}")
    e = grid.points[:, 0]
    u = 0.5 * np.log(w.values)
    K = (e[None, :] + z[:, None]) / (e[None, :] - z[:, None])
    return np.exp((K @ (u * grid.weights)) / (2.0 * math.pi))


# ---------------------------------------------------------------- polydisc construction

@dataclass(frozen=True, eq=False)
class AdmissibilityReport:
    log_integrability: Optional[LogIntegrability]
    fourier_support: dict
    herglotz: Optional[HerglotzSolution] = None
    grid_ref: dict = field(default_factory=dict)

    @property
    def needs_singular_measure(self) -> bool:
        return bool(self.fourier_support.get("needs_singular_measure"))

    def to_dict(self) -> dict:
        return {"grid": self.grid_ref,
                "log_integrability": None if self.log_integrability is None
                else self.log_integrability.to_dict(),
                "fourier_support": self.fourier_support,
                "herglotz": None if self.herglotz is None else self.herglotz.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def fourier_support(w: WeightField, tol: float = ORTHANT_TOL, top: int = 5) -> tuple[dict, np.ndarray]:
    """Fourier data of (1/2) log w and the part outside Y_n."""
    grid = w.grid
    if grid.manifold_id != TORUS:
        raise ConfigurationError("Fourier support analysis needs a torus grid")
    w.require_positive(LOG_FLOOR)
    N, n = grid.resolutions[0], grid.dim
    c = torus_coefficients(grid, 0.5 * np.log(w.values))
    pos, neg, nyq, kgrids = _orthant_flags(N, n)
    inside = (pos | neg) & ~nyq
    total = float(np.sqrt(np.sum(np.abs(c) ** 2)))
    off = float(np.sqrt(np.sum(np.abs(c[~inside]) ** 2)))
    rel = off / total if total > 0 else 0.0
    order = np.argsort(-np.abs(np.where(inside, 0.0, c)).ravel())[:top]
    modes = []
    for flat in order:
        idx = np.unravel_index(flat, c.shape)
        if inside[idx] or abs(c[idx]) == 0.0:
            continue
        modes.append({"k": [int(kk[idx]) for kk in kgrids], "abs_coefficient": float(abs(c[idx]))})
    info = {"total_mass": total, "off_orthant_mass": off, "relative_off_orthant_mass": rel,
            "tolerance": tol, "needs_singular_measure": bool(rel >= tol),
            "largest_off_orthant_modes": modes}
    return info, c


def fourier_construct_polydisc(w: WeightField, G: Optional[Group] = None,
                               tol: float = ORTHANT_TOL,
                               radii: Sequence[float] = DEFAULT_RADII) -> AdmissibilityReport:
    """Orthant construction of g = exp(h) for a weight on T^n."""
    info, c = fourier_support(w, tol)
    sol = None
    if not info["needs_singular_measure"]:
        sol = _solution_from_h(w, _h_coefficients(c, w.grid), radii, G)
    return AdmissibilityReport(None, info, sol, grid_reference(w.grid))


def verify_admissible(g: HerglotzSolution, w: WeightField, G: Optional[Group] = None) -> dict:
    """Residuals of |g_r|^2 against w, zero-free certificate and invariance."""
    grid = w.grid
    if not grid.same_as(g.grid):
        raise ConfigurationError("solution and weight live on different grids")
    rows = []
    for r in g.radii:
        vals = np.asarray(g.evaluate(_shell_points(grid, r)), dtype=complex)
        l1, sup = _residuals(vals, w.values, grid.weights)
        rows.append({"r": r, "residual_l1": l1, "residual_sup": sup,
                     "min_modulus": float(np.min(np.abs(vals)))})
    inv = _group_residual(g.evaluate, _shell_points(grid, max(g.radii)), G)
    out = {"shells": rows, "invariance_residual": inv,
           "min_modulus": min(r["min_modulus"] for r in rows)}
    if g.boundary is not None:
        out["boundary_residual"] = _residuals(g.boundary, w.values, grid.weights)[0]
    return out


def admissibility_report(w: WeightField, G: Optional[Group] = None,
                         levels: Optional[Sequence] = None) -> AdmissibilityReport:
    """Log-integrability plus, on T^n, the orthant construction."""
    li = log_integrability(w, levels)
    if w.grid.manifold_id == SPHERE3:
        return AdmissibilityReport(li, {"needs_singular_measure": None,
                                        "note": "no Fourier construction on the sphere"},
                                   None, grid_reference(w.grid))
    rep = fourier_construct_polydisc(w, G)
    return AdmissibilityReport(li, rep.fourier_support, rep.herglotz, rep.grid_ref)
