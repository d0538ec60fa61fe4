"""Muckenhoupt A_p scans, endpoint witnesses and the lens-integral asymptotics.

Divergence is always a classification of a refinement sequence, never a
literal infinity: on a grid every sum is finite. Sequences are produced
either by shrinking arcs with a fixed node density (the 1-D scans) or by
refining the grid under a fixed ball (the whole-boundary ladders). A
sequence is *bounded* when its increments shrink geometrically or it has
stabilized, and *divergent* when its increments are positive and do not
shrink.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as sint
from scipy.special import beta as beta_fn
from scipy.special import betainc

from .errors import ParameterError, UnderResolvedError
from .fields import BoundaryField, WeightField, as_values
from .geometry import (MIN_BALL_NODES, SPHERE3, TORUS, BoundaryGrid, MetricBall,
                       ball_family, ball_mask, make_sphere3_grid, make_torus_grid,
                       metric_distance, random_sphere_points, torus_params)
from .maps import bidisc_density, thullen_density
from .szego import make_projector, project_torus, sphere_moment

STABLE_TOL = 0.02          # last-three relative increments for "stabilized"
R2_MIN = 0.9               # log-growth fit quality for witness divergence
RATIO_WINDOW = 4           # increments used to estimate the increment ratio
TINY = 1e-13               # relative increment treated as exactly zero
RHO_MARGIN = 1e-3          # ratios this close to 1 count as non-shrinking (log growth)

BOUNDED, DIVERGENT, INCONCLUSIVE = "bounded", "divergent", "inconclusive"


# ---------------------------------------------------------------- classification

@dataclass(frozen=True)
class Classification:
    """Verdict on a refinement sequence.

    ``rho`` is the geometric increment ratio exp(slope of log|increment|)
    over the last ``RATIO_WINDOW`` increments (``nan`` when undefined).
    """

    verdict: str
    rho: float
    relative_increments: tuple

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "rho": self.rho,
                "relative_increments": list(self.relative_increments)}


def classify_sequence(values: Sequence[float], stable_tol: float = STABLE_TOL,
                      window: int = RATIO_WINDOW) -> Classification:
    """Classify a positive sequence produced by successive refinement.

    Divergent when the last increments are positive with ratio
    >= 1 - ``RHO_MARGIN`` (constant increments are logarithmic growth);
    bounded when the ratio is below 1 or the last three relative increments
    are all below ``stable_tol``; inconclusive otherwise.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        raise ParameterError("classification needs at least three refinement levels")
    inc = np.diff(v)
    rel = inc / np.maximum(np.abs(v[1:]), 1e-300)
    rel_t = tuple(float(r) for r in rel)
    if np.all(np.abs(rel) < TINY):
        return Classification(BOUNDED, 0.0, rel_t)
    tail = inc[-min(window, inc.size):]
    if np.all(tail > 0) or np.all(tail < 0):
        j = np.arange(tail.size)
        rho = float(np.exp(np.polyfit(j, np.log(np.abs(tail)), 1)[0]))
    else:
        rho = float("nan")
    stable = bool(np.all(np.abs(rel[-3:]) < stable_tol))
    if np.all(tail > 0) and rho >= 1.0 - RHO_MARGIN:
        verdict = DIVERGENT
    elif rho < 1.0 - RHO_MARGIN or stable:
        verdict = BOUNDED
    else:
        verdict = INCONCLUSIVE
    return Classification(verdict, rho, rel_t)


def fit_log_growth(x: Sequence[float], y: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares fit y = a + b log x; returns (slope b, intercept a, R^2)."""
    lx = np.log(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    b, a = np.polyfit(lx, y, 1)
    resid = y - (a + b * lx)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return float(b), float(a), r2


def _check_p(p: float) -> None:
    if not (1.0 < p < math.inf):
        raise ParameterError(f"p must lie in (1, inf), got {p!r}")


def dual_exponent(p: float) -> float:
    _check_p(p)
    return p / (p - 1.0)


def characteristic(mu_avg: float, nu_avg: float, p: float) -> float:
    """[mu]_{p,Q} from the averages of mu and mu^{-1/(p-1)} over Q."""
    return float(mu_avg * nu_avg ** (p - 1.0))


# ---------------------------------------------------------------- reports

@dataclass
class ApScanReport:
    """Characteristics of one weight at one exponent over a family of sets.

    ``family`` lists ``(center_id, center, radius)``; ``characteristics`` is
    aligned with it. ``sequence`` is the refinement sequence the verdict was
    read from (``sequence_label`` says what it is), and ``slope`` the fit of
    log-characteristic against log-radius over the family.
    """

    weight_id: str
    p: float
    family: list
    characteristics: list
    running_sup: list
    sequence_label: str
    sequence: list
    classification: Classification
    slope: float
    notes: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return self.classification.verdict

    def rows(self) -> list:
        """CSV rows (p, center_id, delta, characteristic)."""
        return [(self.p, cid, r, c) for (cid, _, r), c in zip(self.family, self.characteristics)]

    def to_dict(self) -> dict:
        return {
            "weight_id": self.weight_id,
            "p": self.p,
            "verdict": self.verdict,
            "rho": self.classification.rho,
            "slope": self.slope,
            "sequence_label": self.sequence_label,
            "sequence": list(self.sequence),
            "relative_increments": list(self.classification.relative_increments),
            "family_size": len(self.family),
            "max_characteristic": max(self.characteristics) if self.characteristics else None,
            "notes": self.notes,
        }


@dataclass
class IntervalDetection:
    """Detected interval of bounded exponents with the scans that produced it.

    An endpoint is ``None`` when every scanned exponent on that side was
    bounded (no finite endpoint detected).
    """

    weight_id: str
    p_min: Optional[float]
    p_max: Optional[float]
    predicted: tuple
    verdicts: dict
    reports: dict = field(default_factory=dict)

    def within(self, tol: float) -> bool:
        lo, hi = self.predicted
        ok_lo = (self.p_min is None) if lo is None else (
            self.p_min is not None and abs(self.p_min - lo) <= tol)
        ok_hi = (self.p_max is None) if hi is None else (
            self.p_max is not None and abs(self.p_max - hi) <= tol)
        return ok_lo and ok_hi

    def to_dict(self) -> dict:
        return {"weight_id": self.weight_id, "p_min": self.p_min, "p_max": self.p_max,
                "predicted": list(self.predicted),
                "verdicts": {repr(k): v for k, v in sorted(self.verdicts.items())}}


@dataclass
class EndpointWitnessReport:
    domain_id: str
    p: float
    grid_sizes: list
    ratios: list
    projection_errors: list
    verdict: str
    slope: float
    r2: float

    def to_dict(self) -> dict:
        return {"domain_id": self.domain_id, "p": self.p, "grid_sizes": list(self.grid_sizes),
                "ratios": list(self.ratios), "projection_errors": list(self.projection_errors),
                "verdict": self.verdict, "slope": self.slope, "r2": self.r2}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def classify_witness(sizes: Sequence[float], ratios: Sequence[float],
                     stable_tol: float = STABLE_TOL, r2_min: float = R2_MIN):
    """Bounded if the ratios vary by at most ``stable_tol`` (relative);
    divergent if they increase monotonically with a positive log-size fit of
    R^2 > ``r2_min``; inconclusive otherwise. Returns (verdict, slope, R^2)."""
    r = np.asarray(ratios, dtype=float)
    slope, _, r2 = fit_log_growth(sizes, r)
    spread = float((r.max() - r.min()) / r.max())
    if spread <= stable_tol:
        return BOUNDED, slope, r2
    if np.all(np.diff(r) > 0) and slope > 0 and r2 > r2_min:
        return DIVERGENT, slope, r2
    return INCONCLUSIVE, slope, r2


# ---------------------------------------------------------------- A_p on T

def power_weight(alpha: float, p: float) -> Callable:
    """theta -> |e^{i theta} - 1|^{alpha (2 - p)}."""
    s = alpha * (2.0 - p)
    return lambda theta: np.abs(2.0 * np.sin(0.5 * np.asarray(theta))) ** s


def predicted_ap_interval(alpha: float) -> tuple:
    """((2a+1)/(a+1), (2a+1)/a); ``None`` marks an endpoint at 1 or infinity."""
    if alpha < 0:
        raise ParameterError("alpha must be nonnegative")
    if alpha == 0:
        return (None, None)
    return ((2 * alpha + 1) / (alpha + 1), (2 * alpha + 1) / alpha)


def _arc_nodes(center: float, length: float, n_nodes: int) -> np.ndarray:
    h = length / n_nodes
    return center - 0.5 * length + h * (np.arange(n_nodes) + 0.5)


def ap_characteristic_interval(mu, center: float, length: float, p: float,
                               n_nodes: Optional[int] = None, grid: Optional[BoundaryGrid] = None) -> float:
    """[mu]_{p,I} on the arc of given centre and length.

    ``mu`` is either a callable of the angle, evaluated at ``n_nodes``
    midpoint nodes of the arc, or a ``WeightField`` on a T^1 grid whose nodes
    inside the arc are used (the arc must then span more than two spacings).
    """
    _check_p(p)
    if not (0.0 < length <= 2.0 * math.pi):
        raise ParameterError(f"arc length must lie in (0, 2 pi], got {length!r}")
    if isinstance(mu, BoundaryField):
        g = mu.grid
        if g.manifold_id != TORUS or g.dim != 1:
            raise ParameterError("interval characteristic needs a T^1 weight")
        h = 2.0 * math.pi / g.resolutions[0]
        if length <= 2.0 * h:
            raise UnderResolvedError(f"arc of length {length:.3g} spans at most two grid spacings")
        theta = torus_params(g.points)[:, 0]
        d = np.angle(np.exp(1j * (theta - center)))
        sel = np.abs(d) < 0.5 * length
        vals = as_values(mu, g).real[sel]
    else:
        if n_nodes is None or n_nodes < 3:
            raise UnderResolvedError("a callable weight needs at least three arc nodes")
        vals = np.asarray(mu(_arc_nodes(center, length, n_nodes)), dtype=float)
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ParameterError("weight must be positive and finite at the arc nodes")
    return characteristic(float(vals.mean()), float((vals ** (-1.0 / (p - 1.0))).mean()), p)


def ap_scan_arcs(mu: Callable, p: float, center: float = 0.0, J: int = 14,
                 base_nodes: int = 16, weight_id: str = "user") -> ApScanReport:
    """Characteristics on the dyadic arcs of length 2^-j, j = 0..J, at ``center``.

    Arc j carries ``base_nodes * 2^j`` midpoint nodes, so the node spacing
    shrinks like 4^-j and a singular weight shows up as growth in j.
    """
    _check_p(p)
    chars, fam = [], []
    for j in range(J + 1):
        L = 2.0 ** (-j)
        chars.append(ap_characteristic_interval(mu, center, L, p, n_nodes=base_nodes * 2**j))
        fam.append((f"arc{j}", center, L))
    sup = list(np.maximum.accumulate(chars))
    cls = classify_sequence(chars)
    slope = float(np.polyfit(np.log([f[2] for f in fam]), np.log(chars), 1)[0])
    return ApScanReport(weight_id, p, fam, [float(c) for c in chars], [float(s) for s in sup],
                        "dyadic arcs", [float(c) for c in chars], cls, slope,
                        {"base_nodes": base_nodes, "J": J})


def _bisect(classify: Callable[[float], str], p_in: float, p_out: float, tol: float) -> float:
    """Boundary between a bounded ``p_in`` and a divergent ``p_out``."""
    while abs(p_out - p_in) > tol:
        mid = 0.5 * (p_in + p_out)
        if classify(mid) == BOUNDED:
            p_in = mid
        else:
            p_out = mid
    return 0.5 * (p_in + p_out)


def default_p_grid(lo: float = 1.1, hi: float = 6.0, count: int = 50) -> np.ndarray:
    return np.round(np.geomspace(lo, hi, count), 6)


def detect_interval(classify: Callable[[float], str], p_grid: Sequence[float],
                    tol: float = 0.01, center: float = 2.0, weight_id: str = "",
                    predicted: tuple = (None, None)) -> IntervalDetection:
    """Scan ``p_grid``, locate the bounded run containing ``center`` and
    refine each finite end by bisection to ``tol``."""
    ps = np.unique(np.append(np.asarray(p_grid, dtype=float), center))
    verdicts = {float(p): classify(float(p)) for p in ps}
    if verdicts[center] != BOUNDED:
        return IntervalDetection(weight_id, None, None, predicted, verdicts)
    ic = int(np.flatnonzero(ps == center)[0])
    lo_i = ic
    while lo_i > 0 and verdicts[float(ps[lo_i - 1])] == BOUNDED:
        lo_i -= 1
    hi_i = ic
    while hi_i < ps.size - 1 and verdicts[float(ps[hi_i + 1])] == BOUNDED:
        hi_i += 1
    p_min = None if lo_i == 0 else _bisect(classify, float(ps[lo_i]), float(ps[lo_i - 1]), tol)
    p_max = None if hi_i == ps.size - 1 else _bisect(classify, float(ps[hi_i]), float(ps[hi_i + 1]), tol)
    return IntervalDetection(weight_id, p_min, p_max, predicted, verdicts)


def ap_interval_detect(alpha: float, p_grid: Optional[Sequence[float]] = None, J: int = 14,
                       base_nodes: int = 16, tol: float = 0.01) -> IntervalDetection:
    """Exponents p for which |z - 1|^{alpha (2 - p)} is detected in A_p(T)."""
    if alpha < 0:
        raise ParameterError("alpha must be nonnegative")
    grid = default_p_grid() if p_grid is None else p_grid
    cache: dict = {}

    def classify(p: float) -> str:
        if p not in cache:
            cache[p] = ap_scan_arcs(power_weight(alpha, p), p, J=J, base_nodes=base_nodes,
                                    weight_id=f"power(alpha={alpha})")
        return cache[p].verdict

    det = detect_interval(classify, grid, tol, weight_id=f"power(alpha={alpha})",
                          predicted=predicted_ap_interval(alpha))
    det.reports = cache
    return det


# ---------------------------------------------------------------- refinement ladders

def _ladder_integrals(weight_fn: Callable, grids: Sequence[BoundaryGrid], p: float):
    """Integrals of w^{1-p/2} and of its dual power over each grid."""
    e_mu = 1.0 - 0.5 * p
    e_nu = -e_mu / (p - 1.0)
    out = []
    for g in grids:
        w = weight_fn(g)
        if np.any(w <= 0):
            raise ParameterError("weight vanishes at a grid node; the ladder needs positive nodes")
        out.append((float(np.sum(w**e_mu * g.weights)), float(np.sum(w**e_nu * g.weights))))
    return np.array(out)


def ladder_scan(weight_fn: Callable, grids: Sequence[BoundaryGrid], p: float,
                weight_id: str, sizes: Sequence[int]) -> ApScanReport:
    """Whole-boundary characteristic of w^{1-p/2} under grid refinement.

    The whole boundary is the largest ball of the family; its characteristic
    is infinite exactly when one of the two integrals diverges, which shows
    up as non-shrinking increments across the ladder.
    """
    _check_p(p)
    L = _ladder_integrals(weight_fn, grids, p)
    mass = float(np.sum(grids[-1].weights))
    chars = [characteristic(a / mass, b / mass, p) for a, b in L]
    c_mu, c_nu = classify_sequence(L[:, 0]), classify_sequence(L[:, 1])
    if DIVERGENT in (c_mu.verdict, c_nu.verdict):
        cls = c_mu if c_mu.verdict == DIVERGENT else c_nu
    elif c_mu.verdict == BOUNDED and c_nu.verdict == BOUNDED:
        cls = c_mu if (np.nan_to_num(c_mu.rho) >= np.nan_to_num(c_nu.rho)) else c_nu
    else:
        cls = c_mu if c_mu.verdict == INCONCLUSIVE else c_nu
    fam = [(f"whole@{s}", None, math.sqrt(2.0)) for s in sizes]
    return ApScanReport(weight_id, p, fam, chars, list(np.maximum.accumulate(chars)),
                        "whole-boundary ladder", chars, cls, float("nan"),
                        {"sizes": list(sizes), "mu_integrals": L[:, 0].tolist(),
                         "dual_integrals": L[:, 1].tolist(),
                         "mu_verdict": c_mu.verdict, "dual_verdict": c_nu.verdict,
                         "mu_rho": c_mu.rho, "dual_rho": c_nu.rho})


# ---------------------------------------------------------------- bidisc

BIDISC_INTERVAL = (4.0 / 3.0, 4.0)
BIDISC_LADDER = (64, 128, 256, 512, 1024)


def _torus_theta(g: BoundaryGrid) -> np.ndarray:
    return torus_params(g.points)


def bidisc_weight(g: BoundaryGrid) -> np.ndarray:
    t = _torus_theta(g)
    return bidisc_density(t[:, 0], t[:, 1])


def diagonal_distance_weight(g: BoundaryGrid) -> np.ndarray:
    """|z1 - z2| on T^2, comparable to the bidisc density."""
    z = g.points
    return np.abs(z[:, 0] - z[:, 1])


_T2_CACHE: dict = {}


def _t2(N: int) -> BoundaryGrid:
    if N not in _T2_CACHE:
        _T2_CACHE[N] = make_torus_grid(2, N)
    return _T2_CACHE[N]


def bidisc_slice_weight(x):
    """Bidisc density along theta2 = 0 as a function of theta1 = x."""
    return bidisc_density(np.asarray(x), 0.0)


def bidisc_scan(p: float, sizes: Sequence[int] = BIDISC_LADDER, weight: str = "density",
                J: int = 14, base_nodes: int = 16) -> ApScanReport:
    """A_p scan of the bidisc weight (or the comparable |z1 - z2|) at exponent p.

    The verdict combines the T^2 ladder with the dyadic-arc scan of the
    transversal slice through the diagonal; divergence of either one is
    divergence of the weight.
    """
    fn = {"density": bidisc_weight, "distance": diagonal_distance_weight}.get(weight)
    if fn is None:
        raise ParameterError(f"unknown bidisc weight {weight!r}")
    rep = ladder_scan(fn, [_t2(N) for N in sizes], p, f"bidisc-{weight}", sizes)
    e = 1.0 - 0.5 * p
    if weight == "density":
        slice_mu = lambda x: bidisc_slice_weight(x) ** e
    else:
        slice_mu = lambda x: np.abs(2.0 * np.sin(0.5 * np.asarray(x))) ** e
    arcs = ap_scan_arcs(slice_mu, p, J=J, base_nodes=base_nodes, weight_id=f"bidisc-{weight}-slice")
    verdicts = {rep.verdict, arcs.verdict}
    if DIVERGENT in verdicts:
        verdict = DIVERGENT
    elif verdicts == {BOUNDED}:
        verdict = BOUNDED
    else:
        verdict = INCONCLUSIVE
    rep.classification = Classification(verdict, rep.classification.rho,
                                        rep.classification.relative_increments)
    rep.family = rep.family + arcs.family
    rep.characteristics = rep.characteristics + arcs.characteristics
    rep.running_sup = list(np.maximum.accumulate(rep.characteristics))
    rep.slope = arcs.slope
    rep.notes.update({"ladder_verdict": classify_ladder_verdict(rep), "slice_verdict": arcs.verdict,
                      "slice_rho": arcs.classification.rho})
    return rep


def classify_ladder_verdict(rep: ApScanReport) -> str:
    mv, dv = rep.notes["mu_verdict"], rep.notes["dual_verdict"]
    if DIVERGENT in (mv, dv):
        return DIVERGENT
    return BOUNDED if mv == dv == BOUNDED else INCONCLUSIVE


def bidisc_interval_scan(p_grid: Optional[Sequence[float]] = None, weight: str = "density",
                         sizes: Sequence[int] = BIDISC_LADDER, tol: float = 0.01) -> IntervalDetection:
    grid = default_p_grid() if p_grid is None else p_grid
    cache: dict = {}

    def classify(p: float) -> str:
        if p not in cache:
            cache[p] = bidisc_scan(p, sizes, weight)
        return cache[p].verdict

    det = detect_interval(classify, grid, tol, weight_id=f"bidisc-{weight}",
                          predicted=BIDISC_INTERVAL)
    det.reports = cache
    return det


# ---------------------------------------------------------------- balls on S^3

def ap_characteristic_ball(mu, ball: MetricBall, p: float, mask: Optional[np.ndarray] = None) -> float:
    """[mu]_{p,Q} over the grid nodes of a metric ball on S^3."""
    _check_p(p)
    g = mu.grid
    if g.manifold_id != SPHERE3:
        raise ParameterError("ball characteristic needs a sphere3 weight")
    m = ball_mask(g, ball) if mask is None else mask
    n = int(np.count_nonzero(m))
    if n < MIN_BALL_NODES:
        raise UnderResolvedError(f"ball holds {n} grid nodes, at least {MIN_BALL_NODES} needed")
    vals = np.asarray(mu.values, dtype=float)[m]
    if np.any(vals <= 0):
        raise ParameterError("weight must be positive at the ball nodes")
    wts = g.weights[m]
    vol = float(np.sum(wts))
    a = float(np.sum(vals * wts)) / vol
    b = float(np.sum(vals ** (-1.0 / (p - 1.0)) * wts)) / vol
    return characteristic(a, b, p)


FAMILY_RADII = (0.8, 0.4, 0.2, 0.1, 0.05)


@dataclass
class BallFamilyData:
    """Cached node sets of a ball family on one grid."""

    grid: BoundaryGrid
    entries: list           # (center_id, center, radius, index array, resolved)


def prepare_ball_family(grid: BoundaryGrid, centers: Optional[list] = None,
                        radii: Sequence[float] = FAMILY_RADII) -> BallFamilyData:
    centers = ball_family() if centers is None else centers
    entries = []
    for cid, c in centers:
        d = metric_distance(grid.points, c)
        for r in radii:
            idx = np.flatnonzero(d < r)
            entries.append((cid, c, float(r), idx, idx.size >= MIN_BALL_NODES))
    return BallFamilyData(grid, entries)


def ball_family_scan(mu: WeightField, p: float, fam: BallFamilyData) -> tuple[list, list, list]:
    """Characteristics over the resolved balls; returns (family, chars, skipped ids)."""
    g = fam.grid
    out_f, out_c, skipped = [], [], []
    mask = np.zeros(g.size, dtype=bool)
    for cid, c, r, idx, ok in fam.entries:
        if not ok:
            skipped.append((cid, r))
            continue
        mask[:] = False
        mask[idx] = True
        out_f.append((cid, c, r))
        out_c.append(ap_characteristic_ball(mu, MetricBall(c, r), p, mask=mask))
    return out_f, out_c, skipped


THULLEN_LADDER = (12, 24, 48, 96)


def predicted_thullen_interval(m: int, k: int) -> tuple:
    """Intersection of ((2j+4)/(j+4), (2j+4)/j) over j in {m, k} with j >= 2;
    ``None`` marks no finite endpoint."""
    lo, hi = None, None
    for j in (m, k):
        if j < 1 or int(j) != j:
            raise ParameterError("m and k must be positive integers")
        if j == 1:
            continue
        a, b = (2 * j + 4) / (j + 4), (2 * j + 4) / j
        lo = a if lo is None else max(lo, a)
        hi = b if hi is None else min(hi, b)
    return (lo, hi)


_SPHERE_CACHE: dict = {}


def _sphere(N) -> BoundaryGrid:
    key = tuple(N) if isinstance(N, (tuple, list)) else (N, N, N)
    if key not in _SPHERE_CACHE:
        _SPHERE_CACHE[key] = make_sphere3_grid(*key)
    return _SPHERE_CACHE[key]


def thullen_scan(m: int, k: int, p: float, sizes: Sequence[int] = THULLEN_LADDER,
                 family: Optional[BallFamilyData] = None) -> ApScanReport:
    """A_p scan of the Thullen weight w^{1-p/2} at exponent p.

    The verdict comes from the whole-sphere refinement ladder. When a
    prepared ball family is given its characteristics on that grid are
    attached as the reported family.
    """
    rep = ladder_scan(lambda g: thullen_density(g.points, m, k), [_sphere(N) for N in sizes],
                      p, f"thullen({m},{k})", sizes)
    if family is not None:
        w = WeightField(family.grid, thullen_density(family.grid.points, m, k) ** (1.0 - 0.5 * p),
                        "closed-form")
        f, c, skipped = ball_family_scan(w, p, family)
        rep.family = rep.family + f
        rep.characteristics = rep.characteristics + c
        rep.running_sup = list(np.maximum.accumulate(rep.characteristics))
        if f:
            rs = np.array([x[2] for x in f])
            rep.slope = float(np.polyfit(np.log(rs), np.log(c), 1)[0]) if np.unique(rs).size > 1 else float("nan")
        rep.notes["family_grid"] = list(family.grid.resolutions)
        rep.notes["skipped_balls"] = [list(s) for s in skipped]
    return rep


def thullen_interval_scan(m: int, k: int, p_grid: Optional[Sequence[float]] = None,
                          sizes: Sequence[int] = THULLEN_LADDER, tol: float = 0.01,
                          family_grid=None) -> IntervalDetection:
    """Detected and predicted interval of p for which the Thullen weight is in A_p."""
    predicted = predicted_thullen_interval(m, k)
    grid = default_p_grid() if p_grid is None else p_grid
    fam = None if family_grid is None else prepare_ball_family(_sphere(family_grid))
    cache: dict = {}

    def classify(p: float) -> str:
        if p not in cache:
            cache[p] = thullen_scan(m, k, p, sizes)
        return cache[p].verdict

    det = detect_interval(classify, grid, tol, weight_id=f"thullen({m},{k})", predicted=predicted)
    if fam is not None:
        for p in sorted(det.verdicts):
            cache[p] = thullen_scan(m, k, p, sizes, fam)
    det.reports = cache
    return det


# ---------------------------------------------------------------- endpoint witnesses

WITNESS_SIZES_T2 = (32, 64, 128, 256)
WITNESS_SIZES_S3 = (24, 32, 48, 64, 96, 128)
WITNESS_DEGREE = 8


def _weighted_pnorm(values: np.ndarray, weight: np.ndarray, p: float, wts: np.ndarray) -> float:
    return float(np.sum(np.abs(values) ** p * weight * wts))


def endpoint_witness_bidisc(p: float, sizes: Sequence[int] = WITNESS_SIZES_T2) -> EndpointWitnessReport:
    """R(N) = ||S h||^p / ||h||^p in L^p(w^{1-p/2}) for h = |z1 - z2|^2 on T^2."""
    _check_p(p)
    ratios, errs = [], []
    for N in sizes:
        g = _t2(N)
        z = g.points
        h = BoundaryField.from_function(g, lambda q: np.abs(q[:, 0] - q[:, 1]) ** 2 + 0j)
        Sh = project_torus(h)
        errs.append(float(np.max(np.abs(Sh.values - 2.0))))
        mu = bidisc_weight(g) ** (1.0 - 0.5 * p)
        ratios.append(_weighted_pnorm(Sh.values, mu, p, g.weights)
                      / _weighted_pnorm(h.values, mu, p, g.weights))
    verdict, slope, r2 = classify_witness(sizes, ratios)
    return EndpointWitnessReport("symmetrized_bidisc", p, list(sizes), ratios, errs, verdict, slope, r2)


def thullen_constant(m: int, k: int) -> float:
    """C_{m,k} = int |z1|^m |z2|^k dsigma / sigma(S^3)."""
    return sphere_moment(0.5 * m, 0.5 * k) / sphere_moment(0.0, 0.0)


def endpoint_witness_thullen(m: int, k: int, p: float, sizes: Sequence[int] = WITNESS_SIZES_S3,
                             degree: int = WITNESS_DEGREE) -> EndpointWitnessReport:
    """Same ratio for h = |z1^m z2^k| on S^3 under refinement of the sphere grid."""
    _check_p(p)
    C = thullen_constant(m, k)
    ratios, errs = [], []
    for N in sizes:
        g = _sphere(N)
        P = make_projector(g, degree)
        a = np.abs(g.points)
        hv = (a[:, 0] ** m * a[:, 1] ** k).astype(complex)
        Sh = P(hv)
        errs.append(float(np.max(np.abs(Sh.values - C))))
        mu = thullen_density(g.points, m, k) ** (1.0 - 0.5 * p)
        ratios.append(_weighted_pnorm(Sh.values, mu, p, g.weights)
                      / _weighted_pnorm(hv, mu, p, g.weights))
    verdict, slope, r2 = classify_witness(sizes, ratios)
    return EndpointWitnessReport(f"thullen({m},{k})", p, list(sizes), ratios, errs, verdict, slope, r2)


# ---------------------------------------------------------------- lens integrals

def _check_delta(delta: float) -> None:
    if not (0.0 < delta <= math.sqrt(2.0)):
        raise ParameterError(f"delta must lie in (0, sqrt 2], got {delta!r}")


def _lens_inner(alpha: float, delta: float, psi: float, eps: float) -> float:
    """int rho^{alpha+1} (2 cos psi - rho)^alpha d rho over the admissible rho.

    Coordinates lambda = 1 - rho e^{i psi}: 1 - |lambda|^2 = rho (2 cos psi - rho)
    and dA = rho d rho d psi.
    """
    c = math.cos(psi)
    if eps > 0.0:
        if c * c <= eps:
            return 0.0
        s = math.sqrt(c * c - eps)
        a, b = eps / (c + s), c + s          # roots of rho (2c - rho) = eps
    else:
        a, b = 0.0, 2.0 * c
    b = min(b, delta * delta)
    if b <= a:
        return 0.0
    if eps <= 0.0:
        f = lambda r: r ** (alpha + 1.0) * (2.0 * c - r) ** alpha
        val, _ = sint.quad(f, a, b, limit=400, epsabs=0.0, epsrel=1e-11)
        return val
    # with a cutoff the integrand spans many decades near both roots; use
    # u = log rho below rho = c and v = log(2c - rho) above it
    val = 0.0
    top = min(b, c)
    if top > a:
        f = lambda u: math.exp(u) ** (alpha + 2.0) * (2.0 * c - math.exp(u)) ** alpha
        val += sint.quad(f, math.log(a), math.log(top), limit=400, epsabs=0.0, epsrel=1e-11)[0]
    if b > c:
        g = lambda v: (2.0 * c - math.exp(v)) ** (alpha + 1.0) * math.exp(v) ** (alpha + 1.0)
        val += sint.quad(g, math.log(2.0 * c - b), math.log(c), limit=400, epsabs=0.0, epsrel=1e-11)[0]
    return val


def intsize_integral(alpha: float, delta: float, eps: float = 0.0) -> float:
    """I(alpha, delta) = int over {lambda in D : |1 - lambda| < delta^2} of (1 - |lambda|^2)^alpha dA.

    With ``eps > 0`` the region is cut to 1 - |lambda|^2 > eps, which keeps
    the integral finite for alpha <= -1. Nested adaptive quadrature.
    """
    _check_delta(delta)
    if alpha <= -1.0 and eps <= 0.0:
        raise ParameterError("the lens integral diverges for alpha <= -1; pass a cutoff eps > 0")
    h = 0.5 * math.pi
    d2 = delta * delta
    # kinks of the inner integral in psi: the lens meets the circle where
    # 2 cos psi = delta^2; with a cutoff the band closes at cos^2 psi = eps
    # and its outer root crosses delta^2 at cos psi = (delta^4 + eps) / (2 delta^2)
    cs = [0.5 * d2]
    if eps > 0.0:
        cs += [math.sqrt(eps), (d2 * d2 + eps) / (2.0 * d2)]
    brk = sorted({math.acos(c) for c in cs if 0.0 < c < 1.0})
    val, _ = sint.quad(lambda s: _lens_inner(alpha, delta, s, eps), 0.0, h, limit=400,
                       epsabs=0.0, epsrel=1e-10, points=brk or None)
    return 2.0 * val


def intsize_beta_oracle(alpha: float, delta: float) -> float:
    """Independent route: rho = 2 cos(psi) t turns the inner integral into an
    incomplete beta function, leaving one angular quadrature."""
    _check_delta(delta)
    if alpha <= -1.0:
        raise ParameterError("oracle requires alpha > -1")
    A, B = alpha + 2.0, alpha + 1.0
    full = beta_fn(A, B)

    def inner(psi):
        c2 = 2.0 * math.cos(psi)
        if c2 <= 0.0:
            return 0.0
        x = min(1.0, delta * delta / c2)
        return c2 ** (2.0 * alpha + 2.0) * full * betainc(A, B, x)

    psi_c = math.acos(min(1.0, 0.5 * delta * delta))
    brk = [psi_c] if 0.0 < psi_c < 0.5 * math.pi else None
    val, _ = sint.quad(inner, 0.0, 0.5 * math.pi, limit=200, epsabs=0.0, epsrel=1e-11, points=brk)
    return 2.0 * val


def sin_cos_beta(t1: float, t2: float) -> float:
    """B(t1, t2) = int_0^{pi/2} sin^{2 t1 - 1} cos^{2 t2 - 1} dtheta, by quadrature."""
    f = lambda th: math.sin(th) ** (2 * t1 - 1) * math.cos(th) ** (2 * t2 - 1)
    val, _ = sint.quad(f, 0.0, 0.5 * math.pi, limit=200, epsabs=0.0, epsrel=1e-12)
    return val


def gamma_alpha(alpha: float) -> float:
    """gamma_alpha = 2^{alpha+1} / (alpha + 2) * B(1/2, (alpha+1)/2)."""
    if alpha <= -1.0:
        raise ParameterError("gamma_alpha is defined for alpha > -1")
    return 2.0 ** (alpha + 1.0) / (alpha + 2.0) * sin_cos_beta(0.5, 0.5 * (alpha + 1.0))


DEFAULT_DELTAS = (0.4, 0.2, 0.1, 0.05)
DIVERGENCE_CUTOFFS = tuple(10.0 ** (-j) for j in range(2, 9))


@dataclass
class AsymptoticReport:
    alpha: float
    deltas: list
    integrals: list
    ratios: list
    limit: Optional[float]
    relative_error: Optional[float]
    monotone: Optional[bool]
    verdict: str
    cutoffs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "deltas": self.deltas, "integrals": self.integrals,
                "ratios": self.ratios, "limit": self.limit, "relative_error": self.relative_error,
                "monotone": self.monotone, "verdict": self.verdict, "cutoffs": self.cutoffs}


def intsize_divergence(alpha: float, delta: float,
                       cutoffs: Sequence[float] = DIVERGENCE_CUTOFFS) -> tuple[str, list]:
    """Classify I(alpha, delta) through the cut-off integrals as eps decreases."""
    vals = [intsize_integral(alpha, delta, eps) for eps in cutoffs]
    return classify_sequence(vals).verdict, vals


def asymptotic_check(alpha: float, deltas: Sequence[float] = DEFAULT_DELTAS,
                     tol: float = STABLE_TOL) -> AsymptoticReport:
    """I(alpha, delta) / delta^{2 alpha + 4} along ``deltas`` against gamma_alpha.

    For alpha <= -1 the report carries the refinement-divergence verdict of
    the cut-off integrals at the first delta instead.
    """
    ds = [float(d) for d in deltas]
    if alpha <= -1.0:
        verdict, vals = intsize_divergence(alpha, ds[0])
        return AsymptoticReport(alpha, ds, vals, [], None, None, None, verdict,
                                list(DIVERGENCE_CUTOFFS))
    I = [intsize_integral(alpha, d) for d in ds]
    r = [i / d ** (2 * alpha + 4) for i, d in zip(I, ds)]
    lim = gamma_alpha(alpha)
    order = np.argsort(ds)[::-1]
    rs = np.asarray(r)[order]
    monotone = bool(np.all(np.diff(rs) > 0)) if alpha >= 0 else None
    err = abs(rs[-1] - lim) / lim
    verdict = "converged" if err <= tol else "not converged"
    return AsymptoticReport(alpha, ds, I, r, lim, err, monotone, verdict)
