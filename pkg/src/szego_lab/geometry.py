"""Quadrature grids and metric geometry on the distinguished boundaries.

Two boundaries are supported:

* ``torus_n`` -- the torus T^n, parametrized by angles theta_j, with the
  uniform product rule. Each axis is offset by a different fraction of the
  spacing, so that for n = 2 no node lies on the diagonal theta_1 = theta_2.
* ``sphere3`` -- the unit sphere S^3 in C^2 with spherical coordinates

      z1 = cos(phi1) + i sin(phi1) cos(phi2)
      z2 = sin(phi1) sin(phi2) exp(i phi3)

  and surface measure sin^2(phi1) sin(phi2) dphi1 dphi2 dphi3.

The measure sigma is always the unnormalized induced Lebesgue measure, so
sigma(T^n) = (2 pi)^n and sigma(S^3) = 2 pi^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, ParameterError

TORUS = "torus_n"
SPHERE3 = "sphere3"

GRID_FORMAT = "szego_lab.grid"
GRID_FORMAT_VERSION = 1

SPHERE3_MASS = 2.0 * math.pi**2


def total_mass(manifold_id: str, n: int = 2) -> float:
    """Total sigma-mass of the boundary."""
    if manifold_id == TORUS:
        return (2.0 * math.pi) ** n
    if manifold_id == SPHERE3:
        return SPHERE3_MASS
    raise ConfigurationError(f"unknown manifold id {manifold_id!r}")


@dataclass(frozen=True, eq=False)
class BoundaryGrid:
    """Tensor-product quadrature mesh on T^n or S^3.

    ``nodes`` holds parameter tuples (radians), ``points`` the embedded
    complex coordinates and ``weights`` the quadrature weights for sigma.
    Node order is C-order over ``axes``.
    """

    manifold_id: str
    resolutions: tuple
    axes: tuple
    axis_weights: tuple
    nodes: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    rule: str = "uniform"
    offsets: tuple = field(default=())

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        """Complex dimension n of the ambient space."""
        return self.points.shape[1]

    @property
    def param_dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self.axes)

    def same_as(self, other: "BoundaryGrid") -> bool:
        return other is self or (
            other.manifold_id == self.manifold_id
            and other.resolutions == self.resolutions
            and other.rule == self.rule
        )

    def to_json(self) -> str:
        return grid_to_json(self)


def _torus_offsets(n: int) -> tuple:
    # distinct per-axis offsets (in units of the spacing); keeps theta_i - theta_j off 0
    return tuple((2 * j + 1) / (2 * n) for j in range(n))


def make_torus_grid(n: int, N: int) -> BoundaryGrid:
    """Uniform product grid on T^n with ``N`` points per axis.

    Every weight equals (2 pi / N)^n. The rule integrates exactly every
    trigonometric monomial exp(i k.theta) with max |k_j| < N.
    """
    if int(n) != n or n < 1:
        raise ParameterError(f"torus dimension must be a positive integer, got {n!r}")
    if int(N) != N or N < 4 or N % 2:
        raise ParameterError(f"points per axis must be an even integer >= 4, got {N!r}")
    n, N = int(n), int(N)
    h = 2.0 * math.pi / N
    offsets = _torus_offsets(n)
    axes = tuple(h * (np.arange(N) + o) for o in offsets)
    axis_w = tuple(np.full(N, h) for _ in range(n))
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    points = np.exp(1j * nodes)
    weights = np.full(N**n, h**n)
    return BoundaryGrid(TORUS, (N,) * n, axes, axis_w, nodes, points, weights,
                        rule="uniform", offsets=offsets)


def _gauss_halves(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [0, pi] split at pi/2."""
    x, wx = np.polynomial.legendre.leggauss(N // 2)
    q = math.pi / 4.0
    left = q * (x + 1.0)
    nodes = np.concatenate([left, left + 2.0 * q])
    weights = np.concatenate([q * wx, q * wx])
    return nodes, weights


def _midpoint(N: int, length: float) -> tuple[np.ndarray, np.ndarray]:
    h = length / N
    return h * (np.arange(N) + 0.5), np.full(N, h)


def sphere3_points(phi: np.ndarray) -> np.ndarray:
    """Embed parameter triples (phi1, phi2, phi3) into S^3 in C^2."""
    phi = np.asarray(phi, dtype=float)
    p1, p2, p3 = phi[..., 0], phi[..., 1], phi[..., 2]
    s1 = np.sin(p1)
    z1 = np.cos(p1) + 1j * s1 * np.cos(p2)
    z2 = s1 * np.sin(p2) * np.exp(1j * p3)
    return np.stack([z1, z2], axis=-1)


def sphere3_params(z: np.ndarray) -> np.ndarray:
    """Inverse of :func:`sphere3_points` (phi3 reduced to [0, 2 pi))."""
    z = np.asarray(z, dtype=complex)
    z1, z2 = z[..., 0], z[..., 1]
    r2 = np.abs(z2)
    p1 = np.arctan2(np.hypot(z1.imag, r2), z1.real)
    p2 = np.arctan2(r2, z1.imag)
    p3 = np.mod(np.angle(z2), 2.0 * math.pi)
    return np.stack([p1, p2, p3], axis=-1)


def torus_params(z: np.ndarray) -> np.ndarray:
    return np.mod(np.angle(np.asarray(z, dtype=complex)), 2.0 * math.pi)


def make_sphere3_grid(N1: int, N2: int, N3: int, rule: str = "gauss") -> BoundaryGrid:
    """Tensor grid on S^3 in the coordinates (phi1, phi2, phi3).

    ``rule="gauss"`` uses Gauss-Legendre nodes on [0, pi/2] and [pi/2, pi]
    for phi1 and phi2, so both zero circles z1 = 0 and z2 = 0 sit at panel
    corners; ``rule="midpoint"`` uses the plain midpoint rule. phi3 always
    uses the offset uniform rule. Weights are the product of the 1-D
    weights times sin^2(phi1) sin(phi2). Resolutions for phi1, phi2 must be
    even.
    """
    res = (N1, N2, N3)
    for v in res:
        if int(v) != v or v < 4:
            raise ParameterError(f"sphere axis resolutions must be integers >= 4, got {res!r}")
    N1, N2, N3 = (int(v) for v in res)
    if rule == "gauss":
        if N1 % 2 or N2 % 2:
            raise ParameterError("gauss rule needs even phi1/phi2 resolutions")
        a1, w1 = _gauss_halves(N1)
        a2, w2 = _gauss_halves(N2)
    elif rule == "midpoint":
        a1, w1 = _midpoint(N1, math.pi)
        a2, w2 = _midpoint(N2, math.pi)
    else:
        raise ParameterError(f"unknown sphere rule {rule!r}")
    a3, w3 = _midpoint(N3, 2.0 * math.pi)
    P1, P2, P3 = np.meshgrid(a1, a2, a3, indexing="ij")
    nodes = np.stack([P1.ravel(), P2.ravel(), P3.ravel()], axis=1)
    W = (w1[:, None, None] * np.sin(a1)[:, None, None] ** 2
         * (w2 * np.sin(a2))[None, :, None] * w3[None, None, :])
    return BoundaryGrid(SPHERE3, res, (a1, a2, a3), (w1, w2, w3), nodes,
                        sphere3_points(nodes), W.ravel(), rule=rule, offsets=(0.5,))


def integrate(grid: BoundaryGrid, f) -> complex | float:
    """Quadrature sum of ``f`` (array of node values or a BoundaryField)."""
    values = getattr(f, "values", f)
    g = getattr(f, "grid", None)
    if g is not None and not grid.same_as(g):
        raise ConfigurationError("field was sampled on a different grid")
    values = np.asarray(values)
    if values.shape != grid.weights.shape:
        raise ConfigurationError(
            f"field has shape {values.shape}, grid has {grid.weights.shape}")
    return np.sum(values * grid.weights)


def inner(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> complex:
    """Grid inner product <a, b> = sum a conj(b) w."""
    return np.sum(a * np.conj(b) * weights)


# ---------------------------------------------------------------- metric balls

def hermitian(zeta: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """<zeta, eta> = sum_j zeta_j conj(eta_j), broadcasting over leading axes."""
    return np.sum(np.asarray(zeta) * np.conj(np.asarray(eta)), axis=-1)


def metric_distance(zeta, eta) -> np.ndarray | float:
    """Non-isotropic distance |1 - <zeta, eta>|^(1/2) on S^3."""
    d = np.sqrt(np.abs(1.0 - hermitian(zeta, eta)))
    return float(d) if np.ndim(d) == 0 else d


@dataclass(frozen=True)
class MetricBall:
    center: tuple
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=complex)
        if c.shape != (2,) or abs(np.linalg.norm(c) - 1.0) > 1e-10:
            raise DomainError("ball center must be a unit vector in C^2")
        if not (0.0 < self.radius <= math.sqrt(2.0) + 1e-15):
            raise ParameterError(f"radius must lie in (0, sqrt 2], got {self.radius}")
        object.__setattr__(self, "center", tuple(complex(v) for v in c))

    def contains(self, points: np.ndarray) -> np.ndarray:
        return metric_distance(points, np.asarray(self.center)) < self.radius


MIN_BALL_NODES = 32
MIN_BALL_CELLS = 12.0


@dataclass(frozen=True)
class BallVolume:
    volume: float
    n_nodes: int
    under_resolved: bool
    predicted: float          # c * delta^4 with c = pi^2
    exact: float              # 2 pi * (area of {|1 - lam| < delta^2} in the disc)
    thin_cells: float = math.inf
    tangent_cells: float = math.inf


BALL_VOLUME_CONSTANT = math.pi**2


def lens_area(delta: float) -> float:
    """Area of {lam in D : |1 - lam| < delta^2} (closed-form circle intersection)."""
    r = float(delta) ** 2
    if r <= 0.0:
        return 0.0
    if r >= 2.0:
        return math.pi
    return (r * r * math.acos(r / 2.0) + math.acos(1.0 - r * r / 2.0)
            - 0.5 * math.sqrt(r * r * (4.0 - r * r)))


def _axis_position(grid: BoundaryGrid, x: np.ndarray) -> np.ndarray:
    """Fractional node index of parameter values along each axis (phi3 unwrapped)."""
    a1, a2, a3 = grid.axes
    p1 = np.interp(x[:, 0], a1, np.arange(len(a1)))
    p2 = np.interp(x[:, 1], a2, np.arange(len(a2)))
    p3 = np.unwrap(x[:, 2]) / (2.0 * math.pi) * len(a3)
    return np.stack([p1, p2, p3], axis=1)


def _cells_along(grid: BoundaryGrid, path: np.ndarray) -> float:
    pos = _axis_position(grid, sphere3_params(path))
    steps = np.abs(np.diff(pos, axis=0))
    # jumps across a coordinate singularity (phi2 or phi3 undefined) are not cells
    steps[steps > 4.0] = 0.0
    return float(np.sum(steps))


def ball_resolution(grid: BoundaryGrid, ball: MetricBall, samples: int = 257) -> tuple[float, float]:
    """Grid cells crossed by the ball along its thin and its wide directions.

    Q_delta(eta) has half-width delta^2 along the circle e^{it} eta and
    about sqrt(2) delta along the complex-tangential directions. The count
    is the total variation of the fractional node index along each path;
    a small count means the mask staircase dominates the volume error.
    """
    eta = np.asarray(ball.center, dtype=complex)
    perp = np.array([-np.conj(eta[1]), np.conj(eta[0])])
    d = ball.radius
    t = np.linspace(-1.0, 1.0, samples)[:, None]
    thin_half = math.acos(max(-1.0, 1.0 - d**4 / 2.0)) if d * d < 2.0 else math.pi
    thin = _cells_along(grid, np.exp(1j * thin_half * t) * eta)
    s = min(math.sqrt(2.0) * d, math.pi / 2.0) * t
    wide = min(_cells_along(grid, np.cos(s) * eta + np.sin(s) * v) for v in (perp, 1j * perp))
    return thin, wide


def ball_mask(grid: BoundaryGrid, ball: MetricBall) -> np.ndarray:
    if grid.manifold_id != SPHERE3:
        raise ConfigurationError("metric balls live on sphere3 grids")
    return ball.contains(grid.points)


def ball_volume(grid: BoundaryGrid, ball: MetricBall) -> BallVolume:
    """sigma(Q_delta(eta)) by masking grid nodes.

    The ball is flagged under-resolved when it holds fewer than 32 nodes or
    when fewer than 12 grid cells span its thin or its wide direction.
    """
    mask = ball_mask(grid, ball)
    count = int(mask.sum())
    vol = float(np.sum(grid.weights[mask]))
    d = ball.radius
    thin, wide = ball_resolution(grid, ball)
    flag = count < MIN_BALL_NODES or min(thin, wide) < MIN_BALL_CELLS
    return BallVolume(vol, count, flag, BALL_VOLUME_CONSTANT * d**4,
                      2.0 * math.pi * lens_area(d), thin, wide)


def engulfing_holds(grid: BoundaryGrid, b1: MetricBall, b2: MetricBall, c1: float = 3.0):
    """Check Q(b2) subset Q_{c1 delta}(b1 center) on the nodes, if the balls overlap.

    Returns ``None`` when the sampled balls do not intersect.
    """
    if abs(b1.radius - b2.radius) > 1e-15:
        raise ParameterError("engulfing compares balls of equal radius")
    inside = grid.points[ball_mask(grid, b2)]
    d1 = metric_distance(inside, np.asarray(b1.center))
    if not np.any(d1 < b1.radius):
        return None
    return bool(np.all(d1 < min(c1 * b1.radius, math.sqrt(2.0))))


def random_sphere_points(rng: np.random.Generator, count: int) -> np.ndarray:
    v = rng.standard_normal((count, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v[:, 0::2] + 1j * v[:, 1::2]


def ball_family(per_circle: int = 8, generic: int = 8, seed: int = 0) -> list:
    """Centres on the zero circles {|z1| = 1} and {|z2| = 1} plus generic points.

    Returns ``(center_id, center)`` pairs; ids are ``Z1_j``, ``Z2_j``, ``G_j``.
    """
    out = []
    for name, slot in (("Z1", 0), ("Z2", 1)):
        for j in range(per_circle):
            c = np.zeros(2, dtype=complex)
            c[slot] = np.exp(2j * math.pi * j / per_circle)
            out.append((f"{name}_{j}", c))
    pts = random_sphere_points(np.random.default_rng(seed), generic)
    out += [(f"G_{j}", pts[j]) for j in range(generic)]
    return out


DOUBLING_RADII = (0.1, 0.2, 0.3, 0.4)
DOUBLING_BOUND = 3.0**4 * 1.05


@dataclass
class DoublingReport:
    """sigma(Q_{c1 delta}) / sigma(Q_delta) over a ball family on one grid.

    ``rows`` holds ``(center_id, delta, small, big, ratio, resolved)``; only
    resolved rows enter ``max_ratio`` and ``holds``. ``coverage`` counts the
    resolved centres per radius, so a radius no grid resolves stays visible.
    """

    grid_resolutions: tuple
    c1: float
    bound: float
    rows: list
    max_ratio: float
    exact_ratios: dict
    coverage: dict
    holds: bool

    @property
    def complete(self) -> bool:
        return all(v > 0 for v in self.coverage.values())

    def to_dict(self) -> dict:
        return {"grid": list(self.grid_resolutions), "c1": self.c1, "bound": self.bound,
                "max_ratio": self.max_ratio, "holds": self.holds, "complete": self.complete,
                "coverage": {repr(k): v for k, v in self.coverage.items()},
                "exact_ratios": {repr(k): v for k, v in self.exact_ratios.items()},
                "rows": [list(r) for r in self.rows]}


def doubling_check(grid: BoundaryGrid, centers: Optional[list] = None,
                   radii: Sequence[float] = DOUBLING_RADII, c1: float = 3.0,
                   bound: float = DOUBLING_BOUND) -> DoublingReport:
    """Doubling ratios of the sampled balls, skipping under-resolved small balls."""
    centers = ball_family() if centers is None else centers
    rows, best = [], 0.0
    coverage = {float(r): 0 for r in radii}
    for cid, c in centers:
        for r in radii:
            small = ball_volume(grid, MetricBall(c, r))
            big = float(np.sum(grid.weights[ball_mask(grid, MetricBall(c, min(c1 * r, math.sqrt(2.0))))]))
            ok = not small.under_resolved
            ratio = big / small.volume if small.volume > 0 else math.inf
            rows.append((cid, float(r), small.volume, big, ratio, ok))
            if ok:
                coverage[float(r)] += 1
                best = max(best, ratio)
    exact = {float(r): lens_area(min(c1 * r, math.sqrt(2.0))) / lens_area(r) for r in radii}
    return DoublingReport(grid.resolutions, c1, bound, rows, best, exact, coverage, best <= bound)


@dataclass
class EngulfingReport:
    c1: float
    pairs: int
    overlapping: int
    violations: list

    @property
    def holds(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"c1": self.c1, "pairs": self.pairs, "overlapping": self.overlapping,
                "violations": [list(v) for v in self.violations]}


def engulfing_check(grid: BoundaryGrid, centers: Optional[list] = None,
                    radii: Sequence[float] = DOUBLING_RADII, c1: float = 3.0) -> EngulfingReport:
    """Engulfing on the family: each centre is paired with a companion at
    distance about delta in a complex-tangential direction, so the pair of
    equal balls overlaps; both orders are checked on the grid nodes."""
    centers = ball_family() if centers is None else centers
    pairs = overlapping = 0
    bad = []
    for cid, c in centers:
        eta = np.asarray(c, dtype=complex)
        perp = np.array([-np.conj(eta[1]), np.conj(eta[0])])
        for r in radii:
            other = math.cos(r) * eta + math.sin(r) * perp
            for a, b in ((eta, other), (other, eta)):
                pairs += 1
                res = engulfing_holds(grid, MetricBall(a, r), MetricBall(b, r), c1)
                if res is None:
                    continue
                overlapping += 1
                if not res:
                    bad.append((cid, float(r)))
    return EngulfingReport(c1, pairs, overlapping, bad)


# ---------------------------------------------------------------- Forelli

@dataclass(frozen=True)
class ForelliReduction:
    sphere_integral: complex
    disc_integral: complex
    ratio: complex
    disc_estimates: tuple
    integrable: bool


FORELLI_CONSTANT = 2.0 * math.pi     # sigma(S^3) / area(D) for unnormalized sigma


def disc_integral(f: Callable, n_radial: int = 128, n_angular: int = 128) -> complex:
    """Tensor rule on the unit disc: Gauss-Legendre in r (weight r), uniform in angle."""
    x, wx = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * wx * r
    t = 2.0 * math.pi * (np.arange(n_angular) + 0.5) / n_angular
    lam = r[:, None] * np.exp(1j * t)[None, :]
    vals = np.asarray(f(lam))
    return np.sum(vals * wr[:, None]) * (2.0 * math.pi / n_angular)


def forelli_reduce(grid: BoundaryGrid, f_of_z1: Callable,
                   levels: Sequence[int] = (64, 128, 256)) -> ForelliReduction:
    """Compare int_{S^3} f(z1) dsigma with int_D f dA.

    The disc integral is refined over ``levels``; it is declared
    non-integrable when the estimates keep growing (relative change above
    5% between the last two levels).
    """
    if grid.manifold_id != SPHERE3:
        raise ConfigurationError("Forelli reduction needs a sphere3 grid")
    sphere = integrate(grid, f_of_z1(grid.points[:, 0]))
    est = tuple(disc_integral(f_of_z1, n, n) for n in levels)
    last, prev = est[-1], est[-2]
    finite = np.isfinite(last) and abs(last - prev) <= 0.05 * max(abs(last), 1e-300)
    ratio = sphere / last if finite and last != 0 else complex("nan")
    return ForelliReduction(complex(sphere), complex(last), complex(ratio), est, bool(finite))


# ---------------------------------------------------------------- serialization

def grid_to_json(grid: BoundaryGrid) -> str:
    doc = {
        "format": GRID_FORMAT,
        "version": GRID_FORMAT_VERSION,
        "manifold_id": grid.manifold_id,
        "dimension": grid.dim,
        "resolutions": list(grid.resolutions),
        "rule": grid.rule,
        "nodes": grid.nodes.tolist(),
        "weights": grid.weights.tolist(),
    }
    return json.dumps(doc)


def grid_reference(grid: BoundaryGrid) -> dict:
    """Compact grid description embedded next to serialized fields."""
    return {"manifold_id": grid.manifold_id, "dimension": grid.dim,
            "resolutions": list(grid.resolutions), "rule": grid.rule}


def grid_from_reference(ref: dict) -> BoundaryGrid:
    mid = ref.get("manifold_id")
    res = ref.get("resolutions")
    if mid == TORUS:
        if len(set(res)) != 1:
            raise ConfigurationError("torus grids use one resolution for every axis")
        return make_torus_grid(len(res), res[0])
    if mid == SPHERE3:
        return make_sphere3_grid(*res, rule=ref.get("rule", "gauss"))
    raise ConfigurationError(f"unknown manifold id {mid!r}")


def grid_from_json(text: str) -> BoundaryGrid:
    doc = json.loads(text)
    if doc.get("format") != GRID_FORMAT or doc.get("version") != GRID_FORMAT_VERSION:
        raise ConfigurationError("not a version-1 szego_lab grid document")
    grid = grid_from_reference(doc)
    if (len(doc["weights"]) != grid.size
            or not np.allclose(doc["weights"], grid.weights, rtol=1e-14, atol=0)
            or not np.allclose(doc["nodes"], grid.nodes, rtol=1e-14, atol=1e-15)):
        raise ConfigurationError("grid document does not match its resolutions")
    return grid
