"""Proper holomorphic covering maps, deck groups and pullback densities.

Complex Jacobians follow the row convention ``J[i, j] = d phi_j / d z_i``,
so that for a composition ``J(F o P)(z) = J P(z) @ J F(P(z))`` and the
matrix ``A = J_R Z @ J_C Phi`` has one row per real boundary parameter.

The pullback density of a map is

    w = sqrt(det Re(A conj(A)^t)) / sqrt(det Re(J_R Z conj(J_R Z)^t)),

i.e. the Jacobian factor of the induced surface measure divided by the
parameter density of sigma itself (which is 1 on T^n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy import integrate as spi

from .errors import ConfigurationError, NumericalConsistencyError, ParameterError
from .fields import BoundaryField, WeightField, torus_coefficients, torus_synthesize
from .geometry import (SPHERE3, TORUS, BoundaryGrid, integrate, sphere3_params,
                       torus_params, total_mass)

GROUP_TOL = 1e-12
DECK_TOL = 1e-10
MAX_GROUP_ORDER = 4096


# ---------------------------------------------------------------- groups

def _classify(U: np.ndarray) -> str:
    if np.allclose(U, np.diag(np.diag(U)), atol=GROUP_TOL):
        return "rotation"
    if np.allclose(U, np.round(U.real), atol=GROUP_TOL) and \
            np.all((np.abs(U) > 0.5).sum(axis=0) == 1):
        return "permutation"
    return "composite"


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Unitary n x n matrix acting on points z by z -> U z."""

    matrix: np.ndarray
    kind: str = ""

    def __post_init__(self):
        U = np.array(self.matrix, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ConfigurationError("group element must be a square matrix")
        if not np.allclose(U @ U.conj().T, np.eye(U.shape[0]), atol=GROUP_TOL, rtol=0):
            raise ConfigurationError("group element is not unitary")
        U.setflags(write=False)
        object.__setattr__(self, "matrix", U)
        object.__setattr__(self, "kind", self.kind or _classify(U))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.matrix.T

    def is_monomial(self) -> bool:
        return bool(np.all((np.abs(self.matrix) > GROUP_TOL).sum(axis=1) == 1))

    def close_to(self, other: "GroupElement") -> bool:
        return bool(np.max(np.abs(self.matrix - other.matrix)) < 1e-9)


@dataclass(frozen=True, eq=False)
class Group:
    """Finite group of unitaries, closed under products and inverses."""

    elements: tuple

    def __post_init__(self):
        els = tuple(e if isinstance(e, GroupElement) else GroupElement(e)
                    for e in self.elements)
        if not els:
            raise ConfigurationError("a group needs at least the identity")
        n = els[0].n
        if any(e.n != n for e in els):
            raise ConfigurationError("group elements have different sizes")
        object.__setattr__(self, "elements", els)
        self._verify()

    def _index(self, U: np.ndarray) -> int:
        for i, e in enumerate(self.elements):
            if np.max(np.abs(e.matrix - U)) < 1e-9:
                return i
        return -1

    def _verify(self) -> None:
        if self._index(np.eye(self.n)) < 0:
            raise ConfigurationError("group has no identity")
        for a in self.elements:
            if self._index(a.matrix.conj().T) < 0:
                raise ConfigurationError("group is not closed under inverses")
            for b in self.elements:
                if self._index(a.matrix @ b.matrix) < 0:
                    raise ConfigurationError("group is not closed under products")

    @property
    def n(self) -> int:
        return self.elements[0].n

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @classmethod
    def generated_by(cls, generators: Sequence, n: Optional[int] = None) -> "Group":
        gens = [np.asarray(getattr(g, "matrix", g), dtype=complex) for g in generators]
        if n is None:
            if not gens:
                raise ConfigurationError("need generators or a dimension")
            n = gens[0].shape[0]
        for g in gens:
            GroupElement(g)
        found = [np.eye(n, dtype=complex)]
        frontier = list(found)
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    c = g @ a
                    if not any(np.max(np.abs(c - e)) < 1e-9 for e in found):
                        found.append(c)
                        nxt.append(c)
                        if len(found) > MAX_GROUP_ORDER:
                            raise ConfigurationError("generators do not span a small finite group")
            frontier = nxt
        # snap near-integers to clean roots of unity for reproducibility
        return cls(tuple(GroupElement(_snap(U)) for U in found))

    @classmethod
    def trivial(cls, n: int) -> "Group":
        return cls((GroupElement(np.eye(n)),))


def _snap(U: np.ndarray) -> np.ndarray:
    re, im = U.real.copy(), U.imag.copy()
    for a in (re, im):
        r = np.round(a)
        close = np.abs(a - r) < 1e-13
        a[close] = r[close]
    return re + 1j * im


def rotation(*angles_over_2pi: float) -> np.ndarray:
    """Diagonal rotation diag(exp(2 pi i t_j))."""
    return np.diag(np.exp(2j * math.pi * np.asarray(angles_over_2pi, dtype=float)))


SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


# ---------------------------------------------------------------- maps

_PROBE_RNG_SEED = 20240611


@dataclass(frozen=True, eq=False)
class ProperMapSpec:
    """A proper holomorphic map Phi with its Jacobian and deck group.

    ``evaluate`` and ``jacobian`` act on arrays of points of shape (M, n)
    and return (M, n) and (M, n, n) arrays respectively.
    """

    map_id: str
    n: int
    evaluate: Callable
    jacobian: Callable
    group: Group
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.group.n != self.n:
            raise ConfigurationError("group acts on a different dimension than the map")
        rng = np.random.default_rng(_PROBE_RNG_SEED)
        pts = np.exp(2j * math.pi * rng.random((16, self.n)))
        if self.n == 2:
            pts = np.concatenate([pts, pts / math.sqrt(2.0)])
        base = self.evaluate(pts)
        for tau in self.group:
            dev = np.max(np.abs(self.evaluate(tau.apply(pts)) - base))
            if dev > DECK_TOL * max(1.0, np.max(np.abs(base))):
                raise ConfigurationError(
                    f"map {self.map_id!r} is not invariant under a group element (dev {dev:.2e})")

    def __call__(self, points):
        return self.evaluate(np.asarray(points, dtype=complex))

    @property
    def label(self) -> str:
        if not self.params:
            return self.map_id
        inner = ",".join(str(v) for v in self.params.values())
        return f"{self.map_id}({inner})"


def identity_map(n: int) -> ProperMapSpec:
    return ProperMapSpec("identity", n, lambda z: np.array(z, dtype=complex),
                         lambda z: np.broadcast_to(np.eye(n, dtype=complex),
                                                   (len(z), n, n)).copy(),
                         Group.trivial(n))


def symmetrize2() -> ProperMapSpec:
    """(z1, z2) -> (z1 + z2, z1 z2); deck group S_2."""

    def ev(z):
        return np.stack([z[:, 0] + z[:, 1], z[:, 0] * z[:, 1]], axis=1)

    def jac(z):
        J = np.empty((len(z), 2, 2), dtype=complex)
        J[:, 0, 0] = 1.0
        J[:, 1, 0] = 1.0
        J[:, 0, 1] = z[:, 1]
        J[:, 1, 1] = z[:, 0]
        return J

    return ProperMapSpec("symmetrize2", 2, ev, jac, Group.generated_by([SWAP]))


def power(*exponents: int) -> ProperMapSpec:
    """(z_1, ..., z_n) -> (z_1^{m_1}, ..., z_n^{m_n}); deck group prod Z_{m_j}."""
    ms = tuple(int(m) for m in exponents)
    if not ms or any(m < 1 or m != e for m, e in zip(ms, exponents)):
        raise ParameterError(f"power exponents must be positive integers, got {exponents!r}")
    n = len(ms)
    marr = np.array(ms)

    def ev(z):
        return z ** marr

    def jac(z):
        J = np.zeros((len(z), n, n), dtype=complex)
        d = marr * z ** (marr - 1)
        J[:, np.arange(n), np.arange(n)] = d
        return J

    gens = []
    for j, m in enumerate(ms):
        if m > 1:
            t = np.zeros(n)
            t[j] = 1.0 / m
            gens.append(rotation(*t))
    group = Group.generated_by(gens, n) if gens else Group.trivial(n)
    params = {"m": ms[0]} if n == 1 else dict(zip(("m", "k"), ms)) if n == 2 else \
        {f"m{j + 1}": m for j, m in enumerate(ms)}
    return ProperMapSpec("power", n, ev, jac, group, params)


def linear_unitary(U) -> ProperMapSpec:
    """z -> U z (a biholomorphism of the ball; trivial deck group)."""
    U = GroupElement(U).matrix
    n = U.shape[0]
    JT = U.T.copy()
    return ProperMapSpec("linear_unitary", n, lambda z: np.asarray(z) @ U.T,
                         lambda z: np.broadcast_to(JT, (len(z), n, n)).copy(),
                         Group.trivial(n), {"U": U})


def composite(outer: ProperMapSpec, inner: ProperMapSpec) -> ProperMapSpec:
    """outer o inner; the deck group is inner's (outer must be injective)."""
    if outer.n != inner.n:
        raise ConfigurationError("cannot compose maps of different dimensions")
    if outer.group.order != 1:
        raise ConfigurationError("outer map of a composite must be injective")

    def ev(z):
        return outer.evaluate(inner.evaluate(z))

    def jac(z):
        return inner.jacobian(z) @ outer.jacobian(inner.evaluate(z))

    return ProperMapSpec("composite", inner.n, ev, jac, inner.group,
                         {"outer": outer, "inner": inner})


MINIMAL_BALL_F = np.array([[1.0, 1.0], [1j, -1j]]) / math.sqrt(2.0)


def minimal_ball() -> ProperMapSpec:
    """F o (z1^2, z2^2) with F(u) = ((u1 + u2)/sqrt 2, (i u1 - i u2)/sqrt 2)."""
    m = composite(linear_unitary(MINIMAL_BALL_F), power(2, 2))
    return ProperMapSpec("minimal_ball", 2, m.evaluate, m.jacobian, m.group)


def conformal_1d(coeffs: Sequence[complex]) -> ProperMapSpec:
    """Polynomial phi(z) = sum_j c_j z^j on the disc (assumed univalent)."""
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size < 2:
        raise ParameterError("conformal_1d needs at least two coefficients")
    dc = c[1:] * np.arange(1, c.size)
    if abs(dc[0]) <= float(np.sum(np.abs(dc[1:]))):
        # |phi'| > 0 on the closed disc is our univalence-on-the-boundary proxy
        raise ParameterError("polynomial derivative may vanish on the closed disc")

    def ev(z):
        return np.polynomial.polynomial.polyval(z, c)

    def jac(z):
        return np.polynomial.polynomial.polyval(np.asarray(z)[:, 0], dc)[:, None, None]

    return ProperMapSpec("conformal_1d", 1, ev, jac, Group.trivial(1),
                         {"coeffs": tuple(complex(v) for v in c)})


# ---------------------------------------------------------------- Jacobian pipeline

def real_param_jacobian(grid: BoundaryGrid, node=None) -> np.ndarray:
    """Partials of the embedding z(x): shape (d, n) for one node, (M, d, n) otherwise."""
    if node is None:
        x = grid.nodes
    else:
        x = np.atleast_2d(grid.nodes[node])
    J = param_jacobian_at(grid.manifold_id, x)
    return J[0] if node is not None and np.ndim(node) == 0 else J


def param_jacobian_at(manifold_id: str, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if manifold_id == TORUS:
        M, n = x.shape
        J = np.zeros((M, n, n), dtype=complex)
        J[:, np.arange(n), np.arange(n)] = 1j * np.exp(1j * x)
        return J
    if manifold_id == SPHERE3:
        p1, p2, p3 = x[:, 0], x[:, 1], x[:, 2]
        s1, c1, s2, c2 = np.sin(p1), np.cos(p1), np.sin(p2), np.cos(p2)
        e3 = np.exp(1j * p3)
        J = np.empty((len(x), 3, 2), dtype=complex)
        J[:, 0, 0] = -s1 + 1j * c1 * c2
        J[:, 0, 1] = c1 * s2 * e3
        J[:, 1, 0] = -1j * s1 * s2
        J[:, 1, 1] = s1 * c2 * e3
        J[:, 2, 0] = 0.0
        J[:, 2, 1] = 1j * s1 * s2 * e3
        return J
    raise ConfigurationError(f"unknown manifold id {manifold_id!r}")


def _gram_det(A: np.ndarray) -> np.ndarray:
    B = np.real(A @ np.conj(np.swapaxes(A, -1, -2)))
    det = np.linalg.det(B)   # LU with partial pivoting
    if np.any(det < -1e-12):
        raise NumericalConsistencyError(
            "Re(A A^*) has a negative determinant; it must be positive semidefinite")
    return np.maximum(det, 0.0)


def _params_of(manifold_id: str, points: np.ndarray) -> np.ndarray:
    return torus_params(points) if manifold_id == TORUS else sphere3_params(points)


def density_at(phi: ProperMapSpec, manifold_id: str, x: np.ndarray) -> np.ndarray:
    """Pullback density at parameter points ``x`` (shape (M, d))."""
    JR = param_jacobian_at(manifold_id, x)
    z = _points_of(manifold_id, x)
    if z.shape[1] != phi.n:
        raise ConfigurationError("map dimension does not match the grid")
    A = JR @ phi.jacobian(z)
    num = np.sqrt(_gram_det(A))
    if manifold_id == TORUS:
        return num
    den = np.sqrt(_gram_det(JR))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def _points_of(manifold_id: str, x: np.ndarray) -> np.ndarray:
    from .geometry import sphere3_points
    return np.exp(1j * x) if manifold_id == TORUS else sphere3_points(x)


def density_from_jacobian(phi: ProperMapSpec, grid: BoundaryGrid,
                          check_invariance: bool = True) -> WeightField:
    """Node values of w = sqrt(det Re(A conj(A)^t)) relative to sigma."""
    if grid.dim != phi.n:
        raise ConfigurationError("map dimension does not match the grid")
    mid = grid.manifold_id
    vals = density_at(phi, mid, grid.nodes)

    def func(points):
        return density_at(phi, mid, _params_of(mid, np.atleast_2d(points)))

    w = WeightField(grid, vals, provenance="jacobian-pipeline", func=func)
    if check_invariance and not is_invariant(w, phi.group, DECK_TOL):
        raise NumericalConsistencyError("pipeline density is not invariant under the deck group")
    return w


# ---------------------------------------------------------------- closed forms

def bidisc_density(theta1, theta2):
    """sqrt(2 - 2 cos x + sin^2 x), x = theta1 - theta2, in a cancellation-free form."""
    x = np.asarray(theta1) - np.asarray(theta2)
    return np.sqrt(4.0 * np.sin(0.5 * x) ** 2 + np.sin(x) ** 2)


def thullen_density(z, m: int, k: int):
    a1 = np.abs(np.asarray(z)[..., 0])
    a2 = np.abs(np.asarray(z)[..., 1])
    return m * k * a1 ** (m - 1) * a2 ** (k - 1) * np.sqrt(
        m * m * a1 ** (2 * m - 2) * a2**2 + k * k * a1**2 * a2 ** (2 * k - 2))


def parse_domain_id(domain_id: str) -> tuple[str, dict]:
    """Split 'thullen(2,3)' style ids into a name and integer parameters."""
    s = domain_id.strip().replace(" ", "")
    if "(" not in s:
        return s, {}
    if not s.endswith(")"):
        raise ConfigurationError(f"malformed domain id {domain_id!r}")
    name, args = s[:-1].split("(", 1)
    try:
        vals = [complex(a) if "j" in a else float(a) for a in args.split(",") if a]
    except ValueError as exc:
        raise ConfigurationError(f"malformed domain id {domain_id!r}") from exc
    if name == "thullen":
        if len(vals) != 2:
            raise ConfigurationError("thullen needs two parameters m,k")
        return name, {"m": vals[0], "k": vals[1]}
    if name == "conformal_1d":
        return name, {"coeffs": vals}
    raise ConfigurationError(f"unknown domain id {domain_id!r}")


def _int_param(v, name: str) -> int:
    if v is None or int(v) != v or v < 1:
        raise ParameterError(f"{name} must be a positive integer, got {v!r}")
    return int(v)


def closed_form_density(domain_id: str, grid: BoundaryGrid, **params) -> WeightField:
    """Evaluate a known density formula on ``grid``.

    Supported ids: ``symmetrized_bidisc`` (T^2), ``thullen`` with ``m, k``
    (S^3), ``minimal_ball`` (S^3) and ``conformal_1d`` with ``coeffs`` (T);
    ``thullen(m,k)`` and ``conformal_1d(c0,c1,...)`` spellings also work.
    """
    name, parsed = parse_domain_id(domain_id)
    parsed.update(params)
    mid = grid.manifold_id
    if name == "symmetrized_bidisc":
        _require(grid, TORUS, 2, name)
        func = lambda p: bidisc_density(*np.angle(np.atleast_2d(p)).T)  # noqa: E731
        vals = bidisc_density(grid.nodes[:, 0], grid.nodes[:, 1])
    elif name in ("thullen", "minimal_ball"):
        _require(grid, SPHERE3, 2, name)
        if name == "minimal_ball":
            m = k = 2
        else:
            m = _int_param(parsed.get("m"), "m")
            k = _int_param(parsed.get("k"), "k")
        func = lambda p: thullen_density(np.atleast_2d(p), m, k)  # noqa: E731
        vals = thullen_density(grid.points, m, k)
    elif name == "conformal_1d":
        _require(grid, TORUS, 1, name)
        c = np.asarray(parsed.get("coeffs", ()), dtype=complex)
        if c.size < 2:
            raise ParameterError("conformal_1d needs polynomial coefficients")
        dc = c[1:] * np.arange(1, c.size)
        func = lambda p: np.abs(np.polynomial.polynomial.polyval(  # noqa: E731
            np.atleast_2d(p)[:, 0], dc))
        vals = func(grid.points)
    else:
        raise ConfigurationError(f"unknown domain id {domain_id!r}")
    del mid
    return WeightField(grid, vals, provenance="closed-form", func=func)


def _require(grid: BoundaryGrid, manifold_id: str, n: int, name: str) -> None:
    if grid.manifold_id != manifold_id or grid.dim != n:
        raise ConfigurationError(f"{name} density lives on a {manifold_id} grid of dimension {n}")


def map_for_domain(domain_id: str, **params) -> ProperMapSpec:
    name, parsed = parse_domain_id(domain_id)
    parsed.update(params)
    if name == "symmetrized_bidisc":
        return symmetrize2()
    if name == "thullen":
        return power(_int_param(parsed.get("m"), "m"), _int_param(parsed.get("k"), "k"))
    if name == "minimal_ball":
        return minimal_ball()
    if name == "conformal_1d":
        return conformal_1d(parsed["coeffs"])
    raise ConfigurationError(f"unknown domain id {domain_id!r}")


# ---------------------------------------------------------------- group action on fields

def _torus_compose(field: BoundaryField, tau: GroupElement) -> np.ndarray:
    grid = field.grid
    if not tau.is_monomial():
        raise ConfigurationError("only monomial group elements act on torus fields")
    N = grid.resolutions[0]
    n = grid.dim
    U = tau.matrix
    sigma = np.argmax(np.abs(U) > GROUP_TOL, axis=1)   # (tau z)_i = c_i z_sigma(i)
    c = U[np.arange(n), sigma]
    beta = np.angle(c)
    steps = beta * N / (2.0 * math.pi)
    if np.any(np.abs(steps - np.round(steps)) > 1e-9):
        raise ConfigurationError(
            f"rotation angles are not commensurate with N = {N}; choose N a multiple of the order")
    a = torus_coefficients(grid, np.asarray(field.values, dtype=complex))
    k = np.fft.fftfreq(N, 1.0 / N)
    for i in range(n):
        shape = [1] * n
        shape[i] = N
        a = a * np.exp(1j * k * beta[i]).reshape(shape)
    # exponent of z_sigma(i) in the result is the old exponent on axis i
    b = np.transpose(a, axes=np.argsort(sigma))
    out = torus_synthesize(grid, b)
    if not np.iscomplexobj(field.values):
        out = out.real
    return out


def compose(field: BoundaryField, tau: GroupElement) -> np.ndarray:
    """Node values of f o tau."""
    grid = field.grid
    if tau.n != grid.dim:
        raise ConfigurationError("group element acts on a different dimension")
    if field.func is not None:
        return np.asarray(field.func(tau.apply(grid.points)))
    if grid.manifold_id == TORUS:
        return _torus_compose(field, tau)
    raise ConfigurationError(
        "resampling a sphere field under a group element needs an analytic evaluator")


def symmetrize(field: BoundaryField, G: Group) -> BoundaryField:
    """Orbit average (1/|G|) sum_tau f o tau."""
    acc = sum(compose(field, tau) for tau in G) / G.order
    f = field.func
    func = None if f is None else (
        lambda p: sum(np.asarray(f(tau.apply(np.atleast_2d(p)))) for tau in G) / G.order)
    if isinstance(field, WeightField):
        return WeightField(field.grid, np.real(acc), field.provenance, func)
    return BoundaryField(field.grid, acc, func)


def invariance_residual(field: BoundaryField, G: Group, scale: Optional[float] = None) -> float:
    """max_tau max_nodes |f o tau - f|, relative to ``scale`` (default sup |f|)."""
    scale = field.sup_norm() if scale is None else max(scale, field.sup_norm())
    if scale == 0.0:
        return 0.0
    dev = max(float(np.max(np.abs(compose(field, tau) - field.values))) for tau in G)
    return dev / scale


def is_invariant(field: BoundaryField, G: Group, tol: float = 1e-10) -> bool:
    return invariance_residual(field, G) <= tol


# ---------------------------------------------------------------- pushforward mass

@dataclass(frozen=True)
class MassCheck:
    lhs: float
    rhs: Optional[float]
    relative_error: Optional[float]
    oracle: str


def thullen_boundary_area(m: int, k: int) -> float:
    """Surface area of {|u1|^(2/m) + |u2|^(2/k) = 1} in C^2.

    The profile curve r1 = cos^m t, r2 = sin^k t is rotated in both angles,
    so the area is (2 pi)^2 int r1 r2 |(r1', r2')| dt.
    """
    def integrand(t):
        c, s = math.cos(t), math.sin(t)
        r1, r2 = c**m, s**k
        d1 = m * c ** (m - 1) * s
        d2 = k * s ** (k - 1) * c
        return r1 * r2 * math.hypot(d1, d2)

    val, _ = spi.quad(integrand, 0.0, math.pi / 2.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return (2.0 * math.pi) ** 2 * val


def curve_length(phi: Callable, samples: int = 1 << 16) -> float:
    """Length of the closed curve t -> phi(e^{it}) by a fine polygon."""
    t = 2.0 * math.pi * np.arange(samples + 1) / samples
    pts = phi(np.exp(1j * t)[:, None])[:, 0]
    return float(np.sum(np.abs(np.diff(pts))))


def _independent_mass(phi: ProperMapSpec, grid: BoundaryGrid):
    mid = grid.manifold_id
    if phi.map_id == "identity":
        return total_mass(mid, grid.dim), "total mass of sigma"
    if phi.map_id == "linear_unitary":
        return total_mass(mid, grid.dim), "unitary image"
    if phi.map_id == "power":
        if mid == TORUS:
            return total_mass(mid, grid.dim), "image torus traversed once per sheet"
        return thullen_boundary_area(phi.params["m"], phi.params["k"]), "Thullen profile curve"
    if phi.map_id == "minimal_ball" and mid == SPHERE3:
        return thullen_boundary_area(2, 2), "unitary image of the (2,2) Thullen boundary"
    if phi.map_id == "composite":
        outer, inner = phi.params["outer"], phi.params["inner"]
        if outer.map_id == "linear_unitary":
            return _independent_mass(inner, grid)
    if phi.map_id == "conformal_1d":
        return curve_length(phi.evaluate), "polygon length of the image curve"
    return None, "oracle-free"


def pushforward_mass_check(phi: ProperMapSpec, grid: BoundaryGrid,
                           w: Optional[WeightField] = None) -> MassCheck:
    """Compare (1/|G|) int w dsigma with an independent mass of the image boundary."""
    if w is None:
        w = density_from_jacobian(phi, grid)
    lhs = float(np.real(integrate(grid, w))) / phi.group.order
    rhs, oracle = _independent_mass(phi, grid)
    if rhs is None:
        return MassCheck(lhs, None, None, "oracle-free")
    return MassCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), oracle)


# ---------------------------------------------------------------- configuration

def parse_matrix(text: str) -> np.ndarray:
    """'a,b;c,d' with Python complex literals (e.g. '0,1;1,0' or '1j,0;0,-1j')."""
    try:
        rows = [[complex(v.strip()) for v in r.split(",")] for r in text.strip().split(";")]
        M = np.array(rows, dtype=complex)
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse matrix {text!r}") from exc
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigurationError(f"matrix {text!r} is not square")
    return M


def map_from_config(section: Mapping[str, str]) -> ProperMapSpec:
    """Build a map from key=value pairs.

    Keys: ``id`` (symmetrize2 | power | linear_unitary | minimal_ball |
    conformal_1d | identity), ``m``, ``k``, ``n``, ``matrix``, ``coeffs`` and
    optional ``generators`` (matrices separated by '|') overriding the
    default deck group.
    """
    mid = section.get("id", "").strip()
    try:
        if mid == "symmetrize2":
            phi = symmetrize2()
        elif mid == "power":
            ks = [int(section[key]) for key in ("m", "k") if key in section]
            phi = power(*ks)
        elif mid == "linear_unitary":
            phi = linear_unitary(parse_matrix(section["matrix"]))
        elif mid == "minimal_ball":
            phi = minimal_ball()
        elif mid == "conformal_1d":
            phi = conformal_1d([complex(v) for v in section["coeffs"].split(",")])
        elif mid == "identity":
            phi = identity_map(int(section.get("n", "1")))
        else:
            raise ConfigurationError(f"unknown map id {mid!r}")
    except KeyError as exc:
        raise ConfigurationError(f"map {mid!r} is missing key {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    gens = section.get("generators")
    if gens:
        G = Group.generated_by([parse_matrix(g) for g in gens.split("|")])
        phi = ProperMapSpec(phi.map_id, phi.n, phi.evaluate, phi.jacobian, G, phi.params)
    return phi
