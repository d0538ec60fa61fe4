"""Szego projections and kernels on the polydisc and the ball.

On T^n the projection keeps the Fourier orthant k >= 0 of the grid
interpolant. On S^3 it is the grid-orthogonal projection onto the span of
the monomials z1^a z2^b with a + b <= D; the Gram system is solved
exactly, so the discrete operator is idempotent and self-adjoint for the
grid inner product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, DomainError, ParameterError, UnderResolvedError
from .fields import BoundaryField, as_values, torus_coefficients, torus_synthesize
from .geometry import SPHERE3, TORUS, BoundaryGrid, total_mass

DEFAULT_DEGREE = 24
GRAM_TOL = 1e-6


def sphere_moment(a: float, b: float) -> float:
    """int_{S^3} |z1|^{2a} |z2|^{2b} dsigma = 2 pi^2 Gamma(a+1)Gamma(b+1)/Gamma(a+b+2)."""
    return 2.0 * math.pi**2 * math.exp(gammaln(a + 1) + gammaln(b + 1) - gammaln(a + b + 2))


def _orthant_mask(N: int, n: int) -> np.ndarray:
    k = np.fft.fftfreq(N, 1.0 / N)
    pos = k >= 0
    mask = np.ones((N,) * n, dtype=bool)
    for ax in range(n):
        shape = [1] * n
        shape[ax] = N
        mask = mask & pos.reshape(shape)
    return mask


def _holomorphic_evaluator(coeffs: np.ndarray, N: int, n: int):
    """Evaluate sum_{k >= 0} a_k z^k at arbitrary points of the closed polydisc."""
    k = np.fft.fftfreq(N, 1.0 / N).astype(int)
    idx = np.nonzero(np.abs(coeffs) > 0)
    ks = np.stack([k[i] for i in idx], axis=1)
    cs = coeffs[idx]

    def func(points):
        z = np.atleast_2d(np.asarray(points, dtype=complex))
        out = np.zeros(len(z), dtype=complex)
        for start in range(0, len(cs), 512):
            kk = ks[start:start + 512]
            mono = np.prod(z[:, None, :] ** kk[None, :, :], axis=2)
            out += mono @ cs[start:start + 512]
        return out

    return func


@dataclass(frozen=True, eq=False)
class SzegoProjector:
    """Discrete Szego projection bound to one grid.

    ``degree`` is the monomial truncation on S^3 (``None`` on T^n) and
    ``gram_residual`` the largest deviation of the normalized Gram matrix
    from the identity (0 on T^n, where the Fourier basis is exact).
    """

    grid: BoundaryGrid
    degree: int | None
    gram_residual: float
    _mats: tuple = ()

    @property
    def manifold_id(self) -> str:
        return self.grid.manifold_id

    def __call__(self, f) -> BoundaryField:
        if self.grid.manifold_id == TORUS:
            return _apply_torus(self.grid, f)
        return _apply_sphere(self, f)

    def metadata(self) -> dict:
        return {"manifold_id": self.manifold_id, "degree": self.degree,
                "gram_residual": self.gram_residual}


def _apply_torus(grid: BoundaryGrid, f) -> BoundaryField:
    v = as_values(f, grid)
    N, n = grid.resolutions[0], grid.dim
    a = torus_coefficients(grid, v.astype(complex))
    a = np.where(_orthant_mask(N, n), a, 0.0)
    vals = torus_synthesize(grid, a)
    return BoundaryField(grid, vals, func=_holomorphic_evaluator(a, N, n))


def project_torus(f: BoundaryField) -> BoundaryField:
    """Orthant projection of a torus field."""
    if f.grid.manifold_id != TORUS:
        raise ConfigurationError("project_torus needs a torus grid")
    return _apply_torus(f.grid, f)


# ---------------------------------------------------------------- sphere

def _sphere_tables(grid: BoundaryGrid, D: int):
    N1, N2, N3 = grid.resolutions
    a1, a2, a3 = grid.axes
    w1, w2, w3 = grid.axis_weights
    s1, c1 = np.sin(a1)[:, None], np.cos(a1)[:, None]
    s2, c2 = np.sin(a2)[None, :], np.cos(a2)[None, :]
    z1 = c1 + 1j * s1 * c2                     # (N1, N2)
    rho2 = s1 * s2                             # |z2|
    W12 = (w1 * np.sin(a1) ** 2)[:, None] * (w2 * np.sin(a2))[None, :]
    h3 = float(w3[0])
    powers = np.stack([z1**a for a in range(D + 1)])          # (D+1, N1, N2)
    return z1, rho2, W12, h3, powers


def _build_sphere(grid: BoundaryGrid, D: int) -> SzegoProjector:
    if int(D) != D or D < 0:
        raise ParameterError(f"degree must be a nonnegative integer, got {D!r}")
    D = int(D)
    N3 = grid.resolutions[2]
    if N3 <= D:
        raise UnderResolvedError(f"phi3 resolution {N3} cannot separate degrees up to {D}")
    z1, rho2, W12, h3, powers = _sphere_tables(grid, D)
    mats = []
    resid = 0.0
    for b in range(D + 1):
        na = D - b + 1
        norms = np.array([math.sqrt(sphere_moment(a, b)) for a in range(na)])
        B = powers[:na] * rho2**b / norms[:, None, None]      # normalized, without e^{ib phi3}
        Bf = B.reshape(na, -1)
        wf = (W12 * 2.0 * math.pi).ravel()
        G = (np.conj(Bf) * wf) @ Bf.T
        resid = max(resid, float(np.max(np.abs(G - np.eye(na)))))
        mats.append((Bf, np.linalg.inv(G.T)))
    if resid > GRAM_TOL:
        raise UnderResolvedError(
            f"Gram matrix of degree-{D} monomials deviates from diagonal by {resid:.2e}")
    return SzegoProjector(grid, D, resid, (tuple(mats), W12.ravel(), h3))


@lru_cache(maxsize=8)
def _cached_sphere(grid: BoundaryGrid, D: int) -> SzegoProjector:
    return _build_sphere(grid, D)


def make_projector(grid: BoundaryGrid, degree: int = DEFAULT_DEGREE) -> SzegoProjector:
    if grid.manifold_id == TORUS:
        return SzegoProjector(grid, None, 0.0)
    if grid.manifold_id == SPHERE3:
        return _cached_sphere(grid, int(degree))
    raise ConfigurationError(f"unknown manifold id {grid.manifold_id!r}")


def _apply_sphere(P: SzegoProjector, f) -> BoundaryField:
    grid = P.grid
    v = as_values(f, grid).astype(complex)
    N1, N2, N3 = grid.resolutions
    mats, W12, h3 = P._mats
    D = P.degree
    F = v.reshape(N1 * N2, N3)
    phi3 = grid.axes[2]
    # Fourier modes in phi3: F_b = sum_j f e^{-i b phi3_j} h3
    Fb = np.fft.fft(F, axis=1) * h3 * np.exp(-1j * np.fft.fftfreq(N3, 1.0 / N3) * phi3[0])
    out = np.zeros((N1 * N2, N3), dtype=complex)
    coeffs = []
    for b in range(D + 1):
        Bf, Ginv = mats[b]
        rhs = (np.conj(Bf) * W12) @ Fb[:, b]
        x = Ginv @ rhs
        coeffs.append(x)
        out += np.outer(Bf.T @ x, np.exp(1j * b * phi3))
    vals = out.ravel()
    return BoundaryField(grid, vals, func=_sphere_evaluator(coeffs, D))


def _sphere_evaluator(coeffs, D: int):
    scaled = []
    for b, x in enumerate(coeffs):
        norms = np.array([math.sqrt(sphere_moment(a, b)) for a in range(D - b + 1)])
        scaled.append(x / norms)

    def func(points):
        z = np.atleast_2d(np.asarray(points, dtype=complex))
        out = np.zeros(len(z), dtype=complex)
        for b, c in enumerate(scaled):
            out += np.polynomial.polynomial.polyval(z[:, 0], c) * z[:, 1] ** b
        return out

    return func


def project_sphere(f: BoundaryField, D: int = DEFAULT_DEGREE) -> BoundaryField:
    """Grid-orthogonal projection onto holomorphic polynomials of degree <= D."""
    if f.grid.manifold_id != SPHERE3:
        raise ConfigurationError("project_sphere needs a sphere3 grid")
    return make_projector(f.grid, D)(f)


def project(f: BoundaryField, D: int = DEFAULT_DEGREE) -> BoundaryField:
    if f.grid.manifold_id == TORUS:
        return project_torus(f)
    return project_sphere(f, D)


# ---------------------------------------------------------------- kernels

def kernel_constant(manifold_id: str, n: int = 2) -> float:
    """Normalization making int K(z, .) dsigma = 1; equals K(0, zeta) = 1 / sigma(boundary)."""
    return 1.0 / total_mass(manifold_id, n)


def kernel_eval(manifold_id: str, z, zeta) -> np.ndarray | complex:
    """Szego kernel K(z, zeta) for interior z and boundary points zeta.

    ``zeta`` may be an (M, n) array; the result then has length M.
    """
    z = np.asarray(z, dtype=complex).ravel()
    Z = np.atleast_2d(np.asarray(zeta, dtype=complex))
    n = z.size
    if Z.shape[1] != n:
        raise ConfigurationError("z and zeta have different dimensions")
    if manifold_id == TORUS:
        if np.any(np.abs(z) >= 1.0):
            raise DomainError("z must lie in the open polydisc")
        if np.any(np.abs(np.abs(Z) - 1.0) > 1e-10):
            raise DomainError("zeta must lie on the torus")
        K = np.prod(1.0 / (2.0 * math.pi * (1.0 - z[None, :] * np.conj(Z))), axis=1)
    elif manifold_id == SPHERE3:
        if n != 2:
            raise ConfigurationError("sphere kernel is implemented for B^2")
        if np.linalg.norm(z) >= 1.0:
            raise DomainError("z must lie in the open ball")
        if np.any(np.abs(np.linalg.norm(Z, axis=1) - 1.0) > 1e-10):
            raise DomainError("zeta must lie on the sphere")
        inner = Z.conj() @ z
        K = kernel_constant(SPHERE3) / (1.0 - inner) ** 2
    else:
        raise ConfigurationError(f"unknown manifold id {manifold_id!r}")
    return complex(K[0]) if np.ndim(zeta) == 1 else K


def interior_eval(f: BoundaryField, z) -> complex:
    """S f(z) = int K(z, zeta) f(zeta) dsigma(zeta) by grid quadrature."""
    g = f.grid
    K = kernel_eval(g.manifold_id, z, g.points)
    return complex(np.sum(K * f.values * g.weights))


def poisson_extend(f: BoundaryField, r) -> BoundaryField:
    """Values of the Poisson integral of a real torus field at (r theta) nodes.

    ``r`` is a scalar or one radius per axis. The result is real.
    """
    g = f.grid
    if g.manifold_id != TORUS:
        raise ConfigurationError("poisson_extend needs a torus grid")
    v = as_values(f, g)
    if np.iscomplexobj(v) and np.any(np.abs(v.imag) > 1e-12 * (1 + np.abs(v.real))):
        raise ParameterError("poisson_extend expects a real field")
    rs = np.broadcast_to(np.asarray(r, dtype=float), (g.dim,))
    if np.any(rs >= 1.0) or np.any(rs <= 0.0):
        raise DomainError(f"radius must lie in (0, 1), got {r!r}")
    N, n = g.resolutions[0], g.dim
    a = torus_coefficients(g, np.real(v))
    k = np.abs(np.fft.fftfreq(N, 1.0 / N))
    for ax in range(n):
        shape = [1] * n
        shape[ax] = N
        a = a * (rs[ax] ** k).reshape(shape)
    return BoundaryField(g, np.real(torus_synthesize(g, a)))
