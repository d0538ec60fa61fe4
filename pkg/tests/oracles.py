"""Independent reference computations used to freeze expected values.

Each oracle takes a different route from the library code it checks: finite
differences instead of the Jacobian pipeline, Hopf coordinates instead of
the Gamma-function moments, polar quadrature instead of the closed-form
lens area.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate as sint

from szego_lab.geometry import sphere3_points

FD_STEP = 1e-3


def _fd(f, x, i, h=FD_STEP):
    """Fourth-order central difference of f along coordinate i at x (rows)."""
    e = np.zeros(x.shape[1])
    e[i] = h
    return (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)


def _realify(z):
    return np.concatenate([z.real, z.imag], axis=-1)


def surface_density_fd(phi, params, embed):
    """sqrt(det D^T D) / sqrt(det E^T E) for D = d(phi o embed), E = d(embed),
    all derivatives taken by finite differences in the real parameters."""
    d = params.shape[1]
    D = np.stack([_fd(lambda x: _realify(phi(embed(x))), params, i) for i in range(d)], axis=-1)
    E = np.stack([_fd(lambda x: _realify(embed(x)), params, i) for i in range(d)], axis=-1)
    gD = np.linalg.det(np.einsum("mji,mjk->mik", D, D))
    gE = np.linalg.det(np.einsum("mji,mjk->mik", E, E))
    return np.sqrt(np.maximum(gD, 0.0) / gE)


def torus_embed(x):
    return np.exp(1j * x)


def sphere_embed(x):
    return sphere3_points(x)


def hopf_moment(a: float, b: float) -> float:
    """int_{S^3} |z1|^{2a} |z2|^{2b} dsigma in Hopf coordinates
    z = (cos t e^{i s1}, sin t e^{i s2}), dsigma = sin t cos t dt ds1 ds2."""
    f = lambda t: math.cos(t) ** (2 * a + 1) * math.sin(t) ** (2 * b + 1)
    val, _ = sint.quad(f, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=1e-13)
    return 4.0 * math.pi**2 * val


def lens_area_polar(delta: float) -> float:
    """Area of {|1 - lam| < delta^2} in the disc: polar coordinates about 1,
    where the disc is rho < 2 cos psi."""
    r2 = delta * delta
    f = lambda psi: 0.5 * min(r2, 2.0 * math.cos(psi)) ** 2
    brk = math.acos(min(1.0, 0.5 * r2))
    val, _ = sint.quad(f, -0.5 * math.pi, 0.5 * math.pi, points=[-brk, brk] if brk > 0 else None,
                       epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def power_characteristic(s: float, p: float) -> float:
    """[|theta|^s]_{p,I} on any interval symmetric about 0 (scale invariant);
    finite for -1 < s < p - 1."""
    return (1.0 / (1.0 + s)) * (1.0 / (1.0 - s / (p - 1.0))) ** (p - 1.0)


def arc_characteristic_quad(s: float, p: float, length: float) -> float:
    """[|2 sin(theta/2)|^s]_{p,I} on the arc (-L/2, L/2) by adaptive quadrature."""
    L = length
    mu = lambda t: abs(2.0 * math.sin(0.5 * t)) ** s
    a, _ = sint.quad(mu, 0.0, 0.5 * L, epsabs=0.0, epsrel=1e-12, limit=200)
    b, _ = sint.quad(lambda t: mu(t) ** (-1.0 / (p - 1.0)), 0.0, 0.5 * L,
                     epsabs=0.0, epsrel=1e-12, limit=200)
    return (2 * a / L) * (2 * b / L) ** (p - 1.0)


def bidisc_witness_increment() -> float:
    """Predicted growth of R(N) per grid doubling for the bidisc witness at p = 4.

    Near the diagonal w ~ sqrt(2)|x| (x = theta1 - theta2), so the numerator
    16 sum w^{-1} h^2 grows by 16 * 2 pi * sqrt(2) log 2 per doubling, while
    the denominator int |z1 - z2|^8 / w converges.
    """
    w = lambda x: math.sqrt(4 * math.sin(0.5 * x) ** 2 + math.sin(x) ** 2)
    den, _ = sint.quad(lambda x: (2 - 2 * math.cos(x)) ** 4 / w(x), 0.0, 2 * math.pi,
                       epsabs=0.0, epsrel=1e-12, limit=200)
    den *= 2 * math.pi
    return 16 * 2 * math.pi * math.sqrt(2.0) * math.log(2.0) / den


def lens_integral_polar(alpha: float, delta: float) -> float:
    """I(alpha, delta) with the whole 2-D region handed to scipy dblquad."""
    r2 = delta * delta
    val, _ = sint.dblquad(lambda rho, psi: rho ** (alpha + 1) * (2 * math.cos(psi) - rho) ** alpha,
                          -0.5 * math.pi, 0.5 * math.pi, 0.0,
                          lambda psi: min(r2, 2 * math.cos(psi)), epsabs=0.0, epsrel=1e-10)
    return val
