"""
Pullback densities and the Szego projection
===========================================

A proper map Phi pulls the boundary measure of its image back to w dsigma.
We compute w from the Jacobian, compare it with the closed forms, and check
that the discrete Szego projections reproduce the basic identities.
"""

import math

import numpy as np

from szego_lab.geometry import make_sphere3_grid, make_torus_grid
from szego_lab.maps import (bidisc_density, density_from_jacobian, power, pushforward_mass_check,
                            symmetrize2, thullen_density)
from szego_lab.szego import make_projector, sphere_moment

# symmetrization (z1, z2) -> (z1 + z2, z1 z2) on the torus
t2 = make_torus_grid(2, 32)
w = density_from_jacobian(symmetrize2(), t2)
print("bidisc density vs closed form:", np.max(np.abs(w.values - bidisc_density(*t2.nodes.T))))

# power maps (z1, z2) -> (z1^m, z2^k) on the sphere
s3 = make_sphere3_grid(48, 48, 48)
for m, k in [(1, 2), (2, 2), (2, 3)]:
    w = density_from_jacobian(power(m, k), s3)
    err = np.max(np.abs(w.values - thullen_density(s3.points, m, k)))
    mass = pushforward_mass_check(power(m, k), s3)
    print(f"thullen({m},{k}): density err {err:.1e}, boundary area rel err {mass.relative_error:.1e}")

# the projection of |z1 - z2|^2 on the torus is the constant 2
z = t2.points
S = make_projector(t2)
print("S(|z1 - z2|^2) - 2:", np.max(np.abs(S(np.abs(z[:, 0] - z[:, 1]) ** 2 + 0j).values - 2)))

# on the sphere |z1|^m |z2|^k is circle invariant, so only its mean survives
P = make_projector(s3)
r = np.abs(s3.points)
out = P(r[:, 0] ** 2 * r[:, 1] ** 3 + 0j).values
print("S(|z1|^2 |z2|^3) =", out[0].real, " moment:", sphere_moment(1.0, 1.5) / (2 * math.pi**2))
