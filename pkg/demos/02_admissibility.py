"""
Which densities come from a holomorphic g?
==========================================

The quotient projection needs a zero-free g with |g|^2 = w on the boundary.
In one variable the outer function always works; on the bidisc the Fourier
support of log w decides.
"""

import numpy as np

from szego_lab.admissibility import fourier_support, herglotz_solve, log_integrability
from szego_lab.fields import WeightField
from szego_lab.geometry import make_torus_grid
from szego_lab.maps import closed_form_density

# w = |1 + z/2| has the outer function g = (1 + z/2)^(1/2)
g1 = make_torus_grid(1, 4096)
f = lambda q: np.abs(1 + 0.5 * np.atleast_2d(q)[:, 0])
w = WeightField(g1, f(g1.points), func=f)
sol = herglotz_solve(w)
pts = 0.999 * g1.points
print("log-integrability:", log_integrability(w).verdict)
print("outer function vs sqrt(1 + z/2) at r = 0.999:",
      np.max(np.abs(sol.evaluate(pts) - np.sqrt(1 + 0.5 * pts[:, 0]))))

# the symmetrized bidisc: log w is integrable but leaks out of the orthants
wb = closed_form_density("symmetrized_bidisc", make_torus_grid(2, 64))
info, _ = fourier_support(wb)
print("bidisc log-integrability:", log_integrability(wb).verdict)
print("relative off-orthant mass:", round(info["relative_off_orthant_mass"], 4))
print("largest leaking modes:", [m["k"] for m in info["largest_off_orthant_modes"][:3]])
