"""
Endpoint witness and the size of metric balls
=============================================

At p = 4 on the symmetrized bidisc the ratio ||S h|| / ||h|| for
h = |z1 - z2|^2 grows like log N under grid refinement; at p = 2 it is
flat. Separately, the lens integral over a metric ball scales like
delta^(2 alpha + 4).
"""

import numpy as np

from szego_lab import regularity as reg

for p in (2.0, 4.0):
    rep = reg.endpoint_witness_bidisc(p)
    print(f"p = {p}: N = {rep.grid_sizes}, ratios {np.round(rep.ratios, 4).tolist()}, {rep.verdict}")
rep = reg.endpoint_witness_bidisc(4.0)
print("growth per doubling:", np.round(np.diff(rep.ratios), 5).tolist())

for alpha in (0.0, 1.0, 2.0):
    rep = reg.asymptotic_check(alpha)
    print(f"alpha = {alpha}: I / delta^(2a+4) = {np.round(rep.ratios, 5).tolist()} -> {rep.limit:.5f}")

verdict, vals = reg.intsize_divergence(-1.0, 0.3)
print("alpha = -1 with shrinking cutoff:", np.round(vals, 4).tolist(), verdict)
