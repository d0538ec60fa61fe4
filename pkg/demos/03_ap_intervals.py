"""
Where is the Szego projection bounded?
======================================

Boundedness on L^p of the quotient reduces to an A_p condition on
w^(1 - p/2). We scan p, classify the characteristic under refinement, and
bisect the endpoints of the bounded range.
"""

from szego_lab import regularity as reg

for alpha in (0.5, 1.0, 2.0):
    det = reg.ap_interval_detect(alpha)
    print(f"|z - 1|^(alpha (2 - p)), alpha = {alpha}: detected ({det.p_min:.3f}, {det.p_max:.3f}),"
          f" predicted ({det.predicted[0]:.3f}, {det.predicted[1]:.3f})")

det = reg.bidisc_interval_scan()
print(f"symmetrized bidisc: ({det.p_min:.3f}, {det.p_max:.3f})")

for m, k in [(1, 1), (2, 3)]:
    det = reg.thullen_interval_scan(m, k)
    print(f"thullen({m},{k}): ({det.p_min}, {det.p_max}) predicted {det.predicted}")

# one scan in detail: characteristics stabilize inside, grow outside
for p in (2.0, 4.5):
    rep = reg.bidisc_scan(p)
    print(f"p = {p}: verdict {rep.verdict}, sequence {[round(c, 3) for c in rep.sequence]}")
