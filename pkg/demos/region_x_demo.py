"""The invariant region X and the two-parameter faces that cover it.

Run: python3 demos/region_x_demo.py
"""

import numpy as np

from orbithull import f_map, invert_f_map, region_X_contains
from orbithull.single_ion_hull import region_X_boundary, separating_det

# X is bounded by the discriminant curve and the lines alpha = 1 - |det|
for a, d in ((0.5, 0.1), (0.9, 0.05), (0.2, 0.2)):
    print(f"({a}, {d}) in X: {region_X_contains(a, d)}")

# the discriminant curve touches the separating curve at one point
a = 1.0 / 3.0
print(f"tangent point: det on separating curve {separating_det(a):.12f}, on discriminant {np.sqrt(4 * a**3 / 27):.12f}")

# every admissible invariant pair has a preimage on one of the two faces
for a, d in ((0.3, 0.05), (0.6, 0.15), (0.8, 0.01)):
    lam, u, v = invert_f_map(a, d)
    back = f_map(lam, u, v)
    face = "v = 1" if abs(v - 1) < 1e-12 else "u = 1"
    print(f"({a}, {d}) <- lambda={lam:.4f}, u={u:.4f}, v={v:.4f} on face {face}; round trip {back[0]:.6f}, {back[1]:.6f}")

names = sorted({row[0] for row in region_X_boundary(5)})
print("boundary curves:", ", ".join(names))
