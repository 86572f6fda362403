"""Single ion: which averaged tensors are reachable, and with how few orientations.

Run: python3 demos/single_ion_hull_demo.py
"""

import numpy as np

from orbithull import AnisoTensor, AtomicMeasure, HullSpec, decompose, evaluate, membership, random_rotations
from orbithull.single_ion_hull import reconstruction_error

rng = np.random.default_rng(7)

# an ion with a rhombic tensor; eigenvalues must sum to zero
chi = AnisoTensor.from_eigenvalues([2.0, -0.5, -1.5])
hull = HullSpec.from_tensor(chi)
print(f"eigenvalue window of the hull: [{hull.m:.2f}, {hull.M:.2f}]")

# average the tensor over 12 random orientations
rots = random_rotations(12, rng)
measure = AtomicMeasure(tuple(rng.dirichlet(np.ones(12))), tuple(rots))
target = evaluate(measure, chi)
print(f"12-orientation average: {membership(hull, target).status}, margin {membership(hull, target).margin:.3f}")

# the same average, rebuilt from at most three orientations
small = decompose(hull, target)
print(f"rebuilt with {len(small)} orientations, error {reconstruction_error(small, chi, target):.1e}")
for p, r in small.atoms:
    print(f"  weight {p:.4f}")

# stretching far enough beyond the hull pushes an eigenvalue out of the window
print(f"6x the average: {membership(hull, target * 6).status}")
