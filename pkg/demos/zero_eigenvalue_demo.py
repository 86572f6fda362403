"""Tensors with a zero eigenvalue: two orientations always suffice.

Run: python3 demos/zero_eigenvalue_demo.py
"""

import numpy as np

from orbithull import AnisoTensor, AtomicMeasure, HullSpec, decompose_zero_eig, evaluate, invariants, random_rotations
from orbithull.single_ion_hull import reconstruction_error

rng = np.random.default_rng(3)
chi = AnisoTensor.from_eigenvalues([1.0, 0.0, -1.0])
hull = HullSpec.from_tensor(chi)

# the isotropic average needs just two orientations, weight one half each
zero = decompose_zero_eig(hull, AnisoTensor(np.zeros(5)))
print("zero tensor:", [round(p, 6) for p in zero.weights])

for n in (3, 6, 10):
    m = AtomicMeasure(tuple(rng.dirichlet(np.ones(n))), tuple(random_rotations(n, rng)))
    t = evaluate(m, chi)
    inv = invariants(t)
    d = decompose_zero_eig(hull, t)
    print(f"{n:2d} orientations -> {len(d)}; invariants ({inv.alpha:.3f}, {inv.det:+.3f}); error {reconstruction_error(d, chi, t):.1e}")
