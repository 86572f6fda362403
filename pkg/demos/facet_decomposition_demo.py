"""Points on a coaxial facet of a pair hull need at most four orientations.

Run: python3 demos/facet_decomposition_demo.py
"""

import numpy as np

from orbithull import AnisoTensor, AtomicMeasure, TensorPair, coaxial_face, facet_decompose, random_rotation
from orbithull.pair_hull import alpha_from_angle, evaluate_pair, pair_reconstruction_error

rng = np.random.default_rng(5)
pair = TensorPair(AnisoTensor.from_eigenvalues([1.0, 0.3, -1.3]), AnisoTensor.from_eigenvalues([0.5, 0.1, -0.6], random_rotation(rng)))
face = coaxial_face(pair, alpha_from_angle(0.9))
print(f"face axis {np.round(face.axis, 3)}, dimension {face.dim}")

# six rotations inside the coaxial group of the face
gs = tuple(face.group_element(t, bool(k % 2)) for k, t in enumerate(rng.uniform(0, 2 * np.pi, 6)))
target = evaluate_pair(AtomicMeasure(tuple(rng.dirichlet(np.ones(6))), gs), pair)
m = facet_decompose(face, pair, target)
print(f"six orientations -> {len(m)}, error {pair_reconstruction_error(m, pair, target):.1e}")
