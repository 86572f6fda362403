"""Interior points of a pair hull: a vertex plus a facet point.

The projected eigenvalue test is necessary but not sufficient for pairs, so
the ray from a vertex can leave through a point that is not on any real
facet; the search then tries another starting vertex.

Run: python3 demos/pair_decomposition_demo.py
"""

import numpy as np

from orbithull import AnisoTensor, AtomicMeasure, TensorPair, decompose_pair, necessary_membership, random_rotations, random_rotation
from orbithull.pair_hull import evaluate_pair, pair_reconstruction_error

rng = np.random.default_rng(21)
pair = TensorPair(AnisoTensor.from_eigenvalues([1.0, 0.3, -1.3]), AnisoTensor.from_eigenvalues([0.5, 0.1, -0.6], random_rotation(rng)))
for trial in range(4):
    m = AtomicMeasure(tuple(rng.dirichlet(np.ones(8))), tuple(random_rotations(8, rng)))
    target = evaluate_pair(m, pair)
    nm = necessary_membership(pair, target)
    try:
        d = decompose_pair(pair, target, n_alpha=180, n_starts=10, rng=trial)
        print(f"trial {trial}: margin {nm.margin:.3f}; 8 -> {len(d)} orientations, error {pair_reconstruction_error(d, pair, target):.1e}")
    except RuntimeError as exc:
        print(f"trial {trial}: margin {nm.margin:.3f}; no split found ({exc})")
