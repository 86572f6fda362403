"""Two ions moving together: coaxial faces of the joint hull and their dimensions.

Run: python3 demos/pair_faces_demo.py
"""

from collections import Counter

import numpy as np

from orbithull import AnisoTensor, TensorPair, coaxial_scan, hull_dimension, random_rotation

rng = np.random.default_rng(11)
chi1 = AnisoTensor.from_eigenvalues([1.0, 0.2, -1.2])
chi2 = AnisoTensor.from_eigenvalues([0.8, -0.1, -0.7], random_rotation(rng))
generic = TensorPair(chi1, chi2)
print("joint hull dimension:", hull_dimension([chi1, chi2]))

# sweep the direction that mixes the two tensors; generic pairs give facets almost everywhere
rows = coaxial_scan(generic, n_alpha=360)
print("generic pair, face dimensions:", dict(Counter(r.dim for r in rows)))

# a second tensor sharing an eigenvector with the first never yields a facet
c, s = np.cos(0.4), np.sin(0.4)
rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
shared = TensorPair(chi1, AnisoTensor.from_eigenvalues([0.8, -0.1, -0.7], rz))
print("shared eigenvector, face dimensions:", dict(Counter(r.dim for r in coaxial_scan(shared, n_alpha=360))))
