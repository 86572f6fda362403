"""Points of the circle-orbit hull and their shortest atomic representations.

Run: python3 demos/moment_matrix_demo.py
"""

import numpy as np

from orbithull import circle_hull_decompose, moment_matrix
from orbithull.pair_hull import circle_moments

# the moments (a, b) of a measure on the circle are its first and second Fourier coefficients
for w, th in (([1.0], [0.3]), ([0.4, 0.6], [0.0, 2.0]), ([0.2, 0.3, 0.5], [0.0, 1.0, 4.0])):
    a, b = circle_moments(np.array(w), np.array(th))
    mm = moment_matrix(a, b)
    print(f"{len(w)} atoms: psd {mm.psd}, rank {mm.rank}, eigenvalues {np.round(mm.eigenvalues, 4)}")

# an interior point needs three atoms; the free phase picks among many
for psi in (0.0, 1.0):
    atoms = circle_hull_decompose(0.1 + 0.2j, -0.1j, psi=psi)
    w = np.array([p for p, _ in atoms])
    a, b = circle_moments(w, np.array([t for _, t in atoms]))
    print(f"psi={psi}: weights {np.round(w, 4)}, reproduces ({a:.4f}, {b:.4f})")

print("(1.1, 0) psd:", moment_matrix(1.1, 0.0).psd)
