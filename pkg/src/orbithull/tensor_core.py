"""
Anisotropic tensors, rotations and the SO(3) action on them.

A trace-free symmetric 3x3 tensor is stored by its five coordinates
``(v, w, x, y, z)``::

    chi(v, w, x, y, z) = [[v,  w,        x       ],
                          [w,  -v/2 + y, z       ],
                          [x,  z,        -v/2 - y]]

Under rotations about ``e1`` the coordinate ``v`` is invariant, ``(w, x)``
turns by the rotation angle and ``(y, z)`` by twice the angle, so the three
blocks are the U0, U1 and U2 pieces of the space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-12
UNIT_TOL = 1e-12
JACOBI_TOL = 1e-14
DEGENERACY_RTOL = 1e-9
RANK_RTOL = 1e-8

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def coords_to_matrix(c):
    """Matrix of the tensor with coordinates ``c = (v, w, x, y, z)``.

    Works on a single 5-vector or a stack ``(..., 5)``.
    """
    c = np.asarray(c, dtype=float)
    v, w, x, y, z = np.moveaxis(c, -1, 0)
    out = np.empty(c.shape[:-1] + (3, 3))
    out[..., 0, 0] = v
    out[..., 1, 1] = -0.5 * v + y
    out[..., 2, 2] = -0.5 * v - y
    out[..., 0, 1] = out[..., 1, 0] = w
    out[..., 0, 2] = out[..., 2, 0] = x
    out[..., 1, 2] = out[..., 2, 1] = z
    return out


def matrix_to_coords(m):
    """Inverse of :func:`coords_to_matrix` (the trace part is discarded)."""
    m = np.asarray(m, dtype=float)
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    return np.stack(
        [
            m[..., 0, 0],
            m[..., 0, 1],
            m[..., 0, 2],
            0.5 * (m[..., 1, 1] - m[..., 2, 2]),
            m[..., 1, 2],
        ],
        axis=-1,
    )


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class AnisoTensor:
    """Trace-free symmetric 3x3 tensor, held as its 5 coordinates."""

    coords: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coords)
        if c.shape != (5,):
            raise ValueError(f"expected 5 coordinates, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("tensor coordinates must be finite")
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_matrix(cls, m, tol=1e-10):
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.T).max() > tol * scale:
            raise ValueError("tensor matrix is not symmetric")
        if abs(np.trace(m)) > tol * scale:
            raise ValueError("tensor matrix is not trace-free")
        return cls(matrix_to_coords(m))

    @classmethod
    def from_eigenvalues(cls, eigenvalues, frame=None):
        """Tensor ``F diag(eigenvalues) F^T``; the eigenvalues must sum to 0."""
        lam = np.asarray(eigenvalues, dtype=float)
        if abs(lam.sum()) > 1e-10 * max(1.0, np.abs(lam).max()):
            raise ValueError("eigenvalues of an anisotropic tensor sum to zero")
        m = np.diag(lam - lam.mean())
        if frame is not None:
            f = _as_matrix(frame)
            m = f @ m @ f.T
        return cls(matrix_to_coords(m))

    @property
    def matrix(self):
        return coords_to_matrix(self.coords)

    @property
    def norm(self):
        return float(np.linalg.norm(self.matrix))

    def __add__(self, other):
        return AnisoTensor(self.coords + other.coords)

    def __sub__(self, other):
        return AnisoTensor(self.coords - other.coords)

    def __neg__(self):
        return AnisoTensor(-self.coords)

    def __mul__(self, s):
        return AnisoTensor(float(s) * self.coords)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return AnisoTensor(self.coords / float(s))

    def allclose(self, other, atol=1e-10):
        return bool(np.abs(self.matrix - other.matrix).max() <= atol)

    def __repr__(self):
        return f"AnisoTensor({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class Rotation:
    """A proper rotation of R^3."""

    m: np.ndarray

    def __post_init__(self):
        m = _frozen(self.m)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        if np.abs(m @ m.T - np.eye(3)).max() > ORTHO_TOL:
            raise ValueError("matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > ORTHO_TOL:
            raise ValueError("matrix does not have determinant 1")
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls):
        return cls(np.eye(3))

    @property
    def T(self):
        return Rotation(self.m.T)

    def __matmul__(self, other):
        return Rotation(self.m @ _as_matrix(other))

    def allclose(self, other, atol=1e-12):
        return bool(np.abs(self.m - _as_matrix(other)).max() <= atol)

    def __repr__(self):
        return f"Rotation({np.array2string(self.m, precision=6)})"


def _as_matrix(r):
    return r.m if isinstance(r, Rotation) else np.asarray(r, dtype=float)


def _as_tensor_matrix(chi):
    return chi.matrix if isinstance(chi, AnisoTensor) else np.asarray(chi, dtype=float)


def act(R, chi):
    """Rotate a tensor: ``R chi R^T``. Left action, ``act(R, act(S, x)) == act(R @ S, x)``."""
    r = _as_matrix(R)
    return AnisoTensor(matrix_to_coords(r @ _as_tensor_matrix(chi) @ r.T))


def random_rotations(n, rng=None):
    """``n`` Haar-random rotation matrices as an ``(n, 3, 3)`` array."""
    from scipy.spatial.transform import Rotation as _SciRot

    rng = np.random.default_rng(rng)
    return _SciRot.random(n, random_state=rng).as_matrix()


def random_rotation(rng=None):
    return Rotation(random_rotations(1, rng)[0])


# -- eigen-decomposition ------------------------------------------------------


def _jacobi3(a):
    """Cyclic Jacobi sweep for a symmetric 3x3 matrix.

    Returns (eigenvalues, eigenvector columns) unsorted. Pure Python floats:
    for a 3x3 this beats calling into LAPACK one matrix at a time.
    """
    a00, a01, a02 = float(a[0][0]), float(a[0][1]), float(a[0][2])
    a11, a12, a22 = float(a[1][1]), float(a[1][2]), float(a[2][2])
    v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    scale = math.sqrt(a00 * a00 + a11 * a11 + a22 * a22 + 2 * (a01 * a01 + a02 * a02 + a12 * a12))
    thresh = JACOBI_TOL * scale
    for _ in range(60):
        off = math.sqrt(a01 * a01 + a02 * a02 + a12 * a12)
        if off <= thresh or off == 0.0:
            break
        # pair (0, 1)
        if a01 != 0.0:
            theta = (a11 - a00) / (2.0 * a01)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            a00, a11 = a00 - t * a01, a11 + t * a01
            a01 = 0.0
            a02, a12 = c * a02 - s * a12, s * a02 + c * a12
            for row in v:
                row[0], row[1] = c * row[0] - s * row[1], s * row[0] + c * row[1]
        # pair (0, 2)
        if a02 != 0.0:
            theta = (a22 - a00) / (2.0 * a02)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            a00, a22 = a00 - t * a02, a22 + t * a02
            a02 = 0.0
            a01, a12 = c * a01 - s * a12, s * a01 + c * a12
            for row in v:
                row[0], row[2] = c * row[0] - s * row[2], s * row[0] + c * row[2]
        # pair (1, 2)
        if a12 != 0.0:
            theta = (a22 - a11) / (2.0 * a12)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            a11, a22 = a11 - t * a12, a22 + t * a12
            a12 = 0.0
            a01, a02 = c * a01 - s * a02, s * a01 + c * a02
            for row in v:
                row[1], row[2] = c * row[1] - s * row[2], s * row[1] + c * row[2]
    return [a00, a11, a22], v


def eigenvalues(chi):
    """Eigenvalues sorted descending (no eigenvectors, no sign fixing)."""
    lam, _ = _jacobi3(_as_tensor_matrix(chi))
    lam.sort(reverse=True)
    return lam


@dataclass(frozen=True, eq=False)
class SpectralData:
    eigenvalues: np.ndarray
    frame: Rotation

    @property
    def max(self):
        return float(self.eigenvalues[0])

    @property
    def min(self):
        return float(self.eigenvalues[2])


def _fix_sign(col):
    for c in col:
        if abs(c) > 1e-12:
            return col if c > 0 else -col
    return col


def degeneracy_tol(chi):
    return DEGENERACY_RTOL * max(1.0, float(np.linalg.norm(_as_tensor_matrix(chi))))


def spectral(chi):
    """Sorted eigenvalues and an eigenframe that is a proper rotation.

    Eigenvalues come out descending. The first two eigenvector columns have
    their first non-negligible component positive; the third column is their
    cross product, so the frame always has determinant +1. Inside a repeated
    eigenvalue the basis is Gram-Schmidt on the projections of e1, e2, e3.
    """
    m = _as_tensor_matrix(chi)
    lam, v = _jacobi3(m)
    lam = np.array(lam)
    vecs = np.array(v)
    order = np.argsort(-lam, kind="stable")
    lam, vecs = lam[order], vecs[:, order]
    tol = degeneracy_tol(m)

    groups, start = [], 0
    for i in range(1, 4):
        if i == 3 or lam[i - 1] - lam[i] > tol:
            groups.append((start, i))
            start = i
    for a, b in groups:
        k = b - a
        if k == 1:
            continue
        if k == 3:
            vecs = np.eye(3)
            break
        proj = vecs[:, a:b] @ vecs[:, a:b].T
        basis = []
        for ek in np.eye(3):
            u = proj @ ek
            for q in basis:
                u = u - (q @ u) * q
            n = np.linalg.norm(u)
            if n > 1e-6:
                basis.append(u / n)
            if len(basis) == k:
                break
        vecs[:, a:b] = np.array(basis).T
        mean = lam[a:b].mean()
        lam[a:b] = mean

    c0 = _fix_sign(vecs[:, 0])
    c1 = _fix_sign(vecs[:, 1])
    c1 = c1 - (c0 @ c1) * c0
    c1 /= np.linalg.norm(c1)
    c2 = np.cross(c0, c1)
    frame = np.column_stack([c0, c1, c2])
    return SpectralData(_frozen(lam), Rotation(frame))


# -- coaxial rotations and the isotypical split -------------------------------


def _check_unit(e):
    e = np.asarray(e, dtype=float)
    if e.shape != (3,):
        raise ValueError(f"axis must be a 3-vector, got shape {e.shape}")
    if abs(np.linalg.norm(e) - 1.0) > UNIT_TOL:
        raise ValueError(f"axis must be a unit vector (norm {np.linalg.norm(e)!r})")
    return e


def _skew(k):
    return np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])


def _axis_angle(e, theta):
    k = _skew(e)
    return np.eye(3) + math.sin(theta) * k + (1.0 - math.cos(theta)) * (k @ k)


def coaxial_rotation(e, theta):
    """Rotation by ``theta`` (right-handed) about the unit axis ``e``."""
    e = _check_unit(e)
    return Rotation(_axis_angle(e, theta))


def axis_frame(e):
    """Deterministic rotation ``P`` with ``P @ e1 == e``.

    Rodrigues rotation in the plane of ``e1`` and ``e``; for ``e = -e1`` the
    half turn about ``e3``.
    """
    e = _check_unit(e)
    c = float(e[0])
    if c > 1.0 - 1e-15:
        return Rotation(np.eye(3))
    if c < -1.0 + 1e-12:
        return Rotation(np.diag([-1.0, -1.0, 1.0]))
    k = np.cross(E1, e)
    kk = _skew(k)
    p = np.eye(3) + kk + (kk @ kk) / (1.0 + c)
    # re-orthonormalise against round-off
    u, _, vt = np.linalg.svd(p)
    return Rotation(u @ vt)


@dataclass(frozen=True, eq=False)
class IsotypicalSplit:
    """Pieces of a tensor under the coaxial group of ``axis``."""

    scalar: float
    u1: np.ndarray
    u2: np.ndarray
    axis: np.ndarray

    def reassemble(self):
        c = np.array([self.scalar, *self.u1, *self.u2])
        return act(axis_frame(self.axis), AnisoTensor(c))

    @property
    def u1_complex(self):
        return complex(self.u1[0], self.u1[1])

    @property
    def u2_complex(self):
        return complex(self.u2[0], self.u2[1])


def isotypical_split(chi, e):
    """Split ``chi`` into U0 + U1 + U2 with respect to the axis ``e``.

    The 2-vectors are coordinates in the frame :func:`axis_frame` (``e``);
    rotating ``chi`` by ``theta`` about ``e`` turns ``u1`` by ``theta`` and
    ``u2`` by ``2 theta``.
    """
    e = _check_unit(e)
    p = axis_frame(e).m
    c = matrix_to_coords(p.T @ _as_tensor_matrix(chi) @ p)
    return IsotypicalSplit(float(c[0]), _frozen(c[1:3]), _frozen(c[3:5]), _frozen(e))


def L_e(chi, e):
    """The coaxially invariant functional ``e^T chi e``."""
    e = _check_unit(e)
    return float(e @ _as_tensor_matrix(chi) @ e)


def tangent_vectors(chi):
    """Coordinates of ``r chi + chi r^T`` for the three generators ``r`` of so(3)."""
    m = _as_tensor_matrix(chi)
    out = []
    for k in (E1, E2, E3):
        r = _skew(k)
        out.append(matrix_to_coords(r @ m + m @ r.T))
    return np.array(out)


def numerical_rank(a, rtol=RANK_RTOL):
    s = np.linalg.svd(np.atleast_2d(a), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def orbit_dimension(chi):
    """Dimension of the SO(3)-orbit through ``chi``: 3, or 2 for a repeated eigenvalue."""
    m = _as_tensor_matrix(chi)
    if np.abs(m).max() == 0.0:
        raise ValueError("the zero tensor has a zero-dimensional orbit")
    tv = tangent_vectors(m)
    s = np.linalg.svd(tv, compute_uv=False)
    # absolute scale: a repeated eigenvalue kills a direction exactly
    return int(np.sum(s > RANK_RTOL * np.linalg.norm(m)))


# -- JSON helpers -------------------------------------------------------------


def tensor_from_json(obj):
    if "coords" in obj:
        return AnisoTensor(obj["coords"])
    if "matrix" in obj:
        return AnisoTensor.from_matrix(obj["matrix"])
    raise ValueError("tensor JSON needs a 'coords' or 'matrix' field")


def tensor_to_json(chi):
    return {"coords": [float(c) for c in chi.coords]}


def rotation_from_json(obj):
    m = obj["matrix"] if isinstance(obj, dict) else obj
    return Rotation(np.asarray(m, dtype=float))


def rotation_to_json(R):
    return {"matrix": [[float(c) for c in row] for row in R.m]}
