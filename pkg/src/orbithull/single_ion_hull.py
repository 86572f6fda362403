"""
The convex hull V of the SO(3)-orbit of one anisotropic tensor.

V is exactly the set of anisotropic tensors whose eigenvalues lie in
``[m, M]``, the extreme eigenvalues of the generator. Its facets are the
discs ``{L_e = M}`` and ``{L_e = m}``, every point is a combination of at
most three orbit points, and at most two when the generator has a zero
eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor_core import (
    AnisoTensor,
    Rotation,
    _as_matrix,
    _as_tensor_matrix,
    _check_unit,
    act,
    axis_frame,
    coaxial_rotation,
    degeneracy_tol,
    eigenvalues,
    matrix_to_coords,
    rotation_from_json,
    rotation_to_json,
    spectral,
    E1,
)

BOUNDARY_TOL = 1e-9
RECON_TOL = 1e-8


class DomainError(ValueError):
    """Input is well-formed but outside the domain of the operation."""


class OutsideHullError(DomainError):
    pass


# -- types --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HullSpec:
    chi: AnisoTensor
    M: float
    m: float
    alpha_geom: float
    gamma_geom: float

    @classmethod
    def from_tensor(cls, chi):
        if not isinstance(chi, AnisoTensor):
            chi = AnisoTensor(matrix_to_coords(chi))
        lam = eigenvalues(chi)
        M, m = lam[0], lam[2]
        if not M > 0.0 > m:
            raise ValueError("the generator of a hull must be a non-zero tensor")
        return cls(chi, M, m, M + m / 2.0, -m - M / 2.0)

    @property
    def intermediate(self):
        return -self.M - self.m

    @property
    def has_zero_eigenvalue(self):
        return abs(self.intermediate) <= degeneracy_tol(self.chi)


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite convex combination ``sum_j p_j R_j . chi``."""

    weights: tuple
    rotations: tuple

    def __post_init__(self):
        w = tuple(float(p) for p in self.weights)
        rots = tuple(r if isinstance(r, Rotation) else Rotation(r) for r in self.rotations)
        if len(w) != len(rots) or not w:
            raise ValueError("a measure needs one rotation per weight and at least one atom")
        if min(w) < -1e-12:
            raise ValueError("weights must be non-negative")
        if abs(sum(w) - 1.0) > 1e-12 * max(1, len(w)):
            raise ValueError(f"weights sum to {sum(w)!r}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rotations", rots)

    @classmethod
    def from_atoms(cls, atoms):
        atoms = list(atoms)
        return cls(tuple(p for p, _ in atoms), tuple(r for _, r in atoms))

    @property
    def atoms(self):
        return list(zip(self.weights, self.rotations))

    def __len__(self):
        return len(self.weights)

    def to_json(self):
        return {"atoms": [{"p": p, "R": rotation_to_json(r)["matrix"]} for p, r in self.atoms]}

    @classmethod
    def from_json(cls, obj):
        return cls.from_atoms((a["p"], rotation_from_json(a["R"])) for a in obj["atoms"])


def evaluate(measure, chi):
    """``sum_j p_j R_j chi R_j^T`` for a single tensor."""
    m = _as_tensor_matrix(chi)
    acc = np.zeros((3, 3))
    for p, r in measure.atoms:
        acc += p * (r.m @ m @ r.m.T)
    return AnisoTensor(matrix_to_coords(acc))


def reconstruction_error(measure, chi, target):
    return float(np.abs(evaluate(measure, chi).matrix - _as_tensor_matrix(target)).max())


@dataclass(frozen=True)
class CharPolyInvariants:
    alpha: float
    det: float


@dataclass(frozen=True)
class Membership:
    status: str  # "inside" | "boundary" | "outside"
    margin: float

    @property
    def inside(self):
        return self.status != "outside"


# -- membership and invariants ------------------------------------------------


def _margin(hull, m):
    lam = eigenvalues(m)
    return min(hull.M - lam[0], lam[2] - hull.m)


def membership(hull, chi_bar, tol=BOUNDARY_TOL):
    """Classify ``chi_bar`` against V by its extreme eigenvalues."""
    margin = _margin(hull, _as_tensor_matrix(chi_bar))
    if margin > tol:
        status = "inside"
    elif margin >= -tol:
        status = "boundary"
    else:
        status = "outside"
    return Membership(status, float(margin))


def invariants(chi_bar):
    """``alpha = s^2 + s t + t^2`` (= tr(chi^2)/2) and ``det`` of a trace-free tensor."""
    m = _as_tensor_matrix(chi_bar)
    alpha = 0.5 * float(np.sum(m * m))
    det = float(
        m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
        + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
    )
    return CharPolyInvariants(alpha, det)


def region_X_contains(alpha, det, tol=1e-12):
    """Invariant region of the hull normalised to eigenvalues (1, 0, -1)."""
    return bool(27.0 * det * det <= 4.0 * alpha**3 + tol and alpha <= 1.0 - abs(det) + tol)


def region_X_boundary(n=201):
    """Sample points of the three boundary curves of region X, as ``(name, alpha, det)`` rows."""
    rows = []
    for a in np.linspace(0.0, 0.75, n):
        d = math.sqrt(4.0 * a**3 / 27.0)
        rows.append(("cusp_upper", a, d))
        rows.append(("cusp_lower", a, -d))
    for a in np.linspace(0.75, 1.0, n):
        rows.append(("line_upper", a, 1.0 - a))
        rows.append(("line_lower", a, a - 1.0))
    return rows


# -- the f-map ------------------------------------------------------------------
#
# With D = diag(1, 0, -1), R(theta) a turn in the e1e2-plane and S(tau) in the
# e1e3-plane, the tensor lam R(theta).D + (1 - lam) S(tau).D has invariants
# (alpha, -det) = f(lam, sin^2 theta, sin^2 tau).


def f_map(lam, u, v):
    for name, t in (("lambda", lam), ("u", u), ("v", v)):
        if not -1e-12 <= t <= 1.0 + 1e-12:
            raise ValueError(f"{name}={t!r} is outside [0, 1]")
    q = lam * (1.0 - lam)
    return (1.0 - q * (4.0 * v + u - 2.0 * u * v), q * u * (1.0 - 2.0 * lam * v))


def _f_vec(lam, u, v):
    q = lam * (1.0 - lam)
    return 1.0 - q * (4.0 * v + u - 2.0 * u * v), q * u * (1.0 - 2.0 * lam * v)


def _f_jac(lam, u, v):
    """Jacobian of f w.r.t. (lam, u, v) as a 2x3 array."""
    q = lam * (1.0 - lam)
    dq = 1.0 - 2.0 * lam
    g = 4.0 * v + u - 2.0 * u * v
    h = 1.0 - 2.0 * lam * v
    return np.array(
        [
            [-dq * g, -q * (1.0 - 2.0 * v), -q * (4.0 - 2.0 * u)],
            [dq * u * h - 2.0 * q * u * v, q * h, -2.0 * q * u * lam],
        ]
    )


def R_plane12(theta):
    c, s = math.cos(theta), math.sin(theta)
    return Rotation(np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]))


def S_plane13(tau):
    c, s = math.cos(tau), math.sin(tau)
    return Rotation(np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]))


def separating_det(alpha):
    """Curve where the images of the two cube faces meet (alpha in [1/3, 1])."""
    return math.sqrt(max(0.0, 4.0 / 27.0 * (alpha - 0.25) * (alpha - 1.0) ** 2))


def face_for(alpha, det):
    """Which cube face covers ``(alpha, det)``, ``det >= 0``: ``"v=1"`` or ``"u=1"``."""
    if alpha < 1.0 / 3.0 or det <= separating_det(alpha):
        return "v=1"
    return "u=1"


_GRID = np.linspace(0.0, 1.0, 41)
_LG, _PG = np.meshgrid(np.linspace(0.0, 0.5, 41), _GRID, indexing="ij")


def _face_point(face, lam, p):
    return (lam, p, 1.0) if face == "v=1" else (lam, 1.0, p)


def _newton_face(face, target, lam, p, iters=60):
    """Damped Newton for f restricted to one face, box-clamped."""
    free = 1 if face == "v=1" else 2
    x = np.array([lam, p])
    t = np.asarray(target)

    def resid(x):
        return np.array(_f_vec(*_face_point(face, x[0], x[1]))) - t

    r = resid(x)
    for _ in range(iters):
        nr = float(np.hypot(*r))
        if nr < 1e-16:
            break
        jac = _f_jac(*_face_point(face, x[0], x[1]))[:, [0, free]]
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, r, rcond=None)[0]
        s = 1.0
        while s > 1e-6:
            xn = np.clip(x - s * step, 0.0, 1.0)
            rn = resid(xn)
            if np.hypot(*rn) < nr:
                x, r = xn, rn
                break
            s *= 0.5
        else:
            break
    return x, float(np.hypot(*r))


def invert_f_map(alpha, det, tol=1e-13):
    """A point ``(lam, u, v)`` of the unit cube with ``f = (alpha, det)``, ``det >= 0``.

    Starts on the face chosen by :func:`face_for` from the best node of a
    41x41 pre-scan, then Newton; falls back to the other face and finally to
    bounded least squares over the whole cube.
    """
    if det < -1e-12:
        raise ValueError("invert_f_map covers det >= 0 only")
    if not region_X_contains(alpha, det, tol=1e-10):
        raise DomainError(f"({alpha!r}, {det!r}) is not in region X")
    target = (alpha, max(det, 0.0))
    first = face_for(alpha, det)
    faces = [first, "u=1" if first == "v=1" else "v=1"]
    best = None
    for face in faces:
        fa, fd = _f_vec(*_face_point(face, _LG, _PG))
        err = np.hypot(fa - target[0], fd - target[1]).ravel()
        for idx in np.argsort(err)[:4]:
            x, res = _newton_face(face, target, _LG.ravel()[idx], _PG.ravel()[idx])
            if best is None or res < best[1]:
                best = (_face_point(face, *x), res)
            if res <= tol:
                return best[0]
    from scipy.optimize import least_squares

    rng = np.random.default_rng(0)
    for x0 in rng.random((20, 3)):
        sol = least_squares(
            lambda x: np.array(_f_vec(*x)) - target,
            x0,
            jac=lambda x: _f_jac(*x),
            bounds=(0.0, 1.0),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        res = float(np.linalg.norm(sol.fun))
        if res < best[1]:
            best = (tuple(sol.x), res)
        if res <= tol:
            break
    if best[1] > 1e-9:
        raise RuntimeError(f"f-map inversion failed at ({alpha!r}, {det!r}); residual {best[1]:.3g}")
    return best[0]


# -- decompositions -------------------------------------------------------------


def _align(source, target):
    """Rotation U with ``act(U, source) ~= target`` for equi-spectral tensors."""
    ss, st = spectral(source), spectral(target)
    tol = degeneracy_tol(target)
    if ss.max - ss.min <= tol and st.max - st.min <= tol:
        return Rotation.identity()
    return st.frame @ ss.frame.T


def _check(measure, chi, target, tol):
    err = reconstruction_error(measure, chi, target)
    if err > tol:
        raise RuntimeError(f"decomposition self-check failed: error {err:.3g}")
    return measure


def _vertex_if(hull, target, tol):
    lam = eigenvalues(target)
    ref = eigenvalues(hull.chi)
    if max(abs(a - b) for a, b in zip(lam, ref)) <= tol:
        return AtomicMeasure((1.0,), (_align(hull.chi, target),))
    return None


def decompose_zero_eig(hull, chi_bar, tol=RECON_TOL):
    """At most two orbit points averaging to ``chi_bar``; generator has a zero eigenvalue."""
    if not hull.has_zero_eigenvalue:
        raise ValueError("decompose_zero_eig needs a generator with a zero eigenvalue")
    target = chi_bar if isinstance(chi_bar, AnisoTensor) else AnisoTensor(matrix_to_coords(chi_bar))
    mem = membership(hull, target)
    if mem.status == "outside":
        raise OutsideHullError(f"target is outside the hull (margin {mem.margin:.3g})")
    vertex = _vertex_if(hull, target, BOUNDARY_TOL)
    if vertex is not None:
        return _check(vertex, hull.chi, target, tol)

    scale = hull.M
    frame = spectral(hull.chi).frame  # chi ~= scale * frame D frame^T
    d_model = np.diag([1.0, 0.0, -1.0])
    tn = target.matrix / scale
    inv = invariants(tn)
    flip = inv.det > 0.0
    if flip:
        # -D = S(pi/2).D keeps alpha and flips det
        tn = -tn
    lam, u, v = invert_f_map(min(inv.alpha, 1.0), abs(inv.det))
    theta = math.asin(math.sqrt(min(max(u, 0.0), 1.0)))
    tau = math.asin(math.sqrt(min(max(v, 0.0), 1.0)))
    ra, sb = R_plane12(theta), S_plane13(tau)
    model = lam * (ra.m @ d_model @ ra.m.T) + (1.0 - lam) * (sb.m @ d_model @ sb.m.T)
    u_rot = _align(model, tn)
    post = (S_plane13(math.pi / 2) if flip else Rotation.identity()) @ frame.T
    atoms = [(lam, u_rot @ ra @ post), (1.0 - lam, u_rot @ sb @ post)]
    measure = AtomicMeasure.from_atoms(_merge(atoms, hull.chi))
    return _check(measure, hull.chi, target, tol)


def _merge(atoms, chi, tol=1e-12):
    """Drop zero-weight atoms and merge atoms giving the same orbit point."""
    m = _as_tensor_matrix(chi)
    out = []
    for p, r in atoms:
        if p <= tol:
            continue
        pt = r.m @ m @ r.m.T
        for i, (q, s, qt) in enumerate(out):
            if np.abs(pt - qt).max() <= 1e-12 * max(1.0, np.abs(m).max()):
                out[i] = (q + p, s, qt)
                break
        else:
            out.append((p, r, pt))
    total = sum(p for p, _, _ in out)
    return [(p / total, r) for p, r, _ in out]


def _max_facet_atoms(chi_m, target_m, radius, tol=BOUNDARY_TOL):
    """Atoms on the facet ``L_e = M`` through ``target`` (top eigenvector ``e``).

    In eigenframes both the target and the generator sit on the e1-disc with
    U2-coordinate ``(rho, 0)`` and ``(radius, 0)``; two half-weight vertices
    at U2-angles ``+-delta`` average to the target.
    """
    fs = spectral(chi_m).frame
    st = spectral(target_m)
    ft = st.frame
    rho = 0.5 * (st.eigenvalues[1] - st.eigenvalues[2])
    if radius <= tol or abs(radius - rho) <= tol:
        return [(1.0, ft @ fs.T)]
    delta = math.acos(min(1.0, max(-1.0, rho / radius)))
    return [
        (0.5, ft @ coaxial_rotation(E1, 0.5 * delta) @ fs.T),
        (0.5, ft @ coaxial_rotation(E1, -0.5 * delta) @ fs.T),
    ]


def _boundary_atoms(hull, target_m):
    lam = eigenvalues(target_m)
    if hull.M - lam[0] <= lam[2] - hull.m:
        return _max_facet_atoms(hull.chi.matrix, target_m, hull.gamma_geom)
    # F_e^m of chi is F_e^M of -chi
    return _max_facet_atoms(-hull.chi.matrix, -target_m, hull.alpha_geom)


def _ray_exit(hull, start_m, target_m, tol=1e-12):
    """Largest ``t`` with ``start + t (target - start)`` still in V (``t >= 1``)."""
    d = target_m - start_m

    def g(t):
        return _margin(hull, start_m + t * d)

    lo, hi = 1.0, 2.0
    while g(hi) >= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e15:
            raise RuntimeError("ray never leaves the hull")
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def decompose(hull, chi_bar, start=None, tol=RECON_TOL):
    """At most three orbit points whose convex combination is ``chi_bar``.

    Boundary targets split on their facet disc; interior targets are joined
    to the vertex ``start . chi`` (default identity) and the ray is followed
    to the boundary, adding one atom.
    """
    target = chi_bar if isinstance(chi_bar, AnisoTensor) else AnisoTensor(matrix_to_coords(chi_bar))
    mem = membership(hull, target)
    if mem.status == "outside":
        raise OutsideHullError(f"target is outside the hull (margin {mem.margin:.3g})")
    if hull.has_zero_eigenvalue:
        return decompose_zero_eig(hull, target, tol=tol)
    tm = target.matrix
    if mem.status == "boundary":
        atoms = _boundary_atoms(hull, tm)
    else:
        r0 = Rotation.identity() if start is None else Rotation(_as_matrix(start))
        vm = r0.m @ hull.chi.matrix @ r0.m.T
        t = _ray_exit(hull, vm, tm)
        boundary = vm + t * (tm - vm)
        atoms = [(1.0 - 1.0 / t, r0)] + [(p / t, r) for p, r in _boundary_atoms(hull, boundary)]
    measure = AtomicMeasure.from_atoms(_merge(atoms, hull.chi))
    return _check(measure, hull.chi, target, tol)


# -- facets -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Facet:
    """A coaxial facet disc of V."""

    axis: np.ndarray
    kind: str  # "max" or "min"
    level: float
    radius: float
    center: AnisoTensor

    @property
    def degenerate(self):
        return self.radius <= BOUNDARY_TOL

    def point(self, phi):
        """Point of the facet circle at U2-angle ``phi``."""
        c = np.array([self.level, 0.0, 0.0, self.radius * math.cos(phi), self.radius * math.sin(phi)])
        return act(axis_frame(self.axis), AnisoTensor(c))

    def supporting_function(self):
        """``(axis, level)`` of the unique support ``L_axis = level``; None if degenerate."""
        if self.degenerate:
            return None
        return self.axis, self.level


def facet(hull, e, kind="max"):
    e = _check_unit(e)
    if kind == "max":
        level, radius = hull.M, hull.gamma_geom
    elif kind == "min":
        level, radius = hull.m, hull.alpha_geom
    else:
        raise ValueError("facet kind is 'max' or 'min'")
    center = act(axis_frame(e), AnisoTensor([level, 0.0, 0.0, 0.0, 0.0]))
    return Facet(e, kind, level, max(radius, 0.0), center)
