"""
The 10-dimensional hull of the SO(3)-orbit of a pair of tensors.

For a unit ``alpha`` in R^2 the map ``pi_alpha(w1, w2) = alpha1 w1 + alpha2 w2``
is equivariant, so every single-ion bound on ``pi_alpha`` of a point is a
valid bound for the pair. Equality in ``L_e(pi_alpha(.)) <= M_alpha`` cuts
out the coaxial face ``F_{e, alpha}``, the hull of a coaxial-group orbit.

Inside such a face the rotations about ``e`` act on the U1 part by
``e^{i theta}`` and on the two U2 parts by ``e^{2 i theta}``; the half turn
about an axis orthogonal to ``e`` conjugates them. The points reachable from
one identity-component orbit are described by trigonometric moments
``(a, b)``, and those are characterised by a 3x3 moment matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .single_ion_hull import (
    AtomicMeasure,
    DomainError,
    HullSpec,
    OutsideHullError,
    membership,
)
from .tensor_core import (
    RANK_RTOL,
    AnisoTensor,
    Rotation,
    _as_matrix,
    _check_unit,
    axis_frame,
    coaxial_rotation,
    coords_to_matrix,
    degeneracy_tol,
    isotypical_split,
    matrix_to_coords,
    numerical_rank,
    random_rotations,
    spectral,
    tensor_from_json,
    tensor_to_json,
)

PSD_TOL = 1e-10
MM_RANK_TOL = 1e-9
FACE_TOL = 1e-8


# -- pairs and projections ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TensorPair:
    chi1: AnisoTensor
    chi2: AnisoTensor

    @classmethod
    def from_vector(cls, vec):
        vec = np.asarray(vec, dtype=float)
        return cls(AnisoTensor(vec[:5]), AnisoTensor(vec[5:]))

    @property
    def vector(self):
        return np.concatenate([self.chi1.coords, self.chi2.coords])

    @property
    def rank(self):
        return numerical_rank(np.vstack([self.chi1.coords, self.chi2.coords]))

    @property
    def scale(self):
        return max(1e-300, math.hypot(self.chi1.norm, self.chi2.norm))

    def __add__(self, other):
        return TensorPair(self.chi1 + other.chi1, self.chi2 + other.chi2)

    def __sub__(self, other):
        return TensorPair(self.chi1 - other.chi1, self.chi2 - other.chi2)

    def __mul__(self, s):
        return TensorPair(self.chi1 * s, self.chi2 * s)

    __rmul__ = __mul__

    def to_json(self):
        return {"chi1": tensor_to_json(self.chi1), "chi2": tensor_to_json(self.chi2)}

    @classmethod
    def from_json(cls, obj):
        return cls(tensor_from_json(obj["chi1"]), tensor_from_json(obj["chi2"]))


def act_pair(R, pair):
    r = _as_matrix(R)
    return TensorPair(
        AnisoTensor(matrix_to_coords(r @ pair.chi1.matrix @ r.T)),
        AnisoTensor(matrix_to_coords(r @ pair.chi2.matrix @ r.T)),
    )


def evaluate_pair(measure, pair):
    acc = np.zeros(10)
    for p, r in measure.atoms:
        acc += p * act_pair(r, pair).vector
    return TensorPair.from_vector(acc)


def pair_reconstruction_error(measure, pair, target):
    got = evaluate_pair(measure, pair)
    return float(
        max(
            np.abs(got.chi1.matrix - target.chi1.matrix).max(),
            np.abs(got.chi2.matrix - target.chi2.matrix).max(),
        )
    )


def alpha_from_angle(phi):
    return np.array([math.cos(phi), math.sin(phi)])


def _check_alpha(alpha):
    a = np.asarray(alpha, dtype=float)
    if a.shape != (2,) or abs(a @ a - 1.0) > 1e-12:
        raise ValueError("alpha must be a unit 2-vector")
    return a


def project_alpha(pair, alpha):
    a = _check_alpha(alpha)
    return AnisoTensor(a[0] * pair.chi1.coords + a[1] * pair.chi2.coords)


def L_e_alpha(pair_bar, e, alpha):
    e = _check_unit(e)
    m = project_alpha(pair_bar, alpha).matrix
    return float(e @ m @ e)


# -- dimensions -----------------------------------------------------------------


def hull_dimension(tensors):
    """Dimension of the hull of the orbit of a tuple of tensors: 5 x rank of their span."""
    c = np.vstack([t.coords for t in tensors])
    return 5 * numerical_rank(c)


def affine_rank(points, scale, rtol=RANK_RTOL):
    """Affine rank of a point cloud; the threshold is absolute in units of ``scale``."""
    pts = np.asarray(points, dtype=float)
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return int(np.sum(s > rtol * math.sqrt(len(pts)) * scale))


def orbit_affine_rank(tensors, n_samples=500, rng=0):
    """Empirical dimension of the orbit hull of ``tensors`` from random rotations."""
    rots = random_rotations(n_samples, rng)
    mats = np.array([t.matrix for t in tensors])
    pts = np.einsum("nij,tjk,nlk->ntil", rots, mats, rots)
    pts = matrix_to_coords(pts).reshape(n_samples, -1)
    scale = math.sqrt(sum(t.norm**2 for t in tensors))
    return affine_rank(pts, scale)


# -- coaxial faces ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoaxialFace:
    """The face ``{L_{e, alpha} = M_alpha}`` through the vertex ``base . chi``.

    ``u1_perp``, ``u2_alpha`` and ``u2_perp`` are the complex U1/U2
    coordinates (axis frame of ``e``) of the base vertex projected on
    ``alpha`` and on ``alpha_perp = (-alpha2, alpha1)``; ``s_perp`` is the
    invariant U0 part of the latter.
    """

    axis: np.ndarray
    alpha: np.ndarray
    M_alpha: float
    base: Rotation
    d1: int
    d2: int
    dim: int
    u1_perp: complex
    u2_alpha: complex
    u2_perp: complex
    s_perp: float
    scale: float

    @property
    def alpha_perp(self):
        return np.array([-self.alpha[1], self.alpha[0]])

    def half_turn(self):
        """A half turn about an axis orthogonal to ``e``; it swaps the two identity-component orbits."""
        p = axis_frame(self.axis).m
        return Rotation(p @ np.diag([-1.0, -1.0, 1.0]) @ p.T)

    def group_element(self, theta, reflect=False):
        """``R_{e, theta}`` or ``R_{e, theta} H`` (``H`` the half turn), composed with ``base``."""
        g = coaxial_rotation(self.axis, theta)
        if reflect:
            g = g @ self.half_turn()
        return g @ self.base


def coaxial_face(pair, alpha, which_eigvec=0, base=None):
    """Coaxial face of the pair hull for direction ``alpha``.

    The axis ``e`` is eigenvector ``which_eigvec`` of ``pi_alpha(base . chi)``
    and must carry the top eigenvalue (index 0 always does; 1 or 2 only when
    the top eigenvalue is repeated).
    """
    a = _check_alpha(alpha)
    r0 = Rotation.identity() if base is None else Rotation(_as_matrix(base))
    chi0 = act_pair(r0, pair)
    chi_a = project_alpha(chi0, a)
    if chi_a.norm <= 1e-14 * pair.scale:
        raise DomainError("pi_alpha of the pair is zero")
    sp = spectral(chi_a)
    if sp.max - sp.eigenvalues[which_eigvec] > degeneracy_tol(chi_a):
        raise ValueError(f"eigenvector {which_eigvec} does not carry the top eigenvalue")
    e = sp.frame.m[:, which_eigvec].copy()
    perp = np.array([-a[1], a[0]])
    sa = isotypical_split(chi_a, e)
    sq = isotypical_split(project_alpha(chi0, perp), e)
    scale = pair.scale
    u1 = sq.u1_complex
    ya, yp = sa.u2_complex, sq.u2_complex
    d1 = int(abs(u1) > RANK_RTOL * scale)
    s = np.linalg.svd(np.array([[ya.real, ya.imag], [yp.real, yp.imag]]), compute_uv=False)
    d2 = int(np.sum(s > RANK_RTOL * scale))
    return CoaxialFace(
        axis=e,
        alpha=a,
        M_alpha=sp.max,
        base=r0,
        d1=d1,
        d2=d2,
        dim=2 * (d1 + d2),
        u1_perp=u1,
        u2_alpha=ya,
        u2_perp=yp,
        s_perp=sq.scalar,
        scale=scale,
    )


def face_group_samples(face, n_samples):
    """Rotation matrices ``(n, 3, 3)`` in the coaxial coset ``Q_e base``, half from each component."""
    h = max(1, n_samples // 2)
    thetas = 2.0 * np.pi * (np.arange(h) + 0.137) / h
    e = face.axis
    k = np.array([[0.0, -e[2], e[1]], [e[2], 0.0, -e[0]], [-e[1], e[0], 0.0]])
    c, s = np.cos(thetas)[:, None, None], np.sin(thetas)[:, None, None]
    turns = np.eye(3) + s * k + (1.0 - c) * (k @ k)
    base = face.base.m
    return np.concatenate([turns @ base, turns @ face.half_turn().m @ base])


def face_dimension_empirical(face, pair, n_samples=40):
    """Affine rank of sampled points of the coaxial orbit spanning ``face``."""
    if n_samples < 20:
        raise ValueError("n_samples must be at least 20")
    g = face_group_samples(face, n_samples)
    mats = np.stack([pair.chi1.matrix, pair.chi2.matrix])
    pts = matrix_to_coords(np.einsum("nij,tjk,nlk->ntil", g, mats, g)).reshape(len(g), -1)
    return affine_rank(pts, pair.scale)


@dataclass(frozen=True)
class FaceScanRow:
    alpha_angle: float
    d1: int
    d2: int
    dim: int
    M_alpha: float


def coaxial_scan(pair, n_alpha=720):
    """Face dimensions over ``n_alpha`` equally spaced directions on the circle."""
    rows = []
    for k in range(n_alpha):
        phi = 2.0 * math.pi * k / n_alpha
        f = coaxial_face(pair, alpha_from_angle(phi))
        rows.append(FaceScanRow(phi, f.d1, f.d2, f.dim, f.M_alpha))
    return rows


# -- moment matrices and the circle-orbit hull B --------------------------------


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    a: complex
    b: complex
    M: np.ndarray
    eigenvalues: np.ndarray
    psd: bool
    rank: int


def _moment_array(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    m = np.empty(np.broadcast(a, b).shape + (3, 3), dtype=complex)
    m[..., 0, 0] = m[..., 1, 1] = m[..., 2, 2] = 1.0
    m[..., 0, 1] = a
    m[..., 1, 0] = np.conj(a)
    m[..., 0, 2] = np.conj(a)
    m[..., 2, 0] = a
    m[..., 1, 2] = np.conj(b)
    m[..., 2, 1] = b
    return m


def moment_matrix(a, b):
    """Moment matrix ``[[1, a, conj a], [conj a, 1, conj b], [a, b, 1]]`` with psd flag and rank."""
    a, b = complex(a), complex(b)
    m = _moment_array(a, b)
    ev = np.linalg.eigvalsh(m)
    return MomentMatrix(a, b, m, ev, bool(ev[0] >= -PSD_TOL), int(np.sum(ev > MM_RANK_TOL)))


def moment_matrix_batch(a, b):
    """Vectorised ``(psd, rank)`` for arrays of moments."""
    ev = np.linalg.eigvalsh(_moment_array(a, b))
    return ev[..., 0] >= -PSD_TOL, np.sum(ev > MM_RANK_TOL, axis=-1)


def moment_det(a, b):
    """``det M = 1 + 2 Re(conj(a)^2 b) - 2|a|^2 - |b|^2``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return 1.0 + 2.0 * np.real(np.conj(a) ** 2 * b) - 2.0 * np.abs(a) ** 2 - np.abs(b) ** 2


def in_B(a, b, tol=PSD_TOL):
    """Closed-form membership in B: ``|a| <= 1``, ``|b| <= 1``, ``det M >= 0``."""
    return (
        (np.abs(a) <= 1.0 + tol) & (np.abs(b) <= 1.0 + tol) & (moment_det(a, b) >= -tol)
    )


def circle_moments(weights, thetas):
    w = np.asarray(weights, dtype=float)
    z = np.exp(1j * np.asarray(thetas, dtype=float))
    return complex(np.sum(w * z)), complex(np.sum(w * z * z))


def _weights_for(nodes, a, b):
    """Real non-negative weights with ``sum w z^k = (1, a, b)`` for ``k = 0, 1, 2``."""
    v = np.vstack([np.ones_like(nodes), nodes, nodes**2])
    rhs = np.array([1.0, a, b], dtype=complex)
    w = np.linalg.lstsq(np.vstack([v.real, v.imag]), np.concatenate([rhs.real, rhs.imag]), rcond=None)[0]
    w = np.clip(w, 0.0, None)
    return w / w.sum()


def circle_hull_decompose(a, b, psi=0.0):
    """Atoms ``(weight, theta)`` on the circle with first/second moments ``(a, b)``.

    The atom count equals the rank of the moment matrix. Rank 2 reads the
    support off the kernel of the Toeplitz matrix; rank 3 first extends the
    moments by a third one on the boundary of its admissible disc (the
    angle ``psi`` picks which), making the 4x4 Toeplitz matrix singular.
    """
    mm = moment_matrix(a, b)
    if not mm.psd:
        raise DomainError(f"({a}, {b}) is outside B: moment matrix is not positive semi-definite")
    a, b = mm.a, mm.b
    if mm.rank <= 1:
        return [(1.0, float(np.angle(a)) % (2 * math.pi))]
    t2 = np.array([[1.0, a, b], [np.conj(a), 1.0, a], [np.conj(b), np.conj(a), 1.0]])
    if mm.rank == 2:
        w, v = np.linalg.eigh(t2)
        q = v[:, 0]
        nodes = np.roots(q[::-1])
    else:
        k = np.linalg.inv(t2)
        h = np.array([0.0, b, a])
        kh = k @ h
        c = -kh[0] / k[0, 0]
        r2 = (1.0 - np.real(np.conj(h) @ kh) + abs(kh[0]) ** 2 / k[0, 0].real) / k[0, 0].real
        t3 = c + math.sqrt(max(r2, 0.0)) * np.exp(1j * psi)
        g = np.array([t3, b, a])
        t_ext = np.zeros((4, 4), dtype=complex)
        t_ext[:3, :3] = t2
        t_ext[:3, 3] = g
        t_ext[3, :3] = np.conj(g)
        t_ext[3, 3] = 1.0
        w, v = np.linalg.eigh(t_ext)
        q = v[:, 0]
        nodes = np.roots(q[::-1])
    nodes = nodes / np.abs(nodes)
    weights = _weights_for(nodes, a, b)
    return [(float(p), float(np.angle(z)) % (2 * math.pi)) for p, z in zip(weights, nodes) if p > 0.0]


# -- facet decomposition ---------------------------------------------------------


@dataclass(frozen=True)
class FaceCoordinates:
    """Target on a face written as ``lam v+ + (1 - lam) v-`` data."""

    t1: complex
    b_plus: complex
    b_minus: complex


def face_coordinates(face, target, tol=FACE_TOL):
    a, perp = face.alpha, face.alpha_perp
    sa = isotypical_split(project_alpha(target, a), face.axis)
    sq = isotypical_split(project_alpha(target, perp), face.axis)
    lim = tol * face.scale
    if abs(sa.scalar - face.M_alpha) > lim:
        raise DomainError(f"target is off the face: L_e,alpha - M_alpha = {sa.scalar - face.M_alpha:.3g}")
    if abs(sa.u1_complex) > lim or abs(sq.scalar - face.s_perp) > lim:
        raise DomainError("target is not in the affine span of the face")
    ya, yp = face.u2_alpha, face.u2_perp
    mat = np.array([[ya, np.conj(ya)], [yp, np.conj(yp)]])
    bp, bm = np.linalg.solve(mat, np.array([sa.u2_complex, sq.u2_complex]))
    return FaceCoordinates(sq.u1_complex, complex(bp), complex(bm))


def _atoms_to_measure(face, plus, minus, lam):
    atoms = [(lam * w, face.group_element(t)) for w, t in plus]
    atoms += [((1.0 - lam) * w, face.group_element(t, reflect=True)) for w, t in minus]
    atoms = [(p, r) for p, r in atoms if p > 1e-15]
    total = sum(p for p, _ in atoms)
    return AtomicMeasure.from_atoms((p / total, r) for p, r in atoms)


def _minus_moments(fc, x, lam, a_plus):
    mu = 1.0 - lam
    return (fc.t1 - lam * a_plus * x) / (np.conj(x) * mu), fc.b_minus / mu


def _two_atom_family(b, theta1, k2):
    """2-atom circle measures with second moment ``b``: first atom at ``theta1``.

    Returns ``(w, theta2, a)`` (arrays); ``w`` is the weight at ``theta1``.
    """
    p1 = np.exp(2j * theta1)
    d = b - p1
    dd = np.abs(d) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -2.0 * np.real(np.conj(p1) * d) / dd
        w = 1.0 - 1.0 / s
    p2 = p1 + s * d
    theta2 = 0.5 * np.angle(p2) + math.pi * k2
    a = w * np.exp(1j * theta1) + (1.0 - w) * np.exp(1j * theta2)
    return w, theta2, a


def facet_decompose(face, pair, target, tol=1e-7, n_theta=360, n_lambda=100):
    """At most four coaxial-coset vertices averaging to ``target`` on a 6-dimensional face.

    Tries, in order: the target in one identity-component hull; a vertex of
    one component plus up to three of the other; a grid over the
    two-atom boundary family of the first component and ``lambda`` with the
    remainder pushed onto the boundary of the second (``det M = 0``),
    refined by root bracketing.
    """
    if face.dim != 6:
        raise DomainError(f"facet_decompose needs a 6-dimensional face, got {face.dim}")
    fc = face_coordinates(face, target)
    x = face.u1_perp
    bp, bm = fc.b_plus, fc.b_minus

    def check(measure):
        err = pair_reconstruction_error(measure, pair, target)
        if err > tol:
            raise RuntimeError(f"facet decomposition self-check failed: error {err:.3g}")
        return measure

    eps = 1e-12
    # target inside one component hull
    if abs(bm) <= eps and in_B(fc.t1 / x, bp):
        return check(_atoms_to_measure(face, circle_hull_decompose(fc.t1 / x, bp), [], 1.0))
    if abs(bp) <= eps and in_B(fc.t1 / np.conj(x), bm):
        return check(_atoms_to_measure(face, [], circle_hull_decompose(fc.t1 / np.conj(x), bm), 0.0))

    # one vertex of F+ plus <= 3 atoms of F-, and the mirror case
    candidates = []
    if eps < abs(bp) < 1.0:
        lam = abs(bp)
        th0 = 0.5 * np.angle(bp)
        for th in (th0, th0 + math.pi):
            a_m, b_m = _minus_moments(fc, x, lam, np.exp(1j * th))
            if in_B(a_m, b_m):
                candidates.append((lam, [(1.0, th)], (a_m, b_m), "minus"))
    if eps < abs(bm) < 1.0:
        mu = abs(bm)
        lam = 1.0 - mu
        th0 = 0.5 * np.angle(bm)
        for th in (th0, th0 + math.pi):
            a_m = np.exp(1j * th)
            a_p = (fc.t1 - mu * a_m * np.conj(x)) / (x * lam)
            b_p = bp / lam
            if in_B(a_p, b_p):
                candidates.append((lam, [(1.0, th)], (a_p, b_p), "plus"))
    for lam, vert, (ca, cb), side in candidates:
        try:
            rest = circle_hull_decompose(ca, cb)
        except DomainError:
            continue
        if side == "minus":
            m = _atoms_to_measure(face, vert, rest, lam)
        else:
            m = _atoms_to_measure(face, rest, vert, lam)
        return check(m)

    # boundary-boundary search
    lo, hi = abs(bp), 1.0 - abs(bm)
    if hi <= lo:
        raise DomainError("target is not in the face (no admissible split weight)")
    for n_t, n_l in ((n_theta, n_lambda), (4 * n_theta, 4 * n_lambda), (8 * n_theta, 16 * n_lambda)):
        found = _boundary_search(face, fc, lo, hi, n_t, n_l)
        if found is not None:
            lam, plus, a_m, b_m = found
            minus = circle_hull_decompose(a_m, b_m)
            return check(_atoms_to_measure(face, plus, minus, lam))
    raise RuntimeError("facet decomposition search failed; the target may lie outside the face")


def _sign_changes(s0, s1):
    return np.argwhere(np.isfinite(s0) & np.isfinite(s1) & (np.sign(s0) != np.sign(s1)))


def _refine(fields, g, x0, x1, point):
    from scipy.optimize import brentq

    try:
        root = brentq(g, x0, x1, xtol=1e-15, rtol=1e-15, maxiter=200)
    except ValueError:
        return None
    lam, theta1 = point(root)
    w1, th2, _, a_m, b_m = fields(lam, theta1)
    if not (0.0 <= w1 <= 1.0) or abs(a_m) > 1.0 + 1e-12 or abs(b_m) > 1.0 + 1e-12:
        return None
    plus = [(float(w1), float(theta1)), (float(1.0 - w1), float(th2))]
    return float(lam), plus, complex(a_m), complex(b_m)


def _boundary_search(face, fc, lo, hi, n_t, n_l):
    x = face.u1_perp
    span = hi - lo
    lams = lo + span * (np.arange(1, n_l + 1) - 0.5) / n_l
    thetas = 2.0 * math.pi * np.arange(n_t) / n_t
    L, T = np.meshgrid(lams, thetas, indexing="ij")
    for k2 in (0, 1):

        def fields(lam, theta1):
            b_plus = fc.b_plus / lam
            w, th2, a_p = _two_atom_family(b_plus, theta1, k2)
            a_m, b_m = _minus_moments(fc, x, lam, a_p)
            return w, th2, a_p, a_m, b_m

        w, _, _, a_m, b_m = fields(L, T)
        ok_w = np.isfinite(w) & (w >= 0.0) & (w <= 1.0)
        det = np.where(ok_w, moment_det(a_m, b_m), np.nan)
        # sign changes of det between grid neighbours, first along theta (wrapping), then lambda
        d_next = np.roll(det, -1, axis=1)
        for i, j in _sign_changes(det, d_next):
            lam = L[i, j]
            t0 = T[i, j]
            t1 = t0 + 2.0 * math.pi / n_t

            def g(th):
                return float(moment_det(*fields(lam, th)[3:]))

            found = _refine(fields, g, t0, t1, lambda th: (lam, th))
            if found is not None:
                return found
        for i, j in _sign_changes(det[:-1], det[1:]):
            theta1 = T[i, j]

            def g(lam):
                return float(moment_det(*fields(lam, theta1)[3:]))

            found = _refine(fields, g, L[i, j], L[i + 1, j], lambda lam: (lam, theta1))
            if found is not None:
                return found
    return None


# -- necessary membership and the pair decomposition experiment ------------------


@dataclass(frozen=True)
class NecessaryMembership:
    passed: bool
    margin: float
    witness_alpha: np.ndarray | None = None
    witness_index: int | None = None


def _upper_margins(pair, pair_bar, phis):
    """``M_alpha - lambda_max(pair_bar_alpha)``; the lower bound at ``alpha`` is the upper one at ``-alpha``."""
    al = np.stack([np.cos(phis), np.sin(phis)], axis=1)
    gen = coords_to_matrix(al[:, :1] * pair.chi1.coords + al[:, 1:] * pair.chi2.coords)
    tgt = coords_to_matrix(al[:, :1] * pair_bar.chi1.coords + al[:, 1:] * pair_bar.chi2.coords)
    return np.linalg.eigvalsh(gen)[:, 2] - np.linalg.eigvalsh(tgt)[:, 2]


def _sweep_margins(pair, pair_bar, phis):
    return np.minimum(_upper_margins(pair, pair_bar, phis), _upper_margins(pair, pair_bar, phis + np.pi))


def necessary_membership(pair, pair_bar, n_alpha=720, tol=1e-9):
    """Single-ion membership of ``pi_alpha(pair_bar)`` for ``n_alpha`` directions.

    Necessary for membership in the pair hull. Fails on the lowest-index
    violating direction.
    """
    if n_alpha < 8:
        raise ValueError("n_alpha must be at least 8")
    phis = 2.0 * np.pi * np.arange(n_alpha) / n_alpha
    margins = _sweep_margins(pair, pair_bar, phis)
    bad = np.flatnonzero(margins < -tol)
    if bad.size:
        k = int(bad[0])
        return NecessaryMembership(False, float(margins.min()), alpha_from_angle(phis[k]), k)
    return NecessaryMembership(True, float(margins.min()))


def single_ion_projection_check(pair, pair_bar, alpha):
    """Same test for one direction through the single-ion hull (reference path)."""
    hull = HullSpec.from_tensor(project_alpha(pair, alpha))
    return membership(hull, project_alpha(pair_bar, alpha))


def _margin_slope(pair, pair_bar, phi):
    """d/dphi of ``M_phi - lambda_max(pair_bar_phi)``: each term is ``<e, w_perp e>`` at its top eigenvector."""
    a = alpha_from_angle(phi)
    perp = np.array([-a[1], a[0]])
    out = 0.0
    for sign, p in ((1.0, pair), (-1.0, pair_bar)):
        _, v = np.linalg.eigh(project_alpha(p, a).matrix)
        e = v[:, 2]
        out += sign * float(e @ project_alpha(p, perp).matrix @ e)
    return out


def min_margin_alpha(pair, pair_bar, n_alpha=360):
    """Direction whose upper projected bound is tightest.

    A sweep locates the minimum; it is then refined as a root of the
    margin's derivative, which pins the angle to machine precision where a
    direct minimisation only gets its square root.
    Returns ``(phi, margin)`` with ``margin = M_alpha - lambda_max(pair_bar_alpha)``.
    """
    from scipy.optimize import brentq, minimize_scalar

    phis = 2.0 * np.pi * np.arange(n_alpha) / n_alpha
    m = _upper_margins(pair, pair_bar, phis)
    k = int(np.argmin(m))
    h = 2.0 * np.pi / n_alpha
    lo, hi = phis[k] - h, phis[k] + h
    phi = None
    try:
        if _margin_slope(pair, pair_bar, lo) < 0.0 < _margin_slope(pair, pair_bar, hi):
            phi = brentq(lambda p: _margin_slope(pair, pair_bar, p), lo, hi, xtol=1e-15, rtol=1e-15)
    except (ValueError, np.linalg.LinAlgError):
        phi = None
    if phi is None:
        phi = minimize_scalar(
            lambda p: float(_upper_margins(pair, pair_bar, np.array([p]))[0]),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12},
        ).x
    val = float(_upper_margins(pair, pair_bar, np.array([phi]))[0])
    if val < m[k]:
        return float(phi) % (2 * math.pi), val
    return float(phis[k]), float(m[k])


def face_through(pair, pair_bar, phi):
    """Coaxial face for direction ``phi`` whose axis is the top eigenvector of ``pi_alpha(pair_bar)``."""
    a = alpha_from_angle(phi)
    ft = spectral(project_alpha(pair_bar, a)).frame
    fs = spectral(project_alpha(pair, a)).frame
    return coaxial_face(pair, a, base=ft @ fs.T)


def _ray_facet_split(pair, pair_bar, r0, n_alpha, tol):
    v0 = act_pair(r0, pair).vector
    d = pair_bar.vector - v0

    def g(t):
        return min_margin_alpha(pair, TensorPair.from_vector(v0 + t * d), n_alpha)[1]

    lo, hi = 1.0, 2.0
    while g(hi) >= 0.0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-13 * lo:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    b = TensorPair.from_vector(v0 + lo * d)
    phi, _ = min_margin_alpha(pair, b, n_alpha)
    inner = facet_decompose(face_through(pair, b, phi), pair, b, tol=tol)
    return AtomicMeasure.from_atoms([(1.0 - 1.0 / lo, r0)] + [(p / lo, r) for p, r in inner.atoms])


def decompose_pair(pair, pair_bar, start=None, n_alpha=360, tol=1e-7, n_starts=20, rng=0):
    """Vertex-plus-facet decomposition of a point of the pair hull (at most 5 atoms).

    Follows the ray from a vertex through the target to the first projected
    bound that becomes tight, then splits that exit point on its coaxial
    face. The projected bounds are only necessary, so the exit point can
    miss the face; the next of ``n_starts`` seeded start vertices is then
    tried. Raises ``RuntimeError`` if none works.
    """
    nm = necessary_membership(pair, pair_bar, n_alpha=max(n_alpha, 8))
    if not nm.passed:
        raise OutsideHullError("target fails the projected eigenvalue bounds")
    phi, margin = min_margin_alpha(pair, pair_bar, n_alpha)
    if margin <= 1e-10 * pair.scale:
        return facet_decompose(face_through(pair, pair_bar, phi), pair, pair_bar, tol=tol)
    first = Rotation.identity() if start is None else Rotation(_as_matrix(start))
    starts = [first] + [Rotation(r) for r in random_rotations(n_starts - 1, rng)]
    for r0 in starts:
        try:
            measure = _ray_facet_split(pair, pair_bar, r0, n_alpha, tol)
        except (DomainError, RuntimeError):
            continue
        if pair_reconstruction_error(measure, pair, pair_bar) <= tol:
            return measure
    raise RuntimeError(f"no vertex-plus-facet split found from {len(starts)} start vertices")
