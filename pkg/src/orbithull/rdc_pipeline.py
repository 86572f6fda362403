"""
Residual dipolar couplings of a rotating ion and the tensors behind them.

The mean coupling of a dipole ``r`` is ``delta = C / |r|^5 * r^T chi_bar r``
where ``chi_bar`` is the orientation average of the ion's anisotropic
susceptibility tensor. The relation is linear in the five coordinates of
``chi_bar``, so five or more dipoles determine it by least squares; the
hull of the orbit then limits which orientation ensembles could produce it.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .pair_hull import TensorPair, act_pair, evaluate_pair, necessary_membership
from .single_ion_hull import AtomicMeasure, DomainError, evaluate, membership
from .tensor_core import (
    AnisoTensor,
    _as_matrix,
    _as_tensor_matrix,
    act,
    coords_to_matrix,
    eigenvalues,
    matrix_to_coords,
    tensor_from_json,
    tensor_to_json,
)

COND_WARN = 1e8
PMAX_TOL = 1e-10


class UnderdeterminedError(DomainError):
    """Fewer than five independent dipole directions."""


@dataclass(frozen=True)
class DipoleObservation:
    r: np.ndarray
    delta: float
    C: float = 1.0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(3)
        if not np.linalg.norm(r) > 0.0:
            raise ValueError("dipole vector must be non-zero")
        object.__setattr__(self, "r", r)


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """An orientation measure together with the ion tensor or tensor pair it moves."""

    measure: AtomicMeasure
    generator: AnisoTensor | TensorPair

    @property
    def mean(self):
        if isinstance(self.generator, TensorPair):
            return evaluate_pair(self.measure, self.generator)
        return evaluate(self.measure, self.generator)

    def to_json(self):
        out = dict(self.measure.to_json())
        if isinstance(self.generator, TensorPair):
            out["pair"] = self.generator.to_json()
        else:
            out["chi"] = tensor_to_json(self.generator)
        return out

    @classmethod
    def from_json(cls, obj):
        measure = AtomicMeasure.from_json(obj)
        if "pair" in obj:
            return cls(measure, TensorPair.from_json(obj["pair"]))
        return cls(measure, tensor_from_json(obj["chi"]))


def forward_rdc(chi_bar, r, C=1.0):
    """Mean RDC ``C / |r|^5 * r^T chi_bar r``."""
    r = np.asarray(r, dtype=float)
    n = np.linalg.norm(r)
    if not n > 0.0:
        raise ValueError("dipole vector must be non-zero")
    return float(C * (r @ _as_tensor_matrix(chi_bar) @ r) / n**5)


def design_matrix(rs, C=1.0):
    """Rows mapping the five tensor coordinates ``(v, w, x, y, z)`` to RDCs."""
    rs = np.atleast_2d(np.asarray(rs, dtype=float))
    C = np.broadcast_to(np.asarray(C, dtype=float), (len(rs),))
    x, y, z = rs.T
    n5 = np.linalg.norm(rs, axis=1) ** 5
    cols = np.stack([x * x - 0.5 * (y * y + z * z), 2 * x * y, 2 * x * z, y * y - z * z, 2 * y * z], axis=1)
    return cols * (C / n5)[:, None]


def mean_tensor(measure, chi):
    return evaluate(measure, chi)


def estimate_tensor(observations):
    """Least-squares tensor from dipole observations.

    Returns ``(chi_bar, rms_residual)``. Raises ``UnderdeterminedError`` for
    fewer than five observations or a design of rank below five.
    """
    obs = list(observations)
    if len(obs) < 5:
        raise UnderdeterminedError(f"need at least 5 observations, got {len(obs)}")
    a = design_matrix([o.r for o in obs], [o.C for o in obs])
    d = np.array([o.delta for o in obs])
    q, r = np.linalg.qr(a)
    s = np.linalg.svd(r, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise UnderdeterminedError("dipole directions do not determine the tensor (design rank < 5)")
    cond = s[0] / s[-1]
    if cond > COND_WARN:
        warnings.warn(f"ill-conditioned dipole design (condition number {cond:.3g})", RuntimeWarning, stacklevel=2)
    coords = np.linalg.solve(r, q.T @ d)
    resid = d - a @ coords
    return AnisoTensor(coords), float(math.sqrt(np.mean(resid**2)))


def simulate_observations(chi_bar, rs, sigma=0.0, C=1.0, rng=None):
    """Observations of ``chi_bar`` at dipoles ``rs`` with additive Gaussian noise of width ``sigma``."""
    rng = np.random.default_rng(rng)
    rs = np.atleast_2d(np.asarray(rs, dtype=float))
    a = design_matrix(rs, C)
    delta = a @ _as_tensor(chi_bar).coords + sigma * rng.standard_normal(len(rs))
    Cs = np.broadcast_to(np.asarray(C, dtype=float), (len(rs),))
    return [DipoleObservation(r, float(dl), float(c)) for r, dl, c in zip(rs, delta, Cs)]


def random_dipoles(n, rng=None, length=1.0):
    rng = np.random.default_rng(rng)
    v = rng.standard_normal((n, 3))
    return length * v / np.linalg.norm(v, axis=1, keepdims=True)


def _as_tensor(chi):
    if isinstance(chi, AnisoTensor):
        return chi
    return AnisoTensor(matrix_to_coords(_as_matrix(chi)))


# -- maximal orientation weight ---------------------------------------------------


def _feasible(lam_max, lam_min, M, m, p, tol):
    """Eigenvalues of ``(chi_bar - p X)`` within ``[(1-p) m, (1-p) M]``."""
    return lam_max <= (1.0 - p) * M + tol and lam_min >= (1.0 - p) * m - tol


def p_max(hull, chi_bar, R, tol=PMAX_TOL, slack=1e-12):
    """Largest weight orientation ``R`` can carry in a measure averaging to ``chi_bar``.

    Bisection on ``p`` over ``[0, 1 - 1e-12]``; equality with the vertex
    ``R . chi`` short-cuts to 1.
    """
    target = _as_tensor(chi_bar)
    mem = membership(hull, target)
    if mem.status == "outside":
        raise DomainError(f"target is outside the hull (margin {mem.margin:.3g})")
    xm = act(R, hull.chi).matrix
    tm = target.matrix
    scale = max(1.0, hull.M - hull.m)
    if np.abs(tm - xm).max() <= 1e-12 * scale:
        return 1.0

    def ok(p):
        lam = eigenvalues(AnisoTensor(matrix_to_coords(tm - p * xm)))
        return _feasible(lam[0], lam[2], hull.M, hull.m, p, slack * scale)

    lo, hi = 0.0, 1.0 - 1e-12
    if ok(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def p_max_pair_upper(pair, pair_bar, R, n_alpha=720, tol=PMAX_TOL, slack=1e-12):
    """Upper bound on the pair ``p_max``: the smallest single-ion value over ``n_alpha`` projections.

    Directions are ``2 pi k / n_alpha``; the value is non-increasing when
    ``n_alpha`` is refined by an integer factor.
    """
    nm = necessary_membership(pair, pair_bar, n_alpha=n_alpha)
    if not nm.passed:
        raise DomainError("target fails the projected eigenvalue bounds")
    xv = act_pair(R, pair)
    if np.abs(xv.vector - pair_bar.vector).max() <= 1e-12 * max(1.0, pair.scale):
        return 1.0
    phis = 2.0 * np.pi * np.arange(n_alpha) / n_alpha
    al = np.stack([np.cos(phis), np.sin(phis)], axis=1)

    def proj(p):
        return coords_to_matrix(al[:, :1] * p.chi1.coords + al[:, 1:] * p.chi2.coords)

    gen_eigs = np.linalg.eigvalsh(proj(pair))
    M, m = gen_eigs[:, 2], gen_eigs[:, 0]
    tm, xm = proj(pair_bar), proj(xv)
    scale = max(1.0, pair.scale)

    # each projection's feasible weights form an interval containing 0, so
    # one vectorised bisection finds every endpoint at once
    lo = np.zeros(n_alpha)
    hi = np.full(n_alpha, 1.0 - 1e-12)
    done = _feasible_each(tm, xm, M, m, hi, slack * scale)
    lo[done] = hi[done]
    while np.any(hi - lo > tol):
        mid = 0.5 * (lo + hi)
        f = _feasible_each(tm, xm, M, m, mid, slack * scale)
        lo = np.where(f, mid, lo)
        hi = np.where(f, hi, mid)
    return float(lo.min())


def _feasible_each(tm, xm, M, m, p, slack):
    ev = np.linalg.eigvalsh(tm - p[:, None, None] * xm)
    return (ev[:, 2] <= (1.0 - p) * M + slack) & (ev[:, 0] >= (1.0 - p) * m - slack)


# -- files ------------------------------------------------------------------------


def read_observations(path):
    """Observation CSV with header ``rx,ry,rz,delta[,C]``."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"rx", "ry", "rz", "delta"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain rx,ry,rz,delta")
        for row in reader:
            r = [float(row["rx"]), float(row["ry"]), float(row["rz"])]
            c = float(row["C"]) if row.get("C") not in (None, "") else 1.0
            out.append(DipoleObservation(r, float(row["delta"]), c))
    return out


def write_observations(path, observations):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rx", "ry", "rz", "delta", "C"])
        for o in observations:
            w.writerow(["%.17g" % v for v in (*o.r, o.delta, o.C)])


def read_ensemble(path):
    with open(path) as fh:
        return EnsembleSpec.from_json(json.load(fh))


def write_ensemble(path, ensemble):
    with open(path, "w") as fh:
        json.dump(ensemble.to_json(), fh, indent=2)
