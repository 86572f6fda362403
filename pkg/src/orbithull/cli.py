"""
Command-line front end.

Each verb reads one input file (JSON, or CSV for ``estimate``) and writes
JSON or CSV to ``--output`` or stdout. Exit status is 0 on success, 2 when
the input is valid but outside the domain of the operation (a target
outside a hull, an under-determined fit), and 1 for unreadable input or a
failed self-check.

Input shapes::

    tensor   {"coords": [v, w, x, y, z]}  or  {"matrix": [[...], [...], [...]]}
    pair     {"chi1": tensor, "chi2": tensor}
    problem  {"chi": tensor, "target": tensor}  or  {"pair": pair, "target": pair}
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import pair_hull as ph
from . import rdc_pipeline as rdc
from . import single_ion_hull as sh
from .tensor_core import (
    AnisoTensor,
    rotation_from_json,
    tensor_from_json,
    tensor_to_json,
)

VERBS = {
    "estimate": "fit the averaged tensor to an RDC CSV",
    "membership": "inside/boundary/outside for a single-ion or pair target",
    "decompose": "short atomic measure reproducing a target",
    "invariants": "(alpha, det) of a tensor and its place in region X",
    "region-x": "boundary curves of region X, optionally with target points",
    "pmax": "largest weight an orientation can carry",
    "coaxial-scan": "face dimensions over an alpha sweep of a pair",
    "facet-dim": "dimension of one coaxial face, by formula and by sampling",
    "hull-dim": "dimension of the orbit hull of one or more tensors",
    "facet-decompose": "at most four atoms for a point on a coaxial facet",
    "simulate": "noisy RDC observations of an ensemble",
}


class InputError(Exception):
    pass


class SelfCheckError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- serialisation ---------------------------------------------------------------


def dumps(obj, indent=2, _level=0):
    """JSON with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValueError("non-finite number in output")
        return "%.17g" % obj
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _parse(fn, *args):
    try:
        return fn(*args)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"malformed input: {exc!r}") from exc


def _problem(obj):
    """``("single", hull, target)`` or ``("pair", pair, target)`` from an input object."""
    if "pair" in obj:
        pair = _parse(ph.TensorPair.from_json, obj["pair"])
        target = _parse(ph.TensorPair.from_json, obj["target"]) if "target" in obj else None
        return "pair", pair, target
    if "chi" in obj:
        chi = _parse(tensor_from_json, obj["chi"])
        target = _parse(tensor_from_json, obj["target"]) if "target" in obj else None
        return "single", _parse(sh.HullSpec.from_tensor, chi), target
    raise InputError('input needs a "chi" or a "pair" entry')


def _need_target(target):
    if target is None:
        raise InputError('input needs a "target" entry')
    return target


def _measure_json(measure, error):
    out = measure.to_json()
    out["n_atoms"] = len(measure)
    out["reconstruction_error"] = error
    return out


def _alpha_of(obj):
    if "alpha" in obj:
        return _parse(lambda a: np.asarray(a, dtype=float).reshape(2), obj["alpha"])
    if "alpha_angle" in obj:
        return ph.alpha_from_angle(float(obj["alpha_angle"]))
    return None


# -- verbs ----------------------------------------------------------------------


def cmd_estimate(args):
    try:
        obs = rdc.read_observations(args.input)
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc}") from exc
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    chi, resid = rdc.estimate_tensor(obs)
    return {"chi": tensor_to_json(chi), "matrix": chi.matrix.tolist(), "rms_residual": resid, "n_observations": len(obs)}


def cmd_membership(args):
    kind, gen, target = _problem(_load_json(args.input))
    target = _need_target(target)
    if kind == "single":
        mem = sh.membership(gen, target, tol=args.tol)
        return {"kind": kind, "status": mem.status, "margin": mem.margin}
    nm = ph.necessary_membership(gen, target, n_alpha=args.n_alpha, tol=args.tol)
    out = {"kind": kind, "status": "pass" if nm.passed else "fail", "margin": nm.margin, "necessary_only": True}
    if not nm.passed:
        out["witness_alpha"] = nm.witness_alpha.tolist()
        out["witness_index"] = nm.witness_index
    return out


def _validated(measure, error, tol):
    if error > tol:
        raise SelfCheckError(f"decomposition does not reproduce the target (error {error:.3g})")
    return _measure_json(measure, error)


def cmd_decompose(args):
    obj = _load_json(args.input)
    kind, gen, target = _problem(obj)
    target = _need_target(target)
    if kind == "single":
        measure = sh.decompose(gen, target)
        err = sh.reconstruction_error(measure, gen.chi, target)
        return _validated(measure, err, max(args.tol, 1e-8))
    return _pair_decompose(gen, target, _alpha_of(obj), args)


def _pair_decompose(pair, target, alpha, args):
    nm = ph.necessary_membership(pair, target, n_alpha=args.n_alpha)
    if not nm.passed:
        raise sh.OutsideHullError("target fails the projected eigenvalue bounds")
    if alpha is not None:
        phi = math.atan2(alpha[1], alpha[0])
        measure = ph.facet_decompose(ph.face_through(pair, target, phi), pair, target)
    else:
        phi, margin = ph.min_margin_alpha(pair, target, args.n_alpha)
        if margin <= 1e-10 * pair.scale:
            measure = ph.facet_decompose(ph.face_through(pair, target, phi), pair, target)
        else:
            measure = ph.decompose_pair(pair, target, n_alpha=args.n_alpha, rng=args.seed)
    err = ph.pair_reconstruction_error(measure, pair, target)
    return _validated(measure, err, 1e-7)


def cmd_facet_decompose(args):
    obj = _load_json(args.input)
    kind, pair, target = _problem(obj)
    if kind != "pair":
        raise InputError("facet-decompose needs a pair input")
    target = _need_target(target)
    alpha = _alpha_of(obj)
    if alpha is None:
        phi, margin = ph.min_margin_alpha(pair, target, args.n_alpha)
        if margin > 1e-8 * pair.scale:
            raise sh.DomainError(f"target is not on a coaxial face (margin {margin:.3g})")
    else:
        phi = math.atan2(alpha[1], alpha[0])
    face = ph.face_through(pair, target, phi)
    measure = ph.facet_decompose(face, pair, target)
    out = _validated(measure, ph.pair_reconstruction_error(measure, pair, target), 1e-7)
    out["alpha"] = face.alpha.tolist()
    out["axis"] = face.axis.tolist()
    return out


def cmd_invariants(args):
    obj = _load_json(args.input)
    raw = obj.get("target", obj)
    target = _parse(tensor_from_json, raw)
    inv = sh.invariants(target)
    out = {"alpha": inv.alpha, "det": inv.det}
    if "chi" in obj:
        hull = _parse(sh.HullSpec.from_tensor, _parse(tensor_from_json, obj["chi"]))
        norm = sh.invariants(target / hull.M)
        out["normalized_alpha"] = norm.alpha
        out["normalized_det"] = norm.det
        out["in_region_X"] = bool(sh.region_X_contains(norm.alpha, norm.det))
    else:
        out["in_region_X"] = bool(sh.region_X_contains(inv.alpha, inv.det))
    return out


def cmd_region_x(args):
    rows = [("curve", "alpha", "det")] + list(sh.region_X_boundary(args.n_points))
    if args.input:
        obj = _load_json(args.input)
        for i, raw in enumerate(obj.get("targets", [])):
            inv = sh.invariants(_parse(tensor_from_json, raw))
            rows.append((f"point_{i}", inv.alpha, inv.det))
    return rows


def cmd_pmax(args):
    obj = _load_json(args.input)
    kind, gen, target = _problem(obj)
    target = _need_target(target)
    if "R" not in obj:
        raise InputError('input needs an "R" rotation entry')
    R = _parse(rotation_from_json, obj["R"])
    if kind == "single":
        return {"kind": kind, "p_max": rdc.p_max(gen, target, R)}
    return {"kind": kind, "p_max_upper": rdc.p_max_pair_upper(gen, target, R, n_alpha=args.n_alpha)}


def cmd_coaxial_scan(args):
    obj = _load_json(args.input)
    pair = _parse(ph.TensorPair.from_json, obj.get("pair", obj))
    rows = [("alpha_angle", "d1", "d2", "dim", "M_alpha")]
    rows += [(r.alpha_angle, r.d1, r.d2, r.dim, r.M_alpha) for r in ph.coaxial_scan(pair, args.n_alpha)]
    return rows


def cmd_facet_dim(args):
    obj = _load_json(args.input)
    pair = _parse(ph.TensorPair.from_json, obj.get("pair", obj))
    alpha = _alpha_of(obj)
    if alpha is None:
        alpha = np.array([1.0, 0.0])
    face = _parse(ph.coaxial_face, pair, alpha, int(obj.get("which_eigvec", 0)))
    emp = ph.face_dimension_empirical(face, pair)
    return {"d1": face.d1, "d2": face.d2, "dim": face.dim, "empirical_dim": emp, "M_alpha": face.M_alpha}


def cmd_hull_dim(args):
    obj = _load_json(args.input)
    tensors = [_parse(tensor_from_json, t) for t in obj.get("tensors", [])]
    if not tensors:
        raise InputError('input needs a non-empty "tensors" list')
    dim = ph.hull_dimension(tensors)
    emp = ph.orbit_affine_rank(tensors, n_samples=500, rng=args.seed)
    return {"dim": dim, "empirical_dim": emp}


def cmd_simulate(args):
    ens = _parse(rdc.EnsembleSpec.from_json, _load_json(args.input))
    if not isinstance(ens.generator, AnisoTensor):
        raise InputError("simulate needs a single-tensor ensemble")
    rng = np.random.default_rng(args.seed)
    rs = rdc.random_dipoles(args.n_dipoles, rng)
    obs = rdc.simulate_observations(ens.mean, rs, sigma=args.sigma, rng=rng)
    rows = [("rx", "ry", "rz", "delta", "C")]
    rows += [(*o.r, o.delta, o.C) for o in obs]
    return rows


HANDLERS = {
    "estimate": cmd_estimate,
    "membership": cmd_membership,
    "decompose": cmd_decompose,
    "invariants": cmd_invariants,
    "region-x": cmd_region_x,
    "pmax": cmd_pmax,
    "coaxial-scan": cmd_coaxial_scan,
    "facet-dim": cmd_facet_dim,
    "hull-dim": cmd_hull_dim,
    "facet-decompose": cmd_facet_decompose,
    "simulate": cmd_simulate,
}


def build_parser():
    p = _Parser(prog="orbithull", description="Orbit hulls of anisotropic tensors.")
    sub = p.add_subparsers(dest="verb", required=True, metavar="VERB")
    for verb, text in VERBS.items():
        s = sub.add_parser(verb, help=text, description=text)
        s.add_argument("input", nargs="?" if verb == "region-x" else None, help="input file")
        s.add_argument("--output", "-o", help="output file (default stdout)")
        s.add_argument("--n-alpha", type=int, default=720, help="directions in alpha sweeps")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--tol", type=float, default=1e-9)
        if verb == "simulate":
            s.add_argument("--n-dipoles", type=int, default=20)
            s.add_argument("--sigma", type=float, default=0.0)
        if verb == "region-x":
            s.add_argument("--n-points", type=int, default=201)
    return p


def _render(result):
    if isinstance(result, list):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in result:
            w.writerow([("%.17g" % v) if isinstance(v, (float, np.floating)) else v for v in row])
        return buf.getvalue()
    return dumps(result) + "\n"


def run(argv=None):
    """Parse ``argv``, dispatch, write output; returns the exit status."""
    args = build_parser().parse_args(argv)
    try:
        text = _render(HANDLERS[args.verb](args))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SelfCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except sh.DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.output:
        try:
            with open(args.output, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
