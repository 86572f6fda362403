import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from orbithull.cli import dumps, run
from orbithull.pair_hull import TensorPair, act_pair, coaxial_face, evaluate_pair
from orbithull.single_ion_hull import AtomicMeasure, S_plane13, evaluate
from orbithull.tensor_core import AnisoTensor, Rotation, act, random_rotation

from conftest import random_pair

D = {"matrix": [[1, 0, 0], [0, 0, 0], [0, 0, -1]]}
ZERO = {"coords": [0, 0, 0, 0, 0]}
SHARED = {"chi1": D, "chi2": {"matrix": [[0, 0, 0], [0, 1, 0], [0, 0, -1]]}}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_membership_single(tmp_path, capsys):
    code, out, _ = invoke(capsys, "membership", write(tmp_path, "in.json", {"chi": D, "target": ZERO}))
    assert code == 0
    res = json.loads(out)
    assert res["status"] == "inside" and res["margin"] == 1.0


def test_membership_pair(tmp_path, capsys, rng):
    pair = random_pair(rng)
    bad = TensorPair(pair.chi1 * 1.1, pair.chi2)
    path = write(tmp_path, "in.json", {"pair": pair.to_json(), "target": bad.to_json()})
    code, out, _ = invoke(capsys, "membership", path, "--n-alpha", "16")
    res = json.loads(out)
    assert code == 0 and res["status"] == "fail" and res["witness_index"] == 0


def test_decompose_single(tmp_path, capsys):
    code, out, _ = invoke(capsys, "decompose", write(tmp_path, "in.json", {"chi": D, "target": ZERO}))
    assert code == 0
    res = json.loads(out)
    assert res["n_atoms"] == 2 and res["reconstruction_error"] < 1e-8
    m = AtomicMeasure.from_json(res)
    chi = AnisoTensor.from_matrix(D["matrix"])
    assert np.abs(evaluate(m, chi).coords).max() < 1e-8


def test_decompose_outside_exits_2(tmp_path, capsys):
    path = write(tmp_path, "in.json", {"chi": D, "target": {"coords": [3, 0, 0, 0, 0]}})
    code, _, err = invoke(capsys, "decompose", path)
    assert code == 2 and "outside" in err


def test_facet_decompose_pair(tmp_path, capsys, rng):
    while True:
        pair = random_pair(rng)
        face = coaxial_face(pair, [math.cos(0.4), math.sin(0.4)], base=random_rotation(rng))
        if face.dim == 6:
            break
    gs = tuple(face.group_element(t, r) for t, r in ((0.1, False), (1.4, True), (2.9, True), (4.0, False)))
    target = evaluate_pair(AtomicMeasure((0.1, 0.2, 0.3, 0.4), gs), pair)
    path = write(tmp_path, "in.json", {"pair": pair.to_json(), "target": target.to_json(), "alpha_angle": 0.4})
    out_path = tmp_path / "out.json"
    code, _, _ = invoke(capsys, "facet-decompose", path, "--output", str(out_path))
    assert code == 0
    res = json.loads(out_path.read_text())
    assert res["n_atoms"] <= 4 and res["reconstruction_error"] < 1e-7
    # the decompose verb finds the face on its own
    code, out, _ = invoke(capsys, "decompose", write(tmp_path, "in2.json", {"pair": pair.to_json(), "target": target.to_json()}))
    assert code == 0 and json.loads(out)["n_atoms"] <= 4


def test_facet_decompose_off_face(tmp_path, capsys, rng):
    pair = random_pair(rng)
    path = write(tmp_path, "in.json", {"pair": pair.to_json(), "target": (pair * 0.2).to_json()})
    code, _, _ = invoke(capsys, "facet-decompose", path, "--n-alpha", "90")
    assert code == 2


def test_invariants_and_region_x(tmp_path, capsys):
    t = {"matrix": [[0.5, 0, 0], [0, 0.5, 0], [0, 0, -1]]}
    code, out, _ = invoke(capsys, "invariants", write(tmp_path, "in.json", {"chi": D, "target": t}))
    res = json.loads(out)
    assert code == 0 and math.isclose(res["alpha"], 0.75) and math.isclose(res["det"], -0.25) and res["in_region_X"]
    code, out, _ = invoke(capsys, "region-x", "--n-points", "5")
    rows = list(csv.reader(out.splitlines()))
    assert code == 0 and rows[0] == ["curve", "alpha", "det"] and len(rows) == 21
    code, out, _ = invoke(capsys, "region-x", write(tmp_path, "pts.json", {"targets": [t]}), "--n-points", "5")
    assert out.splitlines()[-1].startswith("point_0,0.75")


def test_pmax(tmp_path, capsys):
    path = write(tmp_path, "in.json", {"chi": D, "target": ZERO, "R": np.eye(3).tolist()})
    code, out, _ = invoke(capsys, "pmax", path)
    assert code == 0 and abs(json.loads(out)["p_max"] - 0.5) < 1e-9


def test_pmax_pair(tmp_path, capsys, rng):
    pair = random_pair(rng)
    r = random_rotation(rng)
    path = write(tmp_path, "in.json", {"pair": pair.to_json(), "target": act_pair(r, pair).to_json(), "R": r.m.tolist()})
    code, out, _ = invoke(capsys, "pmax", path)
    assert code == 0 and json.loads(out)["p_max_upper"] == 1.0


def test_coaxial_scan_shared(tmp_path, capsys):
    code, out, _ = invoke(capsys, "coaxial-scan", write(tmp_path, "pair.json", SHARED), "--n-alpha", "36")
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0 and len(rows) == 36
    assert set(rows[0]) == {"alpha_angle", "d1", "d2", "dim", "M_alpha"}
    assert all(int(r["dim"]) in (2, 4) for r in rows)


def test_dims(tmp_path, capsys):
    code, out, _ = invoke(capsys, "facet-dim", write(tmp_path, "pair.json", {"pair": SHARED, "alpha": [1, 0]}))
    res = json.loads(out)
    assert code == 0 and res["dim"] == res["empirical_dim"] == 2
    tensors = {"tensors": [{"coords": [1, 0, 0, 0, 0]}, {"coords": [0, 1, 0, 0, 0]}, {"coords": [0, 0, 1, 0, 0]}]}
    code, out, _ = invoke(capsys, "hull-dim", write(tmp_path, "t.json", tensors))
    res = json.loads(out)
    assert code == 0 and res["dim"] == res["empirical_dim"] == 15


def test_simulate_and_estimate(tmp_path, capsys):
    ens = {"atoms": [{"p": 0.5, "R": np.eye(3).tolist()}, {"p": 0.5, "R": S_plane13(0.3).m.tolist()}], "chi": D}
    obs = tmp_path / "obs.csv"
    code, _, _ = invoke(capsys, "simulate", write(tmp_path, "ens.json", ens), "--seed", "4", "--output", str(obs))
    assert code == 0
    code, out, _ = invoke(capsys, "estimate", str(obs))
    res = json.loads(out)
    chi = AnisoTensor.from_matrix(D["matrix"])
    want = 0.5 * chi.coords + 0.5 * act(S_plane13(0.3), chi).coords
    assert code == 0 and np.abs(np.array(res["chi"]["coords"]) - want).max() < 1e-10


def test_estimate_rank_deficient(tmp_path, capsys):
    path = tmp_path / "obs.csv"
    path.write_text("rx,ry,rz,delta\n" + "1,0,0,1\n" * 6)
    code, _, _ = invoke(capsys, "estimate", str(path))
    assert code == 2


def test_io_errors(tmp_path, capsys):
    assert invoke(capsys, "membership", str(tmp_path / "missing.json"))[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert invoke(capsys, "membership", str(bad))[0] == 1
    assert invoke(capsys, "membership", write(tmp_path, "x.json", {"chi": {"coords": [1, 2]}, "target": ZERO}))[0] == 1
    assert invoke(capsys, "membership", write(tmp_path, "y.json", {"foo": 1}))[0] == 1
    assert invoke(capsys, "simulate", write(tmp_path, "z.json", {"atoms": []}))[0] == 1
    with pytest.raises(SystemExit) as exc:
        run(["no-such-verb"])
    assert exc.value.code == 1


def test_deterministic_output(tmp_path, capsys):
    ens = {"atoms": [{"p": 1.0, "R": np.eye(3).tolist()}], "chi": D}
    path = write(tmp_path, "ens.json", ens)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    invoke(capsys, "simulate", path, "--seed", "9", "--sigma", "0.1", "--output", str(a))
    invoke(capsys, "simulate", path, "--seed", "9", "--sigma", "0.1", "--output", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_dumps_17_digits():
    text = dumps({"x": 0.1, "n": 3, "ok": True, "v": [1.5, None]})
    assert '"x": 0.10000000000000001' in text
    assert json.loads(text) == {"x": 0.1, "n": 3, "ok": True, "v": [1.5, None]}


def test_module_entry_point(tmp_path):
    path = write(tmp_path, "in.json", {"chi": D, "target": ZERO})
    proc = subprocess.run([sys.executable, "-m", "orbithull", "membership", path], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["status"] == "inside"
