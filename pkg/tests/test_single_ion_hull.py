import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbithull.single_ion_hull import (
    AtomicMeasure,
    DomainError,
    HullSpec,
    OutsideHullError,
    R_plane12,
    S_plane13,
    decompose,
    decompose_zero_eig,
    evaluate,
    f_map,
    face_for,
    facet,
    invariants,
    invert_f_map,
    membership,
    reconstruction_error,
    region_X_boundary,
    region_X_contains,
    separating_det,
)
from orbithull.tensor_core import (
    E1,
    AnisoTensor,
    L_e,
    Rotation,
    act,
    coaxial_rotation,
    random_rotation,
    random_rotations,
)

from conftest import random_profile, seeds

D = AnisoTensor.from_eigenvalues([1.0, 0.0, -1.0])


def random_measure(rng, n):
    return AtomicMeasure(tuple(rng.dirichlet(np.ones(n))), tuple(Rotation(r) for r in random_rotations(n, rng)))


class TestHullSpec:
    def test_geometry(self):
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues([2.0, -0.5, -1.5]))
        assert (h.M, h.m) == (2.0, -1.5)
        assert h.alpha_geom == 2.0 - 0.75 and h.gamma_geom == 1.5 - 1.0
        assert h.intermediate == -0.5
        assert -h.M / 2 >= h.m >= -2 * h.M

    def test_zero_generator(self):
        with pytest.raises(ValueError):
            HullSpec.from_tensor(AnisoTensor(np.zeros(5)))

    def test_zero_eigenvalue_flag(self):
        assert HullSpec.from_tensor(D).has_zero_eigenvalue
        assert not HullSpec.from_tensor(AnisoTensor.from_eigenvalues([2.0, -1.0, -1.0])).has_zero_eigenvalue


class TestAtomicMeasure:
    def test_validation(self):
        with pytest.raises(ValueError):
            AtomicMeasure((0.5, 0.4), (Rotation.identity(), Rotation.identity()))
        with pytest.raises(ValueError):
            AtomicMeasure((1.5, -0.5), (Rotation.identity(), Rotation.identity()))

    def test_json_round_trip(self, rng):
        m = random_measure(rng, 3)
        back = AtomicMeasure.from_json(m.to_json())
        assert reconstruction_error(back, D, evaluate(m, D)) < 1e-15


class TestMembership:
    def test_examples(self):
        h = HullSpec.from_tensor(D)
        assert membership(h, D).status == "boundary"
        zero = membership(h, AnisoTensor(np.zeros(5)))
        assert zero.status == "inside" and zero.margin == 1.0
        assert membership(h, D * 1.1).status == "outside"

    @given(seeds)
    def test_sampled_points_are_never_outside(self, seed):
        rng = np.random.default_rng(seed)
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues(random_profile(rng)))
        for n in (1, 2, 5):
            assert membership(h, evaluate(random_measure(rng, n), h.chi)).status != "outside"

    @given(seeds, st.floats(1.01, 2.0))
    def test_scaled_boundary_points_are_outside(self, seed, s):
        rng = np.random.default_rng(seed)
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues(random_profile(rng)))
        e = rng.standard_normal(3)
        e /= np.linalg.norm(e)
        p = facet(h, e, "max" if rng.integers(2) else "min").point(rng.uniform(0, 2 * math.pi))
        q = p * rng.uniform(0, 1) if rng.integers(2) else p
        inside = membership(h, q).status != "outside"
        assert inside
        assert membership(h, p * s).status == "outside"

    @given(seeds)
    def test_L_e_bounds(self, seed):
        rng = np.random.default_rng(seed)
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues(random_profile(rng)))
        t = evaluate(random_measure(rng, 4), h.chi)
        e = rng.standard_normal(3)
        e /= np.linalg.norm(e)
        assert h.m - 1e-12 <= L_e(t, e) <= h.M + 1e-12


class TestInvariants:
    def test_examples(self):
        inv = invariants(D)
        assert (inv.alpha, inv.det) == (1.0, 0.0)
        c = AnisoTensor.from_eigenvalues([0.5, 0.5, -1.0])
        inv = invariants(c)
        assert math.isclose(inv.alpha, 0.75) and math.isclose(inv.det, -0.25)
        inv = invariants(-c)
        assert math.isclose(inv.alpha, 0.75) and math.isclose(inv.det, 0.25)

    @given(seeds)
    def test_formula_and_invariance(self, seed):
        rng = np.random.default_rng(seed)
        s, t = rng.standard_normal(2)
        x = AnisoTensor.from_eigenvalues([s, t, -s - t], random_rotation(rng))
        inv = invariants(x)
        assert math.isclose(inv.alpha, s * s + s * t + t * t, rel_tol=1e-10, abs_tol=1e-12)
        assert math.isclose(inv.det, -(s * s * t + s * t * t), rel_tol=1e-9, abs_tol=1e-12)
        inv2 = invariants(act(random_rotation(rng), x))
        assert math.isclose(inv.alpha, inv2.alpha, rel_tol=1e-10, abs_tol=1e-12)
        assert math.isclose(inv.det, inv2.det, rel_tol=1e-9, abs_tol=1e-12)

    @given(seeds)
    def test_same_invariants_means_same_orbit(self, seed):
        from orbithull.single_ion_hull import _align

        rng = np.random.default_rng(seed)
        a = AnisoTensor.from_eigenvalues(random_profile(rng), random_rotation(rng))
        b = act(random_rotation(rng), a)
        u = _align(a.matrix, b.matrix)
        assert act(u, a).allclose(b, atol=1e-10)


class TestRegionX:
    def test_examples(self):
        assert region_X_contains(1.0, 0.0)
        assert region_X_contains(0.75, 0.25)
        assert not region_X_contains(1.0, 0.5)

    def test_boundary_rows(self):
        for name, a, d in region_X_boundary(51):
            assert region_X_contains(a, d, tol=1e-12)
            # pushing outward along the normal leaves the region
            assert not region_X_contains(a + 1e-3, d + math.copysign(1e-3, d))

    def test_f_map_examples(self):
        assert f_map(0.0, 0.3, 0.8) == (1.0, 0.0)
        a, d = f_map(0.5, 1.0, 1.0)
        assert math.isclose(a, 0.25) and abs(d) < 1e-16
        for v in np.linspace(0, 1, 11):
            a, d = f_map(1 / 3, 1.0, v)
            assert abs(3 * d - (a - 1 / 9)) < 1e-15
        with pytest.raises(ValueError):
            f_map(1.2, 0.0, 0.0)

    def test_image_in_region(self):
        g = np.linspace(0, 1, 50)
        for lam in g:
            for u in g:
                for v in g:
                    a, d = f_map(lam, u, v)
                    assert region_X_contains(a, d)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_f_map_is_the_invariant_map(self, lam, u, v):
        # the invariants of lam R(theta).D + (1 - lam) S(tau).D; det changes sign with this orientation
        r, s = R_plane12(math.asin(math.sqrt(u))), S_plane13(math.asin(math.sqrt(v)))
        x = act(r, D) * lam + act(s, D) * (1 - lam)
        inv = invariants(x)
        a, d = f_map(lam, u, v)
        assert abs(inv.alpha - a) < 1e-12 and abs(-inv.det - d) < 1e-12

    def test_special_points(self):
        assert abs(separating_det(1 / 3) - 2 / 27) < 1e-12
        assert abs(2 / 27 - math.sqrt(4 * (1 / 3) ** 3 / 27)) < 1e-12
        assert abs(0.25 - (1 - 0.75)) < 1e-12 and abs(27 * 0.25**2 - 4 * 0.75**3) < 1e-12

    def test_fold_curves_are_critical(self):
        # on the face v=1 the Jacobian in (lam, u) degenerates on (lam - lam^2) u = 2 (1 - 2 lam)^2
        from orbithull.single_ion_hull import _f_jac

        for lam in np.linspace(0.25, 0.45, 7):
            u = 2 * (1 - 2 * lam) ** 2 / (lam - lam * lam)
            if u <= 1:
                j = _f_jac(lam, u, 1.0)[:, :2]
                assert abs(np.linalg.det(j)) < 1e-12
        # on the face u=1, in (lam, v): 2 (lam - lam^2) v = 1 - lam - 2 lam^2
        for lam in np.linspace(0.3, 0.49, 7):
            v = (1 - lam - 2 * lam * lam) / (2 * (lam - lam * lam))
            if 0 <= v <= 1:
                j = _f_jac(lam, 1.0, v)[:, [0, 2]]
                assert abs(np.linalg.det(j)) < 1e-12

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_inversion(self, a, b):
        # a point of X with det >= 0, parametrised over the region
        alpha = a
        dmax = min(math.sqrt(4 * alpha**3 / 27), 1 - alpha) if alpha <= 1 else 0.0
        det = b * dmax
        lam, u, v = invert_f_map(alpha, det)
        fa, fd = f_map(lam, u, v)
        assert abs(fa - alpha) < 1e-9 and abs(fd - det) < 1e-9
        assert face_for(alpha, det) in ("v=1", "u=1")


class TestDecomposeZeroEig:
    def test_vertex(self):
        h = HullSpec.from_tensor(D)
        m = decompose_zero_eig(h, D)
        assert len(m) == 1 and m.atoms[0][1].allclose(Rotation.identity())

    def test_zero_target(self):
        h = HullSpec.from_tensor(D)
        m = decompose_zero_eig(h, AnisoTensor(np.zeros(5)))
        assert len(m) == 2
        assert np.allclose(m.weights, [0.5, 0.5])
        assert m.atoms[0][1].allclose(Rotation.identity())
        assert m.atoms[1][1].allclose(S_plane13(math.pi / 2))

    @given(seeds)
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        scale = rng.uniform(0.1, 10)
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues([scale, 0.0, -scale], random_rotation(rng)))
        target = evaluate(random_measure(rng, int(rng.integers(1, 6))), h.chi)
        m = decompose_zero_eig(h, target)
        assert len(m) <= 2
        assert reconstruction_error(m, h.chi, target) < 1e-8

    def test_errors(self):
        h = HullSpec.from_tensor(D)
        with pytest.raises(OutsideHullError):
            decompose_zero_eig(h, D * 1.5)
        with pytest.raises(ValueError):
            decompose_zero_eig(HullSpec.from_tensor(AnisoTensor.from_eigenvalues([2.0, -0.5, -1.5])), D)


class TestDecompose:
    @given(seeds)
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues(random_profile(rng), random_rotation(rng)))
        target = evaluate(random_measure(rng, 5), h.chi)
        m = decompose(h, target, start=random_rotation(rng))
        assert len(m) <= 3
        assert reconstruction_error(m, h.chi, target) < 1e-8

    def test_vertex_on_facet(self):
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues([2.0, -0.5, -1.5]))
        p = facet(h, E1).point(0.4)
        m = decompose(h, p)
        assert len(m) == 1

    def test_facet_center(self):
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues([2.0, -0.5, -1.5]))
        c = facet(h, E1).center
        m = decompose(h, c)
        assert len(m) == 2 and np.allclose(m.weights, 0.5)
        assert reconstruction_error(m, h.chi, c) < 1e-12
        # both atoms keep e1 at the top eigenvalue: rotations about e1 of a common frame
        r0, r1 = (r for _, r in m.atoms)
        rel = r1 @ r0.T
        assert np.allclose(rel.m @ E1, E1, atol=1e-12) or np.allclose(rel.m @ E1, -E1, atol=1e-12)

    def test_repeated_eigenvalue_generator(self, rng):
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues([2.0, -1.0, -1.0]))
        for _ in range(20):
            target = evaluate(random_measure(rng, 4), h.chi)
            m = decompose(h, target)
            assert len(m) <= 3 and reconstruction_error(m, h.chi, target) < 1e-8

    def test_outside(self):
        h = HullSpec.from_tensor(D)
        with pytest.raises(OutsideHullError):
            decompose(h, D * 2)
        assert issubclass(OutsideHullError, DomainError)


class TestFacet:
    def test_radii(self):
        f = facet(HullSpec.from_tensor(D), E1)
        assert f.radius == 0.5
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues([2.0, -1.0, -1.0]))
        assert facet(h, E1, "min").radius == 1.5
        fmax = facet(h, E1, "max")
        assert fmax.radius == 0.0 and fmax.degenerate and fmax.supporting_function() is None

    @given(seeds)
    def test_points_are_vertices_on_the_support(self, seed):
        rng = np.random.default_rng(seed)
        h = HullSpec.from_tensor(AnisoTensor.from_eigenvalues(random_profile(rng)))
        e = rng.standard_normal(3)
        e /= np.linalg.norm(e)
        for kind in ("max", "min"):
            f = facet(h, e, kind)
            p = f.point(rng.uniform(0, 2 * math.pi))
            assert abs(L_e(p, e) - f.level) < 1e-10
            lam = np.linalg.eigvalsh(p.matrix)[::-1]
            assert np.allclose(lam, [h.M, h.intermediate, h.m], atol=1e-10)
            assert f.supporting_function()[1] == f.level

    def test_non_unit_axis(self):
        with pytest.raises(ValueError):
            facet(HullSpec.from_tensor(D), [1.0, 1.0, 0.0])

    def test_rotation_about_axis_preserves_facet(self):
        f = facet(HullSpec.from_tensor(D), E1)
        p = f.point(0.3)
        q = act(coaxial_rotation(E1, 0.25), p)
        assert q.allclose(f.point(0.8), atol=1e-12)
