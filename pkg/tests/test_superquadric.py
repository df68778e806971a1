import itertools

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from graspgeom.mesh import sample_surface
from graspgeom.primitives import bowl_mesh, box_mesh
from graspgeom.sdf import build_sdf_grid
from graspgeom.superquadric import (FitConfig, FitError, FitResult,
                                    Superquadric, fit_superquadric,
                                    implicit_value, load_fit_result,
                                    radial_distance, save_fit_result,
                                    sq_surface_sample)


def make_sphere(r=0.1):
    return Superquadric(scale=(r, r, r), exponents=(1.0, 1.0),
                        position=(0, 0, 0), quaternion=(1, 0, 0, 0))


def random_quat(rng):
    q = Rotation.random(random_state=int(rng.integers(1 << 31))).as_quat()
    return q[[3, 0, 1, 2]]


class TestImplicitValue:
    def test_sphere_surface(self):
        assert implicit_value(make_sphere(), [0.1, 0, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_center_is_zero(self):
        sq = Superquadric(scale=(0.05, 0.03, 0.08), exponents=(0.4, 1.3),
                          position=(0.01, 0.02, -0.01), quaternion=(1, 0, 0, 0))
        assert implicit_value(sq, sq.position) == pytest.approx(0.0, abs=1e-12)

    def test_sphere_at_double_radius(self):
        # direct evaluation: (0.2 / 0.1)^2 = 4
        assert implicit_value(make_sphere(), [0.2, 0, 0]) == pytest.approx(4.0, abs=1e-12)

    def test_inside_outside(self):
        sq = make_sphere()
        assert implicit_value(sq, [0.05, 0, 0]) < 1.0
        assert implicit_value(sq, [0.15, 0, 0]) > 1.0


class TestSurfaceSample:
    def test_sphere_radius(self):
        pts = sq_surface_sample(make_sphere(), 1000, seed=1)
        r = np.linalg.norm(pts, axis=1)
        assert np.abs(r - 0.1).max() <= 1e-6

    def test_determinism(self):
        sq = Superquadric(scale=(0.05, 0.03, 0.08), exponents=(0.7, 1.2),
                          position=(0.02, 0, 0), quaternion=(1, 0, 0, 0))
        a = sq_surface_sample(sq, 500, seed=9)
        b = sq_surface_sample(sq, 500, seed=9)
        assert a.tobytes() == b.tobytes()

    def test_box_like_containment(self):
        sq = Superquadric(scale=(0.05, 0.03, 0.08), exponents=(0.1, 0.1),
                          position=(0, 0, 0), quaternion=(1, 0, 0, 0))
        pts = sq_surface_sample(sq, 1000, seed=2)
        assert (np.abs(pts) / sq.scale).max() <= 1 + 1e-6

    @pytest.mark.parametrize("exps", [(0.1, 1.9), (1.9, 0.1), (0.3, 1.7), (1.0, 1.0)])
    def test_on_surface_everywhere(self, exps):
        rng = np.random.default_rng(4)
        sq = Superquadric(scale=(0.02, 0.1, 0.15), exponents=exps,
                          position=(0.05, -0.02, 0.01), quaternion=random_quat(rng))
        pts = sq_surface_sample(sq, 2000, seed=5)
        assert np.abs(implicit_value(sq, pts) - 1.0).max() <= 1e-6

    def test_rejects_bad_count(self):
        with pytest.raises(ValueError):
            sq_surface_sample(make_sphere(), 0, seed=1)


class TestRadialDistance:
    def test_sphere_outside(self):
        # formula reduces to | ||x|| - r | for spheres
        assert radial_distance(make_sphere(), [0.2, 0, 0]) == pytest.approx(0.1, abs=1e-12)

    def test_sphere_inside(self):
        assert radial_distance(make_sphere(), [0.05, 0, 0]) == pytest.approx(0.05, abs=1e-12)

    def test_zero_on_surface(self):
        pts = sq_surface_sample(make_sphere(), 200, seed=3)
        assert radial_distance(make_sphere(), pts).max() <= 1e-7

    def test_zero_iff_on_surface(self):
        sq = Superquadric(scale=(0.04, 0.06, 0.09), exponents=(0.5, 1.4),
                          position=(0, 0, 0), quaternion=(1, 0, 0, 0))
        on = sq_surface_sample(sq, 100, seed=1)
        assert np.all(np.abs(implicit_value(sq, on) - 1) <= 1e-9)
        assert radial_distance(sq, on).max() <= 1e-9 * 0.1 + 1e-10
        off = on * 1.05
        assert np.all(radial_distance(sq, off) > 1e-4)

    def test_center_raises(self):
        with pytest.raises(ValueError):
            radial_distance(make_sphere(), [0, 0, 0])


def best_param_error(gt: Superquadric, fit: Superquadric):
    """Smallest (scale rel. error, exponent abs. error) over the superquadric
    symmetry candidates: x<->y swap always, full permutations when the
    exponents are close enough to make them shape-preserving."""
    cands = [(fit.scale, fit.exponents),
             (fit.scale[[1, 0, 2]], fit.exponents)]
    if abs(gt.exponents[0] - gt.exponents[1]) < 0.2:
        for p in itertools.permutations(range(3)):
            cands.append((fit.scale[list(p)], fit.exponents))
            cands.append((fit.scale[list(p)], fit.exponents[[1, 0]]))
    best = (np.inf, np.inf)
    for s, e in cands:
        serr = float(np.max(np.abs(s - gt.scale) / gt.scale))
        eerr = float(np.max(np.abs(e - gt.exponents)))
        if serr + eerr < best[0] + best[1]:
            best = (serr, eerr)
    return best


def surfaces_match(a: Superquadric, b: Superquadric, tol: float):
    """Bidirectional mean surface distance below tol."""
    pa = sq_surface_sample(a, 400, seed=101)
    pb = sq_surface_sample(b, 400, seed=102)
    return (float(np.mean(radial_distance(b, pa))) <= tol
            and float(np.mean(radial_distance(a, pb))) <= tol)


class TestFit:
    def test_recover_known_ellipsoid(self):
        rng = np.random.default_rng(0)
        gt = Superquadric(scale=(0.05, 0.03, 0.08), exponents=(1.0, 1.0),
                          position=(0.02, -0.01, 0.03), quaternion=random_quat(rng))
        cloud = sq_surface_sample(gt, 2000, seed=11)
        res = fit_superquadric(cloud, None, FitConfig(lam=0.0, seed=1))
        serr, eerr = best_param_error(gt, res.superquadric)
        assert serr <= 0.05
        assert eerr <= 0.1
        assert surfaces_match(gt, res.superquadric, tol=0.002)

    def test_optimality_against_ground_truth(self):
        # noiseless data: the fit must reach the ground-truth loss (~0)
        rng = np.random.default_rng(1)
        gt = Superquadric(scale=(0.06, 0.09, 0.04), exponents=(0.8, 1.2),
                          position=(0, 0.01, 0), quaternion=random_quat(rng))
        cloud = sq_surface_sample(gt, 1500, seed=12)
        res = fit_superquadric(cloud, None, FitConfig(lam=0.0, seed=2))
        gt_loss = float(np.mean(radial_distance(gt, cloud)))
        assert res.data_loss <= gt_loss + 1e-6

    def test_cube_fixture(self, cube):
        pts = sample_surface(cube, 2000, 3).points
        res = fit_superquadric(pts, None, FitConfig(lam=0.0, seed=2))
        sq = res.superquadric
        assert np.all(sq.exponents <= 0.35)
        assert np.abs(sq.scale - 0.5).max() / 0.5 <= 0.10

    def test_determinism(self):
        rng = np.random.default_rng(3)
        gt = Superquadric(scale=(0.05, 0.05, 0.1), exponents=(1.0, 0.6),
                          position=(0, 0, 0), quaternion=random_quat(rng))
        cloud = sq_surface_sample(gt, 800, seed=4)
        a = fit_superquadric(cloud, None, FitConfig(lam=0.0, seed=5))
        b = fit_superquadric(cloud, None, FitConfig(lam=0.0, seed=5))
        assert a.superquadric.scale.tobytes() == b.superquadric.scale.tobytes()
        assert a.superquadric.quaternion.tobytes() == b.superquadric.quaternion.tobytes()
        assert a.data_loss == b.data_loss
        assert a.start_index == b.start_index

    def test_monotone_multistart(self):
        rng = np.random.default_rng(6)
        gt = Superquadric(scale=(0.12, 0.05, 0.03), exponents=(0.4, 1.1),
                          position=(0.05, 0, -0.02), quaternion=random_quat(rng))
        cloud = sq_surface_sample(gt, 700, seed=7)
        res = fit_superquadric(cloud, None, FitConfig(lam=0.0, seed=8))
        finite = [l for l in res.start_losses if np.isfinite(l)]
        won = res.data_loss  # lam = 0 so the selection loss is the data loss
        assert won <= min(finite) + 1e-12

    def test_rigid_equivariance(self):
        rng = np.random.default_rng(9)
        gt = Superquadric(scale=(0.07, 0.04, 0.05), exponents=(0.9, 1.3),
                          position=(0.01, 0.02, 0.0), quaternion=random_quat(rng))
        cloud = sq_surface_sample(gt, 1000, seed=10)
        rot = Rotation.from_euler("xyz", [0.3, -0.5, 1.1]).as_matrix()
        shift = np.array([0.05, -0.03, 0.08])
        moved = cloud @ rot.T + shift
        res_a = fit_superquadric(cloud, None, FitConfig(lam=0.0, seed=11))
        res_b = fit_superquadric(moved, None, FitConfig(lam=0.0, seed=11))
        assert res_b.data_loss == pytest.approx(res_a.data_loss, abs=1e-6)
        # composed fit must describe the transformed surface
        composed = Superquadric(
            scale=res_a.superquadric.scale,
            exponents=res_a.superquadric.exponents,
            position=rot @ res_a.superquadric.position + shift,
            quaternion=np.array(
                Rotation.from_matrix(rot @ res_a.superquadric.rotation).as_quat())[[3, 0, 1, 2]])
        assert surfaces_match(composed, res_b.superquadric, tol=1e-4)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_superquadric(np.zeros((5, 3)), None, FitConfig(lam=0.0))

    def test_lam_requires_grid(self):
        with pytest.raises(FitError):
            fit_superquadric(np.zeros((50, 3)), None, FitConfig(lam=1.0))


@pytest.mark.slow
class TestRegularizer:
    def test_bowl_regularization_effect(self):
        bowl = bowl_mesh()
        pts = sample_surface(bowl, 2000, 3).points
        lo, hi = bowl.aabb()
        pad = 0.35 * float(np.linalg.norm(hi - lo))
        grid = build_sdf_grid(bowl, dims=(96, 96, 96), bounds=(lo - pad, hi + pad))
        base = fit_superquadric(pts, grid, FitConfig(lam=0.0, seed=2))
        reg = fit_superquadric(pts, grid, FitConfig(lam=1.0, seed=2))
        assert reg.reg_loss <= 0.7 * base.reg_loss


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        sq = Superquadric(scale=(0.05, 0.03, 0.08), exponents=(0.7, 1.2),
                          position=(0.01, 0.02, -0.01),
                          quaternion=(0.8, 0.6, 0.0, 0.0))
        res = FitResult(superquadric=sq, data_loss=1.5e-4, reg_loss=3e-4,
                        converged=True, start_index=2)
        path = tmp_path / "fit.json"
        save_fit_result(res, path)
        again = load_fit_result(path)
        assert np.allclose(again.superquadric.scale, sq.scale)
        assert np.allclose(again.superquadric.quaternion, sq.quaternion)
        assert again.data_loss == res.data_loss
        assert again.converged is True
        assert again.start_index == 2


class TestSuperquadricType:
    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            Superquadric(scale=(0, 0.1, 0.1), exponents=(1, 1),
                         position=(0, 0, 0), quaternion=(1, 0, 0, 0))

    def test_rejects_out_of_range_exponent(self):
        with pytest.raises(ValueError):
            Superquadric(scale=(0.1, 0.1, 0.1), exponents=(2.5, 1),
                         position=(0, 0, 0), quaternion=(1, 0, 0, 0))

    def test_rejects_unnormalized_quaternion(self):
        with pytest.raises(ValueError):
            Superquadric(scale=(0.1, 0.1, 0.1), exponents=(1, 1),
                         position=(0, 0, 0), quaternion=(2, 0, 0, 0))
