import numpy as np
import pytest

from rdetail.geometry import (GridFunction, ProductAccumulator, advance,
                              constant_function, interpolate, lyapunov,
                              make_grid, project)
from rdetail.model import ModelSpec, RotationLaw, ScaleLaw, sample_pairs

from conftest import BETA_TWO_POINT, rng_for


class TestProject:
    def test_345_triangle(self):
        np.testing.assert_allclose(project([3.0, 4.0]), [0.6, 0.8],
                                   rtol=0, atol=1e-15)

    def test_identity_on_sphere(self):
        e1 = np.array([1.0, 0.0])
        np.testing.assert_array_equal(project(e1), e1)

    def test_scaling(self):
        np.testing.assert_array_equal(project([-2.0, 0.0]), [-1.0, 0.0])

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            project(np.zeros(3))

    def test_idempotent_under_scaling(self):
        rng = rng_for(0)
        for _ in range(50):
            x = rng.normal(size=3)
            t = float(np.exp(rng.normal()))
            np.testing.assert_allclose(project(project(x) * t), project(x),
                                       rtol=0, atol=1e-12)


class TestGrids:
    @pytest.mark.parametrize("d,res", [(1, 0), (2, 16), (2, 256), (3, 2),
                                       (3, 4)])
    def test_antipodal_closure_exact(self, d, res):
        g = make_grid(d, res)
        np.testing.assert_array_equal(g.points[g.antipode], -g.points)
        assert np.array_equal(g.antipode[g.antipode], np.arange(g.n_points))

    @pytest.mark.parametrize("d,res", [(2, 64), (3, 3)])
    def test_min_separation_positive(self, d, res):
        g = make_grid(d, res)
        from scipy.spatial import cKDTree

        dist, _ = cKDTree(g.points).query(g.points, k=2)
        assert dist[:, 1].min() > 1e-6

    def test_unit_rows(self):
        for d, res in [(2, 32), (3, 2)]:
            g = make_grid(d, res)
            np.testing.assert_allclose(np.linalg.norm(g.points, axis=1),
                                       1.0, rtol=0, atol=1e-12)

    def test_icosphere_vertex_count(self):
        assert make_grid(3, 2).n_points == 162   # 10 * 4^2 + 2
        assert make_grid(3, 4).n_points == 2562

    def test_odd_resolution_rejected(self):
        with pytest.raises(ValueError):
            make_grid(2, 15)


class TestInterpolation:
    def test_constant_reproduced_exactly(self):
        for d, res in [(1, 0), (2, 32), (3, 2)]:
            g = make_grid(d, res)
            f = constant_function(g, 3.7)
            rng = rng_for(1)
            xs = project(rng.normal(size=g.dimension))
            assert f(xs) == 3.7

    def test_exact_on_grid_points(self):
        for d, res in [(2, 32), (3, 2)]:
            g = make_grid(d, res)
            rng = rng_for(2)
            f = GridFunction(g, rng.normal(size=g.n_points))
            np.testing.assert_array_equal(f.at(g.points), f.values)

    def test_d1_lookup(self):
        g = make_grid(1)
        f = GridFunction(g, [3.0, 7.0])
        assert f(np.array([1.0])) == 7.0
        assert f(np.array([-1.0])) == 3.0

    def test_d2_midpoint(self):
        g = make_grid(2, 4)   # angles 0, 90, 180, 270
        f = GridFunction(g, [0.0, 1.0, 0.0, 0.0])
        x = project([1.0, 1.0])   # 45 degrees
        assert np.isclose(f(x), 0.5, atol=1e-12)

    def test_d3_between_vertices(self):
        g = make_grid(3, 2)
        f = GridFunction(g, np.linspace(0.0, 1.0, g.n_points))
        x = project(g.points[0] + g.points[1])
        v = f(x)
        assert min(f.values) <= v <= max(f.values)


class TestAccumulator:
    def test_dilation(self):
        acc = ProductAccumulator.start(np.array([1.0, 0.0]))
        out = advance(acc, 2.0 * np.eye(2))
        np.testing.assert_array_equal(out.direction, acc.direction)
        assert np.isclose(out.log_norm, np.log(2.0), atol=1e-15)

    def test_orthogonal_isometry(self):
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        acc = advance(ProductAccumulator.start(np.array([1.0, 0.0])), rot)
        assert abs(acc.log_norm) < 1e-15

    def test_cancellation(self):
        acc = ProductAccumulator.start(np.array([1.0]))
        acc = advance(acc, np.array([[0.5]]))
        acc = advance(acc, np.array([[2.0]]))
        assert abs(acc.log_norm) < 1e-15
        assert acc.steps == 2

    @pytest.mark.parametrize("case", ["two_point", "similarity", "gaussian"])
    def test_matches_naive_product(self, case, two_point, similarity_haar,
                                   gaussian_2d):
        spec = {"two_point": two_point, "similarity": similarity_haar,
                "gaussian": gaussian_2d}[case]
        d = spec.dimension
        ms, _ = sample_pairs(spec, 50, rng_for(3))
        x = np.zeros(d)
        x[0] = 1.0
        acc = ProductAccumulator.start(x)
        pi = np.eye(d)
        for m in ms:
            acc = advance(acc, m)
            pi = pi @ m
        naive = np.log(np.linalg.norm(x @ pi))
        assert abs(acc.log_norm - naive) <= 1e-8 * max(1.0, abs(naive))


class TestLyapunov:
    def test_two_point_exact_mean(self, two_point):
        est = lyapunov(two_point, 4000, 32, rng_for(4))
        assert abs(est.beta - BETA_TWO_POINT) < 0.01

    def test_similarity_lognormal(self):
        spec = ModelSpec.similarity(
            2, ScaleLaw(kind="lognormal", log_mean=-0.5, log_sd=1.0),
            RotationLaw(kind="haar"))
        est = lyapunov(spec, 3000, 32, rng_for(5))
        assert abs(est.beta - (-0.5)) < 0.01

    def test_orthogonal_isometry_zero(self):
        spec = ModelSpec.similarity(
            2, ScaleLaw(kind="deterministic", value=1.0),
            RotationLaw(kind="haar"))
        est = lyapunov(spec, 1000, 4, rng_for(6))
        assert abs(est.beta) < 1e-12

    def test_needs_enough_steps(self, two_point):
        with pytest.raises(ValueError):
            lyapunov(two_point, 100, 4, rng_for(7))


class TestCsvRoundTrip:
    def test_exact_roundtrip(self, tmp_path):
        g = make_grid(2, 32)
        f = GridFunction(g, rng_for(8).normal(size=g.n_points))
        path = tmp_path / "f.csv"
        f.to_csv(path)
        g2 = GridFunction.from_csv(path, g)
        np.testing.assert_array_equal(g2.values, f.values)

    def test_wrong_grid_rejected(self, tmp_path):
        g = make_grid(2, 32)
        f = constant_function(g)
        path = tmp_path / "f.csv"
        f.to_csv(path)
        with pytest.raises(ValueError):
            GridFunction.from_csv(path, make_grid(2, 16))
