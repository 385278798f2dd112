import math

import numpy as np
import pytest

from diffmean.manifold import (
    CutLocusError,
    check_points,
    exp_map,
    geodesic_distance,
    log_map,
    log_map_zero_fill,
    north_pole,
    tangent_project,
    unit_vector,
    y_delta,
)


def random_rotation(rng, d=3):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


class TestExpMap:
    def test_zero_vector_is_identity(self):
        mu = north_pole(2)
        assert np.array_equal(exp_map(mu, np.zeros(3)), mu)

    def test_antipode_at_pi(self):
        mu = north_pole(2)
        v = np.array([math.pi, 0.0, 0.0])
        assert np.allclose(exp_map(mu, v), -mu, atol=1e-12)

    def test_quarter_turn_lands_on_direction(self):
        mu = north_pole(2)
        e = np.array([1.0, 0.0, 0.0])
        assert np.allclose(exp_map(mu, (math.pi / 2) * e), e, atol=1e-12)

    def test_batched(self):
        mu = north_pole(2)
        vs = np.array([[0.0, 0.0, 0.0], [math.pi / 2, 0.0, 0.0]])
        out = exp_map(np.stack([mu, mu]), vs)
        assert np.allclose(out[0], mu)
        assert np.allclose(out[1], [1.0, 0.0, 0.0], atol=1e-12)


class TestLogMap:
    def test_same_point_gives_zero(self):
        mu = north_pole(2)
        assert np.allclose(log_map(mu, mu), 0.0)

    def test_antipodal_raises(self):
        mu = north_pole(2)
        with pytest.raises(CutLocusError):
            log_map(mu, -mu)

    def test_round_trip_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = unit_vector(rng.standard_normal(4))
            y = unit_vector(rng.standard_normal(4))
            if math.pi - geodesic_distance(x, y) < 1e-6:
                continue
            v = log_map(x, y)
            assert abs(np.dot(v, x)) < 1e-10
            assert np.linalg.norm(v) == pytest.approx(geodesic_distance(x, y),
                                                      abs=1e-12)
            # chord-based angle: arccos loses resolution below ~1e-8
            chord = np.linalg.norm(exp_map(x, v) - y)
            assert 2.0 * math.asin(min(1.0, chord / 2.0)) < 1e-9

    def test_zero_fill_counts_antipodes(self):
        mu = north_pole(2)
        X = np.stack([mu, -mu, [1.0, 0.0, 0.0]])
        logs, dropped = log_map_zero_fill(mu, X)
        assert dropped == 1
        assert np.allclose(logs[0], 0.0)
        assert np.allclose(logs[1], 0.0)
        assert np.linalg.norm(logs[2]) == pytest.approx(math.pi / 2, abs=1e-12)


class TestDistance:
    def test_identity(self):
        mu = north_pole(3)
        assert geodesic_distance(mu, mu) == 0.0

    def test_antipode(self):
        mu = north_pole(2)
        assert geodesic_distance(mu, -mu) == pytest.approx(math.pi)

    def test_equator_is_quarter(self):
        mu = north_pole(2)
        assert geodesic_distance(mu, np.array([1.0, 0.0, 0.0])) == pytest.approx(
            math.pi / 2
        )

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            x, y, z = (unit_vector(rng.standard_normal(3)) for _ in range(3))
            assert geodesic_distance(x, y) == geodesic_distance(y, x)
            assert geodesic_distance(x, z) <= (
                geodesic_distance(x, y) + geodesic_distance(y, z) + 1e-12
            )

    def test_rotation_invariance(self):
        rng = np.random.default_rng(2)
        R = random_rotation(rng)
        for _ in range(20):
            x = unit_vector(rng.standard_normal(3))
            y = unit_vector(rng.standard_normal(3))
            assert geodesic_distance(R @ x, R @ y) == pytest.approx(
                geodesic_distance(x, y), abs=1e-12
            )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            geodesic_distance(north_pole(2), north_pole(3))


class TestYDelta:
    def test_zero_is_north_pole(self):
        assert np.array_equal(y_delta(2, 0.0), north_pole(2))

    def test_pi_is_south_pole(self):
        assert np.allclose(y_delta(2, math.pi), -north_pole(2), atol=1e-15)

    def test_inner_product_is_cos_delta(self):
        mu = north_pole(4)
        for d in np.linspace(0.0, math.pi, 17):
            assert float(mu @ y_delta(4, d)) == pytest.approx(math.cos(d), abs=1e-15)

    def test_range_checked(self):
        with pytest.raises(ValueError):
            y_delta(2, -0.1)
        with pytest.raises(ValueError):
            y_delta(2, 3.5)


class TestTangentProject:
    def test_projecting_base_gives_zero(self):
        mu = north_pole(2)
        assert np.allclose(tangent_project(mu, mu), 0.0)

    def test_idempotent_on_tangent(self):
        mu = north_pole(2)
        v = np.array([0.3, 0.0, -0.2])
        assert np.allclose(tangent_project(mu, v), v)

    def test_result_orthogonal(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            base = unit_vector(rng.standard_normal(5))
            w = rng.standard_normal(5)
            assert abs(np.dot(tangent_project(base, w), base)) < 1e-12


class TestValidation:
    def test_unit_vector_normalizes(self):
        v = unit_vector([0.0, 2.0, 0.0])
        assert np.allclose(v, [0.0, 1.0, 0.0])

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            unit_vector([0.0, 0.0, 0.0])

    def test_check_points_shapes(self):
        X = check_points([[0.0, 2.0, 0.0], [1.0, 0.0, 0.0]])
        assert X.shape == (2, 3)
        assert np.allclose(np.linalg.norm(X, axis=1), 1.0)
        with pytest.raises(ValueError):
            check_points(np.zeros((0, 3)))
        with pytest.raises(ValueError):
            check_points(X, dim=3)
