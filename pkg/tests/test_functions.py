import math

import numpy as np
import pytest

from alexgeo.spaces import CapSpace, ConeSpace, PolygonSpace
from alexgeo.functions import (
    Affine,
    BoundaryDist,
    Dist,
    DistSq,
    ExprError,
    InfConvolution,
    MinExpr,
    PhiRC,
    RhoDist,
    SmoothedDistance,
    check_concavity,
    ensure_certificate,
    evaluate,
    planar_smoothed_distance_oracle,
    scale,
    sum_of,
    validate_simple,
)

PLANE = ConeSpace(2 * math.pi)
SQUARE = PolygonSpace([[0, 0], [1, 0], [1, 1], [0, 1]])


class TestEval:
    def test_dist_at_base(self):
        q = (1.0, 0.3)
        assert evaluate(Dist(q=q), PLANE, q) == 0.0

    def test_rho_dist_flat(self):
        q = (1.0, 0.0)
        p = (3.0, 0.0)
        assert evaluate(RhoDist(kappa=0.0, q=q), PLANE, p) == pytest.approx(2.0)

    def test_phi_rc_zero_on_sphere_of_radius_r(self):
        q = (1.0, 0.0)
        x = (1.0 + 0.3, 0.0)
        f = PhiRC(r=0.3, c=12.0, q=q)
        assert evaluate(f, PLANE, x) == pytest.approx(0.0, abs=1e-12)

    def test_phi_derivative_normalization(self):
        f = PhiRC(r=0.3, c=12.0, q=(0.0, 0.0))
        assert f.phi(0.3) == 0.0
        h = 1e-7
        assert (f.phi(0.3 + h) - f.phi(0.3 - h)) / (2 * h) == pytest.approx(1.0)
        assert (f.phi(0.3 + h) - 2 * f.phi(0.3) + f.phi(0.3 - h)) / h**2 == \
            pytest.approx(-2 * 12.0 / 0.3, rel=1e-4)

    def test_affine_and_min(self):
        q1, q2 = (1.0, 0.0), (1.0, math.pi)
        f = MinExpr(terms=(Dist(q=q1), Dist(q=q2)))
        assert evaluate(f, PLANE, (0.0, 0.0)) == pytest.approx(1.0)
        g = Affine(weights=(2.0, 1.0), constant=-0.5,
                   terms=(Dist(q=q1), Dist(q=q2)))
        assert evaluate(g, PLANE, (0.0, 0.0)) == pytest.approx(2.5)

    def test_boundary_dist(self):
        assert evaluate(BoundaryDist(), SQUARE, (0.3, 0.5)) == pytest.approx(0.3)

    def test_theta_grammar(self):
        ok = MinExpr(terms=(
            Affine(weights=(1.0, 2.0), terms=(DistSq(q=(0, 0)), DistSq(q=(1, 0)))),
            DistSq(q=(0.5, 0.5)),
        ))
        assert validate_simple(ok)
        bad = Affine(weights=(-1.0,), terms=(DistSq(q=(0, 0)),))
        assert not validate_simple(bad)
        assert not validate_simple(Dist(q=(0, 0)))


class TestCheckConcavity:
    def test_neg_dist_sq(self):
        f = scale(-1.0, DistSq(q=(1.0, 0.0)))
        ok = check_concavity(f, PLANE, -2.0, ((1.5, 0.5), 1.0), n_geodesics=60,
                             seed=1)
        assert ok.passed
        bad = check_concavity(f, PLANE, -2.1, ((1.5, 0.5), 1.0), n_geodesics=60,
                              seed=1)
        assert not bad.passed
        assert bad.worst_margin == pytest.approx(0.1, abs=1e-6)

    def test_square_boundary_distance_concave(self):
        rep = check_concavity(BoundaryDist(), SQUARE, 0.0, ((0.5, 0.5), 0.45),
                              n_geodesics=100, seed=3, tol=1e-9)
        assert rep.passed

    def test_distance_not_concave_across_pole(self):
        q = (1.0, 0.3)
        rep = check_concavity(Dist(q=q), PLANE, 0.0, (q, 0.5), n_geodesics=80,
                              seed=2)
        assert not rep.passed

    def test_certificate_flow(self):
        f = scale(-1.0, DistSq(q=(1.0, 0.0))).with_certificate(-2.0, (1.0, 0.0), 1.0)
        assert ensure_certificate(f, PLANE, (1.0, 0.0), 0.5) == -2.0
        bad = Dist(q=(1.0, 0.0)).with_certificate(0.0, (1.0, 0.0), 0.5)
        with pytest.raises(ExprError):
            ensure_certificate(bad, PLANE, (1.0, 0.0), 0.5)


class TestInfConvolution:
    def test_quadratic_closed_form(self):
        # f(x) = -|x-q|^2/2: minimizer (2y - eps q)/(2 - eps)
        q = (1.0, 0.0)
        f = scale(-0.5, DistSq(q=q))
        for eps in (1.0, 0.5):
            ic = InfConvolution(f, PLANE, eps, lip_hint=4.0)
            rng = np.random.default_rng(4)
            for _ in range(5):
                y = PLANE.random_point(rng)
                yx = np.array([y[0] * math.cos(y[1]), y[0] * math.sin(y[1])])
                qx = np.array([1.0, 0.0])
                xs = (2 * yx - eps * qx) / (2 - eps)
                exact = float(-0.5 * np.sum((xs - qx) ** 2)
                              + np.sum((xs - yx) ** 2) / eps)
                assert ic.query(y).value == pytest.approx(exact, abs=1e-6)

    def test_eps_to_zero_monotone_to_f(self):
        q = (1.0, 0.0)
        f = scale(-0.5, DistSq(q=q))
        y = (1.4, 0.8)
        fy = evaluate(f, PLANE, y)
        prev = -math.inf
        for eps in (0.4, 0.2, 0.1, 0.05):
            v = InfConvolution(f, PLANE, eps, lip_hint=4.0).query(y).value
            assert v <= fy + 1e-9
            assert v >= prev - 1e-9
            prev = v

    def test_square_boundary_infconv_concave(self):
        fe = InfConvolution(BoundaryDist(), SQUARE, 0.1, lip_hint=1.5)
        rep = check_concavity(fe, SQUARE, 0.0, ((0.5, 0.5), 0.3),
                              n_geodesics=40, n_samples=9, seed=5, tol=1e-5)
        assert rep.passed


class TestSmoothedDistance:
    def test_far_field_expansion(self):
        sd = SmoothedDistance(PLANE, (0.0, 0.0), 0.1, n_mc=10 ** 6, seed=5)
        y = (2.0, 0.3)
        yx = (2 * math.cos(0.3), 2 * math.sin(0.3))
        assert sd.value(y) == pytest.approx(
            planar_smoothed_distance_oracle((0, 0), 0.1, yx), abs=1e-4
        )

    def test_center_value(self):
        sd = SmoothedDistance(PLANE, (0.0, 0.0), 0.1, n_mc=10 ** 6, seed=6)
        assert sd.value((0.0, 0.0)) == pytest.approx(2 * 0.1 / 3, abs=1e-4)

    def test_rotation_symmetry(self):
        sd = SmoothedDistance(PLANE, (0.0, 0.0), 0.1, n_mc=200000, seed=7)
        vals = [sd.value((1.5, a)) for a in (0.0, 1.1, 2.7, 4.4)]
        assert max(vals) - min(vals) < 2e-3

    def test_differential_linearity(self):
        # d of the smoothed distance at a regular point fits a single harmonic
        n_mc = 40000
        sd = SmoothedDistance(PLANE, (0.0, 0.0), 0.2, n_mc=n_mc, seed=8)
        d = sd.differential((1.5, 0.4))
        xs = np.linspace(0, 2 * math.pi, 360, endpoint=False)
        vals = np.array([d(x) for x in xs])
        c1 = 2 * np.mean(vals * np.cos(xs))
        s1 = 2 * np.mean(vals * np.sin(xs))
        fit = c1 * np.cos(xs) + s1 * np.sin(xs)
        assert float(np.max(np.abs(vals - fit))) < 3.0 / math.sqrt(n_mc)
