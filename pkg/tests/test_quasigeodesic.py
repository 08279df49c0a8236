import math

import numpy as np
import pytest

from alexgeo.spaces import ConeSpace, PolygonSpace, regular_tetrahedron
from alexgeo.flow import CurveRecord
from alexgeo.functions import Dist, DistSq, evaluate, scale
from alexgeo.quasigeodesic import (
    TraceError,
    build_convex_curve,
    build_prequasigeodesic,
    check_quasigeodesic,
    chop_extend_demo,
    entropy,
    entropy_from_tangents,
    monotone_report,
    trace_quasigeodesic,
)
from alexgeo.radial import radial_curve
from alexgeo.tangent import TangentVec

CONE = ConeSpace(1.5 * math.pi)
PLANE = ConeSpace(2 * math.pi)


def aim_at_vertex(mesh, p, vertex):
    p = mesh.validate_point(p)
    src = mesh.pos2(p)
    tgt = mesh.charts[p.face][mesh.faces[p.face].index(vertex)]
    u = tgt - src
    u = u / np.linalg.norm(u)
    return mesh.chart_angle_of_dir(p, p.face, u)


class TestTracer:
    def test_no_vertex_hit_is_geodesic(self):
        rec = trace_quasigeodesic(CONE, (1.0, 0.0), 0.3, 1.0)
        w = CONE.walk((1.0, 0.0), 0.3, 1.0)
        assert CONE.distance(rec.points[-1], w.end) < 1e-12
        assert not rec.events

    def test_cone_apex_equal_split(self):
        phi_in = 0.4
        rec = trace_quasigeodesic(CONE, (1.0, phi_in), math.pi, 2.0)
        assert rec.events[0][1] == "vertex"
        end = rec.points[-1]
        assert end[1] == pytest.approx((phi_in + 0.75 * math.pi) % (1.5 * math.pi))
        assert end[0] == pytest.approx(1.0)

    def test_tetrahedron_vertex_split_angles(self):
        T = regular_tetrahedron()
        p = T.validate_point((0, (0.25, 0.4, 0.35)))
        ang = aim_at_vertex(T, p, 0)
        rec = trace_quasigeodesic(T, p, ang, 1.5)
        ev = [e for e in rec.events if e[1] == "vertex"]
        assert ev and ev[0][2] == 0
        # the outgoing direction bisects: both side angles are pi/2
        i = next(k for k, t in enumerate(rec.ts) if abs(t - ev[0][0]) < 1e-12)
        sig = T.sigma_at(rec.points[i])
        back = rec.lefts_angle if False else rec.left_tangents[i].angle
        out = rec.right_tangents[i].angle
        assert sig.dist(back, out) == pytest.approx(math.pi / 2)

    def test_unknown_rule_rejected(self):
        with pytest.raises(TraceError):
            trace_quasigeodesic(CONE, (1.0, 0.0), 0.0, 1.0, rule="left-split")

    def test_polygon_boundary_stop(self):
        sq = PolygonSpace([[0, 0], [1, 0], [1, 1], [0, 1]])
        rec = trace_quasigeodesic(sq, (0.5, 0.5), 0.0, 2.0)
        assert rec.events and rec.events[-1][1] in ("boundary", "corner")
        assert rec.ts[-1] < 2.0


class TestChecker:
    def test_plane_geodesic_passes(self):
        rec = trace_quasigeodesic(PLANE, (1.0, 0.0), 0.9, 2.0)
        rep = check_quasigeodesic(PLANE, rec, n_probes=10, tol=1e-6, seed=0)
        assert rep.passed(1e-6)

    def test_traced_cone_curve_passes(self):
        rec = trace_quasigeodesic(CONE, (1.0, 0.2), math.pi, 2.2)
        rep = check_quasigeodesic(CONE, rec, n_probes=12, tol=1e-6, seed=1)
        assert rep.passed(1e-6)
        assert abs(rep.entropy_total) < 1e-12

    def test_tetrahedron_trace_passes(self):
        T = regular_tetrahedron()
        p = T.validate_point((0, (0.3, 0.36, 0.34)))
        rec = trace_quasigeodesic(T, p, aim_at_vertex(T, p, 1), 2.5)
        rep = check_quasigeodesic(T, rec, n_probes=6, tol=1e-6, seed=2)
        assert rep.passed(1e-6)

    def test_planar_corner_fails(self):
        pts = []
        ts = []
        a = np.array([0.5, -1.0])
        d1 = np.array([0.0, 1.0])
        for i in range(101):
            q = a + d1 * (i * 0.02)
            pts.append((float(np.hypot(*q)), float(math.atan2(q[1], q[0]))))
            ts.append(i * 0.02)
        corner = a + d1 * 2.0
        d2 = np.array([math.sin(0.2), math.cos(0.2)])
        for i in range(1, 101):
            q = corner + d2 * (i * 0.02)
            pts.append((float(np.hypot(*q)), float(math.atan2(q[1], q[0]))))
            ts.append(2.0 + i * 0.02)
        sig = PLANE.sigma_at(pts[0])
        rec = CurveRecord(ts, pts, [TangentVec(1.0, 0.0, sig)] * len(pts),
                          [None] * len(pts), [], 0.02, "user")
        rep = check_quasigeodesic(PLANE, rec, n_probes=12, tol=1e-6, seed=3)
        assert not rep.passed(1e-6)
        assert rep.development_min_turn < -0.1


class TestBuilders:
    def test_plane_builder_reproduces_ray(self):
        for eps in (0.2, 0.1):
            rec = build_convex_curve(PLANE, (1.0, 0.0), 1.1, eps, 1.5)
            w = PLANE.walk((1.0, 0.0), 1.1, rec.ts[-1])
            assert PLANE.distance(rec.points[-1], w.end) < 1e-9

    def test_apex_aimed_endpoints_converge(self):
        ends = []
        for eps in (0.2, 0.1, 0.05):
            rec = build_convex_curve(CONE, (1.0, 0.0), math.pi, eps, 2.0)
            ends.append(rec.points[-1])
        d1 = CONE.distance(ends[0], ends[2])
        d2 = CONE.distance(ends[1], ends[2])
        assert d2 <= d1 + 1e-12

    def test_convex_curves_one_lipschitz(self):
        rec = build_convex_curve(CONE, (1.0, 0.0), math.pi, 0.1, 2.0)
        for i in range(len(rec.ts) - 1):
            chord = CONE.distance(rec.points[i], rec.points[i + 1])
            assert chord <= (rec.ts[i + 1] - rec.ts[i]) * (1 + 1e-9) + 1e-12

    def test_prequasigeodesic_entropy_ledger_zero_on_cone(self):
        rec, ent = build_prequasigeodesic(CONE, (1.0, 0.0), math.pi, 0.05, 2.0)
        assert abs(ent.total) < 1e-12
        rep = check_quasigeodesic(CONE, rec, n_probes=8, tol=1e-5, seed=4)
        assert rep.passed(1e-5)

    def test_radial_curves_are_monotone(self):
        # the normalized drop of lambda-concave values is non-increasing
        rng = np.random.default_rng(5)
        for _ in range(12):
            p = CONE.random_point(rng)
            xi = rng.random() * 2 * math.pi
            q = CONE.random_point(rng)
            f = scale(0.5, DistSq(q=q))
            rec = radial_curve(CONE, p, xi, 0, 1.0, 5e-3)
            worst, _ = monotone_report(CONE, rec, f, 1.0)
            assert worst <= 1e-5


class TestEntropy:
    def test_traced_curve_has_zero_entropy(self):
        rec = trace_quasigeodesic(CONE, (1.0, 0.1), math.pi, 2.0)
        assert entropy(rec).total == 0.0

    def test_deliberate_half_speed_joint(self):
        rep = entropy_from_tangents([0.0, 1.0, 2.0],
                                    [None, 1.0, 0.5],
                                    [1.0, 0.5, 0.5])
        assert rep.total == pytest.approx(math.log(0.5))
        assert rep.atoms[0][0] == 1.0

    def test_decay_across_eps(self):
        vals = []
        for eps in (0.1, 0.05, 0.025):
            _, ent = build_prequasigeodesic(CONE, (1.0, 0.0), math.pi, eps, 2.5)
            vals.append(abs(ent.total))
        assert vals[0] >= vals[1] >= vals[2]
        assert vals[1] <= 0.7 * vals[0] + 1e-9
        assert vals[2] <= 0.7 * vals[1] + 1e-9


class TestChopExtend:
    def test_demo_on_cone(self):
        rep = chop_extend_demo(CONE, (1.0, 0.0), math.pi - 0.2, 0.1, T=1.5,
                               q_far=(2.5, 2.8))
        assert rep.passed(1e-6)
        assert rep.chop_ok
        assert abs(rep.extension_atom) < 1e-9

    def test_comparison_corollary_for_traces(self):
        # angle(dir to p, start tangent) >= comparison angle for small t
        from alexgeo import model_plane as mp

        rng = np.random.default_rng(6)
        rec = trace_quasigeodesic(CONE, (1.0, 0.2), math.pi, 2.2)
        for _ in range(10):
            p = CONE.random_point(rng)
            d0 = CONE.distance(rec.points[0], p)
            if d0 < 0.2:
                continue
            dirs = CONE.directions_to(rec.points[0], p)
            sig = CONE.sigma_at(rec.points[0])
            ang = min(sig.dist(a, rec.right_tangents[0].angle) for a in dirs)
            for i in (3, 10, 30):
                tilde = mp.comparison_angle(
                    0.0, d0, CONE.distance(rec.points[i], p), rec.ts[i])
                assert ang >= tilde - 1e-6
