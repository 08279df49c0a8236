import math

import numpy as np
import pytest

from alexgeo import model_plane as mp
from alexgeo.spaces import (
    CapSpace,
    ConeSpace,
    PolygonSpace,
    SpindleSpace,
    SpaceError,
    build_doubling,
    load_space,
    log_map,
    parse_angle,
    parse_point,
    random_convex_polygon,
    regular_tetrahedron,
)

SQUARE = [[0, 0], [1, 0], [1, 1], [0, 1]]


def all_spaces():
    return [
        ConeSpace(2 * math.pi),
        ConeSpace(1.5 * math.pi),
        ConeSpace(math.pi / 2),
        SpindleSpace(2 * math.pi),
        SpindleSpace(4.0),
        CapSpace(math.pi / 2),
        CapSpace(0.8),
        PolygonSpace(SQUARE),
        regular_tetrahedron(),
    ]


class TestLoad:
    def test_cone(self):
        s = load_space({"type": "cone", "total_angle": 4.712389})
        assert s.variant == "cone"
        assert s.total_angle == pytest.approx(1.5 * math.pi, abs=1e-5)

    def test_polygon(self):
        s = load_space({"type": "polygon", "vertices": SQUARE})
        assert s.variant == "polygon" and s.has_boundary

    def test_mesh_tetrahedron(self):
        t = regular_tetrahedron()
        s = load_space(t.describe())
        for v in range(4):
            assert s.cone_angle_at_vertex(v) == pytest.approx(math.pi)

    def test_angle_literals(self):
        assert parse_angle("3pi/2") == pytest.approx(1.5 * math.pi)
        assert parse_angle("pi") == pytest.approx(math.pi)
        assert parse_angle("0.25") == 0.25

    def test_curvature_violation(self):
        # a flat vertex star with total angle > 2*pi: seven unit triangles
        n = 7
        lengths = {}
        for i in range(n):
            lengths[frozenset((0, 1 + i))] = 1.0
            lengths[frozenset((1 + i, 1 + (i + 1) % n))] = 1.0
        tris = [(0, 1 + i, 1 + (i + 1) % n) for i in range(n)]
        from alexgeo.spaces.mesh import MeshSpace

        with pytest.raises(SpaceError):
            MeshSpace(tris, edge_lengths=lengths)

    def test_malformed(self):
        with pytest.raises(SpaceError):
            load_space({"type": "nonsense"})
        with pytest.raises(SpaceError):
            load_space({"no_type": 1})


class TestConeMetric:
    def test_plane_distance(self):
        c = ConeSpace(2 * math.pi)
        assert c.distance((1, 0), (1, math.pi)) == pytest.approx(2.0)

    def test_half_plane_wrap(self):
        c = ConeSpace(math.pi)
        assert c.distance((1, 0), (1, math.pi / 2)) == pytest.approx(math.sqrt(2))

    def test_three_quarter_wrap(self):
        c = ConeSpace(1.5 * math.pi)
        assert c.distance((1, 0), (1, 5 * math.pi / 4)) == pytest.approx(
            2 * math.sin(math.pi / 8)
        )

    def test_apex_distance(self):
        c = ConeSpace(1.5 * math.pi)
        assert c.distance((0, 0), (2.5, 1.0)) == pytest.approx(2.5)

    def test_two_minimizers_near_full_angle(self):
        c = ConeSpace(2 * math.pi - 1e-6)
        p, q = (1.0, 0.0), (1.0, (2 * math.pi - 1e-6) / 2.0)
        dirs = c.directions_to(p, q)
        assert len(dirs) == 2

    def test_log_map(self):
        c = ConeSpace(2 * math.pi)
        v = log_map(c, (1.0, 0.0), (1.0, math.pi / 2))
        assert v.norm == pytest.approx(math.sqrt(2))


class TestSpindleCap:
    def test_sphere_equator(self):
        s = SpindleSpace(2 * math.pi)
        eq = math.pi / 2
        assert s.distance((eq, 0.0), (eq, 1.0)) == pytest.approx(1.0)

    def test_spindle_apex_angle(self):
        s = SpindleSpace(4.0)
        assert s.sigma_at((0.0, 0.0)).length == pytest.approx(4.0)
        assert s.sigma_at((math.pi, 0.0)).length == pytest.approx(4.0)

    def test_spindle_walk_roundtrip(self):
        s = SpindleSpace(4.0)
        p = (1.1, 0.7)
        w = s.walk(p, 2.2, 0.9)
        back = s.walk(w.end, w.back_angle, 0.9)
        assert s.distance(back.end, p) < 1e-9

    def test_cap_boundary_arc(self):
        c = CapSpace(0.8)
        assert c.sigma_at((0.8, 0.3)).is_arc
        assert c.sigma_at((0.8, 0.3)).length == pytest.approx(math.pi)
        assert not c.sigma_at((0.4, 0.3)).is_arc

    def test_cap_boundary_walk(self):
        c = CapSpace(0.8)
        w = c.walk((0.8, 0.0), 0.0, 0.5)
        assert w.end[0] == pytest.approx(0.8)
        assert w.end[1] == pytest.approx(0.5 / math.sin(0.8))

    def test_cap_interior_walk_hits_boundary(self):
        c = CapSpace(0.8)
        w = c.walk((0.2, 0.0), 0.0, 2.0)
        assert w.event == "boundary"
        assert w.end[0] == pytest.approx(0.8)
        assert w.traveled == pytest.approx(0.6)


class TestPolygon:
    def test_strictness(self):
        with pytest.raises(SpaceError):
            PolygonSpace([[0, 0], [1, 0], [2, 0], [1, 1]])

    def test_corner_angles(self):
        p = PolygonSpace(SQUARE)
        for i in range(4):
            assert p.corner_angle(i) == pytest.approx(math.pi / 2)

    def test_interior_chord(self):
        p = PolygonSpace(SQUARE)
        assert p.distance((0.2, 0.2), (0.8, 0.9)) == pytest.approx(
            math.hypot(0.6, 0.7)
        )

    def test_edge_sigma(self):
        p = PolygonSpace(SQUARE)
        sig = p.sigma_at((0.5, 0.0))
        assert sig.is_arc and sig.length == pytest.approx(math.pi)

    def test_walk_boundary_slide(self):
        p = PolygonSpace(SQUARE)
        w = p.walk((0.5, 0.0), 0.0, 0.3)
        assert w.end == pytest.approx((0.8, 0.0))
        w = p.walk((0.5, 0.0), 0.0, 0.8)
        assert w.event == "corner" and w.event_ref == 1

    def test_random_polygons_are_valid(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            poly = random_convex_polygon(rng)
            assert poly.n >= 3


class TestDoubling:
    def test_square_double_cone_points(self):
        d = build_doubling(PolygonSpace(SQUARE))
        corner_angles = sorted(
            d.cone_angle_at_vertex(v) for v in range(4)
        )
        for a in corner_angles:
            assert a == pytest.approx(math.pi)
        assert not d.has_boundary

    def test_projection_roundtrip(self):
        d = build_doubling(PolygonSpace(SQUARE))
        for sheet in (0, 1):
            m = d.lift((0.3, 0.4), sheet)
            assert d.project(m) == pytest.approx((0.3, 0.4))
            assert d.sheet_of(m) == sheet

    def test_mirror_pair_distance(self):
        d = build_doubling(PolygonSpace(SQUARE))
        base = PolygonSpace(SQUARE)
        p = (0.3, 0.4)
        m0, m1 = d.lift(p, 0), d.lift(p, 1)
        assert d.distance(m0, m1) == pytest.approx(2 * base.boundary_dist(p))

    def test_hemisphere_double_is_sphere(self):
        d = build_doubling(CapSpace(math.pi / 2))
        assert d.variant == "spindle"
        assert d.circle_length == pytest.approx(2 * math.pi)
        assert d.project((2.0, 0.3)) == pytest.approx((math.pi - 2.0, 0.3))

    def test_lens_double_rejected(self):
        with pytest.raises(SpaceError):
            build_doubling(CapSpace(0.7))

    def test_doubled_boundary_concavity(self):
        # distance to the seam, pulled back, is concave along geodesics of
        # the double that stay inside one sheet
        from alexgeo.functions import BoundaryDist, evaluate

        base = PolygonSpace(SQUARE)
        d = build_doubling(base)
        rng = np.random.default_rng(8)
        f = BoundaryDist(pullback=True)
        worst = -math.inf
        for _ in range(200):
            a = base.random_point(rng)
            b = base.random_point(rng)
            if base.distance(a, b) < 1e-3:
                continue
            sheet = int(rng.random() < 0.5)
            pts = d.geodesic_points(d.lift(a, sheet), d.lift(b, sheet), 17)
            vals = [evaluate(f, d, x) for x in pts]
            dt = base.distance(a, b) / 16
            for i in range(1, 16):
                worst = max(worst, (vals[i - 1] - 2 * vals[i] + vals[i + 1]) / dt**2)
        assert worst <= 1e-7


class TestMetricAxiomsAndComparison:
    @pytest.mark.parametrize("idx", range(9))
    def test_triangle_inequality(self, idx):
        space = all_spaces()[idx]
        rng = np.random.default_rng(42 + idx)
        n = 40 if space.variant == "mesh" else 200
        for _ in range(n):
            a, b, c = (space.random_point(rng) for _ in range(3))
            dab = space.distance(a, b)
            dbc = space.distance(b, c)
            dac = space.distance(a, c)
            assert dac <= dab + dbc + 1e-9
            assert abs(space.distance(b, a) - dab) < 1e-9

    @pytest.mark.parametrize("idx", [0, 1, 2, 3, 5, 7])
    def test_toponogov_hinge(self, idx):
        space = all_spaces()[idx]
        kappa = space.kappa
        rng = np.random.default_rng(7 + idx)
        checked = 0
        while checked < 60:
            p = space.random_point(rng)
            q1 = space.random_point(rng)
            q2 = space.random_point(rng)
            d1, d2 = space.distance(p, q1), space.distance(p, q2)
            if min(d1, d2) < 1e-3:
                continue
            if kappa > 0 and d1 + d2 + space.distance(q1, q2) > 2 * math.pi - 1e-6:
                continue
            dirs1 = space.directions_to(p, q1)
            dirs2 = space.directions_to(p, q2)
            sig = space.sigma_at(p)
            ang = max(
                min(sig.dist(a1, a2), math.pi) for a1 in dirs1 for a2 in dirs2
            )
            tilde = mp.comparison_angle(kappa, d1, space.distance(q1, q2), d2)
            assert ang >= tilde - 1e-6
            checked += 1

    @pytest.mark.parametrize("idx", [1, 3, 6, 7, 8])
    def test_geodesic_length_matches_distance(self, idx):
        space = all_spaces()[idx]
        rng = np.random.default_rng(13 + idx)
        for _ in range(10):
            a, b = space.random_point(rng), space.random_point(rng)
            d = space.distance(a, b)
            if d < 1e-3:
                continue
            pts = space.geodesic_points(a, b, 33)
            length = sum(space.distance(pts[i], pts[i + 1]) for i in range(32))
            assert length == pytest.approx(d, abs=1e-6)


class TestPointParsing:
    def test_cone_point(self):
        c = ConeSpace(1.5 * math.pi)
        assert parse_point(c, "1,5pi/4") == pytest.approx((1.0, 5 * math.pi / 4))

    def test_mesh_point(self):
        t = regular_tetrahedron()
        p = parse_point(t, "F3:0.2,0.3")
        assert p.face == 3
        assert p.bary == pytest.approx((0.2, 0.3, 0.5))
