"""Extremal-subset detection and verification.

Candidates on the supported spaces are one-point sets at cone points
with total angle at most pi, polygon corners with interior angle at most
pi/2, whole boundaries, the whole space and the empty set.  Verification
runs the critical-point criterion for distance functions and the
gradient-flow invariance test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow import gradient, gradient_curve
from .functions import Dist, DistSq
from .quasigeodesic import check_quasigeodesic
from .flow import CurveRecord
from .tangent import TangentVec


@dataclass
class SubsetDescriptor:
    kind: str  # "point" | "boundary" | "whole" | "empty"
    point: object = None
    label: str = ""

    def contains_distance(self, space, x):
        """Distance from x to the subset."""
        if self.kind == "point":
            return space.distance(self.point, x)
        if self.kind == "boundary":
            return space.boundary_dist(x)
        if self.kind == "whole":
            return 0.0
        return math.inf

    def sample_points(self, space, n, rng):
        if self.kind == "point":
            return [self.point] * 1
        if self.kind == "boundary":
            if space.variant == "polygon":
                total = sum(space.edge_lens)
                return [space.boundary_point(rng.random() * total) for _ in range(n)]
            if space.variant == "cap":
                return [(space.radius, rng.random() * 2.0 * math.pi)
                        for _ in range(n)]
        if self.kind == "whole":
            return [space.random_point(rng) for _ in range(n)]
        return []


@dataclass
class ExtremalEvidence:
    criterion_worst: float
    invariance_worst: float
    n_criterion: int
    n_flows: int

    def passed(self, tol):
        return self.criterion_worst <= tol and self.invariance_worst <= tol


def detect_extremal(space, seed=0, verify=True, n_funcs=6, n_steps=40):
    """Enumerate extremal-subset candidates with verification evidence."""
    out = []
    cands = [SubsetDescriptor("whole", label="whole space"),
             SubsetDescriptor("empty", label="empty set")]
    for pt, angle in space.cone_points():
        if angle <= math.pi + 1e-9:
            cands.append(SubsetDescriptor("point", pt,
                                          f"cone point (angle {angle:.6f})"))
    if space.variant == "polygon":
        cands.append(SubsetDescriptor("boundary", label="polygon boundary"))
        for i in range(space.n):
            ang = space.corner_angle(i)
            if ang <= math.pi / 2.0 + 1e-9:
                cands.append(SubsetDescriptor(
                    "point", tuple(space.vertices[i]),
                    f"corner {i} (angle {ang:.6f})"))
    if space.variant == "cap":
        cands.append(SubsetDescriptor("boundary", label="cap boundary"))
    for c in cands:
        evidence = None
        if verify and c.kind in ("point", "boundary"):
            evidence = verify_extremal(space, c, n_funcs=n_funcs,
                                       n_steps=n_steps, seed=seed)
        out.append((c, evidence))
    return out


def verify_extremal(space, subset: SubsetDescriptor, n_funcs=8, n_steps=50,
                    h=5e-3, seed=0, tol=1e-8) -> ExtremalEvidence:
    """Criterion and invariance tests for a subset descriptor.

    Criterion: for q off the subset and p a local minimum of dist_q on
    it, the gradient of dist_q at p vanishes.  Invariance: squared
    distance flows launched on the subset stay on it.
    """
    rng = np.random.default_rng(seed)
    crit_worst = 0.0
    n_crit = 0
    for _ in range(n_funcs):
        q = space.random_point(rng)
        if subset.contains_distance(space, q) < 1e-3:
            continue
        p = _argmin_on_subset(space, subset, q, rng)
        if p is None:
            continue
        g = gradient(Dist(q=q), space, p)
        crit_worst = max(crit_worst, g.norm)
        n_crit += 1
    inv_worst = 0.0
    n_flows = 0
    starts = subset.sample_points(space, 4, rng)
    for x0 in starts:
        for _ in range(max(1, n_funcs // 2)):
            r = space.random_point(rng)
            f = DistSq(q=r)
            rec = gradient_curve(f, space, x0, n_steps * h, h)
            drift = max(subset.contains_distance(space, x)
                        for x in rec.points[:: max(1, len(rec.points) // 10)])
            inv_worst = max(inv_worst, drift)
            n_flows += 1
    return ExtremalEvidence(crit_worst, inv_worst, n_crit, n_flows)


def _argmin_on_subset(space, subset, q, rng, n_scan=256):
    if subset.kind == "point":
        return subset.point
    if subset.kind != "boundary":
        return None
    if space.variant == "polygon":
        total = sum(space.edge_lens)
        param = lambda s: space.boundary_point(s)
    elif space.variant == "cap":
        total = 2.0 * math.pi
        param = lambda s: (space.radius, s)
    else:
        return None
    best_s, best_d = 0.0, math.inf
    for i in range(n_scan):
        s = total * i / n_scan
        d = space.distance(param(s), q)
        if d < best_d:
            best_s, best_d = s, d
    lo, hi = best_s - total / n_scan, best_s + total / n_scan
    for _ in range(60):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if space.distance(param(m1), q) <= space.distance(param(m2), q):
            hi = m2
        else:
            lo = m1
    return param(0.5 * (lo + hi))


# -- regularity of the distance to an extremal subset ------------------------
@dataclass
class RegularityReport:
    floor: float
    band: tuple
    n_samples: int


def distance_regularity(space, subset: SubsetDescriptor, band=(1e-3, 0.2),
                        n_samples=100, seed=0) -> RegularityReport:
    """Measured floor of |grad dist_subset| on a thin collar around it."""
    rng = np.random.default_rng(seed)
    floor = math.inf
    used = 0
    while used < n_samples:
        x = space.random_point(rng)
        d = subset.contains_distance(space, x)
        if not (band[0] < d < band[1]):
            continue
        used += 1
        if subset.kind == "point":
            g = gradient(Dist(q=subset.point), space, x)
            floor = min(floor, g.norm)
        else:
            from .functions import BoundaryDist, differential
            from .tangent import gradient_from_directional

            g = gradient_from_directional(
                differential(BoundaryDist(), space, x))
            floor = min(floor, g.norm)
    return RegularityReport(floor, band, used)


# -- Lieberman instance -------------------------------------------------------
def boundary_edge_path(space, start_s, length, n_samples=200) -> CurveRecord:
    """Arclength path along a polygon boundary, passing corners.

    Corner crossings are inserted as samples so vertex events sit on the
    grid of the record.
    """
    step = length / n_samples
    params = [k * step for k in range(n_samples + 1)]
    corner_ts = []
    total = sum(space.edge_lens)
    acc = 0.0
    corner_positions = []
    for L in space.edge_lens:
        acc += L
        corner_positions.append(acc)
    for lap in range(int(length / total) + 2):
        for c in corner_positions:
            t = c + lap * total - start_s
            if 1e-12 < t < length - 1e-12:
                corner_ts.append(t)
    params = sorted(set(params) | set(corner_ts))
    ts = []
    pts = []
    rights = []
    lefts = [None]
    events = []
    for t in params:
        p = space.boundary_point(start_s + t)
        kind = space.classify(p)
        if kind[0] == "corner":
            events.append((t, "corner", kind[1]))
        ts.append(t)
        pts.append(p)
        sig = space.sigma_at(p)
        rights.append(TangentVec(1.0, 0.0, sig))
        if len(pts) > 1:
            lefts.append(TangentVec(1.0, sig.length if sig.is_arc else math.pi, sig))
    rights[-1] = None
    return CurveRecord(ts, pts, rights, lefts, events, step, "geodesic")


def lieberman_check(space, start_s=0.1, length=None, n_probes=10, tol=1e-6,
                    seed=0):
    """Intrinsic boundary geodesics are ambient quasigeodesics."""
    total = sum(space.edge_lens)
    if length is None:
        length = 0.45 * total  # under half the perimeter: intrinsically minimizing
    rec = boundary_edge_path(space, start_s, length)
    return check_quasigeodesic(space, rec, n_probes=n_probes, tol=tol, seed=seed)


# -- boundary concavity (kappa = 0 and kappa = 1) -----------------------------
@dataclass
class BoundaryConcavityReport:
    worst: float
    n_chords: int

    def passed(self, tol):
        return self.worst <= tol


def polygon_boundary_concavity(space, n_chords=200, n_samples=33, seed=0):
    """Second differences of dist_boundary along random interior chords."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n_chords):
        a = space.random_point(rng)
        b = space.random_point(rng)
        d = space.distance(a, b)
        if d < 1e-3:
            continue
        pts = space.geodesic_points(a, b, n_samples)
        vals = [space.boundary_dist(x) for x in pts]
        dt = d / (n_samples - 1)
        for i in range(1, n_samples - 1):
            worst = max(worst, (vals[i - 1] - 2 * vals[i] + vals[i + 1]) / (dt * dt))
    return BoundaryConcavityReport(worst, n_chords)


def cap_boundary_concavity(space, n_chords=100, n_samples=2001, seed=0):
    """(-f)-concavity of sin(r0 - r) along great-circle chords of a cap."""
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(n_chords):
        a = space.random_point(rng)
        b = space.random_point(rng)
        d = space.distance(a, b)
        if d < 1e-2:
            continue
        pts = space.geodesic_points(a, b, n_samples)
        vals = [math.sin(space.radius - x[0]) for x in pts]
        dt = d / (n_samples - 1)
        for i in range(1, n_samples - 1):
            d2 = (vals[i - 1] - 2 * vals[i] + vals[i + 1]) / (dt * dt)
            worst = max(worst, d2 + vals[i])
    return BoundaryConcavityReport(worst, n_chords)
