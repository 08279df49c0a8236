"""Radial curves and the gradient exponential for curvature -1, 0, 1.

A radial curve from p in direction xi follows the unit geodesic while it
stays minimizing (there the defining speed factor is exactly one) and
afterwards integrates  alpha' = m_kappa(|p alpha|, t) * grad dist_p
with m_0 = r/t, m_{-1} = tanh r / tanh t, m_1 = tan r / tan t.  The
geodesic regime removes the t -> 0 singularity of the factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .flow import CurveRecord, gradient
from .functions import Dist, evaluate
from .model_plane import comparison_angle
from .spaces.base import SigmaDesc
from .tangent import TangentVec, zero_vector

_SWITCH_TOL = 1e-9
_SIGMA_FULL = SigmaDesc(2.0 * math.pi)


class RadialDomainError(ValueError):
    pass


def speed_factor(kappa, r, t):
    if t <= 0.0:
        return 1.0
    r = min(r, t)
    if kappa == 0:
        return r / t
    if kappa == -1:
        return math.tanh(r) / math.tanh(t)
    if kappa == 1:
        if t >= math.pi / 2.0 - 1e-12:
            raise RadialDomainError("spherical radial curves live on [0, pi/2]")
        return math.tan(r) / math.tan(t)
    raise RadialDomainError(f"kappa must be -1, 0 or 1, not {kappa}")


class RadialStepper:
    """Incremental integrator for one radial curve.

    Exposes the current point, parameter and launch vector so joint
    constructions can drive it piecewise.
    """

    def __init__(self, space, p, xi_angle, kappa=0, tol_stop=1e-8,
                 check_every=None, grid=720, stop_at_vertex=False):
        self.space = space
        self.p = space.validate_point(p)
        self.kappa = kappa
        self.tol_stop = tol_stop
        self.grid = grid
        if check_every is None:
            check_every = 5 if space.variant == "mesh" else 1
        self.check_every = check_every
        self.stop_at_vertex = stop_at_vertex
        self.at_vertex = False
        self.t = 0.0
        self.cur = self.p
        self.fwd = xi_angle
        self.regime = "geo"
        self.stopped = False
        self.events = []
        self._steps_since_check = 0
        self._dist_expr = Dist(q=self.p)

    def snapshot(self):
        return (self.t, self.cur, self.fwd, self.regime, self.stopped,
                self.at_vertex, len(self.events), self._steps_since_check)

    def restore(self, snap):
        (self.t, self.cur, self.fwd, self.regime, self.stopped,
         self.at_vertex, n_events, self._steps_since_check) = snap
        del self.events[n_events:]

    def launch_vector(self):
        """Current motion vector (speed and direction) at the current point."""
        if self.stopped:
            return zero_vector(self.space.sigma_at(self.cur))
        if self.regime == "geo":
            return TangentVec(1.0, self.fwd, self.space.sigma_at(self.cur))
        g = gradient(self._dist_expr, self.space, self.cur, grid=self.grid)
        if g.norm < self.tol_stop:
            return zero_vector(g.sigma)
        r = self.space.distance(self.p, self.cur)
        m = speed_factor(self.kappa, r, self.t)
        return TangentVec(m * g.norm, g.angle, g.sigma)

    def step(self, dt):
        """Advance the parameter by dt; returns the motion vector used."""
        if self.kappa == 1 and self.t + dt > math.pi / 2.0 + 1e-12:
            raise RadialDomainError("spherical radial curves live on [0, pi/2]")
        if self.stopped:
            self.t += dt
            return zero_vector(self.space.sigma_at(self.cur))
        if self.regime == "geo":
            return self._geo_step(dt)
        return self._grad_step(dt)

    def _switch_check(self):
        r = self.space.distance(self.p, self.cur)
        if r < self.t - max(_SWITCH_TOL, 1e-6 * self.t):
            self.regime = "grad"
            self.events.append((self.t, "regime", "gradient"))

    def _geo_step(self, dt):
        vec = TangentVec(1.0, self.fwd, self.space.sigma_at(self.cur))
        w = self.space.walk(self.cur, self.fwd, dt)
        if w.event == "vertex":
            # a straight line cannot continue through a cone point
            self.cur = w.end
            self.t += w.traveled
            self.events.append((self.t, "vertex", w.event_ref))
            self.regime = "grad"
            if self.stop_at_vertex:
                self.at_vertex = True
                self.vertex_back_angle = w.back_angle
                return vec
            rem = dt - w.traveled
            if rem > 1e-15:
                self._grad_step(rem)
            return vec
        if w.event is not None:
            self.cur = w.end
            self.t += w.traveled
            self.events.append((self.t, w.event, w.event_ref))
            self.stopped = True
            return vec
        self.cur = w.end
        self.fwd = w.sigma.forward_of_back(w.back_angle)
        self.t += dt
        self._steps_since_check += 1
        if self._steps_since_check >= self.check_every:
            self._steps_since_check = 0
            self._switch_check()
        return vec

    def _grad_step_cone(self, dt):
        """Inline gradient step on a cone: closed-form distance, single
        minimizing direction, planar walk.  Falls back to the generic step
        at apexes, ridge ties and through-apex configurations."""
        space = self.space
        theta = space.total_angle
        r_p, phi_p = self.p
        r_c, phi_c = self.cur
        if r_c <= 1e-12 or r_p <= 1e-12:
            return None
        delta = math.fmod(phi_p - phi_c, theta)
        if delta < 0.0:
            delta += theta
        ccw, cw = delta, theta - delta
        if abs(ccw - cw) < 1e-9:
            return None  # equidistance ridge: two minimizers
        if ccw <= cw:
            a, sign = ccw, 1.0
        else:
            a, sign = cw, -1.0
        if a > math.pi:
            return None
        ex = r_p * math.cos(a) - r_c
        ey = sign * r_p * math.sin(a)
        dist = math.hypot(ex, ey)
        if dist <= 1e-12:
            return None
        ang = math.atan2(-ey, -ex)  # away from p, chart angle at cur
        m = speed_factor(self.kappa, min(dist, self.t), max(self.t, dt))
        arc = dt * m
        ex2 = r_c + arc * math.cos(ang)
        ey2 = arc * math.sin(ang)
        r2 = math.hypot(ex2, ey2)
        if r2 <= 1e-12:
            return None
        phi2 = math.fmod(phi_c + math.atan2(ey2, ex2), theta)
        if phi2 < 0.0:
            phi2 += theta
        self.cur = (r2, phi2)
        self.t += dt
        return TangentVec(m, ang, _SIGMA_FULL)

    def _grad_step(self, dt):
        if self.space.variant == "cone":
            vec = self._grad_step_cone(dt)
            if vec is not None:
                return vec
        g = gradient(self._dist_expr, self.space, self.cur, grid=self.grid)
        if g.norm < self.tol_stop:
            self.stopped = True
            self.events.append((self.t, "stop", None))
            self.t += dt
            return zero_vector(g.sigma)
        r = self.space.distance(self.p, self.cur)
        m = speed_factor(self.kappa, r, max(self.t, dt))
        vec = TangentVec(m * g.norm, g.angle, g.sigma)
        remaining = dt
        for _ in range(64):
            arc = remaining * vec.norm
            w = self.space.walk(self.cur, vec.angle, arc)
            self.cur = w.end
            used = w.traveled / max(vec.norm, 1e-300)
            self.t += used
            remaining -= used
            if w.event is None or remaining <= 1e-15:
                break
            self.events.append((self.t, w.event, w.event_ref))
            if w.event != "vertex":
                self.stopped = True
                break
            if self.stop_at_vertex:
                self.at_vertex = True
                self.vertex_back_angle = w.back_angle
                break
            g = gradient(self._dist_expr, self.space, self.cur, grid=self.grid)
            if g.norm < self.tol_stop:
                self.stopped = True
                self.events.append((self.t, "stop", None))
                break
            r = self.space.distance(self.p, self.cur)
            m = speed_factor(self.kappa, r, self.t)
            vec = TangentVec(m * g.norm, g.angle, g.sigma)
        return vec


def radial_curve(space, p, xi_angle, kappa, T, h, tol_stop=1e-8,
                 grid=720) -> CurveRecord:
    """Radial curve record from p in direction xi over [0, T] at step h."""
    if kappa == 1 and T > math.pi / 2.0 + 1e-12:
        raise RadialDomainError("spherical radial curves live on [0, pi/2]")
    if kappa not in (-1, 0, 1):
        raise RadialDomainError(f"kappa must be -1, 0 or 1, not {kappa}")
    stepper = RadialStepper(space, p, xi_angle, kappa, tol_stop, grid=grid)
    ts = [0.0]
    points = [stepper.cur]
    rights = []
    lefts = [None]
    t = 0.0
    while t < T - 1e-15:
        dt = min(h, T - t)
        vec = stepper.step(dt)
        rights.append(vec)
        t += dt
        ts.append(t)
        points.append(stepper.cur)
        lefts.append(TangentVec(vec.norm, 0.0, stepper.space.sigma_at(stepper.cur)))
    rights.append(stepper.launch_vector())
    return CurveRecord(ts, points, rights, lefts, list(stepper.events), h, "radial")


def gexp_map(space, p, v: TangentVec, kappa, h, grid=720):
    """Endpoint of the radial curve at parameter |v| in the direction of v."""
    if v.norm == 0.0:
        return space.validate_point(p)
    if kappa == 1 and v.norm > math.pi / 2.0 + 1e-12:
        raise RadialDomainError("gexp(1; v) needs |v| <= pi/2")
    stepper = RadialStepper(space, p, v.angle, kappa, grid=grid)
    T = v.norm
    t = 0.0
    chunk_cap = 0.25
    while t < T - 1e-15:
        if stepper.regime == "geo" and not stepper.stopped:
            # straight fast-forward: replay at step h only when the walk
            # leaves the geodesic regime inside the chunk
            chunk = min(chunk_cap, T - t)
            snap = stepper.snapshot()
            stepper.step(chunk)
            if stepper.regime == "geo" and not stepper.stopped:
                t += chunk
                continue
            if chunk <= h + 1e-15:
                t += chunk
                continue
            stepper.restore(snap)
            sub = 0.0
            while sub < chunk - 1e-15:
                dt = min(h, chunk - sub)
                stepper.step(dt)
                sub += dt
            t += chunk
            continue
        dt = min(h, T - t)
        stepper.step(dt)
        t += dt
    return stepper.cur


def tangent_cone_metric(kappa, u: TangentVec, v: TangentVec) -> float:
    """Cone, elliptic-cone or spherical-suspension distance on tangent vectors."""
    if u.norm == 0.0 or v.norm == 0.0:
        base = u.norm + v.norm
        if kappa == 0:
            return base
        if kappa == -1:
            return base
        return min(base, math.pi)
    alpha = min(u.sigma.dist(u.angle, v.angle), math.pi)
    if kappa == 0:
        return math.sqrt(
            max(0.0, u.norm ** 2 + v.norm ** 2 - 2.0 * u.norm * v.norm * math.cos(alpha))
        )
    if kappa == -1:
        ch = math.cosh(u.norm) * math.cosh(v.norm) - math.sinh(u.norm) * math.sinh(
            v.norm
        ) * math.cos(alpha)
        return math.acosh(max(1.0, ch))
    if kappa == 1:
        if u.norm > math.pi or v.norm > math.pi:
            raise RadialDomainError("spherical suspension lives on |v| <= pi")
        c = math.cos(u.norm) * math.cos(v.norm) + math.sin(u.norm) * math.sin(
            v.norm
        ) * math.cos(alpha)
        return math.acos(max(-1.0, min(1.0, c)))
    raise RadialDomainError(f"kappa must be -1, 0 or 1, not {kappa}")


@dataclass
class RadialComparisonReport:
    ts: list
    angles: list
    worst_increase: float
    theta0: float | None = None
    theta_worst_increase: float | None = None

    def passed(self, tol):
        ok = self.worst_increase <= tol
        if self.theta_worst_increase is not None:
            ok = ok and self.theta_worst_increase <= tol
        return ok


def verify_radial_comparison(space, p, xi_angle, q, kappa, t_grid, h,
                             expr=None, lam=0.0, grid=720) -> RadialComparisonReport:
    """Monotonicity of the comparison angle along a radial curve.

    Checks t -> angle_k(t, |alpha(t) q|, |pq|) non-increasing; with
    `expr` also checks the normalized value drop
    (f(alpha(t)) - f(p) - lam t^2 / 2)/t, whose limit at 0 is the
    differential in the launch direction.
    """
    T = max(t_grid)
    dpq = space.distance(p, q)
    if kappa == 1 and dpq > math.pi / 2.0 + 1e-12:
        raise RadialDomainError("kappa = 1 comparison needs |pq| <= pi/2")
    rec = radial_curve(space, p, xi_angle, kappa, T, h, grid=grid)

    # snap each requested time to the record grid and use the snapped
    # parameter in the comparison triangle: the sides must be consistent
    idxs = sorted({min(int(round(t / h)), len(rec.points) - 1) for t in t_grid
                   if t > 0.0})
    t_used = [rec.ts[i] for i in idxs]
    pts = [rec.points[i] for i in idxs]
    if space.variant == "mesh":
        dists = [d for d, _ in space.distances_from(q, pts)]
    else:
        dists = [space.distance(x, q) for x in pts]
    angles = []
    t_grid = t_used
    for t, dq in zip(t_used, dists):
        angles.append(comparison_angle(kappa, t, dq, dpq))
    worst = max(
        (angles[i + 1] - angles[i] for i in range(len(angles) - 1)),
        default=0.0,
    )
    rep = RadialComparisonReport(list(t_used), angles, worst)
    if expr is not None:
        fp = evaluate(expr, space, p)
        thetas = []
        for t, x in zip(t_used, pts):
            if t <= 0.0:
                continue
            ft = evaluate(expr, space, x)
            thetas.append((ft - fp - 0.5 * lam * t * t) / t)
        from .functions import differential

        d0 = differential(expr, space, p)(xi_angle)
        rep.theta0 = d0
        inc = max(
            (thetas[i + 1] - thetas[i] for i in range(len(thetas) - 1)),
            default=0.0,
        )
        inc = max(inc, thetas[0] - d0 if thetas else 0.0)
        rep.theta_worst_increase = inc
    return rep


@dataclass
class InverseCheckReport:
    worst_decrease: float
    min_separation: float

    def passed(self, tol):
        return self.worst_decrease <= tol and self.min_separation > 0.0


def gexp_inverse_check(space, p, geodesic_points, probe_angles, kappa, h,
                       grid=720) -> InverseCheckReport:
    """Radial curves in other directions never re-enter an open geodesic.

    Along each probe radial curve the comparison angle at the geodesic
    endpoint is non-decreasing, and the curve keeps a positive distance
    from the open geodesic.
    """
    q = geodesic_points[-1]
    T = space.distance(p, q)
    if kappa == 1:
        T = min(T, math.pi / 2.0 - 1e-6)
    dpq = space.distance(p, q)
    interior = geodesic_points[1:-1]
    worst_dec = 0.0
    min_sep = math.inf
    for ang in probe_angles:
        rec = radial_curve(space, p, ang, kappa, T, h, grid=grid)
        prev = None
        for i in range(1, len(rec.points), max(1, len(rec.points) // 40)):
            x = rec.points[i]
            b = space.distance(p, x)
            c = space.distance(q, x)
            a = dpq
            ang_q = comparison_angle(kappa, a, b, c)
            if prev is not None:
                worst_dec = max(worst_dec, prev - ang_q)
            prev = ang_q
            for y in interior:
                min_sep = min(min_sep, space.distance(x, y))
    return InverseCheckReport(worst_dec, min_sep)
