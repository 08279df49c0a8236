"""Quasigeodesic tracing, the construction ladder and the checker suite.

Tracing is straight-line unfolding; at a cone point of total angle theta
the curve continues so both side angles equal theta/2, which keeps every
development convex.  The construction ladder (joints of radial curves,
speed-controlled pieces with polar renormalization) realizes the
monotone -> convex -> pre-quasigeodesic chain, with the log-speed drop
ledger as its entropy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model_plane
from .flow import CurveRecord
from .functions import Dist, DistSq, differential, evaluate, scale
from .radial import RadialStepper
from .tangent import TangentVec, polar_vector


class TraceError(RuntimeError):
    pass


def trace_quasigeodesic(space, p, xi_angle, length, rule="equal-split",
                        record_step=None) -> CurveRecord:
    """Unit-speed trace through cone points with the equal-split rule."""
    if rule != "equal-split":
        raise TraceError(f"unknown continuation rule {rule!r}")
    if space.variant not in ("mesh", "cone", "polygon", "spindle"):
        raise TraceError(f"tracing is not supported on {space.variant}")
    p = space.validate_point(p)
    if record_step is None:
        record_step = max(length / 512.0, 1e-6)
    ts = [0.0]
    points = [p]
    rights = []
    lefts = [None]
    events = []
    cur, fwd = p, xi_angle
    t = 0.0
    guard = 0
    while t < length - 1e-12:
        guard += 1
        if guard > 100000:
            raise TraceError("trace exceeded the step budget")
        seg = min(record_step, length - t)
        w = space.walk(cur, fwd, seg)
        sig_cur = space.sigma_at(cur)
        rights.append(TangentVec(1.0, fwd, sig_cur))
        cur = w.end
        t += w.traveled
        ts.append(t)
        points.append(cur)
        lefts.append(TangentVec(1.0, w.back_angle, w.sigma))
        if w.event is None:
            fwd = w.sigma.forward_of_back(w.back_angle)
            continue
        if w.event == "vertex":
            theta = w.sigma.length
            if w.sigma.is_arc:
                events.append((t, "boundary-vertex", w.event_ref))
                break
            fwd = w.sigma.wrap(w.back_angle + theta / 2.0)
            events.append((t, "vertex", w.event_ref))
            continue
        events.append((t, w.event, w.event_ref))
        break
    rights.append(TangentVec(1.0, fwd, space.sigma_at(cur)) if t >= length - 1e-12
                  else None)
    return CurveRecord(ts, points, rights, lefts, events, record_step, "traced-qg")


# -- appendix construction ladder ------------------------------------------
def build_convex_curve(space, p, xi_angle, eps, T, h=None, kappa=0) -> CurveRecord:
    """Joint of radial curves restarted every eps of the parameter."""
    return _build_joint_curve(space, p, xi_angle, eps, T, h=h, kappa=kappa,
                              speed_control=False)


def build_prequasigeodesic(space, p, xi_angle, eps, T, h=None, kappa=0):
    """Speed-controlled joints with polar renormalization.

    Pieces restart after parameter eps or when the speed decays below
    (1 - eps) of the piece-start speed; at each joint the new launch
    vector is the polar partner of the incoming one.  Returns the curve
    and its entropy record.
    """
    rec = _build_joint_curve(space, p, xi_angle, eps, T, h=h, kappa=kappa,
                             speed_control=True)
    return rec, entropy(rec)


def _build_joint_curve(space, p, xi_angle, eps, T, h, kappa, speed_control):
    if h is None:
        h = eps / 16.0
    p = space.validate_point(p)
    ts = [0.0]
    points = [p]
    rights = []
    lefts = [None]
    events = []
    t = 0.0
    cur = p
    dir_angle = xi_angle
    sigma_speed = 1.0  # launch speed of the current piece
    run_speed = 1.0    # current speed along the curve
    while t < T - 1e-12 and sigma_speed > 1e-10:
        stepper = RadialStepper(space, cur, dir_angle, kappa=kappa,
                                stop_at_vertex=speed_control)
        piece_t = 0.0
        piece_budget = min(eps, T - t)
        stall = False
        while piece_t < piece_budget - 1e-15:
            dt_inner = min(h, piece_budget - piece_t) * sigma_speed
            if dt_inner <= 0.0:
                break
            vec = stepper.step(dt_inner)
            speed = sigma_speed * vec.norm
            rights.append(TangentVec(speed, vec.angle, vec.sigma))
            piece_t += dt_inner / sigma_speed
            t += dt_inner / sigma_speed
            ts.append(t)
            points.append(stepper.cur)
            lefts.append(TangentVec(speed, 0.0, space.sigma_at(stepper.cur)))
            run_speed = speed if speed > 0.0 else run_speed
            if stepper.stopped:
                events.append((t, "stall", None))
                stall = True
                break
            if getattr(stepper, "at_vertex", False):
                # the speed control forbids the cone-point drop: the piece
                # ends at the vertex and the polar extension takes over
                stall = True
                break
            if speed_control and speed < (1.0 - eps) * sigma_speed:
                stall = True
                break
        events.extend((t, k, r) for _, k, r in stepper.events
                      if k in ("vertex", "boundary"))
        if stall and stepper.stopped:
            break
        cur = stepper.cur
        if getattr(stepper, "at_vertex", False) and speed_control:
            sig = space.sigma_at(cur)
            incoming = TangentVec(run_speed, stepper.vertex_back_angle, sig)
            star = polar_vector(sig, incoming)
            dir_angle = star.angle
            sigma_speed = run_speed
            events.append((t, "joint-polar", None))
            continue
        nxt = stepper.launch_vector()
        if nxt.norm <= 1e-12:
            events.append((t, "stall", None))
            break
        if stall and speed_control:
            # renormalize with the polar of the incoming vector (equal norm)
            sig = space.sigma_at(cur)
            incoming = TangentVec(run_speed, sig.wrap(nxt.angle + math.pi)
                                  if not sig.is_arc else nxt.angle, sig)
            star = polar_vector(sig, incoming)
            dir_angle = star.angle
            sigma_speed = run_speed
            events.append((t, "joint-polar", None))
        else:
            dir_angle = nxt.angle
            sigma_speed = sigma_speed * nxt.norm
            run_speed = sigma_speed
    rights.append(None)
    return CurveRecord(ts, points, rights, lefts, events, h,
                       "prequasigeodesic" if speed_control else "convex-curve")


# -- entropy ------------------------------------------------------------------
@dataclass
class EntropyRecord:
    """Ledger of log-speed drops: atoms (t, ln|g+| - ln|g-|), total = sum.

    The curves built here are piecewise geodesic with constant speed per
    step, so the absolutely continuous part vanishes and every drop is
    an atom at a step boundary.
    """

    atoms: list
    total: float
    resolution: float

    def passed_zero(self, tol):
        return abs(self.total) <= tol


def entropy(curve: CurveRecord, min_jump: float = 0.0) -> EntropyRecord:
    atoms = []
    total = 0.0
    prev_norm = None
    for t, rt in zip(curve.ts, curve.right_tangents):
        if rt is None:
            continue
        if rt.norm <= 0.0:
            break
        if prev_norm is not None and prev_norm > 0.0:
            jump = math.log(rt.norm) - math.log(prev_norm)
            if abs(jump) > min_jump and abs(jump) > 0.0:
                atoms.append((t, jump))
                total += jump
        prev_norm = rt.norm
    return EntropyRecord(atoms, total, curve.h)


def entropy_from_tangents(ts, left_norms, right_norms) -> EntropyRecord:
    """Entropy of a user-supplied joint ledger."""
    atoms = []
    total = 0.0
    for t, ln, rn in zip(ts, left_norms, right_norms):
        if ln is None or rn is None or ln <= 0.0 or rn <= 0.0:
            continue
        jump = math.log(rn) - math.log(ln)
        if jump != 0.0:
            atoms.append((t, jump))
            total += jump
    return EntropyRecord(atoms, total, 0.0)


# -- checker suite ---------------------------------------------------------
@dataclass
class CheckReport:
    unit_speed_dev: float
    barrier_worst: float
    monotone_worst: float
    development_min_turn: float
    entropy_total: float
    n_probes: int
    details: dict = field(default_factory=dict)

    def passed(self, tol):
        return (
            self.unit_speed_dev <= tol
            and self.barrier_worst <= tol
            and self.monotone_worst <= tol
            and self.development_min_turn >= -tol
        )

    def summary(self):
        return (
            f"unit-speed dev {self.unit_speed_dev:.2e}; barrier {self.barrier_worst:.2e}; "
            f"angle-monotonicity {self.monotone_worst:.2e}; min turn "
            f"{self.development_min_turn:.2e}; entropy {self.entropy_total:.2e}"
        )


def check_quasigeodesic(space, curve: CurveRecord, n_probes=20, tol=1e-6,
                        seed=0, stencil=1) -> CheckReport:
    """Run the four characterization tests against random probe points.

    For each probe p:  h = rho_kappa(dist_p(gamma(t))) satisfies
    h'' <= 1 - kappa h in a discrete barrier sense; the comparison angle
    at the start is non-increasing in t; the development about p is
    convex.  Unit speed is checked on the curve's own grid.

    Chords between samples flanking a cone point undershoot the
    arclength (the connecting geodesic wraps around the vertex), so the
    chord-equality and polyline-turn tests skip samples within a few
    grid steps of a cone point; the one-sided Lipschitz bound and the
    distance-based tests are unaffected.
    """
    rng = np.random.default_rng(seed)
    kappa = space.kappa
    ts = curve.ts
    pts = curve.points
    event_ts = {round(t, 12) for t, _, _ in curve.events}

    clean = [True] * len(pts)
    cone_pts = space.cone_points() if hasattr(space, "cone_points") else []
    if cone_pts:
        step_hint = max(
            (ts[i + 1] - ts[i] for i in range(len(ts) - 1)), default=0.0
        )
        for v_pt, _ in cone_pts:
            if space.variant == "mesh":
                ds = [d for d, _ in space.distances_from(v_pt, pts)]
            else:
                ds = [space.distance(v_pt, x) for x in pts]
            for i, d in enumerate(ds):
                if d < 2.5 * step_hint:
                    clean[i] = False

    unit_dev = 0.0
    chords = []
    for i in range(len(ts) - 1):
        dt = ts[i + 1] - ts[i]
        chord = space.distance(pts[i], pts[i + 1])
        chords.append(chord)
        if dt <= 1e-15:
            continue
        if chord > dt * (1.0 + 1e-9) + 1e-12:
            unit_dev = max(unit_dev, chord / dt - 1.0)
        # chords through events legitimately undershoot the arclength
        straddles = any(ts[i] - 1e-12 < et < ts[i + 1] + 1e-12 for et in event_ts)
        if not straddles and clean[i] and clean[i + 1]:
            unit_dev = max(unit_dev, abs(chord / dt - 1.0))

    barrier_worst = -math.inf
    mono_worst = -math.inf
    min_turn = math.inf
    used = 0
    attempts = 0
    while used < n_probes and attempts < 8 * n_probes:
        attempts += 1
        probe = space.random_point(rng)
        if space.variant == "mesh":
            rs = [d for d, _ in space.distances_from(probe, pts)]
        else:
            rs = [space.distance(probe, x) for x in pts]
        if min(rs) < 20.0 * max(curve.h, 1e-9) or min(rs) < 1e-6:
            continue
        if kappa > 0 and max(rs) >= math.pi / math.sqrt(kappa) - 1e-9:
            continue
        used += 1
        hvals = [model_plane.rho(kappa, r) for r in rs]
        for i in range(stencil, len(ts) - stencil):
            dt1 = ts[i] - ts[i - stencil]
            dt2 = ts[i + stencil] - ts[i]
            if dt1 <= 1e-15 or dt2 <= 1e-15 or abs(dt1 - dt2) > 1e-12:
                continue
            d2 = (hvals[i - stencil] - 2.0 * hvals[i] + hvals[i + stencil]) / (dt1 * dt2)
            barrier_worst = max(barrier_worst, d2 - (1.0 - kappa * hvals[i]))
        prev = None
        for i in range(1, len(ts)):
            if kappa > 0 and ts[i] >= math.pi / math.sqrt(kappa):
                break
            ang = model_plane.comparison_angle(kappa, rs[0], rs[i], ts[i])
            if prev is not None:
                mono_worst = max(mono_worst, ang - prev)
            prev = ang
        dev = model_plane.develop_curve(kappa, list(zip(ts, rs)), tolerance=tol,
                                        chords=chords)
        for j, turn in enumerate(dev.turns):
            if clean[j] and clean[j + 1] and clean[j + 2]:
                min_turn = min(min_turn, turn)
    ent = entropy(curve)
    return CheckReport(
        unit_speed_dev=unit_dev,
        barrier_worst=barrier_worst if used else 0.0,
        monotone_worst=mono_worst if used else 0.0,
        development_min_turn=min_turn if min_turn < math.inf else 0.0,
        entropy_total=ent.total,
        n_probes=used,
    )


# -- extend / chop demo -------------------------------------------------------
@dataclass
class ChopExtendReport:
    t: float
    t_bar: float
    theta: float
    mu: float
    chop_ok: bool
    extension_atom: float
    lemma_margin: float
    lemma_applicable: bool

    def passed(self, tol):
        ok = self.chop_ok and abs(self.extension_atom) <= tol
        if self.lemma_applicable:
            ok = ok and self.lemma_margin >= -tol
        return ok


def chop_extend_demo(space, p, xi_angle, eps, T=None, kappa=0, seed=0,
                     q_far=None) -> ChopExtendReport:
    """One extend-then-chop cycle on a built pre-quasigeodesic.

    Verifies the extension joint carries no entropy atom, finds t_bar
    with mu((t, t_bar)) < eps * (theta + t_bar - t), and checks the
    convex-curve derivative inequality for a 1-concave test function.
    """
    if T is None:
        T = 8.0 * eps
    rec, ent = build_prequasigeodesic(space, p, xi_angle, eps, T, kappa=kappa)
    ts = rec.ts
    i0 = len(ts) // 3
    t0 = ts[i0]
    # extension atom at t0: speed across the joint
    rt = rec.right_tangents
    ln = rt[i0 - 1].norm if rt[i0 - 1] is not None else None
    rn = rt[i0].norm if rt[i0] is not None else None
    ext_atom = (math.log(rn) - math.log(ln)) if (ln and rn) else 0.0

    x0 = rec.points[i0]
    dir0 = rt[i0]
    mu_run = 0.0
    chop = None
    prev_norm = rn
    for j in range(i0 + 1, len(ts)):
        if rt[j] is None or rt[j].norm <= 0:
            break
        mu_run += math.log(rt[j].norm) - math.log(prev_norm)
        prev_norm = rt[j].norm
        tbar = ts[j]
        if tbar - t0 > eps:
            break
        dirs = space.directions_to(x0, rec.points[j])
        sig = space.sigma_at(x0)
        theta = min(sig.dist(dir0.angle, a) for a in dirs)
        if abs(mu_run) < eps * (theta + (tbar - t0)) and theta < eps:
            chop = (tbar, theta, abs(mu_run))
            break
    chop_ok = chop is not None
    tbar, theta, mu = chop if chop else (t0, math.inf, math.inf)

    # convex-curve inequality for f = dist_q^2 / 2 (1-concave when curv >= 0)
    if q_far is None:
        rng = np.random.default_rng(seed)
        q_far = space.random_point(rng)
    f = scale(0.5, DistSq(q=q_far))
    lam = 1.0
    j = min(len(ts) - 1, i0 + max(2, int(eps / rec.h)))
    tspan = ts[j] - t0
    lemma_applicable = False
    margin = 0.0
    if tspan > 1e-9 and rt[i0] is not None and rt[i0].norm > 1e-9:
        d = differential(f, space, x0)
        xi_unit = rt[i0].angle
        nus = space.directions_to(x0, rec.points[j])
        nu = nus[0]
        if d(nu) >= 0.0:
            lemma_applicable = True
            lhs = d(xi_unit) * rt[i0].norm - d(nu)
            fwd = (evaluate(f, space, rec.points[i0 + 1]) -
                   evaluate(f, space, x0)) / (ts[i0 + 1] - t0)
            bwd = (evaluate(f, space, rec.points[j]) -
                   evaluate(f, space, rec.points[j - 1])) / (ts[j] - ts[j - 1])
            rhs = fwd - bwd + lam * tspan
            margin = rhs - lhs
    return ChopExtendReport(t0, tbar, theta, mu, chop_ok, ext_atom, margin,
                            lemma_applicable)


def monotone_report(space, curve: CurveRecord, expr, lam, t0_index=0):
    """Worst increase of (f(c(t0+t)) - f(c(t0)) - lam t^2/2)/t over the grid."""
    ts = curve.ts
    pts = curve.points
    base_t = ts[t0_index]
    base_v = evaluate(expr, space, pts[t0_index])
    vals = []
    for t, x in zip(ts[t0_index + 1:], pts[t0_index + 1:]):
        dt = t - base_t
        vals.append((evaluate(expr, space, x) - base_v - 0.5 * lam * dt * dt) / dt)
    worst = max((vals[i + 1] - vals[i] for i in range(len(vals) - 1)), default=0.0)
    return worst, vals
