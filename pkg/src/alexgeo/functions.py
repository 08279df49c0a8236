"""Semiconcave-function DSL over distance functions.

Expression trees built from distance leaves closed under monotone
semiconcave composition, plus the numerical operators on them:
concavity checking along sampled geodesics, inf-convolution and
smoothing of distance functions by averaging over a small ball.

Concavity certificates attached to expressions are hints, never trusted:
operators that require a concavity constant run `check_concavity` before
using one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import model_plane
from .tangent import (
    DirectionalFn,
    combine_affine,
    combine_min,
    cos_tail_directional,
    constant_directional,
)


class ExprError(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    lam: float
    center: object
    radius: float
    verified: bool = False


@dataclass(frozen=True)
class Expr:
    certificates: tuple = ()

    def with_certificate(self, lam, center, radius, verified=False):
        cert = Certificate(lam, center, radius, verified)
        return replace(self, certificates=self.certificates + (cert,))

    def leaves(self):
        return []


@dataclass(frozen=True)
class Dist(Expr):
    q: object = None


@dataclass(frozen=True)
class DistSq(Expr):
    q: object = None


@dataclass(frozen=True)
class RhoDist(Expr):
    """rho_kappa composed with the distance from q."""

    kappa: float = 0.0
    q: object = None


@dataclass(frozen=True)
class PhiRC(Expr):
    """phi_{r,c}(x) = (x - r) - c (x - r)^2 / r applied to dist_q.

    phi(r) = 0, phi'(r) = 1, phi''(r) = -2c/r.
    """

    r: float = 1.0
    c: float = 1.0
    q: object = None

    def phi(self, x):
        return (x - self.r) - self.c * (x - self.r) ** 2 / self.r

    def dphi(self, x):
        return 1.0 - 2.0 * self.c * (x - self.r) / self.r


@dataclass(frozen=True)
class Affine(Expr):
    weights: tuple = ()
    constant: float = 0.0
    terms: tuple = ()


@dataclass(frozen=True)
class MinExpr(Expr):
    terms: tuple = ()


@dataclass(frozen=True)
class BoundaryDist(Expr):
    """Distance to the boundary; for doubles, pulled back by the projection."""

    pullback: bool = False


def sum_of(*terms):
    return Affine(weights=tuple(1.0 for _ in terms), terms=tuple(terms))


def scale(w, term, constant=0.0):
    return Affine(weights=(float(w),), constant=constant, terms=(term,))


def validate_simple(expr) -> bool:
    """Check the restricted outer-map grammar: nonnegative affine weights
    and min combinations over squared-distance leaves."""
    if isinstance(expr, DistSq):
        return True
    if isinstance(expr, Affine):
        return all(w >= 0.0 for w in expr.weights) and all(
            validate_simple(t) for t in expr.terms
        )
    if isinstance(expr, MinExpr):
        return all(validate_simple(t) for t in expr.terms)
    return False


def expr_leaves(expr):
    if isinstance(expr, (Dist, DistSq, RhoDist, PhiRC)):
        return [expr]
    if isinstance(expr, Affine):
        return [l for t in expr.terms for l in expr_leaves(t)]
    if isinstance(expr, MinExpr):
        return [l for t in expr.terms for l in expr_leaves(t)]
    if isinstance(expr, BoundaryDist):
        return [expr]
    raise ExprError(f"unknown expression node {expr!r}")


# -- evaluation ----------------------------------------------------------
def evaluate(expr, space, p):
    return evaluate_with_error(expr, space, p)[0]


def evaluate_with_error(expr, space, p):
    """Value plus a conservative bound from certified distance errors."""
    if isinstance(expr, Dist):
        return space.distance_with_error(expr.q, p)
    if isinstance(expr, DistSq):
        d, e = space.distance_with_error(expr.q, p)
        return d * d, e * (2.0 * d + e)
    if isinstance(expr, RhoDist):
        d, e = space.distance_with_error(expr.q, p)
        return model_plane.rho(expr.kappa, d), e * abs(model_plane.sigma(expr.kappa, d)) + e * e
    if isinstance(expr, PhiRC):
        d, e = space.distance_with_error(expr.q, p)
        return expr.phi(d), e * (abs(expr.dphi(d)) + e * expr.c / expr.r)
    if isinstance(expr, Affine):
        v, err = expr.constant, 0.0
        for w, t in zip(expr.weights, expr.terms):
            tv, te = evaluate_with_error(t, space, p)
            v += w * tv
            err += abs(w) * te
        return v, err
    if isinstance(expr, MinExpr):
        pairs = [evaluate_with_error(t, space, p) for t in expr.terms]
        v = min(v for v, _ in pairs)
        return v, max(e for _, e in pairs)
    if isinstance(expr, BoundaryDist):
        return _boundary_dist(space, p), 0.0
    if callable(expr):
        return float(expr(space, p)), 0.0
    raise ExprError(f"cannot evaluate {expr!r}")


def _boundary_dist(space, p):
    if hasattr(space, "boundary_dist"):
        return space.boundary_dist(p)
    if hasattr(space, "project") and hasattr(space, "base"):
        return _boundary_dist(space.base, space.project(p))
    raise ExprError(f"{space.variant} has no boundary-distance support")


# -- differentials --------------------------------------------------------
def differential(expr, space, p) -> DirectionalFn:
    """Directional derivative on the direction space at p, by chain rule.

    A distance leaf contributes min over its minimizing directions of
    -cos; a leaf based exactly at p contributes the unit-rate constant.
    """
    sigma = space.sigma_at(p)
    return _diff(expr, space, p, sigma)


def _dist_leaf(space, p, q, sigma):
    d = space.distance(q, p)
    if d <= 1e-12:
        return d, constant_directional(sigma, 1.0)
    dirs = space.directions_to(p, q)
    return d, cos_tail_directional(sigma, 1.0, dirs)


def _diff(expr, space, p, sigma) -> DirectionalFn:
    if isinstance(expr, Dist):
        _, base = _dist_leaf(space, p, expr.q, sigma)
        return base
    if isinstance(expr, DistSq):
        d, base = _dist_leaf(space, p, expr.q, sigma)
        if d <= 1e-12:
            return constant_directional(sigma, 0.0)
        return combine_affine(sigma, [(2.0 * d, base)])
    if isinstance(expr, RhoDist):
        d, base = _dist_leaf(space, p, expr.q, sigma)
        return combine_affine(sigma, [(model_plane.sigma(expr.kappa, d), base)])
    if isinstance(expr, PhiRC):
        d, base = _dist_leaf(space, p, expr.q, sigma)
        return combine_affine(sigma, [(expr.dphi(d), base)])
    if isinstance(expr, Affine):
        parts = [(w, _diff(t, space, p, sigma)) for w, t in zip(expr.weights, expr.terms)]
        return combine_affine(sigma, parts)
    if isinstance(expr, MinExpr):
        vals = [evaluate(t, space, p) for t in expr.terms]
        vmin = min(vals)
        active = [
            _diff(t, space, p, sigma)
            for t, v in zip(expr.terms, vals)
            if v <= vmin + 1e-9
        ]
        return combine_min(sigma, active)
    if isinstance(expr, BoundaryDist):
        return _boundary_diff(space, p, sigma)
    raise ExprError(f"cannot differentiate {expr!r}")


def _boundary_diff(space, p, sigma):
    if space.variant == "polygon":
        d, feet = space.boundary_feet(p)
        if d <= 1e-12:
            # on the boundary arc the rate is min over adjacent edges of
            # sin(angle from that edge) = min of cos(angdist to its normal)
            parts = [
                cos_tail_directional(sigma, -1.0, [math.pi / 2.0]),
                cos_tail_directional(sigma, -1.0, [sigma.length - math.pi / 2.0]),
            ]
            return combine_min(sigma, parts)
        parts = [
            cos_tail_directional(sigma, 1.0, space.directions_to(p, f)) for f in feet
        ]
        return combine_min(sigma, parts)
    if space.variant == "cap":
        # r0 - r: the derivative of -dist to the pole
        if p[0] <= 1e-12:
            return constant_directional(sigma, -1.0)
        dirs = space.directions_to(p, (0.0, 0.0))
        return combine_affine(sigma, [(-1.0, cos_tail_directional(sigma, 1.0, dirs))])
    raise ExprError("boundary differential needs a polygon or cap")


def supporting_check(expr, space, p, s_vec, grid=720, tol=1e-9):
    """Verify d_p f(x) <= -<s, x> on a direction grid; (ok, worst margin)."""
    from .tangent import supporting_check as _core

    return _core(differential(expr, space, p), s_vec, grid=grid, tol=tol)


# -- concavity checking -----------------------------------------------------
@dataclass
class ConcavityReport:
    lam: float
    tol: float
    passed: bool
    worst_margin: float
    worst_chord: tuple | None
    n_geodesics: int

    def summary(self):
        state = "pass" if self.passed else "FAIL"
        return (f"lambda={self.lam:g} {state}: worst second-difference margin "
                f"{self.worst_margin:.3e} over {self.n_geodesics} geodesics")


def check_concavity(expr, space, lam, region, n_geodesics=100, n_samples=17,
                    seed=0, tol=1e-7, lam_fn=None) -> ConcavityReport:
    """Sample geodesics in a ball and test discrete second differences.

    With `lam_fn` the bound becomes pointwise, (f o gamma)'' <= lam_fn(f),
    which covers the value-coupled concavity notions.
    """
    center, radius = region
    rng = np.random.default_rng(seed)
    worst = -math.inf
    worst_chord = None
    for _ in range(n_geodesics):
        a = space.random_point_near(center, radius, rng)
        b = space.random_point_near(center, radius, rng)
        d = space.distance(a, b)
        if d < 1e-6:
            continue
        pts = space.geodesic_points(a, b, n_samples)
        vals = [evaluate(expr, space, x) for x in pts]
        dt = d / (n_samples - 1)
        for i in range(1, n_samples - 1):
            d2 = (vals[i - 1] - 2.0 * vals[i] + vals[i + 1]) / (dt * dt)
            bound = lam_fn(vals[i]) if lam_fn is not None else lam
            margin = d2 - bound
            if margin > worst:
                worst = margin
                worst_chord = (a, b)
    if worst == -math.inf:
        worst = 0.0
    return ConcavityReport(lam, tol, bool(worst <= tol), float(worst),
                           worst_chord, n_geodesics)


def ensure_certificate(expr, space, center, radius, lam=None, seed=0):
    """Find or verify a concavity constant near a point; returns lambda."""
    for cert in getattr(expr, "certificates", ()):
        if cert.verified:
            return cert.lam
    cand = lam
    if cand is None:
        certs = getattr(expr, "certificates", ())
        if certs:
            cand = certs[0].lam
        else:
            raise ExprError("no concavity certificate supplied")
    rep = check_concavity(expr, space, cand, (center, radius),
                          n_geodesics=24, n_samples=9, seed=seed, tol=1e-5)
    if not rep.passed:
        raise ExprError(
            f"concavity certificate lambda={cand} fails: {rep.summary()}"
        )
    return cand


# -- inf-convolution ----------------------------------------------------------
@dataclass
class InfConvResult:
    value: float
    argmin: object
    in_domain: bool


class InfConvolution:
    """f_eps(y) = min_x f(x) + d(x, y)^2 / eps by sampled local minimization."""

    def __init__(self, expr, space, eps, lip_hint=2.0, n_angles=16, n_radii=8,
                 refine_rounds=3):
        self.expr = expr
        self.space = space
        self.eps = eps
        self.search_radius = 1.5 * lip_hint * eps
        self.n_angles = n_angles
        self.n_radii = n_radii
        self.refine_rounds = refine_rounds

    def _obj(self, x, y):
        return evaluate(self.expr, self.space, x) + \
            self.space.distance(x, y) ** 2 / self.eps

    def query(self, y) -> InfConvResult:
        space = self.space
        best_x, best_v = y, self._obj(y, y)
        center, radius = y, self.search_radius
        expanded = False
        for _ in range(self.refine_rounds + 1):
            sig = space.sigma_at(center)
            hit_rim = False
            for i in range(self.n_angles):
                ang = sig.length * (i + 0.5) / self.n_angles
                for k in range(1, self.n_radii + 1):
                    r = radius * k / self.n_radii
                    try:
                        w = space.walk(center, ang, r)
                    except Exception:
                        break
                    v = self._obj(w.end, y)
                    if v < best_v - 1e-15:
                        best_v, best_x = v, w.end
                        hit_rim = k == self.n_radii
                    if w.event is not None:
                        break
            if hit_rim and not expanded:
                radius *= 2.0
                expanded = True
                continue
            center = best_x
            radius /= float(self.n_radii)
        # compass polish to pin the minimizer below discretization error
        step = max(radius, 1e-6)
        while step > 1e-9:
            improved = False
            sig = space.sigma_at(best_x)
            for k in range(8):
                ang = sig.length * k / 8.0
                try:
                    w = space.walk(best_x, ang, step)
                except Exception:
                    continue
                v = self._obj(w.end, y)
                if v < best_v - 1e-16:
                    best_v, best_x = v, w.end
                    improved = True
            if not improved:
                step *= 0.35
        in_domain = not (expanded and hit_rim)
        return InfConvResult(best_v, best_x, in_domain)

    def __call__(self, space, p):
        return self.query(p).value


# -- smoothed distance ----------------------------------------------------------
class SmoothedDistance:
    """Average of dist_x over a ball around p, sampled once per seed.

    The same fixed sample set serves every query, so values and
    differentials are deterministic and consistent.  Flat full-plane
    spaces get vectorized sampling and evaluation.
    """

    def __init__(self, space, p, eps, n_mc=20000, seed=0):
        self.space = space
        self.p = p
        self.eps = eps
        rng = np.random.default_rng(seed)
        self._planar = space.variant == "polygon" or (
            space.variant == "cone" and abs(space.total_angle - 2.0 * math.pi) < 1e-12
        )
        if self._planar:
            self._xy = self._sample_planar(space, p, eps, n_mc, rng)
            self.samples = None
        else:
            self.samples = self._sample_ball(space, p, eps, n_mc, rng)

    def _to_xy(self, pt):
        if self.space.variant == "cone":
            return np.array([pt[0] * math.cos(pt[1]), pt[0] * math.sin(pt[1])])
        return np.asarray(pt, dtype=float)

    def _sample_planar(self, space, p, eps, n, rng):
        c = self._to_xy(p)
        rr = eps * np.sqrt(rng.random(n))
        aa = rng.random(n) * 2.0 * math.pi
        xy = np.column_stack([c[0] + rr * np.cos(aa), c[1] + rr * np.sin(aa)])
        if space.variant == "polygon":
            keep = np.array([space.contains(q) for q in xy])
            xy = xy[keep]
        return xy

    @staticmethod
    def _sample_ball(space, p, eps, n, rng):
        pts = []
        sig = space.sigma_at(p)
        kappa = space.kappa
        for _ in range(n):
            ang = rng.random() * sig.length
            # area-correct radius: density proportional to sn_kappa(r)
            while True:
                r = eps * math.sqrt(rng.random())
                if kappa == 0.0:
                    break
                accept = model_plane.sigma(kappa, r) / max(r, 1e-300)
                if rng.random() <= accept:
                    break
            try:
                w = space.walk(p, ang, r)
            except Exception:
                continue
            pts.append(w.end)
        return pts

    def value(self, y):
        if self._planar:
            c = self._to_xy(y)
            return float(np.mean(np.hypot(self._xy[:, 0] - c[0], self._xy[:, 1] - c[1])))
        total = 0.0
        for x in self.samples:
            total += self.space.distance(x, y)
        return total / len(self.samples)

    def __call__(self, space, y):
        return self.value(y)

    def differential(self, y) -> DirectionalFn:
        sigma = self.space.sigma_at(y)
        if self._planar:
            c = self._to_xy(y)
            planar = np.arctan2(self._xy[:, 1] - c[1], self._xy[:, 0] - c[0])
            if self.space.variant == "cone":
                # chart zero points radially away from the cone apex
                planar = planar - math.atan2(c[1], c[0])
            arr = np.mod(planar, 2.0 * math.pi)
        else:
            dirs = []
            for x in self.samples:
                if self.space.distance(x, y) <= 1e-12:
                    continue
                dirs.append(self.space.directions_to(y, x)[0])
            arr = np.asarray(dirs)

        def fn(angle, _arr=arr, _sig=sigma):
            if _sig.is_arc:
                d = np.abs(_arr - angle)
            else:
                d = np.abs(np.mod(_arr - angle, _sig.length))
                d = np.minimum(d, _sig.length - d)
            return float(np.mean(-np.cos(np.minimum(d, math.pi))))

        return DirectionalFn(sigma, fn, kinks=[])


def planar_smoothed_distance_oracle(p, eps, y):
    """Disc average of dist_x(y) in the plane for |py| >> eps.

    Polar-coordinate integral: the first-order term -r cos(theta)
    averages out and the second-order term r^2 sin^2(theta) / (2 d)
    contributes (1/(pi eps^2)) * (eps^4/4) * pi / (2 d), so the
    expansion is |py| + eps^2 / (8 |py|) + O(eps^4).
    """
    d = math.hypot(y[0] - p[0], y[1] - p[1])
    return d + eps * eps / (8.0 * d)
