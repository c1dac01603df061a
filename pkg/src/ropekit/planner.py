"""Bounded-curvature shortest paths with C^1 boundary data.

Solves the two-point problem "shortest curve from (p, v) to (q, w) with
curvature at most lam" through three routes that check each other:

* a closed-form arc-then-segment construction for the one-sided problem
  (reach a target staying outside the swept-ball obstacle of the start),
* enumeration of circle-line-circle candidates meeting both endpoints
  (closed form in the plane, seeded least-squares root finding in R^n),
* an independent discrete oracle: projected local descent on a polyline
  with per-joint turning caps and clamped end directions.

Shortest curves that are not of circle-line-circle type have constant
maximal curvature; the planner reports that regime instead of guessing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .curve import Curve, angle_between, build_curve, curvature_profile
from .thickness import ObstacleSpec, _rho_block, obstacle_contains

UNIT_TOL = 1e-12
JOINT_TOL = 1e-9
TWO_PI = 2.0 * np.pi


class PlannerError(ValueError):
    """Invalid boundary data or infeasible planning request."""


def _unit(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x)
    if n == 0.0:
        raise PlannerError("zero vector where a direction was expected")
    return x / n


def _rot90(u: np.ndarray) -> np.ndarray:
    return np.array([-u[1], u[0]])


def _perp_basis(v: np.ndarray) -> np.ndarray:
    """Rows form an orthonormal basis of the complement of v."""
    _, _, vt = np.linalg.svd(v.reshape(1, -1))
    return vt[1:]


def _wrap_angle(theta: float, snap: float = 1e-9) -> float:
    t = float(np.mod(theta, TWO_PI))
    if t > TWO_PI - snap:
        t = 0.0
    return t


@dataclass(frozen=True)
class BoundaryData:
    """Endpoints, unit end tangents and the curvature bound."""

    p: np.ndarray
    q: np.ndarray
    v: np.ndarray
    w: np.ndarray
    lam: float

    def __post_init__(self):
        for name in ("p", "q", "v", "w"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not self.lam > 0.0:
            raise PlannerError("curvature bound must be positive")
        for name in ("v", "w"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > UNIT_TOL:
                raise PlannerError(f"{name} must be a unit vector within 1e-12")
        dims = {self.p.shape, self.q.shape, self.v.shape, self.w.shape}
        if len(dims) != 1:
            raise PlannerError("boundary vectors must share one dimension")

    @property
    def dim(self) -> int:
        return self.p.shape[0]

    def reversed(self) -> "BoundaryData":
        return BoundaryData(p=self.q, q=self.p, v=-self.w, w=-self.v, lam=self.lam)


@dataclass(frozen=True)
class ClcPath:
    """Arc-segment-arc path with C^1 joints, arcs of radius 1/lam."""

    lam: float
    p: np.ndarray
    v: np.ndarray
    w1: np.ndarray        # unit normal of the first arc plane, w1 . v = 0
    theta1: float         # first arc angle in [0, 2*pi)
    seg_start: np.ndarray
    seg_dir: np.ndarray   # tangent at both joints
    seg_len: float
    w2: np.ndarray        # unit normal of the second arc (forward form)
    theta2: float
    q: np.ndarray
    w: np.ndarray
    length: float

    @property
    def radius(self) -> float:
        return 1.0 / self.lam

    def sample(self, n: int):
        """n points and unit tangents along the path, arclength-uniform."""
        r = self.radius
        l1 = r * self.theta1
        l2 = r * self.theta2
        total = l1 + self.seg_len + l2
        s = np.linspace(0.0, total, n)
        pts = np.empty((n, self.p.shape[0]))
        tans = np.empty_like(pts)
        seg_end = self.seg_start + self.seg_len * self.seg_dir
        for k, sk in enumerate(s):
            if sk <= l1 and l1 > 0.0:
                t = sk / r
                pts[k] = self.p + r * (self.v * np.sin(t) + self.w1 * (1.0 - np.cos(t)))
                tans[k] = self.v * np.cos(t) + self.w1 * np.sin(t)
            elif sk <= l1 + self.seg_len:
                u = sk - l1
                pts[k] = self.seg_start + u * self.seg_dir
                tans[k] = self.seg_dir
            else:
                t = (sk - l1 - self.seg_len) / r
                t = min(t, self.theta2)
                pts[k] = seg_end + r * (self.seg_dir * np.sin(t)
                                        + self.w2 * (1.0 - np.cos(t)))
                tans[k] = self.seg_dir * np.cos(t) + self.w2 * np.sin(t)
        tans /= np.linalg.norm(tans, axis=1)[:, None]
        return pts, tans

    def joint_residual(self) -> float:
        """Worst endpoint / joint / radius mismatch (0 for exact paths)."""
        r = self.radius
        arc1_end = self.p + r * (self.v * np.sin(self.theta1)
                                 + self.w1 * (1.0 - np.cos(self.theta1)))
        arc1_tan = self.v * np.cos(self.theta1) + self.w1 * np.sin(self.theta1)
        seg_end = self.seg_start + self.seg_len * self.seg_dir
        arc2_end = seg_end + r * (self.seg_dir * np.sin(self.theta2)
                                  + self.w2 * (1.0 - np.cos(self.theta2)))
        arc2_tan = (self.seg_dir * np.cos(self.theta2)
                    + self.w2 * np.sin(self.theta2))
        res = [
            np.linalg.norm(arc1_end - self.seg_start),
            np.linalg.norm(arc1_tan - self.seg_dir),
            np.linalg.norm(arc2_end - self.q),
            np.linalg.norm(arc2_tan - self.w),
            abs(self.w1 @ self.v),
            abs(self.w2 @ self.seg_dir),
            abs(np.linalg.norm(self.w1) - 1.0),
            abs(np.linalg.norm(self.w2) - 1.0),
        ]
        return float(max(res))


def assemble_clc(p, v, w1, theta1, ls, w2, theta2, lam,
                 turn2: float = 1.0) -> ClcPath:
    """Build a ClcPath from first-arc data; w2=None picks a planar second arc
    turning to the side given by turn2."""
    p = np.asarray(p, dtype=float)
    v = _unit(v)
    w1 = _unit(w1)
    r = 1.0 / lam
    seg_start = p + r * (v * np.sin(theta1) + w1 * (1.0 - np.cos(theta1)))
    u = v * np.cos(theta1) + w1 * np.sin(theta1)
    if w2 is None:
        if p.shape[0] != 2:
            raise PlannerError("automatic second-arc normal needs planar data")
        w2 = turn2 * _rot90(u)
    w2 = _unit(np.asarray(w2, dtype=float))
    seg_end = seg_start + ls * u
    q = seg_end + r * (u * np.sin(theta2) + w2 * (1.0 - np.cos(theta2)))
    w = u * np.cos(theta2) + w2 * np.sin(theta2)
    length = r * (theta1 + theta2) + ls
    return ClcPath(lam=lam, p=p, v=v, w1=w1, theta1=theta1,
                   seg_start=seg_start, seg_dir=u, seg_len=ls,
                   w2=w2, theta2=theta2, q=q, w=w, length=length)


# ---------------------------------------------------------------------------
# one-sided problem: shortest curve to a target outside the start obstacle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JCurve:
    """Arc of radius 1/lam followed by a tangent segment, in span{v, w}."""

    p: np.ndarray
    v: np.ndarray
    w: np.ndarray          # in-plane unit normal, w . v = 0
    t0: float              # arc angle
    seg_len: float
    q: np.ndarray
    lam: float
    length: float
    unique: bool           # False only for targets on the negative tangent ray

    @property
    def radius(self) -> float:
        return 1.0 / self.lam

    @property
    def tangent_point(self) -> np.ndarray:
        r = self.radius
        return self.p + r * (self.v * np.sin(self.t0) + self.w * (1.0 - np.cos(self.t0)))

    def sample(self, n: int):
        r = self.radius
        l1 = r * self.t0
        total = l1 + self.seg_len
        s = np.linspace(0.0, total, n)
        pts = np.empty((n, self.p.shape[0]))
        tans = np.empty_like(pts)
        tp = self.tangent_point
        end_dir = self.v * np.cos(self.t0) + self.w * np.sin(self.t0)
        on_arc = (s <= l1) & (l1 > 0.0)
        t = np.where(l1 > 0.0, s / max(r, 1e-300), 0.0)
        for k in range(n):
            if on_arc[k]:
                pts[k] = self.p + r * (self.v * np.sin(t[k]) + self.w * (1.0 - np.cos(t[k])))
                tans[k] = self.v * np.cos(t[k]) + self.w * np.sin(t[k])
            else:
                u = s[k] - l1
                pts[k] = tp + u * end_dir
                tans[k] = end_dir
        tans /= np.linalg.norm(tans, axis=1)[:, None]
        return pts, tans

    def containment_violations(self, n: int = 512, margin: float = -1e-9) -> int:
        """Samples strictly inside the start obstacle (should be zero)."""
        pts, _ = self.sample(n)
        spec = ObstacleSpec(self.p, self.v, self.radius)
        inside = obstacle_contains(spec, pts[1:], margin=margin)
        return int(np.count_nonzero(inside))


def shortest_to_target_in_complement(p, v, q, lam: float) -> JCurve:
    """Closed-form shortest curve from (p, v) to q avoiding the start obstacle.

    The target must not lie strictly inside the swept-ball region of
    (p, v, 1/lam).  Targets on the backward tangent ray admit a rotational
    family of minimizers; one representative is returned with unique=False.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    v = _unit(v)
    if not lam > 0.0:
        raise PlannerError("curvature bound must be positive")
    r = 1.0 / lam
    d = q - p
    dist = np.linalg.norm(d)
    if dist == 0.0:
        raise PlannerError("target coincides with the start point")
    a = float(d @ v)
    d_n = d - a * v
    b = float(np.linalg.norm(d_n))

    if b <= 1e-13 * dist:
        if a > 0.0:   # target on the forward tangent ray: pure segment
            w = _perp_basis(v)[0]
            return JCurve(p=p, v=v, w=w, t0=0.0, seg_len=a, q=q, lam=lam,
                          length=a, unique=True)
        # backward ray: rotational family, return one representative
        w = _perp_basis(v)[0]
        a2, b2 = a, 0.0
        unique = False
    else:
        w = d_n / b
        a2, b2 = a, b
        unique = True

    # in-plane target (a2, b2) against the circle centered (0, r)
    disc = a2 * a2 + (b2 - r) * (b2 - r) - r * r
    if disc < -1e-9 * r * r:
        raise PlannerError("target lies strictly inside the start obstacle")
    if disc <= 1e-12 * r * r:   # on the boundary circle: pure arc
        t0 = _wrap_angle(np.arctan2(a2 / r, 1.0 - b2 / r))
        return JCurve(p=p, v=v, w=w, t0=t0, seg_len=0.0, q=q, lam=lam,
                      length=r * t0, unique=unique)
    rho_q = np.sqrt(a2 * a2 + (b2 - r) * (b2 - r))
    phi = np.arctan2(b2 - r, a2)
    t0 = _wrap_angle(phi + np.arcsin(min(r / rho_q, 1.0)))
    seg = np.sqrt(max(rho_q * rho_q - r * r, 0.0))
    return JCurve(p=p, v=v, w=w, t0=t0, seg_len=seg, q=q, lam=lam,
                  length=r * t0 + seg, unique=unique)


# ---------------------------------------------------------------------------
# circle-line-circle candidates meeting both endpoints
# ---------------------------------------------------------------------------

def _planar_word(b: BoundaryData, s1: float, s2: float) -> ClcPath | None:
    """Closed-form planar candidate for one pair of turn directions."""
    r = 1.0 / b.lam
    c1 = b.p + r * s1 * _rot90(b.v)
    c2 = b.q + r * s2 * _rot90(b.w)
    dvec = c2 - c1
    big_d = float(np.linalg.norm(dvec))

    def ang(u):
        return np.arctan2(u[1], u[0])

    if s1 == s2:
        if big_d < 1e-12 * r:
            # both boundary states on one circle: a single arc suffices
            theta1 = _wrap_angle(s1 * (ang(b.q - c1) - ang(b.p - c1)))
            path = assemble_clc(b.p, b.v, s1 * _rot90(b.v), theta1, 0.0,
                                s2 * _rot90(b.w), 0.0, b.lam)
            return path
        e = dvec / big_d
        u = e
        m1 = -s1 * _rot90(e)
        t1 = c1 + r * m1
        t2 = c2 + r * m1
        seg = big_d
    else:
        if big_d < 2.0 * r:
            return None
        e = dvec / big_d
        alpha = np.arcsin(min(2.0 * r / big_d, 1.0))
        ca, sa = np.cos(s1 * alpha), np.sin(s1 * alpha)
        u = np.array([ca * e[0] - sa * e[1], sa * e[0] + ca * e[1]])
        m1 = -s1 * _rot90(u)
        t1 = c1 + r * m1
        t2 = c2 - r * m1
        seg = float(np.linalg.norm(t2 - t1))
    theta1 = _wrap_angle(s1 * (ang(t1 - c1) - ang(b.p - c1)))
    theta2 = _wrap_angle(s2 * (ang(b.q - c2) - ang(t2 - c2)))
    return assemble_clc(b.p, b.v, s1 * _rot90(b.v), theta1, seg,
                        s2 * _rot90(u if s1 != s2 else e), theta2, b.lam)


def boundary_residual(path: ClcPath, b: BoundaryData) -> float:
    """How far a path misses the requested boundary data."""
    return float(max(np.linalg.norm(path.p - b.p), np.linalg.norm(path.v - b.v),
                     np.linalg.norm(path.q - b.q), np.linalg.norm(path.w - b.w)))


def _planar_candidates(b: BoundaryData) -> list[ClcPath]:
    out = []
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            path = _planar_word(b, s1, s2)
            if path is None:
                continue
            if boundary_residual(path, b) < JOINT_TOL and path.joint_residual() < JOINT_TOL:
                out.append(path)
    return out


def _fit_plane_basis(b: BoundaryData):
    """Orthonormal basis (e1, e2) of the plane best fitting {v, w, q - p}."""
    rows = [b.v, b.w]
    d = b.q - b.p
    if np.linalg.norm(d) > 0.0:
        rows.append(d / np.linalg.norm(d))
    mat = np.array(rows)
    _, _, vt = np.linalg.svd(mat)
    e1 = vt[0]
    if e1 @ b.v < 0.0:
        e1 = -e1
    e2 = vt[1]
    return e1, e2


def _solve_clc_system(b: BoundaryData, z0: np.ndarray):
    """Least-squares root finding for the joint equations in R^n.

    Unknowns: first-arc normal coordinates in the complement of v, the
    backward second-arc normal coordinates in the complement of w, the two
    arc angles and the segment length.
    """
    n = b.dim
    bv = _perp_basis(b.v)
    bw = _perp_basis(b.w)
    r = 1.0 / b.lam

    def unpack(z):
        z1 = z[: n - 1]
        z2 = z[n - 1: 2 * (n - 1)]
        th1, th2, ls = z[2 * (n - 1):]
        n1 = np.linalg.norm(z1)
        n2 = np.linalg.norm(z2)
        w1 = bv.T @ (z1 / n1) if n1 > 1e-12 else bv[0]
        w2b = bw.T @ (z2 / n2) if n2 > 1e-12 else bw[0]
        return w1, w2b, th1, th2, ls

    def residual(z):
        w1, w2b, th1, th2, ls = unpack(z)
        m1 = b.p + r * (b.v * np.sin(th1) + w1 * (1.0 - np.cos(th1)))
        u = b.v * np.cos(th1) + w1 * np.sin(th1)
        back = b.q + r * (-b.w * np.sin(th2) + w2b * (1.0 - np.cos(th2)))
        t_back = b.w * np.cos(th2) - w2b * np.sin(th2)
        pos = m1 + ls * u - back
        tan = u - t_back
        return np.concatenate((pos, tan, [min(ls, 0.0)]))

    sol = least_squares(residual, z0, method="lm", xtol=1e-14, ftol=1e-14,
                        gtol=1e-14, max_nfev=400)
    w1, w2b, th1, th2, ls = unpack(sol.x)
    if ls < -1e-9 or np.linalg.norm(residual(sol.x)) > JOINT_TOL:
        return None
    th1 = _wrap_angle(th1)
    th2 = _wrap_angle(th2)
    ls = max(ls, 0.0)
    m2 = b.q + r * (-b.w * np.sin(th2) + w2b * (1.0 - np.cos(th2)))
    c2 = b.q + r * w2b
    w2_fwd = (c2 - m2) / r
    path = assemble_clc(b.p, b.v, w1, th1, ls, w2_fwd, th2, b.lam)
    if boundary_residual(path, b) > JOINT_TOL or path.joint_residual() > JOINT_TOL:
        return None
    return path


def csc_candidates(b: BoundaryData, seeds: int = 8, seed: int = 0) -> list[ClcPath]:
    """All distinct circle-line-circle paths meeting the boundary data.

    Planar data is solved in closed form (four turn-direction words);
    higher dimensions use seeded least-squares root finding starting from
    the planar solutions in the best-fitting plane plus random seeds.
    Candidates are sorted by length.
    """
    if b.dim == 2:
        cands = _planar_candidates(b)
    else:
        e1, e2 = _fit_plane_basis(b)
        orig = b.p

        def to_plane(x):
            return np.array([(x - orig) @ e1, (x - orig) @ e2])

        def dir_to_plane(x):
            u = np.array([x @ e1, x @ e2])
            nrm = np.linalg.norm(u)
            return u / nrm if nrm > 1e-9 else np.array([1.0, 0.0])

        planar = BoundaryData(p=to_plane(b.p), q=to_plane(b.q),
                              v=dir_to_plane(b.v), w=dir_to_plane(b.w), lam=b.lam)
        z_seeds = []
        bv = _perp_basis(b.v)
        bw = _perp_basis(b.w)
        for cand in _planar_candidates(planar):
            w1_lift = cand.w1[0] * e1 + cand.w1[1] * e2
            c2_planar = cand.seg_start + cand.seg_len * cand.seg_dir \
                + (1.0 / b.lam) * cand.w2
            # backward normal of the lifted second arc
            w2b_planar = (c2_planar - to_plane(b.q))
            nrm = np.linalg.norm(w2b_planar)
            w2b_lift = ((w2b_planar[0] * e1 + w2b_planar[1] * e2) / nrm
                        if nrm > 1e-9 else None)
            z1 = bv @ w1_lift
            if w2b_lift is None:
                continue
            z2 = bw @ w2b_lift
            z_seeds.append(np.concatenate((z1, z2,
                                           [cand.theta1, cand.theta2, cand.seg_len])))
        rng = np.random.default_rng(seed)
        scale = max(float(np.linalg.norm(b.q - b.p)), 1.0 / b.lam)
        while len(z_seeds) < seeds + 8:
            z1 = rng.standard_normal(b.dim - 1)
            z2 = rng.standard_normal(b.dim - 1)
            th = rng.uniform(0.2, 5.8, size=2)
            ls = rng.uniform(0.0, 2.0 * scale)
            z_seeds.append(np.concatenate((z1, z2, [th[0], th[1], ls])))
        cands = []
        for z0 in z_seeds:
            path = _solve_clc_system(b, z0)
            if path is not None:
                cands.append(path)

    # dedup by invariants plus first-arc geometry (mirror pairs both survive)
    uniq: list[ClcPath] = []
    seen = set()
    for path in sorted(cands, key=lambda c: c.length):
        key = (round(path.length, 7), round(path.theta1, 6),
               round(path.theta2, 6), round(path.seg_len, 6),
               tuple(np.round(path.w1, 6)))
        if key in seen:
            continue
        seen.add(key)
        uniq.append(path)
    return uniq


# ---------------------------------------------------------------------------
# discrete oracle: projected local descent on a turning-capped polyline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleResult:
    """Best polyline found by the oracle descent."""

    points: np.ndarray       # (M + 1, dim)
    length: float
    turn_angles: np.ndarray  # per interior joint
    turn_budgets: np.ndarray
    saturation: np.ndarray   # angle / budget per joint
    feasible: bool
    restarts: int
    end_tangent_clamped: bool


def _resample_polyline(path: np.ndarray, m: int) -> np.ndarray:
    """m + 1 points uniform in chord length, endpoints preserved."""
    seglen = np.linalg.norm(np.diff(path, axis=0), axis=1)
    s = np.concatenate(([0.0], np.cumsum(seglen)))
    target = np.linspace(0.0, s[-1], m + 1)
    pts = np.column_stack([np.interp(target, s, path[:, k])
                           for k in range(path.shape[1])])
    pts[0] = path[0]
    pts[-1] = path[-1]
    return pts


def _initial_paths(b: BoundaryData, m: int, restarts: int, rng,
                   clamp_end: bool) -> list[np.ndarray]:
    """Diverse initial polylines: four lateral-bulge variants, heading
    interpolations over three winding classes, then random blends."""
    dist = float(np.linalg.norm(b.q - b.p))
    scale = max(dist, 4.0 / b.lam)
    w_eff = b.w if clamp_end else (_unit(b.q - b.p) if dist > 0 else b.v)
    bv = _perp_basis(b.v)
    bw = _perp_basis(w_eff)
    tau = np.linspace(0.0, 1.0, 8 * m + 1)
    h00 = 2 * tau ** 3 - 3 * tau ** 2 + 1
    h10 = tau ** 3 - 2 * tau ** 2 + tau
    h01 = -2 * tau ** 3 + 3 * tau ** 2
    h11 = tau ** 3 - tau ** 2
    bump1 = tau * (1 - tau) ** 2
    bump2 = tau ** 2 * (1 - tau)

    def hermite(mv, mw, off1, off2):
        base = (np.outer(h00, b.p) + np.outer(h10, mv * b.v)
                + np.outer(h01, b.q) + np.outer(h11, mw * w_eff))
        base += np.outer(bump1, off1) + np.outer(bump2, off2)
        return base

    def heading_lerp(k_wind, wiggle=0.0):
        """Planar-style heading interpolation lifted to the bulge plane."""
        e1 = b.v
        e2 = bv[0]
        alpha = 0.0
        cw = float(w_eff @ e1)
        sw = float(w_eff @ e2)
        beta = np.arctan2(sw, cw) + TWO_PI * k_wind
        nseg = 8 * m
        tau = (np.arange(nseg) + 0.5) / nseg
        th = alpha + (beta - alpha) * tau + wiggle * np.sin(TWO_PI * tau)
        step = max(dist, TWO_PI / b.lam) * 1.2 / nseg
        moves = step * (np.outer(np.cos(th), e1) + np.outer(np.sin(th), e2))
        pts = np.vstack((b.p, b.p + np.cumsum(moves, axis=0)))
        pts += np.outer(np.linspace(0.0, 1.0, nseg + 1), b.q - pts[-1])
        return pts

    inits = []
    amp = 1.5 / b.lam
    for sgn1 in (1.0, -1.0):
        for sgn2 in (1.0, -1.0):
            inits.append(hermite(0.5 * scale, 0.5 * scale,
                                 sgn1 * amp * bv[0], sgn2 * amp * bw[0]))
    for k_wind in (0, 1, -1):
        inits.append(heading_lerp(k_wind))
    # non-monotone headings cover reversal-type basins (turn out, then back)
    inits.append(heading_lerp(0, wiggle=2.0))
    inits.append(heading_lerp(0, wiggle=-2.0))
    while len(inits) < max(restarts, 7):
        mv = scale * rng.uniform(0.3, 2.0)
        mw = scale * rng.uniform(0.3, 2.0)
        o1 = amp * rng.uniform(0.2, 2.5) * (bv.T @ _unit(rng.standard_normal(b.dim - 1)))
        o2 = amp * rng.uniform(0.2, 2.5) * (bw.T @ _unit(rng.standard_normal(b.dim - 1)))
        inits.append(hermite(mv, mw, o1, o2))
    out = []
    for path in inits[:max(restarts, 7)]:
        pts = _resample_polyline(path, m)
        pts[0] = b.p
        pts[-1] = b.q
        out.append(pts)
    return out


def _turn_state(x: np.ndarray, lam: float):
    """Angles and budgets at interior joints of a batch of polylines."""
    e = np.diff(x, axis=1)                      # (R, M, dim)
    ln = np.linalg.norm(e, axis=2)
    ehat = e / np.maximum(ln, 1e-300)[..., None]
    chord = np.linalg.norm(ehat[:, 1:] - ehat[:, :-1], axis=2)
    ang = 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))
    budget = lam * 0.5 * (ln[:, :-1] + ln[:, 1:])
    return ang, budget, ln


def _rotate_toward(u_from: np.ndarray, u_onto: np.ndarray, beta: np.ndarray):
    """Rotate unit rows u_from toward u_onto by beta within their common plane."""
    cosang = np.minimum(np.maximum(np.einsum("rd,rd->r", u_from, u_onto), -1.0), 1.0)
    sinang = np.sqrt(np.maximum(1.0 - cosang * cosang, 0.0))
    perp = u_onto - cosang[:, None] * u_from
    # anti-parallel fallback: any direction perpendicular to u_from
    degen = sinang < 1e-12
    if np.any(degen):
        alt = np.zeros_like(u_from)
        alt[:, 0] = 1.0
        alt = alt - np.einsum("rd,rd->r", alt, u_from)[:, None] * u_from
        small = np.einsum("rd,rd->r", alt, alt) < 1e-12
        alt[small, 0] = 0.0
        alt[small, 1] = 1.0
        alt[small] -= np.einsum("rd,rd->r", alt[small], u_from[small])[:, None] * u_from[small]
        perp = np.where(degen[:, None], alt, perp)
        sinang = np.where(degen, np.sqrt(np.einsum("rd,rd->r", perp, perp)), sinang)
    perp = perp / np.maximum(np.sqrt(np.einsum("rd,rd->r", perp, perp)), 1e-300)[:, None]
    return np.cos(beta)[:, None] * u_from + np.sin(beta)[:, None] * perp


def _joint_state(x: np.ndarray, j: int, lam: float):
    e1 = x[:, j] - x[:, j - 1]
    e2 = x[:, j + 1] - x[:, j]
    l1 = np.sqrt(np.einsum("rd,rd->r", e1, e1))
    l2 = np.sqrt(np.einsum("rd,rd->r", e2, e2))
    u1 = e1 / np.maximum(l1, 1e-300)[:, None]
    u2 = e2 / np.maximum(l2, 1e-300)[:, None]
    du = u2 - u1
    chord = np.sqrt(np.einsum("rd,rd->r", du, du))
    ang = 2.0 * np.arcsin(np.minimum(0.5 * chord, 1.0))
    return ang, lam * 0.5 * (l1 + l2), l1, l2, u1, u2


def _project_turning(x: np.ndarray, b: BoundaryData, clamp_end: bool,
                     passes: int = 1):
    """Cascade projection of the turning constraints.

    A forward sweep fixes each violated joint exactly by rotating its
    downstream vertex about the joint (preserving the segment length),
    pushing excess turning outward from the clamped start; a backward
    sweep does the same from the end.  The leftover violation meets in the
    middle where both neighbors are free and a local midpoint pull
    dissipates it.  Joints that are feasible across all restarts are
    skipped unless an upstream fix may have disturbed them.
    """
    m = x.shape[1] - 1
    lam = b.lam
    for _ in range(passes):
        ang, budget, _ = _turn_state(x, lam)
        hot = (ang > budget).any(axis=0)        # joint j at column j - 1
        # place the cascade seam where the constraint has the most slack,
        # so excess turning pushed inward from both ends can dissipate
        slack = (budget - ang).mean(axis=0)
        lo_j, hi_j = 2, m - 2
        if hi_j < lo_j:
            seam = max(m // 2, 1)
        else:
            seam = lo_j + int(np.argmax(slack[lo_j - 1: hi_j]))
        carry = False
        for j in range(1, seam):                # forward: move vertex j + 1
            if not (hot[j - 1] or carry):
                continue
            a, bud, l1, l2, u1, u2 = _joint_state(x, j, lam)
            excess = a - bud
            bad = excess > 0.0
            if not np.any(bad):
                carry = False
                continue
            u2_new = _rotate_toward(u2, u1, np.where(bad, excess, 0.0))
            x[:, j + 1] = np.where(bad[:, None],
                                   x[:, j] + l2[:, None] * u2_new, x[:, j + 1])
            carry = True
        carry = False
        for j in range(m - 1, seam, -1):         # backward: move vertex j - 1
            if not (hot[j - 1] or carry):
                continue
            a, bud, l1, l2, u1, u2 = _joint_state(x, j, lam)
            excess = a - bud
            bad = excess > 0.0
            if not np.any(bad):
                carry = False
                continue
            u1_new = _rotate_toward(u1, u2, np.where(bad, excess, 0.0))
            x[:, j - 1] = np.where(bad[:, None],
                                   x[:, j] - l1[:, None] * u1_new, x[:, j - 1])
            carry = True
        seam_hot = False
        for j in range(max(seam - 1, 2), min(seam + 2, m - 1)):
            a, bud, _, _, _, _ = _joint_state(x, j, lam)
            if np.any(a > bud + 1e-15):
                seam_hot = True
                break
        if seam_hot:
            _seam_cleanup(x, lam, seam)


def _seam_cleanup(x: np.ndarray, lam: float, mid: int, rounds: int = 2):
    """Midpoint-pull the joints where the two cascades meet."""
    m = x.shape[1] - 1
    for _ in range(rounds):
        for j in range(max(mid - 1, 2), min(mid + 2, m - 1)):
            ang, bud, _, _, _, _ = _joint_state(x, j, lam)
            bad = ang > bud + 1e-15
            if not np.any(bad):
                continue
            base = x[:, j].copy()
            target = 0.5 * (x[:, j - 1] + x[:, j + 1])
            lo = np.zeros(x.shape[0])
            hi = np.ones(x.shape[0])
            for _ in range(10):
                tau = 0.5 * (lo + hi)
                trial = base + tau[:, None] * (target - base)
                f1 = trial - x[:, j - 1]
                f2 = x[:, j + 1] - trial
                m1 = np.sqrt(np.einsum("rd,rd->r", f1, f1))
                m2 = np.sqrt(np.einsum("rd,rd->r", f2, f2))
                w1 = f1 / np.maximum(m1, 1e-300)[:, None]
                w2 = f2 / np.maximum(m2, 1e-300)[:, None]
                dw = w2 - w1
                a = 2.0 * np.arcsin(np.minimum(
                    0.5 * np.sqrt(np.einsum("rd,rd->r", dw, dw)), 1.0))
                feas = a <= lam * 0.5 * (m1 + m2)
                hi = np.where(feas, tau, hi)
                lo = np.where(feas, lo, tau)
            tau = np.where(bad, hi, 0.0)
            x[:, j] = base + tau[:, None] * (target - base)


def _project_end_tangents(x: np.ndarray, b: BoundaryData, clamp_end: bool):
    """Endpoint tangent clamps as half-budget turning constraints.

    The first chord of a polyline inscribed in a curvature-lam curve
    leaves the endpoint tangent at angle lam * len / 2, so the clamp
    "gamma'(0) = v" discretizes to angle(v, e_1) <= lam |e_1| / 2 (and
    symmetrically at q).  Violations are repaired by rotating the adjacent
    vertex about the fixed endpoint, preserving the chord length.
    """
    e1 = x[:, 1] - b.p[None, :]
    l1 = np.sqrt(np.einsum("rd,rd->r", e1, e1))
    u1 = e1 / np.maximum(l1, 1e-300)[:, None]
    dv = u1 - b.v[None, :]
    ang = 2.0 * np.arcsin(np.minimum(0.5 * np.sqrt(np.einsum("rd,rd->r", dv, dv)), 1.0))
    excess = ang - 0.5 * b.lam * l1
    bad = excess > 0.0
    if np.any(bad):
        vrow = np.broadcast_to(b.v, u1.shape)
        u_new = _rotate_toward(u1, np.array(vrow), np.where(bad, excess, 0.0))
        x[:, 1] = np.where(bad[:, None], b.p + l1[:, None] * u_new, x[:, 1])
    if clamp_end:
        em = x[:, -2] - b.q[None, :]          # backward chord out of q
        lm = np.sqrt(np.einsum("rd,rd->r", em, em))
        um = em / np.maximum(lm, 1e-300)[:, None]
        dw = um + b.w[None, :]
        angm = 2.0 * np.arcsin(np.minimum(0.5 * np.sqrt(np.einsum("rd,rd->r", dw, dw)), 1.0))
        exm = angm - 0.5 * b.lam * lm
        badm = exm > 0.0
        if np.any(badm):
            wrow = np.broadcast_to(-b.w, um.shape)
            u_new = _rotate_toward(um, np.array(wrow), np.where(badm, exm, 0.0))
            x[:, -2] = np.where(badm[:, None], b.q + lm[:, None] * u_new, x[:, -2])


def _end_violation(x: np.ndarray, b: BoundaryData, clamp_end: bool) -> np.ndarray:
    """Worst endpoint-clamp excess per restart."""
    e1 = x[:, 1] - b.p[None, :]
    l1 = np.linalg.norm(e1, axis=1)
    u1 = e1 / np.maximum(l1, 1e-300)[:, None]
    ang = 2.0 * np.arcsin(np.clip(
        0.5 * np.linalg.norm(u1 - b.v[None, :], axis=1), 0.0, 1.0))
    viol = ang - 0.5 * b.lam * l1
    if clamp_end:
        em = x[:, -2] - b.q[None, :]
        lm = np.linalg.norm(em, axis=1)
        um = em / np.maximum(lm, 1e-300)[:, None]
        angm = 2.0 * np.arcsin(np.clip(
            0.5 * np.linalg.norm(um + b.w[None, :], axis=1), 0.0, 1.0))
        viol = np.maximum(viol, angm - 0.5 * b.lam * lm)
    return viol


def _descend(x: np.ndarray, b: BoundaryData, clamp_end: bool, iters: int,
             om0: float = 0.7, om1: float = 0.01):
    """Projected local descent: Laplacian smoothing, endpoint clamps and the
    turning cascade, with periodic uniform resampling to keep vertices
    spread."""
    resample_every = 50
    for it in range(iters):
        omega = om0 + (om1 - om0) * (it / max(iters - 1, 1))
        mid = 0.5 * (x[:, :-2] + x[:, 2:])
        x[:, 1:-1] += omega * (mid - x[:, 1:-1])
        _project_end_tangents(x, b, clamp_end)
        _project_turning(x, b, clamp_end, passes=1)
        if (it + 1) % resample_every == 0:
            for r in range(x.shape[0]):
                x[r] = _resample_polyline(x[r], x.shape[1] - 1)
            _project_end_tangents(x, b, clamp_end)
            _project_turning(x, b, clamp_end, passes=2)
    return x


def discrete_shortest_oracle(b: BoundaryData, m: int = 64, iters: int = 1200,
                             seed: int = 0, restarts: int = 8,
                             clamp_end: bool = True) -> OracleResult:
    """Minimize polyline length under per-joint turning caps.

    The polyline has m segments, endpoints pinned to p and q, first (and for
    clamp_end=True last) segment direction clamped to the boundary tangent,
    and the turn at each joint bounded by lam times the mean adjacent
    segment length.  Projected local descent runs from deterministic and
    seeded random initial paths on a coarse polyline first, then refines;
    the best feasible polyline wins.  Deterministic for a fixed seed.
    """
    if m < 16:
        raise PlannerError("oracle needs at least 16 segments")
    rng = np.random.default_rng(seed)
    levels = [min(16, m)]
    while levels[-1] < m:
        levels.append(min(levels[-1] * 2, m))
    inits = _initial_paths(b, levels[0], restarts, rng, clamp_end)
    x = np.stack(inits)

    n_fine = max(len(levels) - 1, 1)
    for li, mk in enumerate(levels):
        if x.shape[1] - 1 != mk:
            x = np.stack([_resample_polyline(x[r], mk) for r in range(x.shape[0])])
        _project_end_tangents(x, b, clamp_end)
        _project_turning(x, b, clamp_end, passes=30 if li == 0 else 5)
        if li == 0:
            it_k = max(int(0.4 * iters), 200)
        else:
            it_k = max(int(0.6 * iters / n_fine), 80)
        x = _descend(x, b, clamp_end, it_k)
        if li == 0 and x.shape[0] > 3:
            # keep the most promising half of the restarts
            _, _, ln = _turn_state(x, b.lam)
            order = np.argsort(ln.sum(axis=1))
            x = x[order[: max(3, x.shape[0] // 2)]]

    # final feasibility polish
    for _ in range(40):
        _project_end_tangents(x, b, clamp_end)
        _project_turning(x, b, clamp_end, passes=2)
        ang, budget, ln = _turn_state(x, b.lam)
        worst = np.maximum((ang - budget).max(axis=1),
                           _end_violation(x, b, clamp_end))
        if worst.min() <= 1e-7 * b.lam * ln.mean():
            break

    ang, budget, ln = _turn_state(x, b.lam)
    lengths = ln.sum(axis=1)
    viol = np.maximum((ang - budget).max(axis=1), _end_violation(x, b, clamp_end))
    feas = viol <= 1e-6 * b.lam * ln.mean(axis=1) + 1e-12
    order = np.argsort(np.where(feas, lengths, np.inf))
    best = int(order[0])
    if not feas[best]:
        raise PlannerError("oracle found no feasible polyline; "
                           "m may be too small for the required turning")
    sat = ang[best] / np.maximum(budget[best], 1e-300)
    return OracleResult(points=x[best].copy(), length=float(lengths[best]),
                        turn_angles=ang[best], turn_budgets=budget[best],
                        saturation=sat, feasible=bool(feas[best]),
                        restarts=len(inits), end_tangent_clamped=clamp_end)


def oracle_curve(result: OracleResult) -> Curve:
    """Oracle polyline as a Curve (chord tangents)."""
    return build_curve(result.points, closed=False)


# ---------------------------------------------------------------------------
# structure verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructureRun:
    kind: str                 # "straight" or "arc"
    first: int
    last: int                 # inclusive sample span
    s0: float
    s1: float
    arclength: float
    touches_endpoint: bool
    straight_ok: bool | None  # straight runs: chord deviation below tol
    chord_deviation: float | None
    arc_length_ok: bool | None  # arc runs adjacent to straights: >= pi/lam - tol


@dataclass(frozen=True)
class StructureVerdict:
    lam: float
    tol: float
    runs: list[StructureRun]
    passed: bool
    window: float


def _mask_runs(mask: np.ndarray, closed: bool):
    """Maximal runs of equal mask value as (value, first, last) triples."""
    n = len(mask)
    edges = np.nonzero(np.diff(mask.astype(int)))[0]
    starts = np.concatenate(([0], edges + 1))
    ends = np.concatenate((edges, [n - 1]))
    runs = [(bool(mask[s]), int(s), int(e)) for s, e in zip(starts, ends)]
    if closed and len(runs) > 1 and runs[0][0] == runs[-1][0]:
        val, s_last, e_last = runs[-1]
        _, _, e_first = runs[0]
        runs = [(val, s_last, e_first)] + runs[1:-1]
    return runs


def _chord_deviation(points: np.ndarray) -> float:
    a, bpt = points[0], points[-1]
    axis = bpt - a
    ln = np.linalg.norm(axis)
    if ln == 0.0:
        return float(np.linalg.norm(points - a, axis=1).max())
    axis = axis / ln
    rel = points - a
    along = rel @ axis
    perp = rel - np.outer(along, axis)
    return float(np.linalg.norm(perp, axis=1).max())


def verify_theorem1_structure(curve: Curve, lam: float, tol: float = 0.05,
                              h: float | None = None) -> StructureVerdict:
    """Check the structural signature of shortest bounded-curvature curves.

    Samples split into sub-maximal (kappa < lam (1 - tol)) and maximal
    runs.  Interior sub-maximal runs must be straight; maximal runs
    adjacent to a straight run must span at least pi/lam - tol of
    arclength unless they contain an endpoint.  Report-only.
    """
    prof = curvature_profile(curve, h=h)
    window = prof.window
    submax = prof.kappa < lam * (1.0 - tol)
    runs_raw = _mask_runs(submax, curve.closed)
    s = curve.cum_arclength
    length = curve.total_length
    n = curve.n_samples

    def span(first, last):
        if last >= first:
            return float(s[last] - s[first])
        return float(length - s[first] + s[last])   # wrapped run on closed curve

    def indices(first, last):
        if last >= first:
            return np.arange(first, last + 1)
        return np.concatenate((np.arange(first, n), np.arange(0, last + 1)))

    runs: list[StructureRun] = []
    ok = True
    for is_sub, first, last in runs_raw:
        arclen = span(first, last)
        touches = (not curve.closed) and (first == 0 or last == n - 1
                                          or first > last)
        kind = "straight" if is_sub else "arc"
        straight_ok = None
        deviation = None
        arc_ok = None
        if is_sub:
            idx = indices(first, last)
            pts = curve.points[idx]
            # trim the window-smeared margins before judging straightness
            svals = np.concatenate(([0.0], np.cumsum(
                np.linalg.norm(np.diff(pts, axis=0), axis=1))))
            inner = (svals >= window) & (svals <= svals[-1] - window)
            if np.count_nonzero(inner) >= 2 and not touches:
                core = pts[inner]
                deviation = _chord_deviation(core)
                core_len = float(svals[inner][-1] - svals[inner][0])
                straight_ok = deviation < tol * max(core_len, 1e-300)
                ok = ok and straight_ok
        runs.append(StructureRun(kind=kind, first=first, last=last,
                                 s0=float(s[first]), s1=float(s[last]),
                                 arclength=arclen, touches_endpoint=touches,
                                 straight_ok=straight_ok,
                                 chord_deviation=deviation,
                                 arc_length_ok=arc_ok))

    # arc-run length clause needs neighbor kinds
    final_runs: list[StructureRun] = []
    nr = len(runs)
    for k, run in enumerate(runs):
        arc_ok = run.arc_length_ok
        if run.kind == "arc" and nr > 1:
            prev_run = runs[(k - 1) % nr]
            next_run = runs[(k + 1) % nr]
            adjacent_straight = "straight" in (prev_run.kind, next_run.kind)
            if curve.closed:
                neighbor_exists = True
            else:
                neighbor_exists = (k > 0 or k < nr - 1)
            if adjacent_straight and neighbor_exists and not run.touches_endpoint:
                arc_ok = run.arclength >= np.pi / lam - tol
                ok = ok and arc_ok
        final_runs.append(StructureRun(
            kind=run.kind, first=run.first, last=run.last, s0=run.s0,
            s1=run.s1, arclength=run.arclength,
            touches_endpoint=run.touches_endpoint,
            straight_ok=run.straight_ok, chord_deviation=run.chord_deviation,
            arc_length_ok=arc_ok))
    return StructureVerdict(lam=lam, tol=tol, runs=final_runs, passed=ok,
                            window=window)


@dataclass(frozen=True)
class ContainmentReport:
    lam: float
    pairs_checked: int
    violations: int
    worst_rho: float          # smallest rho seen among checked pairs
    contacts: int             # pairs within the contact band of 1/lam
    passed: bool


def verify_prop2_containment(curve: Curve, lam: float, tol: float = 0.05,
                             margin: float = 1e-7,
                             contact_band: float = 1e-3) -> ContainmentReport:
    """Check that curvature-bounded curves avoid their own obstacle regions.

    For sample pairs within pi/lam of arclength the swept-ball radius
    rho(a, s) must not drop below 1/lam; near-equality marks candidate
    circular arcs.  Raises if the curve violates the curvature bound.
    """
    prof = curvature_profile(curve)
    if prof.sup_kappa > lam * (1.0 + tol):
        raise PlannerError(
            f"curvature {prof.sup_kappa:g} exceeds the bound {lam:g} (tol {tol:g})")
    r = 1.0 / lam
    s = curve.cum_arclength
    length = curve.total_length
    n = curve.n_samples
    checked = 0
    viol = 0
    contacts = 0
    worst = np.inf
    for start in range(0, n, 256):
        rows = slice(start, min(start + 256, n))
        rho = _rho_block(curve.points, curve.tangents, rows)
        arc = np.abs(s[None, :] - s[rows, None])
        if curve.closed:
            arc = np.minimum(arc, length - arc)
        mask = (arc <= np.pi / lam) & (arc > 0.0)
        vals = rho[mask]
        checked += int(mask.sum())
        if vals.size:
            worst = min(worst, float(vals.min()))
            viol += int(np.count_nonzero(vals < r * (1.0 - margin)))
            contacts += int(np.count_nonzero(vals <= r * (1.0 + contact_band)))
    return ContainmentReport(lam=lam, pairs_checked=checked, violations=viol,
                             worst_rho=worst, contacts=contacts,
                             passed=viol == 0)


# ---------------------------------------------------------------------------
# planning orchestration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanResult:
    boundary: BoundaryData
    candidates: list[ClcPath]
    oracle: OracleResult
    best_clc: ClcPath | None
    regime: str               # "clc" or "constant_curvature"
    agreement: float          # oracle length / best candidate length


def plan_clc(b: BoundaryData, seed: int = 0, m: int = 64, iters: int = 1500,
             restarts: int = 6, regime_margin: float = 0.01) -> PlanResult:
    """Enumerate CLC candidates, cross-check with the oracle, pick a regime.

    When no candidate exists or the oracle beats every candidate by more
    than regime_margin the shortest curve has constant maximal curvature
    and is not of circle-line-circle type; that regime is flagged rather
    than guessed at.
    """
    cands = csc_candidates(b, seed=seed)
    oracle = discrete_shortest_oracle(b, m=m, iters=iters, seed=seed,
                                      restarts=restarts)
    if not cands:
        return PlanResult(boundary=b, candidates=[], oracle=oracle,
                          best_clc=None, regime="constant_curvature",
                          agreement=np.inf)
    best = cands[0]
    agreement = oracle.length / best.length
    regime = "clc"
    if oracle.length < best.length * (1.0 - regime_margin):
        regime = "constant_curvature"
    return PlanResult(boundary=b, candidates=cands, oracle=oracle,
                      best_clc=best, regime=regime, agreement=agreement)
