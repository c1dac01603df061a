"""Tube-thickness invariants of discretized curves.

Everything routes through the point/tangent radius

    rho(i, j) = |d|^2 / (2 |d_N|),   d = p_j - p_i,  d_N = d - (d . t_i) t_i,

the radius of the smallest swept ball anchored at (p_i, t_i) that reaches
p_j.  The ball radius is the minimum of rho over ordered sample pairs, the
pointwise focal distance its restriction to nearby pairs, and a point x lies
in the obstacle region of (p, v, r) exactly when rho(p -> x) < r.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curve import (Curve, CurvatureProfile, curvature_profile,
                    interpolate_state)

UNIT_TOL = 1e-12
DEFAULT_ORTHO_TOL = 1e-8
DEGENERATE_NORMAL_RATIO = 1e-12


class ThicknessError(ValueError):
    """Invalid input to a thickness computation."""


@dataclass(frozen=True)
class ObstacleSpec:
    """Forbidden region swept by radius-r balls tangent to (p, v)."""

    point: np.ndarray
    tangent: np.ndarray
    radius: float

    def __post_init__(self):
        p = np.asarray(self.point, dtype=float)
        v = np.asarray(self.tangent, dtype=float)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "tangent", v)
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise ThicknessError("obstacle tangent must be a unit vector")
        if not self.radius > 0.0:
            raise ThicknessError("obstacle radius must be positive")


def obstacle_contains(spec: ObstacleSpec, x, margin: float = 0.0):
    """Strict membership of x in the swept-ball region of spec.

    Closed form: |d|^2 < 2 r |d_N| + margin, where d = x - p and d_N is the
    component of d normal to the tangent.  A negative margin shrinks the
    region (useful to ignore boundary contact).  Accepts a single point or
    an array of points.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    d = pts - spec.point
    dsq = np.einsum("ij,ij->i", d, d)
    proj = d @ spec.tangent
    nsq = np.maximum(dsq - proj * proj, 0.0)
    inside = dsq < 2.0 * spec.radius * np.sqrt(nsq) + margin
    if np.ndim(x) == 1:
        return bool(inside[0])
    return inside


def _rho_block(points: np.ndarray, tangents: np.ndarray, rows: slice):
    """rho(i, j) for i in rows, all j; degenerate pairs get +inf."""
    d = points[None, :, :] - points[rows, None, :]
    dsq = np.einsum("ijk,ijk->ij", d, d)
    proj = np.einsum("ijk,ik->ij", d, tangents[rows])
    nsq = np.maximum(dsq - proj * proj, 0.0)
    nrm = np.sqrt(nsq)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = dsq / (2.0 * nrm)
    degenerate = nrm <= DEGENERATE_NORMAL_RATIO * np.sqrt(dsq)
    rho[degenerate] = np.inf
    r0 = rows.start or 0
    for i in range(rho.shape[0]):
        rho[i, r0 + i] = np.inf
    return rho


def _iter_row_blocks(n: int, block: int = 256):
    for start in range(0, n, block):
        yield slice(start, min(start + block, n))


def rolling_ball_radius(curve: Curve, exclusion_arc: float = 0.0):
    """Ball radius: min over ordered sample pairs of rho(i, j).

    Pairs closer than exclusion_arc in arclength are ignored (0 keeps the
    pure pairwise formula).  Returns (r_o, (i, j)); a straight line yields
    (inf, None).
    """
    pts, tans = curve.points, curve.tangents
    n = curve.n_samples
    s = curve.cum_arclength
    length = curve.total_length
    best = np.inf
    witness = None
    for rows in _iter_row_blocks(n):
        rho = _rho_block(pts, tans, rows)
        if exclusion_arc > 0.0:
            arc = np.abs(s[None, :] - s[rows, None])
            if curve.closed:
                arc = np.minimum(arc, length - arc)
            rho[arc < exclusion_arc] = np.inf
        k = int(np.argmin(rho))
        i, j = divmod(k, n)
        if rho[i, j] < best:
            best = float(rho[i, j])
            witness = (rows.start + i, j)
    return best, witness


def ball_radius_by_bisection(curve: Curve, tol: float = 1e-10,
                             hi: float | None = None) -> float:
    """Independent route to the ball radius: bisect r on the predicate
    "some sample lies inside some obstacle of radius r" evaluated with
    obstacle_contains directly."""
    pts = curve.points
    n = curve.n_samples

    def hit(r: float) -> bool:
        for i in range(n):
            spec = ObstacleSpec(pts[i], curve.tangents[i], r)
            inside = obstacle_contains(spec, pts)
            inside[i] = False
            if bool(inside.any()):
                return True
        return False

    if hi is None:
        span = pts.max(axis=0) - pts.min(axis=0)
        hi = float(np.linalg.norm(span)) + 1.0
    if not hit(hi):
        return np.inf
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if hit(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def geometric_focal_distance(curve: Curve, w_loc: float | None = None):
    """Pointwise focal distance as min of rho over nearby pairs.

    Returns (f_g, witness sample index, per-sample profile).  w_loc bounds
    the arc distance of pairs considered local (default 10 mean spacings).
    """
    if w_loc is None:
        w_loc = max(10.0 * curve.mean_spacing, 3.0 * curve.max_spacing)
    pts, tans = curve.points, curve.tangents
    n = curve.n_samples
    s = curve.cum_arclength
    length = curve.total_length
    profile = np.full(n, np.inf)
    for rows in _iter_row_blocks(n):
        rho = _rho_block(pts, tans, rows)
        arc = np.abs(s[None, :] - s[rows, None])
        if curve.closed:
            arc = np.minimum(arc, length - arc)
        rho[arc > w_loc] = np.inf
        profile[rows] = rho.min(axis=1)
    f_g = float(profile.min())
    return f_g, int(np.argmin(profile)), profile


@dataclass(frozen=True)
class CriticalPair:
    """Chord normal to the curve at both endpoints."""

    s: float
    t: float
    point_s: np.ndarray
    point_t: np.ndarray
    chord: float
    residual_s: float   # |(gamma(s)-gamma(t)) . t(s)| / chord
    residual_t: float


def _pair_residuals(curve: Curve, s, t):
    xs, ts, _ = interpolate_state(curve, s)
    xt, tt, _ = interpolate_state(curve, t)
    d = xs - xt
    chord = np.linalg.norm(d, axis=1)
    ts = ts / np.linalg.norm(ts, axis=1)[:, None]
    tt = tt / np.linalg.norm(tt, axis=1)[:, None]
    g1 = np.einsum("ij,ij->i", d, ts)
    g2 = np.einsum("ij,ij->i", d, tt)
    return xs, xt, chord, g1, g2


def double_critical_pairs(curve: Curve, grid_step: float | None = None,
                          tol: float = DEFAULT_ORTHO_TOL,
                          exclusion_factor: float = 0.9,
                          f_k: float | None = None) -> list[CriticalPair]:
    """Scan the (s, t) torus for doubly-normal chords and refine them.

    Grid cells where both orthogonality functions change sign are refined
    with a damped Levenberg iteration on linearly interpolated positions
    and tangents; candidates whose arc separation is below
    exclusion_factor * pi * f_k are discarded as near-diagonal artifacts.
    Degenerate families (e.g. parallel segments) are returned as all their
    grid-level representatives.
    """
    if not curve.closed:
        raise ThicknessError("double critical pairs are defined for closed curves")
    n = curve.n_samples
    length = curve.total_length
    if grid_step is not None and grid_step < curve.mean_spacing:
        raise ThicknessError("grid_step below sample spacing")
    stride = 1 if grid_step is None else max(1, int(round(grid_step / curve.mean_spacing)))
    idx = np.arange(0, n, stride)
    m = len(idx)
    s_grid = curve.cum_arclength[idx]
    pts = curve.points[idx]
    tans = curve.tangents[idx]

    if f_k is None:
        f_k = curvature_profile(curve).f_k
    min_sep = exclusion_factor * np.pi * f_k if np.isfinite(f_k) else 4.0 * curve.mean_spacing
    min_sep = max(min_sep, 4.0 * curve.mean_spacing * stride)

    # sign matrices of g_s and g_t on the grid
    sign_s = np.empty((m, m), dtype=np.int8)
    sign_t = np.empty((m, m), dtype=np.int8)
    for rows in _iter_row_blocks(m):
        d = pts[rows, None, :] - pts[None, :, :]
        sign_s[rows] = np.sign(np.einsum("ijk,ik->ij", d, tans[rows]))
        sign_t[rows] = np.sign(np.einsum("ijk,jk->ij", d, tans))

    def cell_has_root(sign_mat):
        c00 = sign_mat
        c10 = np.roll(sign_mat, -1, axis=0)
        c01 = np.roll(sign_mat, -1, axis=1)
        c11 = np.roll(c10, -1, axis=1)
        lo = np.minimum(np.minimum(c00, c10), np.minimum(c01, c11))
        hi = np.maximum(np.maximum(c00, c10), np.maximum(c01, c11))
        return (lo <= 0) & (hi >= 0)

    cells = cell_has_root(sign_s) & cell_has_root(sign_t)
    np.fill_diagonal(cells, False)

    ci, cj = np.nonzero(cells)
    if len(ci) == 0:
        return []
    grid_arc = length * stride / n
    s0 = s_grid[ci] + 0.5 * grid_arc
    t0 = s_grid[cj] + 0.5 * grid_arc

    sep = np.abs(s0 - t0)
    sep = np.minimum(sep, length - sep)
    keep = sep >= min_sep
    s0, t0 = s0[keep], t0[keep]
    if len(s0) == 0:
        return []

    s_cur, t_cur = s0.copy(), t0.copy()
    for _ in range(50):
        xs, ts_raw, dts = interpolate_state(curve, s_cur)
        xt, tt_raw, dtt = interpolate_state(curve, t_cur)
        d = xs - xt
        g1 = np.einsum("ij,ij->i", d, ts_raw)
        g2 = np.einsum("ij,ij->i", d, tt_raw)
        j11 = np.einsum("ij,ij->i", ts_raw, ts_raw) + np.einsum("ij,ij->i", d, dts)
        j12 = -np.einsum("ij,ij->i", tt_raw, ts_raw)
        j21 = np.einsum("ij,ij->i", ts_raw, tt_raw)
        j22 = -np.einsum("ij,ij->i", tt_raw, tt_raw) + np.einsum("ij,ij->i", d, dtt)
        # damped 2x2 Levenberg step: (J^T J + mu I) delta = J^T g
        a11 = j11 * j11 + j21 * j21
        a12 = j11 * j12 + j21 * j22
        a22 = j12 * j12 + j22 * j22
        mu = 1e-10 * (a11 + a22) + 1e-300
        a11 = a11 + mu
        a22 = a22 + mu
        b1 = j11 * g1 + j21 * g2
        b2 = j12 * g1 + j22 * g2
        det = a11 * a22 - a12 * a12
        ds = (a22 * b1 - a12 * b2) / det
        dt = (a11 * b2 - a12 * b1) / det
        step = np.hypot(ds, dt)
        cap = grid_arc
        scale = np.where(step > cap, cap / np.maximum(step, 1e-300), 1.0)
        s_cur = np.mod(s_cur - 0.8 * scale * ds, length)
        t_cur = np.mod(t_cur - 0.8 * scale * dt, length)

    # fall back to the grid center when the iteration wandered away
    drift_s = np.abs(s_cur - s0)
    drift_s = np.minimum(drift_s, length - drift_s)
    drift_t = np.abs(t_cur - t0)
    drift_t = np.minimum(drift_t, length - drift_t)
    wandered = (drift_s > 3.0 * grid_arc) | (drift_t > 3.0 * grid_arc)
    s_cur[wandered] = s0[wandered]
    t_cur[wandered] = t0[wandered]

    xs, xt, chord, g1, g2 = _pair_residuals(curve, s_cur, t_cur)
    sep = np.abs(s_cur - t_cur)
    sep = np.minimum(sep, length - sep)
    ok = ((np.abs(g1) <= tol * chord) & (np.abs(g2) <= tol * chord)
          & (chord > 0.0) & (sep >= min_sep))
    if not np.any(ok):
        return []
    s_cur, t_cur = s_cur[ok], t_cur[ok]
    xs, xt, chord = xs[ok], xt[ok], chord[ok]
    g1, g2 = g1[ok], g2[ok]

    # canonical unordered representation, then cluster at half-grid radius
    swap = s_cur > t_cur
    s_c = np.where(swap, t_cur, s_cur)
    t_c = np.where(swap, s_cur, t_cur)
    order = np.lexsort((t_c, s_c))
    radius = 0.75 * grid_arc
    pairs: list[CriticalPair] = []
    kept_s: list[float] = []
    kept_t: list[float] = []
    for k in order:
        sk, tk = float(s_c[k]), float(t_c[k])
        is_dup = False
        for ss, tt in zip(kept_s, kept_t):
            dss = min(abs(sk - ss), length - abs(sk - ss))
            dtt = min(abs(tk - tt), length - abs(tk - tt))
            if dss < radius and dtt < radius:
                is_dup = True
                break
        if is_dup:
            continue
        kept_s.append(sk)
        kept_t.append(tk)
        p_s = xs[k] if not swap[k] else xt[k]
        p_t = xt[k] if not swap[k] else xs[k]
        r_s = abs(float(g1[k] if not swap[k] else g2[k])) / float(chord[k])
        r_t = abs(float(g2[k] if not swap[k] else g1[k])) / float(chord[k])
        pairs.append(CriticalPair(s=sk, t=tk, point_s=p_s, point_t=p_t,
                                  chord=float(chord[k]),
                                  residual_s=r_s, residual_t=r_t))
    pairs.sort(key=lambda p: (p.chord, p.s, p.t))
    return pairs


def mdc(curve: Curve, grid_step: float | None = None,
        tol: float = DEFAULT_ORTHO_TOL, exclusion_factor: float = 0.9,
        f_k: float | None = None):
    """Minimal double critical distance and its witness pair (inf, None if none)."""
    pairs = double_critical_pairs(curve, grid_step=grid_step, tol=tol,
                                  exclusion_factor=exclusion_factor, f_k=f_k)
    if not pairs:
        return np.inf, None, pairs
    best = min(pairs, key=lambda p: p.chord)
    return best.chord, best, pairs


@dataclass(frozen=True)
class ThicknessReport:
    """All thickness-related invariants of a closed curve plus witnesses."""

    f_k: float
    f_g: float
    mdc: float
    r_o: float
    thickness: float          # min(f_k, mdc / 2)
    ropelength: float         # length / r_o
    length: float
    agreement_gap: float      # |r_o - thickness|
    lemma2_gap: float         # |f_k - f_g|
    kappa_profile: CurvatureProfile
    f_g_profile: np.ndarray
    r_o_witness: tuple[int, int] | None
    f_g_witness: int
    mdc_witness: CriticalPair | None
    critical_pairs: list[CriticalPair] = field(default_factory=list)
    low_resolution: bool = False
    ropelength_floor_ok: bool = True   # closed curves: ropelength >= 2*pi - tol


def thickness_report(curve: Curve, h: float | None = None,
                     w_loc: float | None = None,
                     grid_step: float | None = None,
                     ortho_tol: float = DEFAULT_ORTHO_TOL) -> ThicknessReport:
    """Assemble curvature, focal, double-critical and ball-radius invariants."""
    if not curve.closed:
        raise ThicknessError("thickness report requires a closed curve")
    prof = curvature_profile(curve, h=h)
    f_g, fg_witness, fg_profile = geometric_focal_distance(curve, w_loc=w_loc)
    r_o, ro_witness = rolling_ball_radius(curve)
    mdc_value, mdc_witness, pairs = mdc(curve, grid_step=grid_step,
                                        tol=ortho_tol, f_k=prof.f_k)
    thickness = min(prof.f_k, mdc_value / 2.0)
    length = curve.total_length
    ropelength = length / r_o if np.isfinite(r_o) else 0.0
    floor_ok = ropelength >= 2.0 * np.pi - 1e-6 if np.isfinite(r_o) else True
    return ThicknessReport(
        f_k=prof.f_k, f_g=f_g, mdc=mdc_value, r_o=r_o,
        thickness=thickness, ropelength=ropelength, length=length,
        agreement_gap=abs(r_o - thickness) if np.isfinite(thickness) else np.inf,
        lemma2_gap=abs(prof.f_k - f_g) if np.isfinite(f_g) else np.inf,
        kappa_profile=prof, f_g_profile=fg_profile,
        r_o_witness=ro_witness, f_g_witness=fg_witness,
        mdc_witness=mdc_witness, critical_pairs=pairs,
        low_resolution=curve.low_resolution,
        ropelength_floor_ok=floor_ok,
    )


@dataclass(frozen=True)
class SemicontinuityReport:
    """Ball-radius and MDC semicontinuity data along a curve sequence."""

    r_o: list[float]          # sequence values; last entry is the limit curve
    mdc: list[float]
    tail_max_r_o: list[float]  # max of r_o over the tail starting at index m
    tail_min_mdc: list[float]
    r_o_ok: bool              # tail max (last index) <= r_o(limit) + tol
    mdc_ok: bool              # tail min (last index) >= mdc(limit) - tol
    tol: float


def semicontinuity_probe(curves: list[Curve], tol: float = 0.1) -> SemicontinuityReport:
    """Measure lim-sup / lim-inf bounds of Prop.-5 type along a sequence.

    The last curve is taken as the limit; the probe measures, it does not
    assume convergence.
    """
    if len(curves) < 2:
        raise ThicknessError("need at least a sequence element and a limit curve")
    r_values = []
    m_values = []
    for c in curves:
        r, _ = rolling_ball_radius(c)
        r_values.append(r)
        if c.closed:
            m_val, _, _ = mdc(c)
        else:
            m_val = np.inf
        m_values.append(m_val)
    seq_r, lim_r = r_values[:-1], r_values[-1]
    seq_m, lim_m = m_values[:-1], m_values[-1]
    tail_max = [max(seq_r[m:]) for m in range(len(seq_r))]
    tail_min = [min(seq_m[m:]) for m in range(len(seq_m))]
    return SemicontinuityReport(
        r_o=r_values, mdc=m_values,
        tail_max_r_o=tail_max, tail_min_mdc=tail_min,
        r_o_ok=tail_max[-1] <= lim_r + tol,
        mdc_ok=tail_min[-1] >= lim_m - tol,
        tol=tol,
    )
