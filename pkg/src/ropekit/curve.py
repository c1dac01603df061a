"""Discretized curves in R^n and their first-order differential geometry.

A curve is an ordered polyline with unit tangents attached to every sample.
Arclength always means cumulative chord length of the polyline; for closed
curves index arithmetic wraps and arc distances are measured along the
shorter arc.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TANGENT_NORM_TOL = 1e-12
LOW_RESOLUTION_N = 8


class CurveError(ValueError):
    """Invalid curve data (duplicate points, too few samples, bad tangents)."""


def angle_between(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Angle between unit vectors, stable near 0 and pi.

    Uses 2*arcsin(|u - v| / 2), which is exact for unit inputs and avoids
    the arccos precision cliff at both ends of the range.
    """
    chord = np.linalg.norm(np.asarray(u) - np.asarray(v), axis=-1)
    return 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))


@dataclass(frozen=True)
class Curve:
    """Arclength-sampled polyline with per-sample unit tangents."""

    dim: int
    closed: bool
    points: np.ndarray        # (N, dim)
    tangents: np.ndarray      # (N, dim), unit rows
    cum_arclength: np.ndarray  # (N,), s_0 = 0, strictly increasing

    @property
    def n_samples(self) -> int:
        return self.points.shape[0]

    @property
    def total_length(self) -> float:
        if self.closed:
            closing = float(np.linalg.norm(self.points[0] - self.points[-1]))
            return float(self.cum_arclength[-1]) + closing
        return float(self.cum_arclength[-1])

    @property
    def mean_spacing(self) -> float:
        return self.total_length / (self.n_samples if self.closed else self.n_samples - 1)

    @property
    def max_spacing(self) -> float:
        gaps = np.diff(self.cum_arclength)
        if self.closed:
            closing = self.total_length - self.cum_arclength[-1]
            return float(max(gaps.max(), closing))
        return float(gaps.max())

    @property
    def low_resolution(self) -> bool:
        return self.closed and self.n_samples < LOW_RESOLUTION_N

    def arc_distance(self, i: int, j: int) -> float:
        """Arclength between samples i and j (shorter arc when closed)."""
        d = abs(float(self.cum_arclength[j] - self.cum_arclength[i]))
        if self.closed:
            return min(d, self.total_length - d)
        return d

    def arc_distance_matrix(self) -> np.ndarray:
        s = self.cum_arclength
        d = np.abs(s[:, None] - s[None, :])
        if self.closed:
            d = np.minimum(d, self.total_length - d)
        return d


def _estimate_tangents(points: np.ndarray, closed: bool) -> np.ndarray:
    n = points.shape[0]
    if closed:
        diffs = np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0)
    else:
        diffs = np.empty_like(points)
        diffs[1:-1] = points[2:] - points[:-2]
        diffs[0] = points[1] - points[0]
        diffs[-1] = points[-1] - points[-2]
    norms = np.linalg.norm(diffs, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.argmin(norms))
        raise CurveError(f"tangent of zero norm at sample {bad}")
    return diffs / norms[:, None]


def build_curve(points, dim: int | None = None, closed: bool = False,
                tangents=None) -> Curve:
    """Assemble a Curve, estimating tangents by centered chord differences.

    Endpoints of open curves use one-sided differences.  Supplied tangents
    must already be unit vectors.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=float))
    if pts.ndim != 2:
        raise CurveError("points must be a 2-D array, one point per row")
    n = pts.shape[0]
    if dim is None:
        dim = pts.shape[1]
    if pts.shape[1] != dim:
        raise CurveError(f"points have dimension {pts.shape[1]}, expected {dim}")
    if dim < 2:
        raise CurveError("ambient dimension must be at least 2")
    min_n = 3 if closed else 2
    if n < min_n:
        raise CurveError(f"need at least {min_n} samples, got {n}")

    gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(gaps == 0.0):
        i = int(np.argmin(gaps))
        raise CurveError(f"duplicate consecutive points at samples {i}, {i + 1}")
    if closed and np.linalg.norm(pts[0] - pts[-1]) == 0.0:
        raise CurveError("closed curve repeats its first point; drop the duplicate")

    cum = np.concatenate(([0.0], np.cumsum(gaps)))

    if tangents is None:
        tans = _estimate_tangents(pts, closed)
    else:
        tans = np.ascontiguousarray(np.asarray(tangents, dtype=float))
        if tans.shape != pts.shape:
            raise CurveError("tangents must have the same shape as points")
        norms = np.linalg.norm(tans, axis=1)
        if np.any(norms == 0.0):
            raise CurveError("tangent of zero norm")
        if np.any(np.abs(norms - 1.0) > TANGENT_NORM_TOL):
            raise CurveError("stored tangents must be unit vectors within 1e-12")

    for arr in (pts, tans, cum):
        arr.flags.writeable = False
    return Curve(dim=dim, closed=closed, points=pts, tangents=tans, cum_arclength=cum)


def _extended_knots(curve: Curve):
    """Sample positions/tangents with the wrap point appended for closed curves."""
    if curve.closed:
        s = np.concatenate((curve.cum_arclength, [curve.total_length]))
        pts = np.vstack((curve.points, curve.points[:1]))
        tans = np.vstack((curve.tangents, curve.tangents[:1]))
    else:
        s = curve.cum_arclength
        pts = curve.points
        tans = curve.tangents
    return s, pts, tans


def interpolate_state(curve: Curve, s):
    """Position, (unnormalized) tangent and tangent slope at arclengths s.

    Positions are piecewise linear; tangents are linearly interpolated
    between the stored unit tangents, so their norm is 1 - O(gap^2).
    """
    knots, pts, tans = _extended_knots(curve)
    length = curve.total_length
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if curve.closed:
        s = np.mod(s, length)
    else:
        s = np.clip(s, 0.0, length)
    idx = np.clip(np.searchsorted(knots, s, side="right") - 1, 0, len(knots) - 2)
    gap = knots[idx + 1] - knots[idx]
    frac = (s - knots[idx]) / gap
    pos = pts[idx] + frac[:, None] * (pts[idx + 1] - pts[idx])
    slope = (tans[idx + 1] - tans[idx]) / gap[:, None]
    tan = tans[idx] + frac[:, None] * (tans[idx + 1] - tans[idx])
    return pos, tan, slope


def resample_arclength(curve: Curve, m: int) -> Curve:
    """Resample to m points equally spaced in cumulative chord length.

    Open curves keep their endpoints; closed curves keep the start sample.
    Tangents are interpolated and renormalized rather than re-estimated, so
    analytically exact tangents survive resampling.
    """
    min_m = 3 if curve.closed else 2
    if m < min_m:
        raise CurveError(f"need at least {min_m} output samples, got {m}")
    length = curve.total_length
    if curve.closed:
        target = np.arange(m) * (length / m)
    else:
        target = np.linspace(0.0, length, m)
    pos, tan, _ = interpolate_state(curve, target)
    norms = np.linalg.norm(tan, axis=1)
    tan = tan / norms[:, None]
    if not curve.closed:
        pos[0] = curve.points[0]
        pos[-1] = curve.points[-1]
    return build_curve(pos, dim=curve.dim, closed=curve.closed, tangents=tan)


def dilation_alpha(curve: Curve, i: int, j: int) -> float:
    """Tangent angle between samples i and j divided by their arc distance."""
    if i == j:
        raise CurveError("dilation requires two distinct samples")
    ang = float(angle_between(curve.tangents[i], curve.tangents[j]))
    return ang / curve.arc_distance(i, j)


@dataclass(frozen=True)
class CurvatureProfile:
    """Windowed per-sample curvature estimates and their supremum."""

    kappa: np.ndarray        # (N,), >= 0
    sup_kappa: float
    f_k: float               # 1 / sup_kappa, inf for straight curves
    window: float            # half-width h used for the windowed max
    argmax: int              # sample index achieving sup_kappa


def default_window(curve: Curve) -> float:
    # lim sup discretization: window of 5 mean spacings, floored so that at
    # least two further samples fall inside even with uneven sampling.
    return max(5.0 * curve.mean_spacing, 2.0 * curve.max_spacing)


def _window_indices(curve: Curve, h: float):
    """Per-sample index ranges [lo, hi) covering arclengths within +-h."""
    s = curve.cum_arclength
    n = curve.n_samples
    if curve.closed:
        length = curve.total_length
        s_ext = np.concatenate((s - length, s, s + length))
        lo = np.searchsorted(s_ext, s - h, side="left")
        hi = np.searchsorted(s_ext, s + h, side="right")
        return lo, hi, s_ext, True
    lo = np.searchsorted(s, s - h, side="left")
    hi = np.searchsorted(s, s + h, side="right")
    return lo, hi, s, False


def curvature_profile(curve: Curve, h: float | None = None) -> CurvatureProfile:
    """Generalized curvature via the windowed max of pairwise dilations.

    kappa_i is the maximum of angle(t_j, t_k) / arc(j, k) over sample pairs
    whose arclengths lie within h of sample i.
    """
    if h is None:
        h = default_window(curve)
    if h < 2.0 * curve.max_spacing:
        raise CurveError(
            f"window {h:g} too small for sampling (max spacing {curve.max_spacing:g})")
    lo, hi, s_ext, wrapped = _window_indices(curve, h)
    n = curve.n_samples
    tans = curve.tangents
    kappa = np.zeros(n)
    for i in range(n):
        idx = np.arange(lo[i], hi[i])
        sw = s_ext[idx]
        if wrapped:
            idx = np.mod(idx, n)
        t = tans[idx]
        gram = np.clip(t @ t.T, -1.0, 1.0)
        ang = 2.0 * np.arcsin(np.clip(0.5 * np.sqrt(np.maximum(2.0 - 2.0 * gram, 0.0)), 0.0, 1.0))
        arc = np.abs(sw[:, None] - sw[None, :])
        if wrapped:
            length = curve.total_length
            arc = np.minimum(arc, length - arc)
        np.fill_diagonal(arc, np.inf)
        kappa[i] = float((ang / arc).max())
    sup = float(kappa.max())
    f_k = np.inf if sup == 0.0 else 1.0 / sup
    return CurvatureProfile(kappa=kappa, sup_kappa=sup, f_k=f_k, window=h,
                            argmax=int(np.argmax(kappa)))


def sup_dilation_banded(curve: Curve, h: float) -> float:
    """Fast supremum of windowed dilations for near-uniform sampling.

    Equals curvature_profile(...).sup_kappa up to one sample spacing of
    window truncation; used in inner optimization loops.
    """
    n = curve.n_samples
    s, pts, tans = _extended_knots(curve)
    gap = curve.mean_spacing
    kmax = max(1, int(np.floor((2.0 * h) / gap)) + 1)
    best = 0.0
    length = curve.total_length
    for off in range(1, min(kmax, n - 1) + 1):
        if curve.closed:
            tj = np.roll(curve.tangents, -off, axis=0)
            arc = np.mod(np.roll(curve.cum_arclength, -off) - curve.cum_arclength, length)
            arc = np.minimum(arc, length - arc)
            ti = curve.tangents
        else:
            ti = curve.tangents[:-off]
            tj = curve.tangents[off:]
            arc = curve.cum_arclength[off:] - curve.cum_arclength[:-off]
        mask = (arc <= 2.0 * h) & (arc > 0.0)
        if not np.any(mask):
            continue
        ang = angle_between(ti[mask], tj[mask])
        best = max(best, float((ang / arc[mask]).max()))
    return best


@dataclass(frozen=True)
class Lemma1Report:
    """Equivalence check of the windowed, pairwise and Lipschitz curvature bounds."""

    lam: float
    tol: float
    windowed_ok: bool
    pairwise_ok: bool
    lipschitz_ok: bool
    sup_windowed: float
    max_pairwise: float
    max_lipschitz_excess: float
    worst_pair: tuple[int, int]

    @property
    def passed(self) -> bool:
        return self.windowed_ok and self.pairwise_ok and self.lipschitz_ok

    @property
    def equivalent(self) -> bool:
        return self.windowed_ok == self.pairwise_ok


def verify_lemma1(curve: Curve, lam: float, tol: float = 1e-2,
                  h: float | None = None) -> Lemma1Report:
    """Check the discrete equivalence of the three curvature-bound forms.

    windowed:   sup over windows of pairwise dilations <= lam + tol
    pairwise:   dilation(i, j) <= lam + tol for all sample pairs
    lipschitz:  |t_i - t_j| <= lam * arc(i, j) + tol for all pairs
    """
    prof = curvature_profile(curve, h=h)
    tans = curve.tangents
    gram = np.clip(tans @ tans.T, -1.0, 1.0)
    chord = np.sqrt(np.maximum(2.0 - 2.0 * gram, 0.0))
    ang = 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))
    arc = curve.arc_distance_matrix()
    np.fill_diagonal(arc, np.inf)
    dil = ang / arc
    max_pair = float(dil.max())
    worst = np.unravel_index(int(np.argmax(dil)), dil.shape)
    lip_excess = chord - lam * np.where(np.isinf(arc), 0.0, arc)
    np.fill_diagonal(lip_excess, -np.inf)
    max_lip = float(lip_excess.max())
    return Lemma1Report(
        lam=lam, tol=tol,
        windowed_ok=prof.sup_kappa <= lam + tol,
        pairwise_ok=max_pair <= lam + tol,
        lipschitz_ok=max_lip <= tol,
        sup_windowed=prof.sup_kappa,
        max_pairwise=max_pair,
        max_lipschitz_excess=max_lip,
        worst_pair=(int(worst[0]), int(worst[1])),
    )


def apply_similarity(curve: Curve, rotation=None, translation=None,
                     scale: float = 1.0) -> Curve:
    """Apply x -> scale * Q x + t to a curve (Q orthogonal)."""
    pts = curve.points
    tans = curve.tangents
    if rotation is not None:
        q = np.asarray(rotation, dtype=float)
        pts = pts @ q.T
        tans = tans @ q.T
        tans = tans / np.linalg.norm(tans, axis=1)[:, None]
    pts = scale * pts
    if translation is not None:
        pts = pts + np.asarray(translation, dtype=float)
    return build_curve(pts, dim=curve.dim, closed=curve.closed, tangents=tans)
