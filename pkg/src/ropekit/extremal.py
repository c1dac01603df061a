"""Pointwise classification and structure checks for candidate extremal curves.

Samples of a closed curve are classified by curvature relative to the ball
radius (zero / maximal / between) and by participation in minimal
doubly-critical chords.  The structure checks test the necessary conditions
a relatively extremal shape must satisfy; they never certify extremality.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .curve import Curve, angle_between, build_curve, curvature_profile, \
    resample_arclength, sup_dilation_banded
from .thickness import ThicknessReport, rolling_ball_radius, thickness_report

LABEL_ZERO = 0      # kappa ~ 0
LABEL_MAX = 1       # kappa ~ 1 / r_o
LABEL_BETWEEN = 2

_LABEL_NAMES = {LABEL_ZERO: "Iz", LABEL_MAX: "Imx", LABEL_BETWEEN: "Ib"}


class ExtremalError(ValueError):
    """Invalid input to an extremal-analysis operation."""


def default_tol(curve: Curve) -> float:
    return 10.0 / curve.n_samples


@dataclass(frozen=True)
class PointClasses:
    """Per-sample curvature labels plus the doubly-critical mask."""

    labels: np.ndarray         # int per sample: LABEL_ZERO / LABEL_MAX / LABEL_BETWEEN
    critical: np.ndarray       # bool per sample: participates in an MDC witness
    tol: float
    r_o: float

    def label_names(self):
        return [_LABEL_NAMES[int(k)] for k in self.labels]

    def count(self, label: int) -> int:
        return int(np.count_nonzero(self.labels == label))


def classify_points(curve: Curve, report: ThicknessReport | None = None,
                    tol: float | None = None) -> PointClasses:
    """Label samples by curvature vs the ball radius and mark MDC witnesses.

    Iz when kappa <= tol / r_o, Imx when |kappa - 1/r_o| <= tol / r_o,
    Ib otherwise.  Samples within one mean spacing of either end of a
    critical pair whose chord is within (1 + tol) of the MDC are marked
    critical, independently of their curvature label.
    """
    if not curve.closed:
        raise ExtremalError("point classification is defined for closed curves")
    if report is None:
        report = thickness_report(curve)
    if tol is None:
        tol = default_tol(curve)
    kappa = report.kappa_profile.kappa
    r_o = report.r_o
    if not np.isfinite(r_o) or r_o <= 0.0:
        raise ExtremalError("curve has no finite ball radius")
    thresh = tol / r_o
    labels = np.full(curve.n_samples, LABEL_BETWEEN, dtype=int)
    labels[np.abs(kappa - 1.0 / r_o) <= thresh] = LABEL_MAX
    labels[kappa <= thresh] = LABEL_ZERO

    critical = np.zeros(curve.n_samples, dtype=bool)
    if np.isfinite(report.mdc) and report.critical_pairs:
        length = curve.total_length
        s = curve.cum_arclength
        mark_radius = 1.5 * curve.mean_spacing
        cutoff = (1.0 + tol) * report.mdc
        for pair in report.critical_pairs:
            if pair.chord > cutoff:
                continue
            for sval in (pair.s, pair.t):
                d = np.abs(s - sval)
                d = np.minimum(d, length - d)
                critical |= d <= mark_radius
    return PointClasses(labels=labels, critical=critical, tol=tol, r_o=r_o)


@dataclass(frozen=True)
class ArcFit:
    center: np.ndarray
    radius: float
    normal_basis: np.ndarray   # (2, dim) rows spanning the fit plane
    planarity: float           # max out-of-plane deviation
    radial_deviation: float    # max |dist(center) - radius| within the plane


def fit_plane_circle(points: np.ndarray) -> ArcFit:
    """Least-squares plane (principal components), then circle in that plane
    refined by Levenberg-Marquardt on center and radius."""
    centroid = points.mean(axis=0)
    rel = points - centroid
    _, _, vt = np.linalg.svd(rel, full_matrices=False)
    e1, e2 = vt[0], vt[1]
    xy = np.column_stack((rel @ e1, rel @ e2))
    out_of_plane = rel - np.outer(xy[:, 0], e1) - np.outer(xy[:, 1], e2)
    planarity = float(np.linalg.norm(out_of_plane, axis=1).max())

    # algebraic (Kasa) initialization, then geometric refinement
    a_mat = np.column_stack((2.0 * xy, np.ones(len(xy))))
    b_vec = (xy ** 2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a_mat, b_vec, rcond=None)
    cx, cy = sol[0], sol[1]
    r0 = np.sqrt(max(sol[2] + cx * cx + cy * cy, 1e-300))

    def resid(z):
        return np.hypot(xy[:, 0] - z[0], xy[:, 1] - z[1]) - z[2]

    fit = least_squares(resid, np.array([cx, cy, r0]), method="lm", xtol=1e-14)
    cx, cy, radius = fit.x
    center = centroid + cx * e1 + cy * e2
    radial = float(np.abs(resid(fit.x)).max())
    return ArcFit(center=center, radius=float(radius),
                  normal_basis=np.vstack((e1, e2)), planarity=planarity,
                  radial_deviation=radial)


@dataclass(frozen=True)
class StructureRunInfo:
    kind: str                 # "segment", "arc" or "other"
    first: int
    last: int                 # inclusive, wraps when first > last
    arclength: float
    chord_deviation: float | None = None
    segment_ok: bool | None = None
    arc_fit: ArcFit | None = None
    arc_radius_ok: bool | None = None
    arc_planar_ok: bool | None = None
    meets_critical: bool = False


@dataclass(frozen=True)
class StructureReport:
    runs: list[StructureRunInfo]
    classes: PointClasses
    thickness: ThicknessReport
    tol: float

    def runs_of(self, kind: str):
        return [r for r in self.runs if r.kind == kind]


def _run_indices(first: int, last: int, n: int) -> np.ndarray:
    if last >= first:
        return np.arange(first, last + 1)
    return np.concatenate((np.arange(first, n), np.arange(0, last + 1)))


def _label_runs(labels: np.ndarray, closed: bool):
    n = len(labels)
    edges = np.nonzero(np.diff(labels))[0]
    starts = np.concatenate(([0], edges + 1))
    ends = np.concatenate((edges, [n - 1]))
    runs = [(int(labels[s]), int(s), int(e)) for s, e in zip(starts, ends)]
    if closed and len(runs) > 1 and runs[0][0] == runs[-1][0]:
        val, s_last, _ = runs[-1]
        _, _, e_first = runs[0]
        runs = [(val, s_last, e_first)] + runs[1:-1]
    return runs


def _chord_deviation(points: np.ndarray) -> float:
    a, b = points[0], points[-1]
    axis = b - a
    ln = np.linalg.norm(axis)
    if ln == 0.0:
        return float(np.linalg.norm(points - a, axis=1).max())
    axis = axis / ln
    rel = points - a
    along = rel @ axis
    perp = rel - np.outer(along, axis)
    return float(np.linalg.norm(perp, axis=1).max())


def decompose_structure(curve: Curve, report: ThicknessReport | None = None,
                        tol: float | None = None) -> StructureReport:
    """Split a closed curve into segment / maximal-arc / other runs.

    Consecutive equal labels merge greedily; Iz/Imx boundaries are then
    sharpened with adjacent-sample dilations (the windowed estimate smears
    them by the window width).  Segment runs are validated by chord
    deviation, arc runs by a plane-plus-circle fit whose radius must match
    the focal distance.
    """
    if report is None:
        report = thickness_report(curve)
    if tol is None:
        tol = default_tol(curve)
    classes = classify_points(curve, report, tol)
    labels = classes.labels.copy()
    n = curve.n_samples
    s = curve.cum_arclength
    length = curve.total_length
    f_k = report.f_k
    kmid = 0.5 / report.r_o

    runs_raw = _label_runs(labels, curve.closed)

    # Windowed curvature smears straight/arc boundaries by the window
    # width.  Around every run edge whose neighborhood contains both
    # zero-curvature and maximal labels, rebuild the labels from
    # adjacent-sample dilations, which are crisp on analytic fixtures.
    if len(runs_raw) > 1:
        tans = curve.tangents
        adj = np.empty(n)
        for i in range(n):
            j = (i + 1) % n
            ds = s[j] - s[i] if j > i else length - s[i] + s[j]
            adj[i] = float(angle_between(tans[i], tans[j])) / ds
        window = report.kappa_profile.window
        rebuild = np.zeros(n, dtype=bool)
        for val, first, last in runs_raw:
            for edge in (first, last):
                d = np.abs(s - s[edge % n])
                d = np.minimum(d, length - d)
                zone = d <= window
                zone_labels = labels[zone]
                if np.any(zone_labels == LABEL_ZERO) and np.any(zone_labels == LABEL_MAX):
                    rebuild |= zone
        if np.any(rebuild):
            sharp = np.where(np.maximum(adj, np.roll(adj, 1)) > kmid,
                             LABEL_MAX, LABEL_ZERO)
            labels[rebuild] = sharp[rebuild]
            runs_raw = _label_runs(labels, curve.closed)

    runs: list[StructureRunInfo] = []
    for val, first, last in runs_raw:
        idx = _run_indices(first, last, n)
        pts = curve.points[idx]
        arclen = float(s[last] - s[first]) if last >= first \
            else float(length - s[first] + s[last])
        meets = bool(classes.critical[idx].any())
        if val == LABEL_ZERO:
            dev = _chord_deviation(pts)
            ok = dev < tol * max(arclen, 1e-300)
            runs.append(StructureRunInfo(kind="segment", first=first, last=last,
                                         arclength=arclen, chord_deviation=dev,
                                         segment_ok=ok, meets_critical=meets))
        elif val == LABEL_MAX and len(idx) >= 5:
            fit = fit_plane_circle(pts)
            radius_ok = abs(fit.radius - f_k) <= tol * f_k
            planar_ok = fit.planarity < tol * f_k
            runs.append(StructureRunInfo(kind="arc", first=first, last=last,
                                         arclength=arclen, arc_fit=fit,
                                         arc_radius_ok=radius_ok,
                                         arc_planar_ok=planar_ok,
                                         meets_critical=meets))
        else:
            runs.append(StructureRunInfo(kind="other", first=first, last=last,
                                         arclength=arclen, meets_critical=meets))
    return StructureReport(runs=runs, classes=classes, thickness=report, tol=tol)


def reconstruct_from_structure(curve: Curve, report: StructureReport) -> Curve:
    """Rebuild the curve from its decomposition.

    Segments become exact chords, arc runs points on their fitted circles,
    other runs keep their samples.  Where a segment meets an arc the shared
    endpoint is moved to the tangency point of the fitted line and circle,
    so the rebuilt curve is kink-free there.
    """
    n = curve.n_samples
    runs = report.runs
    nr = len(runs)

    # endpoints of every run, adjusted at segment/arc boundaries
    endpoints = []
    lines = []
    for run in runs:
        idx = _run_indices(run.first, run.last, n)
        pts = curve.points[idx]
        endpoints.append([pts[0].copy(), pts[-1].copy()])
        if run.kind == "segment":
            d = pts[-1] - pts[0]
            nd = np.linalg.norm(d)
            lines.append((pts[0], d / nd if nd > 0 else d))
        else:
            lines.append(None)

    def tangency(seg_k, arc_k):
        a0, u = lines[seg_k]
        fit = runs[arc_k].arc_fit
        if fit is None:
            return None
        t_star = (fit.center - a0) @ u
        return a0 + t_star * u

    if curve.closed or nr > 1:
        for k in range(nr):
            k2 = (k + 1) % nr
            if not curve.closed and k2 == 0:
                break
            pair = (runs[k].kind, runs[k2].kind)
            pt = None
            if pair == ("segment", "arc"):
                pt = tangency(k, k2)
            elif pair == ("arc", "segment"):
                pt = tangency(k2, k)
            if pt is not None:
                endpoints[k][1] = pt
                endpoints[k2][0] = pt

    pieces = []
    for k, run in enumerate(runs):
        idx = _run_indices(run.first, run.last, n)
        count = len(idx)
        start, stop = endpoints[k]
        if run.kind == "segment" and count >= 2:
            t = np.linspace(0.0, 1.0, count)
            pts = np.outer(1 - t, start) + np.outer(t, stop)
        elif run.kind == "arc" and run.arc_fit is not None and count >= 3:
            fit = run.arc_fit
            e1, e2 = fit.normal_basis
            rel = curve.points[idx] - fit.center
            ang = np.unwrap(np.arctan2(rel @ e2, rel @ e1))
            rel0 = start - fit.center
            rel1 = stop - fit.center
            a0 = np.arctan2(rel0 @ e2, rel0 @ e1)
            a1 = np.arctan2(rel1 @ e2, rel1 @ e1)
            # keep the sweep direction of the original samples
            a0 += _nearest_two_pi(ang[0] - a0)
            a1 += _nearest_two_pi(ang[-1] - a1)
            t = np.linspace(a0, a1, count)
            pts = fit.center + fit.radius * (np.outer(np.cos(t), e1)
                                             + np.outer(np.sin(t), e2))
        else:
            pts = curve.points[idx]
        pieces.append(pts[:-1] if (curve.closed or k < nr - 1) else pts)
    points = np.vstack(pieces)
    keep = np.ones(len(points), dtype=bool)
    gaps = np.linalg.norm(np.diff(points, axis=0), axis=1)
    keep[1:][gaps == 0.0] = False
    rebuilt = build_curve(points[keep], closed=curve.closed)
    return resample_arclength(rebuilt, curve.n_samples)


def _nearest_two_pi(x: float) -> float:
    return 2.0 * np.pi * np.round(x / (2.0 * np.pi))


@dataclass(frozen=True)
class Theorem2Verdict:
    """Necessary-condition check: thickness equals half the minimal
    doubly-critical distance, and segments flanked by focal-radius arcs."""

    applicable: bool           # some sample has kappa < sup kappa (1 - tol)
    thickness_ok: bool | None
    thickness_gap: float | None
    segment_clauses: list[dict] = field(default_factory=list)
    passed: bool = True
    tol: float = 0.0


def check_theorem2(curve: Curve, tol: float | None = None,
                   report: ThicknessReport | None = None,
                   structure: StructureReport | None = None) -> Theorem2Verdict:
    """Test the structural necessary conditions of relatively extremal
    shapes with non-constant curvature.  Vacuous pass when the curvature
    is constant within tolerance."""
    if report is None:
        report = thickness_report(curve)
    if tol is None:
        tol = default_tol(curve)
    kappa = report.kappa_profile.kappa
    sup = report.kappa_profile.sup_kappa
    if not np.any(kappa < sup * (1.0 - tol)):
        return Theorem2Verdict(applicable=False, thickness_ok=None,
                               thickness_gap=None, passed=True, tol=tol)
    if structure is None:
        structure = decompose_structure(curve, report, tol)
    gap = abs(report.r_o - report.mdc / 2.0) if np.isfinite(report.mdc) else np.inf
    thickness_ok = gap <= tol * report.r_o
    passed = thickness_ok
    clauses = []
    runs = structure.runs
    nr = len(runs)
    f_k = report.f_k
    for k, run in enumerate(runs):
        if run.kind != "segment":
            continue
        if run.meets_critical:
            clauses.append({"run": k, "meets_critical": True, "ok": True})
            continue
        ok = True
        detail = {"run": k, "meets_critical": False}
        for side, nb in (("prev", runs[(k - 1) % nr]), ("next", runs[(k + 1) % nr])):
            side_ok = False
            if nb.kind == "arc" and nb.arc_fit is not None:
                radius_close = abs(nb.arc_fit.radius - f_k) <= tol * f_k
                long_enough = nb.arclength >= np.pi * f_k * (1.0 - tol)
                side_ok = radius_close and (long_enough or nb.meets_critical)
            detail[side + "_ok"] = side_ok
            ok = ok and side_ok
        detail["ok"] = ok
        clauses.append(detail)
        passed = passed and ok
    return Theorem2Verdict(applicable=True, thickness_ok=thickness_ok,
                           thickness_gap=gap, segment_clauses=clauses,
                           passed=passed, tol=tol)


@dataclass(frozen=True)
class Theorem3Verdict:
    """Contrapositive check: thickness strictly below half MDC forces
    constant maximal curvature."""

    triggered: bool            # mdc / 2 > r_o (1 + tol)
    constant_curvature: bool | None
    max_deviation: float | None
    passed: bool
    tol: float


def check_theorem3(curve: Curve, tol: float | None = None,
                   report: ThicknessReport | None = None) -> Theorem3Verdict:
    if report is None:
        report = thickness_report(curve)
    if tol is None:
        tol = default_tol(curve)
    if not (np.isfinite(report.mdc) and report.mdc / 2.0 > report.r_o * (1.0 + tol)):
        return Theorem3Verdict(triggered=False, constant_curvature=None,
                               max_deviation=None, passed=True, tol=tol)
    kappa = report.kappa_profile.kappa
    dev = float(np.abs(kappa - 1.0 / report.r_o).max())
    constant = dev <= tol / report.r_o
    return Theorem3Verdict(triggered=True, constant_curvature=constant,
                           max_deviation=dev, passed=constant, tol=tol)


@dataclass(frozen=True)
class RelaxationTrace:
    steps: np.ndarray          # (k, 4): step index, length, r_o, ropelength
    accepted: int
    rejected: int


def _smooth_bump(u: np.ndarray) -> np.ndarray:
    """C^2 bump with compact support on [-1, 1]."""
    return np.where(np.abs(u) < 1.0, (1.0 - u * u) ** 3, 0.0)


def _smooth_bump_deriv(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) < 1.0, -6.0 * u * (1.0 - u * u) ** 2, 0.0)


def relax_ropelength(curve: Curve, lam_cap: float, steps: int = 1000,
                     seed: int = 0, r_o_slack: float = 1e-7):
    """Randomized bump-move descent of ropelength under a curvature cap.

    Each step displaces a random window along the direction that shrinks
    length to first order (a smooth compactly supported bump times the
    integrated tangent variation).  A move is accepted only when the
    resampled curvature stays at or below the cap, the ball radius does
    not drop by more than a relative slack, and the ropelength strictly
    decreases, so the recorded trace is non-increasing by construction.
    """
    if not curve.closed:
        raise ExtremalError("relaxation expects a closed curve")
    prof_sup = sup_dilation_banded(curve, 5.0 * curve.mean_spacing)
    if prof_sup > lam_cap:
        raise ExtremalError(
            f"curvature cap {lam_cap:g} is below the current curvature {prof_sup:g}")
    rng = np.random.default_rng(seed)
    n = curve.n_samples
    cur = resample_arclength(curve, n)
    r_o, _ = rolling_ball_radius(cur)
    length = cur.total_length
    rope = length / r_o
    rows = [(0, length, r_o, rope)]
    accepted = 0
    rejected = 0
    window_h = 5.0 * cur.mean_spacing

    for step in range(1, steps + 1):
        center = int(rng.integers(n))
        half = int(rng.integers(max(4, n // 32), max(5, n // 6)))
        idx = (center + np.arange(-half, half + 1)) % n
        u = np.linspace(-1.0, 1.0, len(idx))
        h = _smooth_bump(u)
        hp = _smooth_bump_deriv(u)
        v_dir = -(hp[:, None] * cur.tangents[idx]).sum(axis=0)
        norm = np.linalg.norm(v_dir)
        moved = False
        if norm > 1e-12:
            # amplitude from the curvature headroom: a bump of height A over
            # half-width ell adds roughly 8 A / ell^2 of curvature
            kappa_cur = sup_dilation_banded(cur, window_h)
            headroom = max(lam_cap - kappa_cur, 0.05 * lam_cap)
            ell = half * cur.mean_spacing
            base = headroom * ell * ell / (8.0 * max(norm, 1e-300))
            for scale in (1.0, 0.3, 0.1):
                pts = cur.points.copy()
                pts[idx] += (scale * base) * np.outer(h, v_dir)
                try:
                    trial = resample_arclength(
                        build_curve(pts, closed=True, tangents=None), n)
                except Exception:
                    continue
                if sup_dilation_banded(trial, window_h) > lam_cap:
                    continue
                r_new, _ = rolling_ball_radius(trial)
                if r_new < r_o * (1.0 - r_o_slack):
                    continue
                rope_new = trial.total_length / r_new
                if rope_new >= rope:
                    continue
                cur = trial
                r_o = r_new
                length = trial.total_length
                rope = rope_new
                accepted += 1
                moved = True
                break
        if not moved:
            rejected += 1
        rows.append((step, length, r_o, rope))

    trace = RelaxationTrace(steps=np.array(rows), accepted=accepted,
                            rejected=rejected)
    return cur, trace
