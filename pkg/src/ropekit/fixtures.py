"""Analytic curve fixtures: circles, ellipses, stadiums, offset-circle arcs."""

from __future__ import annotations

import numpy as np

from .curve import Curve, build_curve

FIXTURE_KINDS = (
    "circle", "ellipse", "stadium", "rounded_square", "clc",
    "example1_offset_circle", "torus_knot_sample",
)


class FixtureError(ValueError):
    """Unknown fixture kind or invalid parameters."""


def circle(radius: float = 1.0, n: int = 1024, center=(0.0, 0.0)) -> Curve:
    if radius <= 0 or n < 3:
        raise FixtureError("circle needs radius > 0 and n >= 3")
    theta = 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack((radius * np.cos(theta), radius * np.sin(theta)))
    pts += np.asarray(center, dtype=float)
    tans = np.column_stack((-np.sin(theta), np.cos(theta)))
    return build_curve(pts, closed=True, tangents=tans)


def ellipse(a: float = 2.0, b: float = 1.0, n: int = 1024) -> Curve:
    if a <= 0 or b <= 0 or n < 3:
        raise FixtureError("ellipse needs positive semi-axes and n >= 3")
    t = 2.0 * np.pi * np.arange(n) / n
    pts = np.column_stack((a * np.cos(t), b * np.sin(t)))
    vel = np.column_stack((-a * np.sin(t), b * np.cos(t)))
    tans = vel / np.linalg.norm(vel, axis=1)[:, None]
    return build_curve(pts, closed=True, tangents=tans)


def _sample_pieces(pieces, n: int, closed: bool) -> Curve:
    """Sample a list of (length, eval(s_local) -> (point, tangent)) uniformly."""
    lengths = np.array([p[0] for p in pieces])
    total = lengths.sum()
    starts = np.concatenate(([0.0], np.cumsum(lengths)))
    if closed:
        s = np.arange(n) * (total / n)
    else:
        s = np.linspace(0.0, total, n)
        s[-1] = total  # guard against rounding past the last piece
    idx = np.clip(np.searchsorted(starts, s, side="right") - 1, 0, len(pieces) - 1)
    pts = np.empty((n, 2))
    tans = np.empty((n, 2))
    for k, (_, fn) in enumerate(pieces):
        mask = idx == k
        if np.any(mask):
            pt, tn = fn(s[mask] - starts[k])
            pts[mask] = pt
            tans[mask] = tn
    return build_curve(pts, closed=closed, tangents=tans)


def _segment_piece(p0, p1):
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.linalg.norm(p1 - p0))
    direction = (p1 - p0) / length

    def fn(s):
        return p0 + s[:, None] * direction, np.tile(direction, (len(s), 1))

    return length, fn


def _arc_piece(center, radius: float, angle0: float, angle1: float):
    """CCW arc from angle0 to angle1 (angle1 > angle0)."""
    center = np.asarray(center, dtype=float)
    sweep = angle1 - angle0
    length = radius * sweep

    def fn(s):
        a = angle0 + s / radius
        pt = center + radius * np.column_stack((np.cos(a), np.sin(a)))
        tn = np.column_stack((-np.sin(a), np.cos(a)))
        return pt, tn

    return length, fn


def stadium(radius: float = 1.0, straight: float = 4.0, n: int = 2048) -> Curve:
    """Two straight segments of the given length capped by two semicircles."""
    if radius <= 0 or straight <= 0 or n < 8:
        raise FixtureError("stadium needs positive radius/straight and n >= 8")
    a = straight / 2.0
    pieces = [
        _segment_piece((-a, -radius), (a, -radius)),
        _arc_piece((a, 0.0), radius, -np.pi / 2.0, np.pi / 2.0),
        _segment_piece((a, radius), (-a, radius)),
        _arc_piece((-a, 0.0), radius, np.pi / 2.0, 3.0 * np.pi / 2.0),
    ]
    return _sample_pieces(pieces, n, closed=True)


def rounded_square(radius: float = 1.0, side: float = 4.0, n: int = 2048) -> Curve:
    """Four straight sides of the given length joined by quarter circles."""
    if radius <= 0 or side <= 0 or n < 16:
        raise FixtureError("rounded_square needs positive radius/side and n >= 16")
    a = side / 2.0
    r = radius
    pieces = [
        _segment_piece((-a, -(a + r)), (a, -(a + r))),
        _arc_piece((a, -a), r, -np.pi / 2.0, 0.0),
        _segment_piece((a + r, -a), (a + r, a)),
        _arc_piece((a, a), r, 0.0, np.pi / 2.0),
        _segment_piece((a, a + r), (-a, a + r)),
        _arc_piece((-a, a), r, np.pi / 2.0, np.pi),
        _segment_piece((-(a + r), a), (-(a + r), -a)),
        _arc_piece((-a, -a), r, np.pi, 3.0 * np.pi / 2.0),
    ]
    return _sample_pieces(pieces, n, closed=True)


def example1_offset_circle(eps: float = 0.05, n: int = 1024) -> Curve:
    """The part of the circle (x - eps)^2 + y^2 = 1 outside the unit disc.

    An open unit-curvature arc whose endpoints sit on the unit circle; its
    length exceeds pi and tends to pi as eps -> 0.
    """
    if not 0.0 < eps < 2.0 or n < 2:
        raise FixtureError("offset circle needs 0 < eps < 2 and n >= 2")
    t_star = np.arccos(-eps / 2.0)
    t = np.linspace(-t_star, t_star, n)
    pts = np.column_stack((eps + np.cos(t), np.sin(t)))
    tans = np.column_stack((-np.sin(t), np.cos(t)))
    return build_curve(pts, closed=False, tangents=tans)


def clc_path(lam: float = 1.0, theta1: float = np.pi / 2.0, ls: float = 2.0,
             theta2: float = np.pi / 2.0, n: int = 512, turn1: float = 1.0,
             turn2: float = 1.0) -> Curve:
    """Planar circle-line-circle path starting at the origin along +x.

    turn1/turn2 pick the turning side (+1 left, -1 right) of each arc.
    """
    if lam <= 0 or n < 2:
        raise FixtureError("clc needs lam > 0 and n >= 2")
    if not (0.0 <= theta1 < 2.0 * np.pi and 0.0 <= theta2 < 2.0 * np.pi) or ls < 0:
        raise FixtureError("clc arc angles must lie in [0, 2*pi) and ls >= 0")
    from .planner import assemble_clc  # local import to avoid a cycle

    path = assemble_clc(p=np.zeros(2), v=np.array([1.0, 0.0]),
                        w1=np.array([0.0, float(np.sign(turn1) or 1.0)]),
                        theta1=theta1, ls=ls,
                        w2=None, theta2=theta2, lam=lam,
                        turn2=float(np.sign(turn2) or 1.0))
    pts, tans = path.sample(n)
    return build_curve(pts, closed=False, tangents=tans)


def torus_knot_sample(p: int = 2, q: int = 3, big_radius: float = 2.0,
                      small_radius: float = 0.5, n: int = 1024) -> Curve:
    if n < 8:
        raise FixtureError("torus knot needs n >= 8")
    t = 2.0 * np.pi * np.arange(n) / n
    r = big_radius + small_radius * np.cos(q * t)
    pts = np.column_stack((r * np.cos(p * t), r * np.sin(p * t),
                           small_radius * np.sin(q * t)))
    dr = -q * small_radius * np.sin(q * t)
    vel = np.column_stack((
        dr * np.cos(p * t) - p * r * np.sin(p * t),
        dr * np.sin(p * t) + p * r * np.cos(p * t),
        q * small_radius * np.cos(q * t),
    ))
    tans = vel / np.linalg.norm(vel, axis=1)[:, None]
    return build_curve(pts, closed=True, tangents=tans)


_GENERATORS = {
    "circle": circle,
    "ellipse": ellipse,
    "stadium": stadium,
    "rounded_square": rounded_square,
    "clc": clc_path,
    "example1_offset_circle": example1_offset_circle,
    "torus_knot_sample": torus_knot_sample,
}


def generate_fixture(kind: str, **params) -> Curve:
    """Analytic sampling of a named fixture with exact tangents."""
    if kind not in _GENERATORS:
        raise FixtureError(
            f"unknown fixture kind {kind!r}; choose from {', '.join(FIXTURE_KINDS)}")
    try:
        return _GENERATORS[kind](**params)
    except TypeError as exc:
        raise FixtureError(f"invalid parameters for {kind}: {exc}") from None
