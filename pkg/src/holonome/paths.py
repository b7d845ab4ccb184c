"""Chart points, tangent vectors, and piecewise-smooth parametric paths.

A path is a list of segments; each segment names a chart and carries one
coordinate expression per axis in the local parameter x1 in [0, 1], plus the
global parameter subrange it occupies.  The global parameter always runs
over [0, 1].  Velocities come from exact dual-number derivatives, rescaled
by the segment chain rule.

The path algebra here (constant paths, juxtaposition, reparametrization,
reversal) is what the transport axioms quantify over.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from . import exprs
from .errors import (
    EndpointMismatchError,
    NotMonotoneError,
    OutOfRangeError,
)
from .exprs import Expr, lit, parse, substitute, var

__all__ = [
    "ChartPoint",
    "TangentVector",
    "Segment",
    "PathSpec",
    "path_point",
    "path_velocity",
    "constant_path",
    "juxtapose",
    "reparametrize",
    "reverse_path",
    "subpath",
    "line_path",
    "arc_path",
    "path_from_exprs",
    "path_from_strings",
    "segment_points",
    "segment_points_and_velocities",
]

_ENDPOINT_TOL = 1e-10


@dataclass(frozen=True)
class ChartPoint:
    """A base-manifold point given by chart id and chart coordinates."""

    chart_id: int
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    @property
    def dim(self):
        return len(self.coords)


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector at a chart point, in chart coordinates."""

    base: ChartPoint
    components: np.ndarray

    def __post_init__(self):
        c = np.array(self.components, dtype=float)
        if len(c) != self.base.dim:
            raise OutOfRangeError(
                f"tangent vector has {len(c)} components on a {self.base.dim}-dim chart"
            )
        c.flags.writeable = False
        object.__setattr__(self, "components", c)


@dataclass(frozen=True)
class Segment:
    """One smooth piece of a path.

    coords are expressions in the local parameter x1 in [0, 1]; (t0, t1) is
    the global parameter subrange, with t1 > t0.
    """

    chart_id: int
    coords: tuple
    t0: float
    t1: float

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise OutOfRangeError(f"empty segment range [{self.t0}, {self.t1}]")
        coords = tuple(c.with_dim(1) if c.dim == 0 else c for c in self.coords)
        for c in coords:
            if c.dim != 1:
                raise OutOfRangeError("segment coordinates must be functions of x1 only")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self):
        return len(self.coords)

    def point_at(self, u):
        return np.array([exprs.evaluate(c, [u]) for c in self.coords])


def segment_points(seg, us):
    """Coordinates at local parameters us; returns (m, n)."""
    us = np.asarray(us, dtype=float)[:, None]
    return np.stack([exprs.evaluate_many(c, us) for c in seg.coords], axis=1)


def segment_points_and_velocities(seg, us):
    """Coordinates and global-t velocities at local parameters us.

    Returns (points (m, n), velocities (m, n)); velocities carry the
    1/(t1 - t0) chain-rule factor so they are derivatives in global t.
    """
    us = np.asarray(us, dtype=float)[:, None]
    pts, vels = [], []
    scale = 1.0 / (seg.t1 - seg.t0)
    for c in seg.coords:
        v, g = exprs.evaluate_dual_many(c, us)
        pts.append(v)
        vels.append(g[:, 0] * scale)
    return np.stack(pts, axis=1), np.stack(vels, axis=1)


@dataclass(frozen=True)
class PathSpec:
    """Piecewise-smooth path over the global parameter range [0, 1].

    Segment ranges must tile [0, 1] in order; adjacent same-chart segments
    must agree at the junction within 1e-10.  Junctions that switch charts
    are validated by the transport engine, which knows the transition maps.
    """

    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise OutOfRangeError("a path needs at least one segment")
        if abs(segs[0].t0) > 1e-12 or abs(segs[-1].t1 - 1.0) > 1e-12:
            raise OutOfRangeError("segment ranges must cover [0, 1]")
        for a, b in zip(segs, segs[1:]):
            if abs(a.t1 - b.t0) > 1e-12:
                raise OutOfRangeError("segment ranges must be contiguous")
            if a.chart_id == b.chart_id:
                gap = np.max(np.abs(a.point_at(1.0) - b.point_at(0.0)))
                if gap > _ENDPOINT_TOL:
                    raise EndpointMismatchError(
                        f"segments disagree at t={b.t0:.6g} by {gap:.3e}"
                    )
        object.__setattr__(self, "segments", segs)

    @property
    def breakpoints(self):
        return [s.t0 for s in self.segments[1:]]

    def segment_index_at(self, t, side="right"):
        """Segment owning parameter t; the right segment wins at interior
        breakpoints (the left one at t = 1), side="left" flips that."""
        if t < -1e-12 or t > 1.0 + 1e-12:
            raise OutOfRangeError(f"parameter {t} outside [0, 1]")
        t = min(max(t, 0.0), 1.0)
        starts = [s.t0 for s in self.segments]
        if side == "left":
            i = bisect.bisect_left(starts, t) - 1
            i = max(i, 0)
        else:
            i = bisect.bisect_right(starts, t) - 1
        return min(i, len(self.segments) - 1)


def path_point(gamma, t, side="right"):
    """Evaluate a path at global parameter t."""
    i = gamma.segment_index_at(t, side)
    seg = gamma.segments[i]
    u = (min(max(t, 0.0), 1.0) - seg.t0) / (seg.t1 - seg.t0)
    return ChartPoint(seg.chart_id, seg.point_at(u))


def path_velocity(gamma, t, side="right"):
    """Velocity (d/dt of chart coordinates) at global parameter t.

    At a breakpoint the two one-sided values may differ; pick one with
    ``side``.
    """
    i = gamma.segment_index_at(t, side)
    seg = gamma.segments[i]
    u = (min(max(t, 0.0), 1.0) - seg.t0) / (seg.t1 - seg.t0)
    pts, vels = segment_points_and_velocities(seg, [u])
    return TangentVector(ChartPoint(seg.chart_id, pts[0]), vels[0])


# --- constructors ---------------------------------------------------------------

def path_from_exprs(chart_id, coords, ranges=None):
    """Single- or multi-segment path from expression vectors.

    ``coords`` is either one list of Exprs (one segment) or a list of such
    lists; ``ranges`` optionally gives the (t0, t1) per segment, defaulting
    to an even split of [0, 1].
    """
    if coords and isinstance(coords[0], Expr):
        coords = [coords]
    n = len(coords)
    if ranges is None:
        ranges = [(i / n, (i + 1) / n) for i in range(n)]
    segs = [
        Segment(chart_id, tuple(cs), r[0], r[1]) for cs, r in zip(coords, ranges)
    ]
    return PathSpec(tuple(segs))


def path_from_strings(chart_id, sources, ranges=None):
    """Like path_from_exprs but parsing coordinate functions of x1."""
    if sources and isinstance(sources[0], str):
        sources = [sources]
    coords = [[parse(s, 1) for s in group] for group in sources]
    return path_from_exprs(chart_id, coords, ranges)


def constant_path(x):
    """The constant path at a chart point."""
    return path_from_exprs(x.chart_id, [lit(c) for c in x.coords])


def line_path(a, b_coords, chart_id=None):
    """Straight coordinate path from point a to coordinates b."""
    if isinstance(a, ChartPoint):
        chart_id = a.chart_id if chart_id is None else chart_id
        a_coords = a.coords
    else:
        a_coords = np.asarray(a, dtype=float)
        chart_id = 0 if chart_id is None else chart_id
    b = np.asarray(b_coords, dtype=float)
    u = var(0)
    coords = [lit(ai) + lit(bi - ai) * u for ai, bi in zip(a_coords, b)]
    return path_from_exprs(chart_id, coords)


def arc_path(chart_id, center, radius, theta0, theta1):
    """Planar circular arc from angle theta0 to theta1 (2-dim charts)."""
    u = var(0)
    angle = lit(theta0) + lit(theta1 - theta0) * u
    coords = [
        lit(center[0]) + lit(radius) * exprs.cos(angle),
        lit(center[1]) + lit(radius) * exprs.sin(angle),
    ]
    return path_from_exprs(chart_id, coords)


# --- path algebra ---------------------------------------------------------------

def _rescale(segs, lo, hi):
    width = hi - lo
    return [
        Segment(s.chart_id, s.coords, lo + s.t0 * width, lo + s.t1 * width)
        for s in segs
    ]


def juxtapose(gamma1, gamma2, atlas=None):
    """Concatenate: run gamma1 over [0, 1/2], then gamma2 over [1/2, 1].

    The end of gamma1 must match the start of gamma2 within 1e-10; when the
    charts differ, ``atlas`` (any object with a ``map_point`` method, e.g. a
    ConnectionForm) supplies the transition map for the comparison.
    """
    end = path_point(gamma1, 1.0)
    start = path_point(gamma2, 0.0)
    if end.chart_id == start.chart_id:
        gap = np.max(np.abs(end.coords - start.coords))
    elif atlas is not None:
        mapped = atlas.map_point(end, start.chart_id)
        gap = np.max(np.abs(mapped.coords - start.coords))
    else:
        raise EndpointMismatchError(
            f"paths meet on different charts ({end.chart_id} vs {start.chart_id}) "
            "and no atlas was given"
        )
    if gap > _ENDPOINT_TOL:
        raise EndpointMismatchError(f"endpoints differ by {gap:.3e}")
    segs = _rescale(gamma1.segments, 0.0, 0.5) + _rescale(gamma2.segments, 0.5, 1.0)
    return PathSpec(tuple(segs))


def _check_monotone(alpha, samples=101):
    ts = np.linspace(0.0, 1.0, samples)[:, None]
    vals, grads = exprs.evaluate_dual_many(alpha, ts)
    if abs(vals[0]) > 1e-9 or abs(vals[-1] - 1.0) > 1e-9:
        raise NotMonotoneError(
            f"reparametrization must map 0 to 0 and 1 to 1, got "
            f"({vals[0]:.3e}, {vals[-1]:.6g})"
        )
    # weakly increasing: the derivative may vanish at isolated points
    # (e.g. t^2 at t = 0) but must never be negative
    if np.min(grads[:, 0]) < -1e-9:
        raise NotMonotoneError("reparametrization derivative is negative")
    if np.min(np.diff(vals)) < -1e-12:
        raise NotMonotoneError("reparametrization values are not increasing")
    return vals


def _invert_monotone(alpha, target):
    """Solve alpha(t) = target on [0, 1] by bisection."""
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if exprs.evaluate(alpha, [mid]) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


def reparametrize(gamma, alpha):
    """Precompose: result(t) = gamma(alpha(t)).

    alpha is an Expr in x1 with alpha(0) = 0, alpha(1) = 1, weakly
    increasing (checked at 101 sample points).
    """
    alpha = alpha.with_dim(1) if alpha.dim == 0 else alpha
    _check_monotone(alpha)
    u = var(0)
    new_segs = []
    # pull each old breakpoint back through alpha
    cuts = [0.0] + [_invert_monotone(alpha, b) for b in gamma.breakpoints] + [1.0]
    for seg, s0, s1 in zip(gamma.segments, cuts, cuts[1:]):
        if not s1 > s0:
            # alpha flat across this segment: it collapses to nothing
            continue
        # local u in the new segment -> global t' -> a = alpha(t') ->
        # old local parameter (a - t0) / (t1 - t0)
        t_of_u = lit(s0) + lit(s1 - s0) * u
        a_of_u = substitute(alpha, [t_of_u])
        u_old = (a_of_u - lit(seg.t0)) / lit(seg.t1 - seg.t0)
        coords = tuple(substitute(c, [u_old]) for c in seg.coords)
        new_segs.append(Segment(seg.chart_id, coords, s0, s1))
    return PathSpec(tuple(new_segs))


def reverse_path(gamma):
    """Orientation reversal: result(t) = gamma(1 - t)."""
    u = var(0)
    flipped = lit(1.0) - u
    segs = []
    for seg in reversed(gamma.segments):
        coords = tuple(substitute(c, [flipped]) for c in seg.coords)
        segs.append(Segment(seg.chart_id, coords, 1.0 - seg.t1, 1.0 - seg.t0))
    return PathSpec(tuple(segs))


def subpath(gamma, a, b):
    """Restriction of gamma to global [a, b], rescaled onto [0, 1]."""
    if not (0.0 <= a < b <= 1.0 + 1e-15):
        raise OutOfRangeError(f"invalid subrange [{a}, {b}]")
    b = min(b, 1.0)
    u = var(0)
    width = b - a
    segs = []
    for seg in gamma.segments:
        lo = max(seg.t0, a)
        hi = min(seg.t1, b)
        if hi - lo < 1e-15:
            continue
        # new local u -> global t -> old local parameter
        t_of_u = lit(lo) + lit(hi - lo) * u
        u_old = (t_of_u - lit(seg.t0)) / lit(seg.t1 - seg.t0)
        coords = tuple(substitute(c, [u_old]) for c in seg.coords)
        segs.append(Segment(seg.chart_id, coords, (lo - a) / width, (hi - a) / width))
    # snap roundoff at the ends so PathSpec's coverage check passes
    first, last = segs[0], segs[-1]
    segs[0] = Segment(first.chart_id, first.coords, 0.0, first.t1)
    segs[-1] = Segment(last.chart_id, last.coords, last.t0, 1.0)
    return PathSpec(tuple(segs))
