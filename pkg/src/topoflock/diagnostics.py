"""Flocking observables along a trajectory.

The maximal speed omega(t) is nonincreasing along every solution, connected
or not; the convex hull of the velocities never expands; and the positions
obey max|x_i(t)| <= max|x_i(0)| + omega(0) t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .dynamics import Trajectory


@dataclass(frozen=True)
class DiagnosticsSeries:
    times: np.ndarray
    omega: np.ndarray
    argmax_index: np.ndarray
    vel_diameter: np.ndarray
    pos_fluctuation: np.ndarray
    momentum: np.ndarray  # (K, d)
    max_position: np.ndarray


@dataclass(frozen=True)
class FlockingVerdict:
    flocked: bool
    t_flock: float | None
    v_consensus: np.ndarray | None


@dataclass(frozen=True)
class CheckReport:
    ok: bool
    worst: float  # largest violation found (<= 0 when ok)
    index: int | None = None  # first failing sample

    def __bool__(self) -> bool:
        return self.ok


def _diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    return float(pdist(points).max())


def compute_series(trajectory: Trajectory) -> DiagnosticsSeries:
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    x, v = trajectory.positions, trajectory.velocities
    speed = np.linalg.norm(v, axis=2)
    centre = x.mean(axis=1, keepdims=True)
    return DiagnosticsSeries(
        times=np.asarray(trajectory.times),
        omega=speed.max(axis=1),
        argmax_index=speed.argmax(axis=1),  # first index on ties
        vel_diameter=np.array([_diameter(vk) for vk in v]),
        pos_fluctuation=((x - centre) ** 2).sum(axis=(1, 2)),
        momentum=v.mean(axis=1),
        max_position=np.linalg.norm(x, axis=2).max(axis=1),
    )


def check_flocking(series: DiagnosticsSeries, tol: float = 1e-6, dwell: float = 1.0,
                   velocities: np.ndarray | None = None) -> FlockingVerdict:
    """Flocked if the velocity diameter stays below ``tol`` from some sample on.

    The tail below ``tol`` must last ``dwell`` time units, or the whole run if
    that is shorter.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    above = np.flatnonzero(series.vel_diameter >= tol)
    start = 0 if above.size == 0 else above[-1] + 1
    t = series.times
    if start >= len(t):
        return FlockingVerdict(False, None, None)
    needed = min(dwell, t[-1] - t[0])
    if t[-1] - t[start] < needed:
        return FlockingVerdict(False, None, None)
    return FlockingVerdict(True, float(t[start]), series.momentum[-1].copy())


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull vertices (monotone chain); collinear points dropped."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def _segment_distance(p, a, b) -> float:
    ab = b - a
    denom = ab @ ab
    s = 0.0 if denom == 0 else np.clip((p - a) @ ab / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + s * ab)))


def distance_to_hull_2d(point, hull: np.ndarray) -> float:
    """Euclidean distance from ``point`` to a convex polygon (0 inside)."""
    p = np.asarray(point, dtype=float)
    if len(hull) == 1:
        return float(np.linalg.norm(p - hull[0]))
    if len(hull) == 2:
        return _segment_distance(p, hull[0], hull[1])
    nxt = np.roll(hull, -1, axis=0)
    edge = nxt - hull
    rel = p - hull
    cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
    if np.all(cross >= 0):
        return 0.0
    return min(_segment_distance(p, a, b) for a, b in zip(hull, nxt))


def check_hull_contraction(trajectory: Trajectory, dilation: float = 1e-8,
                           atol: float = 1e-12, diam_tol: float = 1e-10) -> CheckReport:
    """Velocity hull nonexpansion between consecutive samples.

    In 2-D each velocity set must lie in the previous hull dilated about its
    centroid by ``1 + dilation`` (plus ``atol`` for degenerate hulls). In other
    dimensions the velocity diameter must not grow by more than ``diam_tol``.
    """
    v = trajectory.velocities
    worst, first = -np.inf, None
    if trajectory.dim == 2:
        for k in range(1, len(v)):
            hull = convex_hull_2d(v[k - 1])
            c = hull.mean(axis=0)
            hull = c + (1.0 + dilation) * (hull - c)
            d = max(distance_to_hull_2d(p, hull) for p in v[k])
            worst = max(worst, d - atol)
            if d > atol and first is None:
                first = k
    else:
        diam = np.array([_diameter(vk) for vk in v])
        growth = np.diff(diam) - diam_tol
        if growth.size:
            worst = float(growth.max())
            bad = np.flatnonzero(growth > 0)
            first = int(bad[0]) + 1 if bad.size else None
    return CheckReport(first is None, float(worst), first)


def check_position_bound(trajectory: Trajectory, slack: float = 1e-9) -> bool:
    """max_i |x_i(t)| <= max_i |x_i(0)| + omega(0) t at every sample."""
    s = compute_series(trajectory)
    bound = s.max_position[0] + s.omega[0] * s.times + slack
    return bool(np.all(s.max_position <= bound))


def omega_monotone(series: DiagnosticsSeries, tol: float = 1e-12) -> CheckReport:
    growth = np.diff(series.omega) - tol
    if growth.size == 0:
        return CheckReport(True, -tol, None)
    bad = np.flatnonzero(growth > 0)
    return CheckReport(bad.size == 0, float(growth.max()), int(bad[0]) + 1 if bad.size else None)


def momentum_drift(trajectory: Trajectory) -> float:
    """max_t |V(t) - V(0)| for the mean velocity V."""
    m = trajectory.velocities.mean(axis=1)
    return float(np.linalg.norm(m - m[0], axis=1).max())


def in_convex_hull(point, points, tol: float = 1e-9) -> bool:
    """Hull membership in 1-D and 2-D; componentwise bracketing otherwise."""
    p = np.atleast_1d(np.asarray(point, dtype=float))
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] == 2:
        return distance_to_hull_2d(p, convex_hull_2d(pts)) <= tol
    return bool(np.all(p >= pts.min(axis=0) - tol) and np.all(p <= pts.max(axis=0) + tol))


def decay_rate(times, values, floor: float = 1e-14) -> float:
    """Least-squares slope of log(values) against time, ignoring values below ``floor``."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = y > floor
    if keep.sum() < 2:
        return -np.inf
    return float(np.polyfit(t[keep], np.log(y[keep]), 1)[0])
