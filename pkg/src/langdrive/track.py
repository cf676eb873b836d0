"""Track geometry: centerline, widths, curvature, and Frenet conversions.

The centerline is stored piecewise-linear with arc-length parameterization.
Curvature comes from a three-point circumcircle estimate at each node
(window configurable) and is interpolated linearly in arc length, so it is
continuous in ``s``. The lateral offset ``n`` is positive toward the left
wall.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


class TrackLoadError(Exception):
    """Track file missing, malformed, or violating track invariants."""


class OutsideTubeError(Exception):
    """Pose outside the locally invertible tube around the centerline."""


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    return -((-np.asarray(angle) + math.pi) % TWO_PI - math.pi)


@dataclass(frozen=True)
class FrenetPose:
    """Track-relative pose: arc position, lateral offset, heading error."""

    s: float
    n: float
    delta_phi: float = 0.0


@dataclass(frozen=True)
class TrackSpec:
    """Immutable track: centerline nodes, per-node widths, derived geometry.

    Derived arrays are computed once by :func:`make_track`; instances are
    safe to share between any number of readers.
    """

    xy: np.ndarray            # (M, 2) centerline nodes
    width_left: np.ndarray    # (M,)
    width_right: np.ndarray   # (M,)
    closed: bool
    total_length: float
    # derived, one entry per segment (M segments if closed, M-1 if open)
    seg_start: np.ndarray = field(repr=False)    # (K,) arc length at segment start
    seg_len: np.ndarray = field(repr=False)      # (K,)
    seg_tangent: np.ndarray = field(repr=False)  # (K, 2) unit tangents
    seg_normal: np.ndarray = field(repr=False)   # (K, 2) left normals
    seg_heading: np.ndarray = field(repr=False)  # (K,)
    # node-parameterized profiles on the extended grid (last point wraps)
    s_prof: np.ndarray = field(repr=False)       # (M+1,) or (M,)
    curv_prof: np.ndarray = field(repr=False)
    wl_prof: np.ndarray = field(repr=False)
    wr_prof: np.ndarray = field(repr=False)

    def wrap_s(self, s):
        if self.closed:
            return np.asarray(s) % self.total_length
        return np.clip(s, 0.0, self.total_length)

    def segment_index(self, s):
        s = self.wrap_s(s)
        idx = np.searchsorted(self.seg_start, s, side="right") - 1
        return np.clip(idx, 0, len(self.seg_start) - 1)


def _node_curvature(xy: np.ndarray, closed: bool, window: int) -> np.ndarray:
    """Signed circumcircle curvature at each node (positive = turning left)."""
    m = len(xy)
    idx = np.arange(m)
    if closed:
        ia = (idx - window) % m
        ic = (idx + window) % m
    else:
        ia = np.clip(idx - window, 0, m - 1)
        ic = np.clip(idx + window, 0, m - 1)
        # endpoints fall back to one-sided triples
        ia[0], ic[0] = 0, min(2 * window, m - 1)
        ia[-1], ic[-1] = max(m - 1 - 2 * window, 0), m - 1
        idx = np.clip(idx, ia + 0, ic - 0)
    a, b, c = xy[ia], xy[idx], xy[ic]
    ab = b - a
    bc = c - b
    ca = c - a
    cross = ab[:, 0] * bc[:, 1] - ab[:, 1] * bc[:, 0]
    denom = (
        np.linalg.norm(ab, axis=1)
        * np.linalg.norm(bc, axis=1)
        * np.linalg.norm(ca, axis=1)
    )
    kappa = np.zeros(m)
    ok = denom > 1e-12
    kappa[ok] = 2.0 * cross[ok] / denom[ok]
    return kappa


def make_track(
    xs,
    ys,
    width_left,
    width_right,
    closed: bool = True,
    curvature_window: int = 1,
) -> TrackSpec:
    """Build a TrackSpec from raw centerline arrays.

    Raises TrackLoadError if there are fewer than three points, consecutive
    points coincide, or any width is non-positive.
    """
    xy = np.column_stack([np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)])
    wl = np.asarray(width_left, dtype=float)
    wr = np.asarray(width_right, dtype=float)
    if len(xy) >= 2 and np.hypot(*(xy[-1] - xy[0])) < 1e-12:
        # drop a duplicated closing point; closure is implied by `closed`
        xy, wl, wr = xy[:-1], wl[:-1], wr[:-1]
    m = len(xy)
    if m < 3:
        raise TrackLoadError(f"need at least 3 centerline points, got {m}")
    if np.any(wl <= 0) or np.any(wr <= 0):
        row = int(np.argmax((wl <= 0) | (wr <= 0))) + 1
        raise TrackLoadError(f"non-positive track width at row {row}")

    if closed:
        nxt = np.roll(xy, -1, axis=0)
    else:
        nxt = xy[1:]
    diffs = nxt - (xy if closed else xy[:-1])
    seg_len = np.hypot(diffs[:, 0], diffs[:, 1])
    if np.any(seg_len < 1e-12):
        row = int(np.argmax(seg_len < 1e-12)) + 1
        raise TrackLoadError(f"coincident consecutive centerline points at row {row}")
    seg_tangent = diffs / seg_len[:, None]
    seg_normal = np.column_stack([-seg_tangent[:, 1], seg_tangent[:, 0]])
    seg_heading = np.arctan2(seg_tangent[:, 1], seg_tangent[:, 0])
    seg_start = np.concatenate([[0.0], np.cumsum(seg_len)])[:-1]
    total_length = float(np.sum(seg_len))

    kappa = _node_curvature(xy, closed, max(1, curvature_window))
    s_nodes = np.concatenate([[0.0], np.cumsum(seg_len)])[: m if not closed else m]
    if closed:
        s_prof = np.concatenate([s_nodes, [total_length]])
        curv_prof = np.concatenate([kappa, [kappa[0]]])
        wl_prof = np.concatenate([wl, [wl[0]]])
        wr_prof = np.concatenate([wr, [wr[0]]])
    else:
        s_prof = np.concatenate([[0.0], np.cumsum(seg_len)])
        curv_prof = kappa
        wl_prof = wl
        wr_prof = wr

    return TrackSpec(
        xy=xy,
        width_left=wl,
        width_right=wr,
        closed=closed,
        total_length=total_length,
        seg_start=seg_start,
        seg_len=seg_len,
        seg_tangent=seg_tangent,
        seg_normal=seg_normal,
        seg_heading=seg_heading,
        s_prof=s_prof,
        curv_prof=curv_prof,
        wl_prof=wl_prof,
        wr_prof=wr_prof,
    )


TRACK_CSV_HEADER = ("x_m", "y_m", "w_tr_left_m", "w_tr_right_m")


def load_track(source, closed: bool = True, curvature_window: int = 1) -> TrackSpec:
    """Load a track from CSV.

    Expected header ``x_m,y_m,w_tr_left_m,w_tr_right_m``, one row per
    centerline point, ``#`` comment lines ignored.
    """
    path = Path(source)
    if not path.exists():
        raise TrackLoadError(f"track file not found: {path}")
    xs, ys, wls, wrs = [], [], [], []
    with path.open(newline="", encoding="utf-8") as handle:
        rows = [r for r in csv.reader(handle) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise TrackLoadError(f"{path}: empty track file")
    header = tuple(c.strip() for c in rows[0])
    if header != TRACK_CSV_HEADER:
        raise TrackLoadError(
            f"{path}: expected header {','.join(TRACK_CSV_HEADER)}, got {','.join(header)}"
        )
    for i, row in enumerate(rows[1:], start=1):
        try:
            x, y, wl, wr = (float(v) for v in row)
        except (ValueError, TypeError) as exc:
            raise TrackLoadError(f"{path}: malformed row {i}: {row!r}") from exc
        if wl <= 0 or wr <= 0:
            raise TrackLoadError(f"{path}: non-positive width at row {i}")
        xs.append(x)
        ys.append(y)
        wls.append(wl)
        wrs.append(wr)
    try:
        return make_track(xs, ys, wls, wrs, closed=closed, curvature_window=curvature_window)
    except TrackLoadError as exc:
        raise TrackLoadError(f"{path}: {exc}") from exc


def curvature_at(track: TrackSpec, s):
    """Signed centerline curvature at arc position(s) ``s`` (1/m)."""
    s = track.wrap_s(s)
    return np.interp(s, track.s_prof, track.curv_prof)


def curvature_slope_at(track: TrackSpec, s):
    """Piecewise-constant derivative of the interpolated curvature profile."""
    s = track.wrap_s(s)
    idx = np.clip(np.searchsorted(track.s_prof, s, side="right") - 1, 0, len(track.s_prof) - 2)
    ds = track.s_prof[idx + 1] - track.s_prof[idx]
    return (track.curv_prof[idx + 1] - track.curv_prof[idx]) / ds


def halfwidths_at(track: TrackSpec, s):
    """Interpolated (width_left, width_right) at arc position(s) ``s``."""
    s = track.wrap_s(s)
    return (
        np.interp(s, track.s_prof, track.wl_prof),
        np.interp(s, track.s_prof, track.wr_prof),
    )


def wall_distances(track: TrackSpec, s, n):
    """Distances to the left/right wall; negative means penetration."""
    wl, wr = halfwidths_at(track, s)
    return wl - n, wr + n


def _check_tube(track: TrackSpec, s: float, n: float) -> None:
    kappa = float(curvature_at(track, s))
    if kappa != 0.0 and abs(n) * abs(kappa) >= 1.0:
        raise OutsideTubeError(
            f"pose outside tube: |n|={abs(n):.3f} >= 1/|kappa|={1.0 / abs(kappa):.3f} at s={s:.3f}"
        )


def frenet_to_cartesian(track: TrackSpec, pose: FrenetPose) -> tuple[float, float, float]:
    """Map a Frenet pose to (x, y, heading)."""
    s = float(track.wrap_s(pose.s))
    _check_tube(track, s, pose.n)
    k = int(track.segment_index(s))
    base = track.xy[k] + (s - track.seg_start[k]) * track.seg_tangent[k]
    point = base + pose.n * track.seg_normal[k]
    heading = float(wrap_angle(track.seg_heading[k] + pose.delta_phi))
    return float(point[0]), float(point[1]), heading


def cartesian_to_frenet(track: TrackSpec, x: float, y: float, heading: float = 0.0) -> FrenetPose:
    """Project a Cartesian pose onto the track (nearest-arc projection).

    Equidistant candidates resolve to the smaller ``s``. Raises
    OutsideTubeError when the projection offset exceeds the local
    curvature radius.
    """
    p = np.array([x, y])
    rel = p - (track.xy if track.closed else track.xy[:-1])
    along = np.einsum("ij,ij->i", rel, track.seg_tangent)
    along = np.clip(along, 0.0, track.seg_len)
    feet = (track.xy if track.closed else track.xy[:-1]) + along[:, None] * track.seg_tangent
    d2 = np.sum((p - feet) ** 2, axis=1)
    k = int(np.argmin(d2))  # ties resolve to the first segment, i.e. smaller s
    s = float(track.seg_start[k] + along[k])
    n = float(np.dot(p - feet[k], track.seg_normal[k]))
    _check_tube(track, s, n)
    dphi = float(wrap_angle(heading - track.seg_heading[k]))
    s = float(track.wrap_s(s))
    return FrenetPose(s=s, n=n, delta_phi=dphi)
