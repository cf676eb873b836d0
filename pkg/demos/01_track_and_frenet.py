"""Tour of the track geometry: loading, curvature, and Frenet conversions.

Run: python3 demos/01_track_and_frenet.py
"""

import numpy as np

from langdrive.orchestrator import bundled_track_path
from langdrive.track import (
    FrenetPose,
    cartesian_to_frenet,
    curvature_at,
    frenet_to_cartesian,
    load_track,
    wall_distances,
)

track = load_track(bundled_track_path())
print(f"loaded stadium oval: {len(track.xy)} centerline points, "
      f"total length {track.total_length:.3f} m, closed={track.closed}")

# curvature along one lap: zero on the straights, 1/2.2 in the corners
s_grid = np.linspace(0, track.total_length, 9, endpoint=False)
print("\ncurvature samples (1/m):")
for s in s_grid:
    print(f"  s={s:6.2f}  kappa={float(curvature_at(track, s)):+.4f}")

# a pose 0.4 m left of the centerline, nose 0.1 rad off the tangent
pose = FrenetPose(s=5.0, n=0.4, delta_phi=0.1)
x, y, heading = frenet_to_cartesian(track, pose)
print(f"\nfrenet ({pose.s}, {pose.n}, {pose.delta_phi}) -> cartesian "
      f"({x:.3f}, {y:.3f}, heading {heading:.3f})")

back = cartesian_to_frenet(track, x, y, heading)
print(f"round trip -> (s={back.s:.6f}, n={back.n:.6f}, dphi={back.delta_phi:.6f})")

d_left, d_right = wall_distances(track, pose.s, pose.n)
print(f"wall clearances at that pose: left {float(d_left):.2f} m, right {float(d_right):.2f} m")
