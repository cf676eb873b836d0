"""A lap with the box-QP controller on default parameters, then the same
lap with a pinched velocity box to show how the bounds rule the behavior.

Run: python3 demos/02_closed_loop_mpc.py
"""

import numpy as np

from langdrive.mpc import MpcController
from langdrive.orchestrator import bundled_track_path
from langdrive.params import MpcParams
from langdrive.sim import SIM_DT, ControlInput, FrenetPose, Simulator, VehicleState
from langdrive.track import load_track


def lap(track, params, seconds=12.0):
    sim = Simulator(track, VehicleState(pose=FrenetPose(s=0.0, n=0.0), v=1.0))
    controller = MpcController(track)
    for _ in range(int(seconds / SIM_DT)):
        solution = controller.step(sim.state, params)
        sim.advance(ControlInput(
            d_delta=solution.first_input.d_delta * SIM_DT / controller.horizon.dt,
            a=solution.first_input.a,
        ))
    v = sim.log.column("v")
    n = sim.log.column("n")
    t = sim.log.column("t")
    settled = t >= 4.0
    return {
        "mean v": float(np.mean(v[settled])),
        "rms |n|": float(np.sqrt(np.mean(n[settled] ** 2))),
        "crashed": sim.crash.crashed,
    }


track = load_track(bundled_track_path())

print("default parameters (speed window [1, 5] m/s):")
for key, value in lap(track, MpcParams.defaults()).items():
    print(f"  {key}: {value}")

print("\npinched velocity box v_min = v_max = 2.0 (the cost wants 5, the box wins):")
for key, value in lap(track, MpcParams(v_min=2.0, v_max=2.0)).items():
    print(f"  {key}: {value}")

print("\nheavy lateral weight qn = 100 hugs the centerline harder:")
for key, value in lap(track, MpcParams(qn=100.0)).items():
    print(f"  {key}: {value}")
