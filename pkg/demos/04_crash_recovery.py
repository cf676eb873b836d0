"""The three-phase crash recovery, driven by a recorded transcript: the car
starts wedged against the wall, the decision stage orders a reversal, a
later cycle keeps reversing, and once clear the parameters flip back to
forward driving.

Run: python3 demos/04_crash_recovery.py
"""

from pathlib import Path

import numpy as np

from langdrive.orchestrator import Orchestrator, RunConfig

TRANSCRIPT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "crash_recovery_transcript.jsonl"

config = RunConfig(
    duration=20.0,
    backend={"kind": "replay", "transcript": str(TRANSCRIPT)},
    prompts=[{"t": 0.0, "text": "Drive normally!"}],
    initial={"s": 2.0, "n": -1.3, "delta_phi": -0.6, "v": 0.0},
    crashed_start=True,
)
orchestrator = Orchestrator(config)
orchestrator.run()

t = orchestrator.sim.log.column("t")
v = orchestrator.sim.log.column("v")
crashed = orchestrator.sim.log.column("crashed")
d_right = orchestrator.sim.log.column("dright")

for mark in np.arange(0.0, 20.0, 2.0):
    i = int(np.searchsorted(t, mark))
    i = min(i, len(t) - 1)
    print(f"t={t[i]:5.2f}  v={v[i]:+.2f} m/s  right-wall clearance={d_right[i]:.3f} m  "
          f"crashed={bool(crashed[i])}")

cleared = np.where(crashed < 0.5)[0]
resumed = np.where(v >= 1.4)[0]
print(f"\ncrash latch cleared at t={t[cleared[0]]:.2f} s")
print(f"forward driving (v >= 1.4) resumed at t={t[resumed[0]]:.2f} s")
