"""Steer the car with natural language through the two model-backed stages,
using the deterministic scripted stand-ins.

Run: python3 demos/03_language_steering.py
"""

import numpy as np

from langdrive.orchestrator import Orchestrator, RunConfig

config = RunConfig(
    duration=16.0,
    prompts=[
        {"t": 0.0, "text": "Drive at speeds between 1.5 and 2.0 m/s"},
        {"t": 8.0, "text": "Reverse the car!"},
    ],
)
orchestrator = Orchestrator(config)
artifacts = orchestrator.run()

print("decision cycles:")
for entry in artifacts.decisions:
    outcome = entry["outcome"]
    line = f"  t={entry['t']:5.2f}  {entry['human_prompt']!r} -> {outcome['action']}"
    if outcome.get("instruction"):
        line += f" ({outcome['instruction']})"
    print(line)

print("\nparameter updates (journal):")
for entry in artifacts.journal:
    print(f"  t={entry['t']:5.2f}  source={entry['source']}  update={entry['update']}")

v = orchestrator.sim.log.column("v")
t = orchestrator.sim.log.column("t")
band = (t >= 5.0) & (t <= 8.0)
print(f"\nmean speed in the requested band window: {float(np.mean(v[band])):.2f} m/s")
print(f"final speed after the reversing request: {float(v[-1]):.2f} m/s")
