"""Desk-scale reproduction of the two evaluations: decision accuracy over a
labeled state dataset, and one closed-loop adaptability scenario.

Run: python3 demos/05_evaluation.py   (the scenario takes ~half a minute)
"""

from langdrive.evaluation import (
    eval_decision_accuracy,
    gen_state_dataset,
    run_control_scenario,
    scenario_by_id,
)
from langdrive.gateway import ScriptedBackend
from langdrive.orchestrator import bundled_track_path
from langdrive.track import load_track

track = load_track(bundled_track_path())

print("generating a labeled dataset of 64 sampled state windows...")
dataset = gen_state_dataset(track, n=64, seed=0)

print("\noracle-backed pipeline (sanity: must be exact):")
print(eval_decision_accuracy(dataset, oracle=True).to_text())

print("\nalways-continue baseline (equals the adherent-label base rate):")
always = ScriptedBackend(default_response="a) Continue behavior")
print(eval_decision_accuracy(dataset, gateway=always, model_tag="always-cont").to_text())

print("\nreversing adaptability scenario (baseline vs adapted)...")
result = run_control_scenario(scenario_by_id("reversing"), track, duration=20.0)
print(f"  baseline E_R: {result.baseline_error:.3f} m/s")
print(f"  adapted  E_R: {result.adapted_error:.3f} m/s")
print(f"  improvement:  {result.improvement_pct:.1f}%")
print(f"  mean adapted speed: {result.mean_adapted_v:.2f} m/s (target -1.0)")
