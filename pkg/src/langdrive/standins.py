"""Deterministic scripted stand-ins for the two model-backed stages.

These give the closed-loop workbench a reproducible "model": the decision
stand-in checks the rendered state window against the instruction (crash
state, speed bands, speed thresholds, reversing), and the adapter stand-in
maps instruction keywords to parameter maps. The remote backend swaps in
for real models without touching the pipelines.
"""

from __future__ import annotations

import re

from .gateway import ScriptedBackend, ScriptedRule

REVERSE_PARAMS_RESPONSE = (
    "new_mpc_params = { qv: 0.1, 'qn': 40, qalpha: 50, ddelta_min: -5,\n"
    "ddelta_max: 0, dv_min: -50, dv_max: -1, v_min: -1, v_max: -1, boundary_inflation: 0.1 }\n\n"
    "Explanation: The new parameters are tuned to achieve the goal of driving the track in "
    "reverse at -1.0 m/s. The minimum and maximum velocities (v_min and v_max) are set to -1 "
    "and -1, respectively, to ensure the velocity is at -1.0 m/s."
)

RECOVER_REVERSE_RESPONSE = (
    "The car is facing a crash and is reversing, which is not the normal driving behavior. "
    "The car should be facing forward and driving at a normal speed. Reversing is necessary "
    "to get the car back on the racing line and back to normal driving.\n\n"
    "Action:\nChange behavior: Reverse the car to get back on the racing line."
)

GENTLE_REVERSE_PARAMS_RESPONSE = (
    "new_mpc_params = {qv: 0.5, qn: 50.0, qalpha: 5.0, qac: 0.01, qddelta: 0.1, "
    "alat_max: 10.0, a_min: -5.0, a_max: 5.0, v_min: -2.0, v_max: -1.0, track_safety_margin: 0.45}\n\n"
    "Explanation: Setting parameters to reverse the car."
)

RESUME_PARAMS_RESPONSE = (
    "new_mpc_params = {'v_min': 1.5, 'v_max': 1.5, 'qn': 100, 'qalpha': 100, 'qac': 0.01, "
    "'qddelta': 0.1, 'alat_max': 10, 'a_min': -5, 'a_max': 5}\n\n"
    "Explanation: The parameters are tuned to smoothly resume normal driving."
)


_TASK = r"achieves the following:[^\n]*"


def default_adapter_rules() -> list[ScriptedRule]:
    """Instruction rules producing parameter maps, anchored to the task line
    so retrieved memory text cannot trigger them. First match wins, so the
    more specific matchers come first."""
    return [
        ScriptedRule(_TASK + "get back on the racing line", GENTLE_REVERSE_PARAMS_RESPONSE, is_pattern=True),
        ScriptedRule(_TASK + "resume normal driving", RESUME_PARAMS_RESPONSE, is_pattern=True),
        ScriptedRule(_TASK + r"reference velocity of 1\.25",
                     "new_mpc_params = {qv: 2, v_min: 1.25, v_max: 1.25}\n\n"
                     "Explanation: Pin the velocity box at the requested reference.",
                     is_pattern=True),
        ScriptedRule(_TASK + r"speeds between 1\.5 and 2\.0",
                     "new_mpc_params = {qv: 2, v_min: 1.5, v_max: 2.0}\n\n"
                     "Explanation: Constrain the speed window to the requested band.",
                     is_pattern=True),
        ScriptedRule(_TASK + "reverse", REVERSE_PARAMS_RESPONSE, is_pattern=True),
        ScriptedRule(_TASK + "away from the walls",
                     "new_mpc_params = {qn: 100, qalpha: 50, track_safety_margin: 0.6}\n\n"
                     "Explanation: Weight the lateral error heavily and inflate the boundary margin.",
                     is_pattern=True),
        ScriptedRule(_TASK + "jerk",
                     "new_mpc_params = {qac: 1.0, qddelta: 100, a_min: -2, a_max: 2}\n\n"
                     "Explanation: Penalize acceleration and steering changes, and narrow the "
                     "acceleration box for smoother driving.",
                     is_pattern=True),
        ScriptedRule(_TASK + "increase its s-speed",
                     "new_mpc_params = {qv: 2, v_min: 3, v_max: 7}\n\n"
                     "Explanation: Raise the speed window toward the normal range.",
                     is_pattern=True),
        ScriptedRule(_TASK + "stop",
                     "new_mpc_params = {v_min: 0, v_max: 0, a_min: -5}\n\n"
                     "Explanation: Collapse the velocity box to zero to stop the car.",
                     is_pattern=True),
    ]


def default_decision_rules() -> list[ScriptedRule]:
    """State-window rules: a crashed window requests recovery, anything else
    continues. The matcher sees the full rendered prompt."""
    return [
        ScriptedRule("- crashed: True", RECOVER_REVERSE_RESPONSE),
    ]


_WANTS = re.compile(r"The human wants to: ([^\n]*?)\.?\n")
_SPEED_ROW = re.compile(r"- s-speed: ([^\n]+)")
_BAND = re.compile(r"speeds? between (\d+(?:\.\d+)?) and (\d+(?:\.\d+)?)", re.IGNORECASE)
_FASTER = re.compile(r"faster than (\d+(?:\.\d+)?)", re.IGNORECASE)


def _change(instruction: str, reason: str) -> str:
    return f"{reason}\n\nAction: b) Change behavior\n\nInstruction: {instruction}"


class HeuristicDecisionBackend(ScriptedBackend):
    """Scripted stand-in that actually reads the rendered window: crashed
    states request recovery; speed bands and thresholds in the instruction
    are checked against the mean s-speed; adherent windows continue."""

    def __init__(self):
        super().__init__(
            rules=default_decision_rules(),
            default_response="The sampled window matches the requested behavior.\n\n"
                             "Action: a) Continue behavior",
        )

    def complete(self, request):
        prompt = request.user_text
        speed_row = _SPEED_ROW.search(prompt)
        wants = _WANTS.search(prompt)
        if "- crashed: True" not in prompt and speed_row and wants:
            instruction = wants.group(1)
            speeds = [float(v) for v in speed_row.group(1).split(",")]
            mean_speed = sum(speeds) / len(speeds)
            band = _BAND.search(instruction)
            if band:
                lo, hi = float(band.group(1)), float(band.group(2))
                if not lo <= mean_speed <= hi:
                    text = _change(
                        f"Drive at speeds between {band.group(1)} and {band.group(2)} m/s",
                        f"The mean s-speed is outside the requested {lo}-{hi} m/s band.",
                    )
                    return self._done(text)
            faster = _FASTER.search(instruction)
            if faster and mean_speed <= float(faster.group(1)):
                text = _change(
                    "The car should increase its s-speed beyond the requested threshold.",
                    "The mean s-speed is below the requested threshold.",
                )
                return self._done(text)
            if "reverse" in instruction.lower() and mean_speed >= 0:
                text = _change(
                    "Reverse the car!",
                    "The car is not reversing although the human asked for it.",
                )
                return self._done(text)
        return super().complete(request)

    def _done(self, text):
        from .gateway import GenerationStats, count_tokens

        latency = self.fixed_latency if self.fixed_latency is not None else 0.0
        return text, GenerationStats(output_tokens=count_tokens(text), wall_latency=latency)


class HeuristicAdapterBackend(ScriptedBackend):
    """Adapter stand-in with dynamic speed-band handling on top of the
    canned keyword rules."""

    def __init__(self):
        super().__init__(
            rules=default_adapter_rules(),
            default_response="new_mpc_params = {}\n\nExplanation: No change needed.",
        )

    def complete(self, request):
        task = request.user_text.split("\n", 1)[0]
        band = _BAND.search(task)
        if band:
            lo, hi = float(band.group(1)), float(band.group(2))
            text = (
                f"new_mpc_params = {{qv: 2, v_min: {lo}, v_max: {hi}}}\n\n"
                "Explanation: Constrain the speed window to the requested band."
            )
            from .gateway import GenerationStats, count_tokens

            latency = self.fixed_latency if self.fixed_latency is not None else 0.0
            return text, GenerationStats(output_tokens=count_tokens(text), wall_latency=latency)
        return super().complete(request)


def scripted_adapter_backend() -> ScriptedBackend:
    return HeuristicAdapterBackend()


def scripted_decision_backend() -> ScriptedBackend:
    return HeuristicDecisionBackend()
