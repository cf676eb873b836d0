"""Behavior monitor: renders the adherence prompt from a state window,
parses the continue-vs-change reply, and runs the full decision cycle."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum

from .gateway import ChatRequest
from .rag import DECISION_HINT_K, KIND_DECISION
from .sim import StateSnapshot, sample_window


class DecisionParseError(Exception):
    """Response carried no recognizable action marker."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class DecisionAction(Enum):
    CONTINUE = "continue"
    CHANGE = "change"


@dataclass(frozen=True)
class DecisionOutcome:
    action: DecisionAction
    instruction: str | None
    rationale: str

    def __post_init__(self):
        if self.action is DecisionAction.CHANGE and not self.instruction:
            raise ValueError("change outcome requires an instruction")


def render_number(value: float) -> str:
    """At most three decimals, trailing zeros trimmed."""
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def build_decision_prompt(human_prompt: str, snapshot: StateSnapshot, hints: list[str]) -> str:
    """Deterministic adherence prompt over the sampled state window."""
    rows = {
        "s-coordinate": [sample.s for sample in snapshot.samples],
        "d-coordinate": [sample.d for sample in snapshot.samples],
        "s-speed": [sample.s_speed for sample in snapshot.samples],
        "d-speed": [sample.d_speed for sample in snapshot.samples],
        "distance to left wall": [sample.dist_left for sample in snapshot.samples],
        "distance to right wall": [sample.dist_right for sample in snapshot.samples],
    }
    lines = [
        f"The human wants to: {human_prompt}.",
        f"The data has been sampled for {snapshot.duration:.1f} seconds in {len(snapshot.samples)} samples.",
    ]
    for label, values in rows.items():
        lines.append(f"- {label}: " + ", ".join(render_number(value) for value in values))
    lines.append(f"- crashed: {snapshot.crashed}")
    if hints:
        lines.append("Here are some guides to help you reason:")
        lines.extend(hints)
    lines.append("Check if the car is doing what the human wants. Choose one of the following actions to command the car:")
    lines.append("a) Continue behavior")
    lines.append("b) Change behavior: instruction")
    return "\n".join(lines)


_CONTINUE = "continue behavior"
_CHANGE = "change behavior"
_INSTRUCTION = "instruction:"


def parse_decision(response: str) -> DecisionOutcome:
    """Scan for the last action marker; for a change, the instruction is the
    text after the change marker or an explicit instruction label, whichever
    appears later and is non-empty."""
    cleaned = re.sub(r"[*`]", "", response)
    lowered = cleaned.lower()
    idx_continue = lowered.rfind(_CONTINUE)
    idx_change = lowered.rfind(_CHANGE)
    if idx_continue < 0 and idx_change < 0:
        raise DecisionParseError("no action marker found", raw=response)
    if idx_continue > idx_change:
        return DecisionOutcome(DecisionAction.CONTINUE, None, response)

    candidates = []
    after_marker = cleaned[idx_change + len(_CHANGE):].lstrip(" \t:").strip()
    if after_marker:
        candidates.append((idx_change, after_marker))
    idx_label = lowered.rfind(_INSTRUCTION)
    if idx_label >= 0:
        after_label = cleaned[idx_label + len(_INSTRUCTION):].strip()
        if after_label:
            candidates.append((idx_label, after_label))
    if not candidates:
        raise DecisionParseError("change marker without an instruction", raw=response)
    _, instruction = max(candidates, key=lambda item: item[0])
    # keep the first paragraph only; later prose belongs to the rationale
    instruction = instruction.split("\n\n")[0].strip()
    return DecisionOutcome(DecisionAction.CHANGE, instruction, response)


@dataclass(frozen=True)
class DecisionConfig:
    window_s: float = 2.0
    samples: int = 5
    hint_k: int = DECISION_HINT_K
    use_rag: bool = True
    max_tokens: int = 512


class DecisionEngine:
    """Builds prompts, queries the gateway, parses outcomes, and logs."""

    def __init__(self, gateway, store=None, config: DecisionConfig = DecisionConfig(),
                 log_path=None, clock=None):
        self.gateway = gateway
        self.store = store
        self.config = config
        self.log_path = log_path
        self.clock = clock
        self.log: list[dict] = []

    def hints_for(self, human_prompt: str) -> list[str]:
        if not self.config.use_rag or self.store is None:
            return []
        entries = self.store.retrieve(human_prompt, KIND_DECISION, self.config.hint_k)
        return [entry.text for entry in entries]

    def decide_snapshot(self, human_prompt: str, snapshot: StateSnapshot,
                        adapter=None) -> DecisionOutcome:
        hints = self.hints_for(human_prompt)
        prompt = build_decision_prompt(human_prompt, snapshot, hints)
        text, _stats = self.gateway.complete(
            ChatRequest(user_text=prompt, max_tokens=self.config.max_tokens)
        )
        outcome = parse_decision(text)
        self._log(human_prompt, snapshot, hints, text, outcome)
        if outcome.action is DecisionAction.CHANGE and adapter is not None:
            adapter.adapt(outcome.instruction)
        return outcome

    def decide(self, human_prompt: str, history, track=None, adapter=None) -> DecisionOutcome:
        snapshot = sample_window(history, self.config.window_s, self.config.samples, track)
        return self.decide_snapshot(human_prompt, snapshot, adapter=adapter)

    def _log(self, human_prompt, snapshot, hints, response, outcome) -> None:
        entry = {
            "t": self.clock() if self.clock else None,
            "human_prompt": human_prompt,
            "snapshot": {
                "duration": snapshot.duration,
                "crashed": snapshot.crashed,
                "samples": [vars(sample) for sample in snapshot.samples],
            },
            "hints_used": hints,
            "response": response,
            "outcome": {
                "action": outcome.action.value,
                "instruction": outcome.instruction,
            },
        }
        self.log.append(entry)
        if self.log_path is not None:
            with open(self.log_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(entry) + "\n")
