"""Controller-tuning stage: renders the adaptation prompt, extracts the
proposed parameter map from free-form text, validates it against the
schema, and applies it atomically."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .gateway import ChatRequest
from .params import PARAM_SCHEMA, SCHEMA_BY_NAME, ParamSpec
from .rag import KIND_MPC, MPC_MEMORY_K

logger = logging.getLogger(__name__)

# vocabulary seen in model replies that maps onto the canonical schema
ALIASES = {
    "boundary_inflation": "track_safety_margin",
    "dv_min": "a_min",
    "dv_max": "a_max",
}
# steering-rate bounds are a fixed hardware constant, not tunable
DROPPED = ("ddelta_min", "ddelta_max")

COST_EXPRESSION = """# Cost expression with adjustable weights:
model.cost_expr_ext_cost = (
    weight_qn * n**2 +
    weight_qalpha * alpha**2 +
    weight_qv * (v - V_target)**2 +
    weight_qac * der_v**2 +
    weight_ddelta * derDelta**2 +
    u.T @ R @ u
)"""


class ParamParseError(Exception):
    """No parameter assignment found, or the braces never balance."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class ParamUpdate:
    raw: dict[str, float]
    accepted: dict[str, float]
    warnings: list[str] = field(default_factory=list)
    rejected: list[str] = field(default_factory=list)


def _format_bound(value: float) -> str:
    return f"{value:g}"


def base_memory(schema: tuple[ParamSpec, ...] = PARAM_SCHEMA) -> str:
    """The controller description handed to the model: cost expression plus
    the tunable-parameter table, generated from the schema so the two can
    never drift apart."""
    lines = [
        COST_EXPRESSION,
        "",
        "# Tuneable cost weights and constraints (USE EXACT NAMES, DO NOT CREATE NEW ONES!):",
        "# param: min, max, default # description",
    ]
    for spec in schema:
        lines.append(
            f"{spec.name} {_format_bound(spec.min)}, {_format_bound(spec.max)}, "
            f"{_format_bound(spec.default)} # {spec.description}"
        )
    return "\n".join(lines)


def build_adapter_prompt(instruction: str, memory_text: str, memories: list[str]) -> str:
    if not instruction:
        raise ValueError("instruction must be non-empty")
    lines = [
        f"Adapt the tuneable parameters of the MPC so that the car achieves the following: {instruction}.",
        "This is the MPC formulation:",
        memory_text,
    ]
    if memories:
        lines.append("Make use of these memories:")
        lines.extend(memories)
    lines.append("Return format:")
    lines.append("new_mpc_params = {param1: new_value1, param2: new_value2, ...}")
    return "\n".join(lines)


_ASSIGNMENT = re.compile(r"new_mpc_params\s*=", re.IGNORECASE)
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def parse_params(response: str) -> dict[str, float]:
    """Extract the last ``new_mpc_params = {...}`` map from free-form text.

    Tolerates unquoted/quoted keys, integers, decimals, negatives, trailing
    commas, and surrounding prose. Non-numeric values are skipped with a
    logged warning.
    """
    matches = list(_ASSIGNMENT.finditer(response))
    if not matches:
        raise ParamParseError("no new_mpc_params assignment found", raw=response)
    tail = response[matches[-1].end():]
    open_idx = tail.find("{")
    if open_idx < 0:
        raise ParamParseError("assignment without an opening brace", raw=response)
    depth = 0
    close_idx = None
    for i, char in enumerate(tail[open_idx:], start=open_idx):
        if char == "{":
            depth += 1
        elif char == "}":
            depth -= 1
            if depth == 0:
                close_idx = i
                break
    if close_idx is None:
        raise ParamParseError("unbalanced braces in parameter map", raw=response)
    body = tail[open_idx + 1:close_idx]

    values: dict[str, float] = {}
    for item in body.split(","):
        item = item.strip()
        if not item:
            continue  # trailing comma
        if ":" in item:
            key, _, value_text = item.partition(":")
        elif "=" in item:
            key, _, value_text = item.partition("=")
        else:
            logger.warning("skipping malformed parameter item %r", item)
            continue
        key = key.strip().strip("'\"` ")
        value_text = value_text.strip().strip("'\"` ")
        if not key:
            continue
        if not _NUMBER.match(value_text):
            logger.warning("skipping non-numeric value for %r: %r", key, value_text)
            continue
        values[key] = float(value_text)
    return values


def validate_and_clamp(raw: dict[str, float], schema=PARAM_SCHEMA) -> ParamUpdate:
    """Alias translation, canonical-name check, range clamping, and
    cross-field repair. Everything degrades to warnings; an empty accepted
    set is legal."""
    by_name = SCHEMA_BY_NAME if schema is PARAM_SCHEMA else {spec.name: spec for spec in schema}
    accepted: dict[str, float] = {}
    warnings: list[str] = []
    rejected: list[str] = []
    for key, value in raw.items():
        name = key
        if name in DROPPED:
            warnings.append(f"{name} dropped: steering-rate bound is a fixed hardware constant")
            rejected.append(name)
            continue
        if name in ALIASES:
            warnings.append(f"{name} translated to {ALIASES[name]}")
            name = ALIASES[name]
        spec = by_name.get(name)
        if spec is None:
            warnings.append(f"unknown parameter {key!r} rejected")
            rejected.append(key)
            continue
        clamped = min(max(float(value), spec.min), spec.max)
        if clamped != value:
            warnings.append(f"{name} clamped from {value:g} to {clamped:g}")
        accepted[name] = clamped
    if "v_min" in accepted and "v_max" in accepted and accepted["v_min"] > accepted["v_max"]:
        warnings.append(
            f"v_min {accepted['v_min']:g} > v_max {accepted['v_max']:g}; set v_min = v_max"
        )
        accepted["v_min"] = accepted["v_max"]
    return ParamUpdate(raw=dict(raw), accepted=accepted, warnings=warnings, rejected=rejected)


@dataclass(frozen=True)
class AdapterConfig:
    memory_k: int = MPC_MEMORY_K
    use_rag: bool = True
    max_tokens: int = 512


class MpcAdapter:
    """Full adaptation cycle: retrieve, prompt, complete, parse, clamp,
    apply. Gateway or parse failures leave the store untouched."""

    def __init__(self, gateway, param_store, store=None, config: AdapterConfig = AdapterConfig()):
        self.gateway = gateway
        self.param_store = param_store
        self.store = store
        self.config = config

    def memories_for(self, instruction: str) -> list[str]:
        if not self.config.use_rag or self.store is None:
            return []
        entries = self.store.retrieve(instruction, KIND_MPC, self.config.memory_k)
        return [entry.text for entry in entries]

    def adapt(self, instruction: str) -> ParamUpdate:
        memories = self.memories_for(instruction)
        prompt = build_adapter_prompt(instruction, base_memory(), memories)
        try:
            text, _stats = self.gateway.complete(
                ChatRequest(user_text=prompt, max_tokens=self.config.max_tokens)
            )
            raw = parse_params(text)
        except Exception as exc:  # noqa: BLE001 - cycle degrades to a no-op
            logger.warning("adaptation cycle failed, parameters unchanged: %s", exc)
            return ParamUpdate(raw={}, accepted={}, warnings=[f"cycle failed: {exc}"], rejected=[])
        update = validate_and_clamp(raw)
        self.param_store.apply(update.accepted, source="adapter", warnings=update.warnings)
        return update
