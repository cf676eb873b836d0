"""Tunable controller parameters: schema, value set, and the atomic store.

The schema is the single source of truth for parameter names, ranges,
defaults, and descriptions. The store supports one writer and many readers
with atomic full-set swaps; every apply is journaled.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, fields


@dataclass(frozen=True)
class ParamSpec:
    name: str
    min: float
    max: float
    default: float
    description: str


# Note: the velocity-weight row ships with default 1.0 so every default lies
# inside its own range.
PARAM_SCHEMA: tuple[ParamSpec, ...] = (
    ParamSpec("qv", 0.0, 2.0, 1.0, "Velocity weight: minimizes speed tracking error"),
    ParamSpec("qn", 0.0, 100.0, 20.0, "Lateral weight: minimizes deviation from the track"),
    ParamSpec("qalpha", 0.0, 100.0, 7.0, "Heading weight: minimizes orientation error"),
    ParamSpec("qac", 0.0, 1.0, 0.01, "Acceleration weight: penalizes high acceleration"),
    ParamSpec("qddelta", 0.0, 100.0, 0.1, "Steering weight: penalizes fast steering changes"),
    ParamSpec("alat_max", 0.0, 20.0, 10.0, "Max lateral acceleration: limits side force"),
    ParamSpec("a_min", -20.0, 0.0, -5.0, "Min acceleration: lower acceleration bound"),
    ParamSpec("a_max", 0.0, 20.0, 5.0, "Max acceleration: upper acceleration bound"),
    ParamSpec("v_min", -2.0, 5.0, 1.0, "Min velocity: lower speed bound"),
    ParamSpec("v_max", -1.0, 10.0, 5.0, "Max velocity: upper speed bound"),
    ParamSpec("track_safety_margin", 0.0, 1.0, 0.45, "Safety margin: increases track boundary margin"),
)

SCHEMA_BY_NAME: dict[str, ParamSpec] = {spec.name: spec for spec in PARAM_SCHEMA}


@dataclass(frozen=True)
class MpcParams:
    qv: float = 1.0
    qn: float = 20.0
    qalpha: float = 7.0
    qac: float = 0.01
    qddelta: float = 0.1
    alat_max: float = 10.0
    a_min: float = -5.0
    a_max: float = 5.0
    v_min: float = 1.0
    v_max: float = 5.0
    track_safety_margin: float = 0.45

    def __post_init__(self):
        for spec in PARAM_SCHEMA:
            value = getattr(self, spec.name)
            if not (spec.min <= value <= spec.max):
                raise ValueError(
                    f"{spec.name}={value} outside schema range [{spec.min}, {spec.max}]"
                )
        if self.v_min > self.v_max:
            raise ValueError(f"v_min={self.v_min} > v_max={self.v_max}")
        if self.a_min > self.a_max:
            raise ValueError(f"a_min={self.a_min} > a_max={self.a_max}")

    @classmethod
    def defaults(cls) -> "MpcParams":
        return cls()

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class ParamStore:
    """Runtime-reconfigurable parameter set with atomic full-set swaps.

    Readers call :meth:`snapshot` (never a mixed old/new set). The writer
    calls :meth:`apply`; every apply is journaled with timestamp and source.
    """

    def __init__(self, initial: MpcParams | None = None, journal_path=None, clock=time.time):
        self._params = initial if initial is not None else MpcParams.defaults()
        self._lock = threading.Lock()
        self._clock = clock
        self._journal: list[dict] = []
        self._journal_path = journal_path

    def snapshot(self) -> MpcParams:
        return self._params  # immutable instance: atomic reference read

    def journal(self) -> list[dict]:
        return list(self._journal)

    def apply(self, update: dict[str, float], source: str = "cli", warnings=()) -> MpcParams:
        """Merge a canonical, clamped update and swap the full set atomically.

        Defensively re-clamps and repairs ordering on the merged set so the
        stored parameters always satisfy the schema invariants.
        """
        warnings = list(warnings)
        with self._lock:
            current = self._params
            merged = current.as_dict()
            for key, value in update.items():
                if key not in SCHEMA_BY_NAME:
                    warnings.append(f"unknown parameter {key!r} ignored by store")
                    continue
                spec = SCHEMA_BY_NAME[key]
                clamped = min(max(float(value), spec.min), spec.max)
                if clamped != value:
                    warnings.append(f"store clamped {key} from {value} to {clamped}")
                merged[key] = clamped
            if merged["v_min"] > merged["v_max"]:
                warnings.append(
                    f"v_min={merged['v_min']} > v_max={merged['v_max']}; set v_min = v_max"
                )
                merged["v_min"] = merged["v_max"]
            if merged["a_min"] > merged["a_max"]:
                warnings.append(
                    f"a_min={merged['a_min']} > a_max={merged['a_max']}; set a_min = a_max"
                )
                merged["a_min"] = merged["a_max"]
            new_params = MpcParams(**merged)
            entry = {
                "t": self._clock(),
                "source": source,
                "update": {k: float(v) for k, v in update.items()},
                "applied": new_params.as_dict(),
                "warnings": warnings,
            }
            self._journal.append(entry)
            if self._journal_path is not None:
                with open(self._journal_path, "a", encoding="utf-8") as handle:
                    handle.write(json.dumps(entry) + "\n")
            self._params = new_params
            return new_params
