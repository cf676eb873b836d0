"""Lexical memory store: decision hints and controller memories, retrieved
by term-frequency cosine similarity."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

KIND_DECISION = "decision_hint"
KIND_MPC = "mpc_memory"

DECISION_HINT_K = 10   # all hints are injected while the corpus stays small
MPC_MEMORY_K = 3

_DELIMITER = re.compile(r"^#\s*(Hint|Memory Entry)\s+(\d+):\s*$")
_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class MemoryEntry:
    id: int
    kind: str
    text: str


def _tokenize(text: str) -> Counter:
    return Counter(_TOKEN.findall(text.lower()))


def cosine_similarity(a: str, b: str) -> float:
    """TF cosine over lowercased, punctuation-stripped tokens; in [0, 1]."""
    ta, tb = _tokenize(a), _tokenize(b)
    if not ta or not tb:
        return 0.0
    dot = sum(count * tb[token] for token, count in ta.items())
    norm = math.sqrt(sum(c * c for c in ta.values())) * math.sqrt(sum(c * c for c in tb.values()))
    return dot / norm if norm else 0.0


def parse_corpus(text: str) -> list[MemoryEntry]:
    """Parse the `# Hint N:` / `# Memory Entry N:` delimited corpus format."""
    entries: list[MemoryEntry] = []
    current_id: int | None = None
    current_kind: str | None = None
    lines: list[str] = []

    def flush():
        if current_id is not None:
            body = "\n".join(lines).strip()
            if body:
                entries.append(MemoryEntry(id=current_id, kind=current_kind, text=body))

    for line in text.splitlines():
        match = _DELIMITER.match(line.strip())
        if match:
            flush()
            current_kind = KIND_DECISION if match.group(1) == "Hint" else KIND_MPC
            current_id = int(match.group(2))
            lines = []
        else:
            lines.append(line)
    flush()
    seen: set[tuple[str, int]] = set()
    for entry in entries:
        key = (entry.kind, entry.id)
        if key in seen:
            raise ValueError(f"duplicate corpus id {entry.id} for kind {entry.kind}")
        seen.add(key)
    return entries


class MemoryStore:
    """Immutable after construction; retrieval is deterministic."""

    def __init__(self, entries: list[MemoryEntry]):
        self._entries = tuple(entries)

    @classmethod
    def from_files(cls, *paths) -> "MemoryStore":
        entries: list[MemoryEntry] = []
        for path in paths:
            entries.extend(parse_corpus(Path(path).read_text(encoding="utf-8")))
        return cls(entries)

    def entries(self, kind: str | None = None) -> tuple[MemoryEntry, ...]:
        if kind is None:
            return self._entries
        return tuple(entry for entry in self._entries if entry.kind == kind)

    def retrieve(self, query: str, kind: str, k: int) -> list[MemoryEntry]:
        """Top-k entries of a kind by cosine similarity; ties break on id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        pool = self.entries(kind)
        if not pool:
            raise ValueError(f"memory store has no entries of kind {kind!r}")
        scored = sorted(
            pool,
            key=lambda entry: (-cosine_similarity(query, entry.text), entry.id),
        )
        return scored[: min(k, len(scored))]


def bundled_store() -> MemoryStore:
    """The corpora shipped with the package."""
    root = resources.files("langdrive").joinpath("data/corpora")
    entries: list[MemoryEntry] = []
    for name in ("decision_hints.txt", "mpc_memories.txt"):
        entries.extend(parse_corpus(root.joinpath(name).read_text(encoding="utf-8")))
    return MemoryStore(entries)
