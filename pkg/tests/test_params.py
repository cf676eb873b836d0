"""Parameter schema, value invariants, and the atomic journaled store."""

from __future__ import annotations

import json
import threading

import pytest

from langdrive.params import PARAM_SCHEMA, SCHEMA_BY_NAME, MpcParams, ParamStore

CANONICAL_NAMES = [
    "qv", "qn", "qalpha", "qac", "qddelta", "alat_max",
    "a_min", "a_max", "v_min", "v_max", "track_safety_margin",
]


class TestSchema:
    def test_canonical_names_exact(self):
        assert [spec.name for spec in PARAM_SCHEMA] == CANONICAL_NAMES

    def test_ranges(self):
        assert (SCHEMA_BY_NAME["qn"].min, SCHEMA_BY_NAME["qn"].max, SCHEMA_BY_NAME["qn"].default) == (0.0, 100.0, 20.0)
        assert (SCHEMA_BY_NAME["v_max"].min, SCHEMA_BY_NAME["v_max"].max, SCHEMA_BY_NAME["v_max"].default) == (-1.0, 10.0, 5.0)
        assert (SCHEMA_BY_NAME["v_min"].min, SCHEMA_BY_NAME["v_min"].max) == (-2.0, 5.0)
        assert (SCHEMA_BY_NAME["track_safety_margin"].max, SCHEMA_BY_NAME["track_safety_margin"].default) == (1.0, 0.45)

    def test_every_default_within_range(self):
        for spec in PARAM_SCHEMA:
            assert spec.min <= spec.default <= spec.max, spec.name

    def test_defaults_instance_valid(self):
        params = MpcParams.defaults()
        for spec in PARAM_SCHEMA:
            assert getattr(params, spec.name) == spec.default


class TestInvariants:
    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="qn"):
            MpcParams(qn=150.0)

    def test_v_ordering_rejected(self):
        with pytest.raises(ValueError, match="v_min"):
            MpcParams(v_min=4.0, v_max=-1.0)

    def test_negative_velocity_box_allowed(self):
        params = MpcParams(v_min=-1.0, v_max=-1.0)
        assert params.v_min == params.v_max == -1.0


class TestStore:
    def test_empty_update_is_identity(self):
        store = ParamStore()
        before = store.snapshot()
        store.apply({}, source="cli")
        assert store.snapshot() == before

    def test_reversing_values(self):
        store = ParamStore()
        store.apply({"v_min": -1.0, "v_max": -1.0}, source="adapter")
        snap = store.snapshot()
        assert snap.v_min == -1.0
        assert snap.v_max == -1.0

    def test_defensive_clamp_and_repair(self):
        store = ParamStore()
        applied = store.apply({"v_min": 4.0, "v_max": -1.0}, source="cli")
        assert applied.v_min <= applied.v_max
        entry = store.journal()[-1]
        assert any("v_min" in w for w in entry["warnings"])

    def test_unknown_key_ignored_with_warning(self):
        store = ParamStore()
        before = store.snapshot()
        store.apply({"bogus": 1.0}, source="cli")
        assert store.snapshot() == before
        assert any("bogus" in w for w in store.journal()[-1]["warnings"])

    def test_journal_schema_and_file(self, tmp_path):
        path = tmp_path / "journal.jsonl"
        store = ParamStore(journal_path=path, clock=lambda: 12.5)
        store.apply({"qn": 40.0}, source="adapter", warnings=["clamped something"])
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        entry = json.loads(lines[0])
        assert set(entry) == {"t", "source", "update", "applied", "warnings"}
        assert entry["t"] == 12.5
        assert entry["source"] == "adapter"
        assert entry["update"] == {"qn": 40.0}
        assert entry["applied"]["qn"] == 40.0
        assert entry["warnings"] == ["clamped something"]

    def test_concurrent_snapshots_never_mixed(self):
        store = ParamStore()
        set_a = {"qn": 10.0, "qalpha": 10.0, "v_max": 2.0}
        set_b = {"qn": 90.0, "qalpha": 90.0, "v_max": 9.0}
        stop = threading.Event()
        bad = []

        def writer():
            flip = False
            while not stop.is_set():
                store.apply(set_a if flip else set_b, source="cli")
                flip = not flip

        def reader():
            while not stop.is_set():
                snap = store.snapshot()
                view = (snap.qn, snap.qalpha, snap.v_max)
                if view not in ((10.0, 10.0, 2.0), (90.0, 90.0, 9.0), (20.0, 7.0, 5.0)):
                    bad.append(view)

        threads = [threading.Thread(target=writer)] + [threading.Thread(target=reader) for _ in range(3)]
        for thread in threads:
            thread.start()
        threading.Event().wait(0.4)
        stop.set()
        for thread in threads:
            thread.join()
        assert not bad
