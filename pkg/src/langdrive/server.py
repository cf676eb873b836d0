"""Telemetry/control HTTP + WebSocket service around a live orchestrator.

Endpoints: WS /telemetry (10 Hz frames), POST /prompt, GET/POST /params,
GET /journal, GET /track. Binds to localhost by default; slow telemetry
subscribers just receive the latest frame, never back-pressuring the loop.
"""

from __future__ import annotations

import asyncio
import threading
import time

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from .adapter import validate_and_clamp
from .orchestrator import Orchestrator
from .sim import SIM_DT

TELEMETRY_PERIOD = 0.1  # 10 Hz


class PromptBody(BaseModel):
    text: str


class SimThread(threading.Thread):
    """Paces the sim loop to wall clock for interactive use."""

    def __init__(self, orchestrator: Orchestrator):
        super().__init__(daemon=True)
        self.orchestrator = orchestrator
        self.stop_event = threading.Event()

    def run(self) -> None:
        next_tick = time.monotonic()
        while not self.stop_event.is_set():
            self.orchestrator.tick()
            next_tick += SIM_DT
            delay = next_tick - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            else:
                next_tick = time.monotonic()


def track_geometry(orchestrator: Orchestrator) -> dict:
    track = orchestrator.track
    xy = track.xy
    left = xy + track.width_left[:, None] * _normals(track)
    right = xy - track.width_right[:, None] * _normals(track)
    return {
        "centerline": xy.tolist(),
        "left_wall": left.tolist(),
        "right_wall": right.tolist(),
        "total_length": track.total_length,
        "closed": track.closed,
    }


def _normals(track) -> np.ndarray:
    # node normals from the per-segment normals (averaged at shared nodes)
    seg = track.seg_normal
    prev = np.roll(seg, 1, axis=0) if track.closed else np.vstack([seg[:1], seg])
    if not track.closed:
        seg = np.vstack([seg, seg[-1:]])
        prev = np.vstack([prev, prev[-1:]])
    avg = seg + prev[: len(seg)]
    norms = np.linalg.norm(avg, axis=1, keepdims=True)
    return avg / np.maximum(norms, 1e-9)


def make_app(orchestrator: Orchestrator) -> FastAPI:
    app = FastAPI(title="langdrive console service")

    @app.get("/params")
    def get_params():
        return orchestrator.store.snapshot().as_dict()

    @app.post("/params")
    def post_params(updates: dict):
        update = validate_and_clamp({k: float(v) for k, v in updates.items()})
        orchestrator.store.apply(update.accepted, source="ui", warnings=update.warnings)
        return {
            "accepted": update.accepted,
            "rejected": update.rejected,
            "warnings": update.warnings,
            "params": orchestrator.store.snapshot().as_dict(),
        }

    @app.post("/prompt")
    def post_prompt(body: PromptBody):
        if not body.text.strip():
            return {"ok": False, "error": "empty prompt"}
        orchestrator.inject_prompt(body.text.strip())
        return {"ok": True, "prompt": body.text.strip()}

    @app.get("/journal")
    def get_journal():
        return {
            "params": orchestrator.store.journal()[-50:],
            "decisions": orchestrator.engine.log[-50:],
        }

    @app.get("/track")
    def get_track():
        return track_geometry(orchestrator)

    @app.websocket("/telemetry")
    async def telemetry(socket: WebSocket):
        await socket.accept()
        try:
            while True:
                frame = orchestrator.telemetry_frame()
                await socket.send_json(frame.to_dict())
                await asyncio.sleep(TELEMETRY_PERIOD)
        except WebSocketDisconnect:
            return

    return app


def serve(orchestrator: Orchestrator, host: str = "127.0.0.1", port: int = 8700) -> None:
    """Run the wall-clock sim loop and the service until interrupted."""
    import uvicorn

    orchestrator.config.sync_cycles = False
    sim_thread = SimThread(orchestrator)
    sim_thread.start()
    try:
        uvicorn.run(make_app(orchestrator), host=host, port=port, log_level="warning")
    finally:
        sim_thread.stop_event.set()
        sim_thread.join(timeout=2.0)
