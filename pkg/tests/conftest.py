from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from langdrive.track import load_track, make_track

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "langdrive" / "data"
OVAL_CSV = DATA_DIR / "tracks" / "oval.csv"


def circle_track(radius: float = 2.0, points: int = 400, width: float = 1.0):
    theta = np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)
    xs = radius * np.cos(theta)
    ys = radius * np.sin(theta)
    w = np.full(points, width)
    return make_track(xs, ys, w, w, closed=True)


def straight_track(length: float = 50.0, points: int = 201, width: float = 1.0):
    xs = np.linspace(0.0, length, points)
    ys = np.zeros(points)
    w = np.full(points, width)
    return make_track(xs, ys, w, w, closed=False)


@pytest.fixture(scope="session")
def oval():
    return load_track(OVAL_CSV)


@pytest.fixture(scope="session")
def circle():
    return circle_track()


@pytest.fixture(scope="session")
def straight():
    return straight_track()
