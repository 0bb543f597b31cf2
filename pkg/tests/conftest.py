import numpy as np
import pytest

from nlospos.geometry import path_parameters
from nlospos.scene import Reflector, Scene


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_single_bounce_paths(rng, n_paths, tx=None, rx=None, clock_bias=None):
    """``n_paths`` single-bounce truth paths with scatter points drawn around the UE."""
    tx = rng.uniform(-50, 50, 3) if tx is None else np.asarray(tx, float)
    rx = rng.uniform(-50, 50, 3) if rx is None else np.asarray(rx, float)
    tau_b = rng.uniform(0.0, 500e-9) if clock_bias is None else clock_bias
    out = []
    for _ in range(n_paths):
        scatter = rx + rng.uniform(-80, 80, 3)
        out.append(path_parameters([scatter], tx, rx, clock_bias=tau_b, gain=rng.uniform(0.1, 1)))
    return out, tx, rx, tau_b


def box_scene(tx, rx, order=1, los=True, **kw):
    """Four unbounded walls of a 100 m street canyon plus a ground plane."""
    walls = [
        Reflector.from_normal([50, 0, 0], [-1, 0, 0], name="east"),
        Reflector.from_normal([-50, 0, 0], [1, 0, 0], name="west"),
        Reflector.from_normal([0, 60, 0], [0, -1, 0], name="north"),
        Reflector.from_normal([0, -60, 0], [0, 1, 0], name="south"),
        Reflector.from_normal([0, 0, 0], [0, 0, 1], name="ground"),
    ]
    return Scene(tx=tx, rx=rx, reflectors=walls, max_bounce_order=order, los_enabled=los, **kw)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
