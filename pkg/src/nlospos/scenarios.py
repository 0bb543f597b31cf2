"""Built-in scenes at the reference BS/UE geometry."""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ParseError, ValidationError
from .scene import Reflector, Scene, scene_from_dict

BS_POSITION = np.array([621.0, 447.0, 30.0])
UE_POSITION = np.array([600.0, 500.0, 1.5])
CLOCK_BIAS = 330e-9


def street_scene(rx=UE_POSITION, los: bool = False, rho: float = 0.8) -> Scene:
    """Three bounded building faces around the UE.

    At the default UE position this yields three single-bounce paths followed
    in delay by two double-bounce and one triple-bounce path, each with the
    first and last incidence points tens of meters apart.
    """
    walls = [
        Reflector.from_normal([612.0, 388.0, 14.0], [0.0, 1.0, 0.0], half_extents=(15.0, 14.0), name="south-a"),
        Reflector.from_normal([611.0, 442.0, 15.0], [0.0, 1.0, 0.0], half_extents=(55.0, 15.0), name="south-b"),
        Reflector.from_normal([555.5, 538.5, 6.5], [0.6455, -0.7638, 0.0], half_extents=(67.0, 6.5), name="north-west"),
    ]
    return Scene(
        tx=BS_POSITION,
        rx=rx,
        reflectors=walls,
        clock_bias=CLOCK_BIAS,
        max_bounce_order=3,
        los_enabled=los,
        gain_reference=1.0,
        reflection_loss=rho,
    )


def single_bounce_street_scene(rx=UE_POSITION) -> Scene:
    """The street scene truncated to first-order reflections (null-hypothesis data)."""
    sc = street_scene(rx)
    return Scene(
        tx=sc.tx,
        rx=sc.rx,
        reflectors=sc.reflectors,
        clock_bias=sc.clock_bias,
        max_bounce_order=1,
        los_enabled=sc.los_enabled,
        gain_reference=sc.gain_reference,
        reflection_loss=sc.reflection_loss,
    )


BUILTIN = {
    "street": street_scene,
    "street-los": lambda: street_scene(los=True),
    "street-single": single_bounce_street_scene,
}


def load_scene(ref: str | os.PathLike) -> Scene:
    """Load a scene from a JSON file, or ``builtin:<name>`` for a built-in one."""
    ref = str(ref)
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        try:
            return BUILTIN[name]()
        except KeyError:
            raise ValidationError(f"unknown built-in scene {name!r}; known: {sorted(BUILTIN)}") from None
    with open(ref) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
    return scene_from_dict(data)
