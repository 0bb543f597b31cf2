"""Specular multipath synthesis over planar reflectors via the image-source method."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import GeometryError, InsufficientPathsError, ValidationError
from .geometry import (
    GroundTruthPath,
    NoiseModel,
    PathObservation,
    apply_noise,
    as_vec3,
    path_parameters,
)

MAX_BOUNCE_ORDER = 3
_PLANE_EPS = 1e-9


def _in_plane_axes(normal: np.ndarray, hint: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    if hint is None:
        hint = np.cross(normal, [0.0, 0.0, 1.0])
        if np.linalg.norm(hint) < 1e-9:
            hint = np.cross(normal, [1.0, 0.0, 0.0])
    u = hint - np.dot(hint, normal) * normal
    norm = np.linalg.norm(u)
    if norm < 1e-12:
        raise ValidationError("reflector axis is parallel to its normal")
    u = u / norm
    return u, np.cross(normal, u)


@dataclass(frozen=True, eq=False)
class Reflector:
    """An infinite plane, or a rectangle centered on ``anchor`` when ``half_extents`` is set.

    The rectangle spans ``half_extents[0]`` along ``axis`` and ``half_extents[1]``
    along ``normal x axis``. Without an explicit ``axis``, the first in-plane
    axis is horizontal (``normal x z``), which suits vertical walls.
    """

    anchor: np.ndarray
    normal: np.ndarray
    half_extents: tuple[float, float] | None = None
    axis: np.ndarray | None = None
    name: str = ""
    _basis: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        anchor = as_vec3(self.anchor, "reflector anchor")
        normal = as_vec3(self.normal, "reflector normal")
        if abs(np.linalg.norm(normal) - 1.0) > 1e-12:
            raise ValidationError(f"reflector normal must be unit length, got {normal}")
        axis = None if self.axis is None else as_vec3(self.axis, "reflector axis")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "axis", axis)
        if self.half_extents is not None:
            a, b = (float(h) for h in self.half_extents)
            if not (a > 0 and b > 0):
                raise ValidationError(f"half extents must be positive, got {self.half_extents}")
            object.__setattr__(self, "half_extents", (a, b))
        object.__setattr__(self, "_basis", _in_plane_axes(normal, axis))

    @classmethod
    def from_normal(cls, anchor, normal, **kwargs) -> "Reflector":
        """Build a reflector, rescaling ``normal`` to unit length first."""
        normal = np.asarray(normal, dtype=float)
        return cls(anchor=anchor, normal=normal / np.linalg.norm(normal), **kwargs)

    def signed_distance(self, p: np.ndarray) -> float:
        return float(np.dot(p - self.anchor, self.normal))

    def contains(self, p: np.ndarray) -> bool:
        """Whether an in-plane point lies inside the rectangle (always true if unbounded)."""
        if self.half_extents is None:
            return True
        u, v = self._basis
        rel = p - self.anchor
        return (
            abs(float(np.dot(rel, u))) <= self.half_extents[0]
            and abs(float(np.dot(rel, v))) <= self.half_extents[1]
        )


def mirror_point(p, reflector: Reflector) -> np.ndarray:
    """Mirror image of ``p`` across the reflector plane."""
    p = np.asarray(p, dtype=float)
    return p - 2.0 * np.dot(p - reflector.anchor, reflector.normal) * reflector.normal


@dataclass(frozen=True, eq=False)
class Scene:
    tx: np.ndarray
    rx: np.ndarray
    reflectors: tuple[Reflector, ...] = ()
    clock_bias: float = 0.0
    max_bounce_order: int = 1
    los_enabled: bool = True
    gain_reference: float = 1.0
    reflection_loss: float = 0.5

    def __post_init__(self):
        tx = as_vec3(self.tx, "tx")
        rx = as_vec3(self.rx, "rx")
        object.__setattr__(self, "tx", tx)
        object.__setattr__(self, "rx", rx)
        object.__setattr__(self, "reflectors", tuple(self.reflectors))
        if np.array_equal(tx, rx):
            raise GeometryError("tx and rx coincide")
        if not 0 <= int(self.max_bounce_order) <= MAX_BOUNCE_ORDER:
            raise ValidationError(
                f"max_bounce_order must be in [0, {MAX_BOUNCE_ORDER}], got {self.max_bounce_order}"
            )
        if not 0.0 < self.reflection_loss <= 1.0:
            raise ValidationError(f"reflection_loss must be in (0, 1], got {self.reflection_loss}")
        if not self.gain_reference > 0.0:
            raise ValidationError(f"gain_reference must be > 0, got {self.gain_reference}")
        if not math.isfinite(self.clock_bias):
            raise ValidationError("clock_bias must be finite")
        for i, r in enumerate(self.reflectors):
            for label, p in (("tx", tx), ("rx", rx)):
                if abs(r.signed_distance(p)) < _PLANE_EPS:
                    raise GeometryError(f"{label} lies on reflector {i} ({r.name or 'unnamed'})")

    def with_rx(self, rx) -> "Scene":
        return replace(self, rx=np.asarray(rx, dtype=float))


def _reflector_sequences(n_reflectors: int, max_order: int):
    for order in range(1, max_order + 1):
        for seq in itertools.product(range(n_reflectors), repeat=order):
            if all(a != b for a, b in zip(seq[:-1], seq[1:])):
                yield seq


def _trace(scene: Scene, seq: Sequence[int]) -> list[np.ndarray] | None:
    """Incidence points of the specular path through ``seq``, or None if infeasible."""
    refl = [scene.reflectors[i] for i in seq]
    images = [scene.tx]
    for r in refl:
        images.append(mirror_point(images[-1], r))

    points: list[np.ndarray] = []
    target = scene.rx
    for k in range(len(refl) - 1, -1, -1):
        r, img = refl[k], images[k + 1]
        s_t = r.signed_distance(target)
        s_i = r.signed_distance(img)
        # unfolded ray must cross plane k strictly between target and image
        if not s_t * s_i < 0.0:
            return None
        hit = target + (s_t / (s_t - s_i)) * (img - target)
        if not r.contains(hit):
            return None
        points.insert(0, hit)
        target = hit

    chain = [scene.tx, *points, scene.rx]
    for k, r in enumerate(refl):
        before = r.signed_distance(chain[k])
        after = r.signed_distance(chain[k + 2])
        if not (before * after > 0.0 and abs(before) > _PLANE_EPS and abs(after) > _PLANE_EPS):
            return None
    return points


def enumerate_paths(scene: Scene) -> list[GroundTruthPath]:
    """All specular paths up to ``scene.max_bounce_order`` bounces, sorted by delay.

    Gain follows ``g0 * (1 m / d) * rho**bounces``. An empty result is legal.
    """
    found: list[GroundTruthPath] = []
    if scene.los_enabled:
        found.append(_make_path(scene, []))
    for seq in _reflector_sequences(len(scene.reflectors), scene.max_bounce_order):
        pts = _trace(scene, seq)
        if pts is not None:
            found.append(_make_path(scene, pts))
    found.sort(key=lambda p: p.observation.toa)
    return found


def _make_path(scene: Scene, points: list[np.ndarray]) -> GroundTruthPath:
    path = path_parameters(points, scene.tx, scene.rx, clock_bias=scene.clock_bias)
    gain = (
        scene.gain_reference
        / path.propagation_distance
        * scene.reflection_loss ** len(points)
    )
    return replace(path, observation=replace(path.observation, gain=gain))


def observations_from_scene(
    scene: Scene,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[list[PathObservation], list[GroundTruthPath]]:
    """Noisy observations and the index-aligned, unperturbed ground truth."""
    truth = enumerate_paths(scene)
    if len(truth) < 2:
        raise InsufficientPathsError(f"scene yields {len(truth)} path(s); at least 2 are needed")
    clean = [p.observation for p in truth]
    if noise is None:
        return clean, truth
    return apply_noise(clean, noise, rng), truth


# -- serialization -----------------------------------------------------------

def reflector_to_dict(r: Reflector) -> dict:
    out = {"anchor": r.anchor.tolist(), "normal": r.normal.tolist()}
    if r.half_extents is not None:
        out["half_extents"] = list(r.half_extents)
    if r.axis is not None:
        out["axis"] = r.axis.tolist()
    if r.name:
        out["name"] = r.name
    return out


def scene_to_dict(scene: Scene) -> dict:
    return {
        "tx": scene.tx.tolist(),
        "rx": scene.rx.tolist(),
        "clock_bias_ns": scene.clock_bias * 1e9,
        "reflectors": [reflector_to_dict(r) for r in scene.reflectors],
        "max_bounce_order": scene.max_bounce_order,
        "los": scene.los_enabled,
        "rho": scene.reflection_loss,
        "g0": scene.gain_reference,
    }


def scene_from_dict(data: dict) -> Scene:
    """Build a scene from its JSON form; see the README for the schema."""
    try:
        reflectors = [
            Reflector.from_normal(
                r["anchor"],
                r["normal"],
                half_extents=r.get("half_extents"),
                axis=r.get("axis"),
                name=r.get("name", ""),
            )
            for r in data.get("reflectors", [])
        ]
        return Scene(
            tx=data["tx"],
            rx=data["rx"],
            reflectors=reflectors,
            clock_bias=float(data.get("clock_bias_ns", 0.0)) * 1e-9,
            max_bounce_order=int(data.get("max_bounce_order", 1)),
            los_enabled=bool(data.get("los", True)),
            gain_reference=float(data.get("g0", 1.0)),
            reflection_loss=float(data.get("rho", 0.5)),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed scene description: {exc!r}") from exc
