"""Domain types and the forward geometry linking scatter points to channel parameters.

Positions are plain ``numpy`` arrays of shape ``(3,)`` in meters. Angles are in
radians, delays in seconds.

Angle conventions
-----------------
Departure angles are stored as seen from the transmitter toward the first
incidence point. Arrival azimuths carry a pi offset, i.e. they are stored as
``pi + atan2(dy, dx)`` where ``(dx, dy, dz)`` points from the receiver toward
the last incidence point, while the arrival elevation is the plain
``asin(dz / r)``. :func:`direction_from_angles_rx` undoes this so that it always
returns the unit vector from the receiver toward the last incidence point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import GeometryError, ValidationError

SPEED_OF_LIGHT = 299792458.0  # m/s

_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi


def as_vec3(value, name: str = "vector") -> np.ndarray:
    """Coerce ``value`` to a finite float array of shape (3,)."""
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,):
        raise ValidationError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite components: {arr}")
    return arr


def normalize_azimuth(angle: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(angle, _TWO_PI)
    if wrapped <= -math.pi:
        wrapped += _TWO_PI
    return wrapped


def fold_angles(azimuth: float, elevation: float) -> tuple[float, float]:
    """Bring an (azimuth, elevation) pair back into range after perturbation.

    An elevation that overshoots a pole is reflected back over it, which flips
    the azimuth by pi. The pointed-to direction is unchanged.
    """
    elevation = math.remainder(elevation, _TWO_PI)
    if elevation > _HALF_PI:
        elevation = math.pi - elevation
        azimuth += math.pi
    elif elevation < -_HALF_PI:
        elevation = -math.pi - elevation
        azimuth += math.pi
    return normalize_azimuth(azimuth), elevation


@dataclass(frozen=True)
class AnglePair:
    """Azimuth in (-pi, pi] and elevation in [-pi/2, pi/2], radians.

    The azimuth is normalized on construction. At the poles the azimuth is
    meaningless and is pinned to 0.
    """

    azimuth: float
    elevation: float

    def __post_init__(self):
        az = float(self.azimuth)
        el = float(self.elevation)
        if not (math.isfinite(az) and math.isfinite(el)):
            raise ValidationError(f"non-finite angles ({az}, {el})")
        if abs(el) > _HALF_PI:
            raise ValidationError(f"elevation {el} outside [-pi/2, pi/2]")
        az = 0.0 if abs(el) == _HALF_PI else normalize_azimuth(az)
        object.__setattr__(self, "azimuth", az)
        object.__setattr__(self, "elevation", el)


@dataclass(frozen=True)
class PathObservation:
    """Measured parameters of one multipath component."""

    gain: float
    aod: AnglePair
    aoa: AnglePair
    toa: float

    def __post_init__(self):
        gain = float(self.gain)
        toa = float(self.toa)
        if not math.isfinite(gain) or gain < 0:
            raise ValidationError(f"gain must be finite and >= 0, got {gain}")
        if not math.isfinite(toa) or toa <= 0:
            raise ValidationError(f"toa must be finite and > 0, got {toa}")
        object.__setattr__(self, "gain", gain)
        object.__setattr__(self, "toa", toa)


@dataclass(frozen=True, eq=False)
class GroundTruthPath:
    """A synthesized path together with the geometry that produced it."""

    observation: PathObservation
    incidence_points: tuple[np.ndarray, ...]
    propagation_distance: float
    bounce_count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "bounce_count", len(self.incidence_points))

    @property
    def is_single_bounce(self) -> bool:
        """True for LOS and single-bounce paths, the ones the linear model fits exactly."""
        return self.bounce_count <= 1

    @property
    def scatter_offset(self) -> np.ndarray:
        """First minus last incidence point; zero for LOS and single-bounce paths."""
        if self.bounce_count == 0:
            return np.zeros(3)
        return self.incidence_points[0] - self.incidence_points[-1]


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian measurement noise on angles (rad) and on range c*toa (m)."""

    sigma_angle: float = 0.0
    sigma_range: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.sigma_angle >= 0 and self.sigma_range >= 0):
            raise ValidationError(
                f"noise deviations must be >= 0, got {self.sigma_angle}, {self.sigma_range}"
            )

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)


def direction_from_angles_tx(aod: AnglePair) -> np.ndarray:
    """Unit vector along the departure direction."""
    ce = math.cos(aod.elevation)
    return np.array(
        [ce * math.cos(aod.azimuth), ce * math.sin(aod.azimuth), math.sin(aod.elevation)]
    )


def direction_from_angles_rx(aoa: AnglePair) -> np.ndarray:
    """Unit vector from the receiver toward the last incidence point.

    Inverts the pi-offset azimuth storage; the elevation is used as is.
    """
    ce = math.cos(aoa.elevation)
    return np.array(
        [-ce * math.cos(aoa.azimuth), -ce * math.sin(aoa.azimuth), math.sin(aoa.elevation)]
    )


def _pointing_angles(target: np.ndarray, origin: np.ndarray) -> tuple[float, float]:
    delta = as_vec3(target, "target") - as_vec3(origin, "origin")
    dist = float(np.linalg.norm(delta))
    if dist == 0.0:
        raise GeometryError(f"coincident points {origin}")
    elevation = math.asin(max(-1.0, min(1.0, delta[2] / dist)))
    if delta[0] == 0.0 and delta[1] == 0.0:
        return None, elevation
    return math.atan2(delta[1], delta[0]), elevation


def angles_of_departure(scatter, tx) -> AnglePair:
    """Departure angles at ``tx`` toward ``scatter``."""
    az, el = _pointing_angles(scatter, tx)
    return AnglePair(0.0 if az is None else az, el)


def angles_of_arrival(scatter, rx) -> AnglePair:
    """Arrival angles at ``rx`` from ``scatter``, azimuth stored with the pi offset."""
    az, el = _pointing_angles(scatter, rx)
    return AnglePair(0.0 if az is None else math.pi + az, el)


def polyline_length(points: Sequence[np.ndarray]) -> float:
    total = 0.0
    for a, b in zip(points[:-1], points[1:]):
        seg = float(np.linalg.norm(b - a))
        if seg == 0.0:
            raise GeometryError(f"zero-length segment at {a}")
        total += seg
    return total


def path_parameters(
    incidence_points: Sequence,
    tx,
    rx,
    clock_bias: float = 0.0,
    gain: float = 1.0,
) -> GroundTruthPath:
    """Channel parameters of the polyline tx -> incidence points -> rx.

    An empty ``incidence_points`` describes the LOS path.
    """
    tx = as_vec3(tx, "tx")
    rx = as_vec3(rx, "rx")
    pts = tuple(as_vec3(p, "incidence point") for p in incidence_points)
    dist = polyline_length((tx, *pts, rx))
    first = pts[0] if pts else rx
    last = pts[-1] if pts else tx
    obs = PathObservation(
        gain=gain,
        aod=angles_of_departure(first, tx),
        aoa=angles_of_arrival(last, rx),
        toa=dist / SPEED_OF_LIGHT + clock_bias,
    )
    return GroundTruthPath(observation=obs, incidence_points=pts, propagation_distance=dist)


def apply_noise(
    paths: Sequence[PathObservation],
    noise: NoiseModel,
    rng: np.random.Generator | None = None,
) -> list[PathObservation]:
    """Perturb angles and delays with independent Gaussian draws.

    Each path consumes five standard normal draws, in the order departure
    azimuth, departure elevation, arrival azimuth, arrival elevation, range.
    Range noise is drawn in meters and converted to seconds. Gains are not
    touched. Uses ``noise.rng_seed`` unless an explicit generator is passed.
    """
    if rng is None:
        rng = noise.generator()
    out = []
    for obs in paths:
        z = rng.standard_normal(5)
        da = noise.sigma_angle * z[:4]
        dep = fold_angles(obs.aod.azimuth + da[0], obs.aod.elevation + da[1])
        arr = fold_angles(obs.aoa.azimuth + da[2], obs.aoa.elevation + da[3])
        toa = obs.toa + noise.sigma_range * z[4] / SPEED_OF_LIGHT
        out.append(replace(obs, aod=AnglePair(*dep), aoa=AnglePair(*arr), toa=toa))
    return out
