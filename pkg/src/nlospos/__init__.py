"""UE positioning and clock-bias estimation from multipath angle/delay measurements.

Single-bounce paths pin the UE position through their angle of arrival; multi-bounce
paths do not. The localizer adds paths in order, tracks how far the estimate drifts,
and stops where the drift starts to grow linearly.
"""

from .detector import DetectionOutcome, DetectorConfig, detect, glrt_statistic, threshold_for_alpha
from .errors import (
    GeometryError,
    InsufficientPathsError,
    NlosPosError,
    NumericalError,
    ParseError,
    ValidationError,
)
from .geometry import (
    SPEED_OF_LIGHT,
    AnglePair,
    GroundTruthPath,
    NoiseModel,
    PathObservation,
    apply_noise,
    path_parameters,
)
from .pathio import export_paths, import_paths
from .pipeline import LocalizationResult, OrderingMode, run
from .scene import Reflector, Scene, enumerate_paths, observations_from_scene
from .wls import EstimateVector, build_system, estimate_position, solve_wls

__all__ = [
    "SPEED_OF_LIGHT",
    "AnglePair",
    "DetectionOutcome",
    "DetectorConfig",
    "EstimateVector",
    "GeometryError",
    "GroundTruthPath",
    "InsufficientPathsError",
    "LocalizationResult",
    "NlosPosError",
    "NoiseModel",
    "NumericalError",
    "OrderingMode",
    "ParseError",
    "PathObservation",
    "Reflector",
    "Scene",
    "ValidationError",
    "apply_noise",
    "build_system",
    "detect",
    "enumerate_paths",
    "estimate_position",
    "export_paths",
    "glrt_statistic",
    "import_paths",
    "observations_from_scene",
    "path_parameters",
    "run",
    "solve_wls",
    "threshold_for_alpha",
]
