"""Monte Carlo evaluation: proposed pipeline vs. all-paths and single-bounce-oracle WLS."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from .detector import SIGMA_FLOOR, DetectorConfig, threshold_for_alpha
from .errors import InsufficientPathsError, NlosPosError, ValidationError
from .geometry import NoiseModel, apply_noise
from .pipeline import OrderingMode, grow_estimates, run
from .scene import Scene, enumerate_paths
from .wls import estimate_position

METHODS = ("proposed", "all-paths", "single-bounce-oracle")

DEFAULT_SIGMA_ANGLE = (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1)
DEFAULT_SIGMA_RANGE = (0.1, 1.0, 2.0)
DEFAULT_TRIALS = 500

# independent RNG streams derived from the experiment seed
_STREAM_TRIAL = 0
_STREAM_CALIBRATION = 1


def ue_sweep_positions() -> list[np.ndarray]:
    """The ten UE positions [600, 499 + i, 1.5], i = 1..10."""
    return [np.array([600.0, 499.0 + i, 1.5]) for i in range(1, 11)]


def derive_seed(seed: int, *path: int) -> int:
    """A 64-bit seed determined only by ``seed`` and the integer ``path``."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *path])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# -- metrics -------------------------------------------------------------------

def _position_errors(estimates, truth) -> np.ndarray:
    est = np.asarray(estimates, dtype=float).reshape(-1, 3)
    if est.shape[0] == 0:
        raise ValidationError("no estimates")
    return np.linalg.norm(est - np.asarray(truth, dtype=float), axis=1)


def _bias_errors(estimates, truth, unit: str) -> np.ndarray:
    scale = {"s": 1.0, "ns": 1e9}[unit]
    est = np.asarray(estimates, dtype=float).ravel()
    if est.size == 0:
        raise ValidationError("no estimates")
    return np.abs(est - truth) * scale


def rmse_position(estimates, truth) -> float:
    """Square root of the mean Euclidean error, exactly as the metric is printed."""
    return math.sqrt(float(np.mean(_position_errors(estimates, truth))))


def rms_position_error(estimates, truth) -> float:
    """Conventional root-mean-square Euclidean error."""
    return math.sqrt(float(np.mean(_position_errors(estimates, truth) ** 2)))


def rmse_clock_bias(estimates, truth: float, unit: str = "s") -> float:
    """Square root of the mean absolute clock-bias error, with errors expressed in ``unit``."""
    return math.sqrt(float(np.mean(_bias_errors(estimates, truth, unit))))


def rms_clock_bias_error(estimates, truth: float, unit: str = "s") -> float:
    return math.sqrt(float(np.mean(_bias_errors(estimates, truth, unit) ** 2)))


# -- configuration and results -------------------------------------------------

@dataclass
class ExperimentConfig:
    scene: Scene
    sigma_angle: Sequence[float] = DEFAULT_SIGMA_ANGLE
    sigma_range: Sequence[float] = DEFAULT_SIGMA_RANGE
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    ordering: OrderingMode = OrderingMode.DELAY
    weight_mode: str = "gain"
    alpha: float = 0.05
    calibration_trials: int = 200
    detector: DetectorConfig | None = None
    ue_positions: Sequence[np.ndarray] | None = None
    output_dir: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not self.sigma_angle or not self.sigma_range:
            raise ValidationError("noise grids must be nonempty")
        if self.calibration_trials < 1:
            raise ValidationError("calibration_trials must be >= 1")
        self.ordering = OrderingMode(self.ordering)


@dataclass(frozen=True)
class MetricsRow:
    sigma_angle: float
    sigma_range: float
    method: str
    rmse_position_m: float
    rms_position_m: float
    rmse_clock_bias_ns: float
    rms_clock_bias_ns: float
    mean_paths_used: float
    detection_rate: float
    trials: int


@dataclass(frozen=True)
class TrialRecord:
    sigma_angle: float
    sigma_range: float
    ue_index: int
    trial: int
    method: str
    error_m: float
    clock_bias_error_ns: float
    paths_used: int
    detected: bool


@dataclass
class _Accumulator:
    positions: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    used: list = field(default_factory=list)
    detected: list = field(default_factory=list)


# -- calibration ---------------------------------------------------------------

def calibrate_detector(
    scene: Scene,
    noise: NoiseModel,
    trials: int = 200,
    alpha: float = 0.05,
    ordering=OrderingMode.DELAY,
    weight_mode: str = "gain",
    horizon: int | None = None,
) -> DetectorConfig:
    """Fit the null residual model on the scene's LOS and single-bounce paths.

    Residuals after the first (which is zero by construction) are pooled over
    ``trials`` noisy runs; their sample mean and standard deviation become the
    baseline. The threshold comes from ``threshold_for_alpha`` with a horizon
    equal to the full scene's residual length unless given.
    """
    truth = enumerate_paths(scene)
    clean = [p.observation for p in truth if p.is_single_bounce]
    if len(clean) < 3:
        raise InsufficientPathsError(
            f"calibration needs >= 3 LOS/single-bounce paths, scene has {len(clean)}"
        )
    if horizon is None:
        horizon = max(2, len(truth) - 1)

    samples = []
    for i in range(trials):
        trial_noise = NoiseModel(
            noise.sigma_angle, noise.sigma_range, derive_seed(noise.rng_seed, i)
        )
        residuals, _ = grow_estimates(
            apply_noise(clean, trial_noise), ordering, weight_mode, scene.tx
        )
        samples.extend(residuals[1:])
    samples = np.asarray(samples)
    sigma = float(np.std(samples, ddof=1)) if samples.size > 1 else 0.0
    return DetectorConfig(
        baseline_mean=float(np.mean(samples)),
        baseline_sigma=max(sigma, SIGMA_FLOOR),
        threshold=threshold_for_alpha(alpha, horizon),
    )


# -- Monte Carlo ---------------------------------------------------------------

def _trial(scene, truth, clean, noise, config, detector):
    obs = apply_noise(clean, noise)
    oracle = [o for o, t in zip(obs, truth) if t.is_single_bounce]

    proposed = run(obs, config.ordering, config.weight_mode, detector, scene.tx)
    everything = estimate_position(obs, config.weight_mode, scene.tx)
    single = estimate_position(oracle, config.weight_mode, scene.tx)
    return {
        "proposed": (proposed.position, proposed.clock_bias, proposed.paths_used,
                     bool(proposed.detection and proposed.detection.detected)),
        "all-paths": (everything.position, everything.clock_bias, len(obs), False),
        "single-bounce-oracle": (single.position, single.clock_bias, len(oracle), False),
    }


def run_montecarlo(
    config: ExperimentConfig, details: list | None = None
) -> list[MetricsRow]:
    """Metrics for every (sigma_angle, sigma_range) grid point and method.

    Trial k draws its noise from a seed derived from ``(config.seed, k)``, so
    results do not depend on execution order and the same noise realization
    is shared across grid points. Pass a list as ``details`` to collect one
    :class:`TrialRecord` per trial and method.
    """
    positions = list(config.ue_positions) if config.ue_positions else [config.scene.rx]
    scenes = [config.scene.with_rx(p) for p in positions]
    prepared = []
    for u, sc in enumerate(scenes):
        truth = enumerate_paths(sc)
        if sum(t.is_single_bounce for t in truth) < 2:
            raise InsufficientPathsError(
                f"UE position {u}: fewer than 2 LOS/single-bounce paths for the oracle"
            )
        prepared.append((sc, truth, [t.observation for t in truth]))

    rows = []
    for ia, sa in enumerate(config.sigma_angle):
        for ir, sr in enumerate(config.sigma_range):
            acc = {m: _Accumulator() for m in METHODS}
            for u, (sc, truth, clean) in enumerate(prepared):
                detector = config.detector or calibrate_detector(
                    sc,
                    NoiseModel(sa, sr, derive_seed(config.seed, _STREAM_CALIBRATION, u)),
                    config.calibration_trials,
                    config.alpha,
                    config.ordering,
                    config.weight_mode,
                )
                for k in range(config.trials):
                    noise = NoiseModel(sa, sr, derive_seed(config.seed, _STREAM_TRIAL, u, k))
                    try:
                        result = _trial(sc, truth, clean, noise, config, detector)
                    except NlosPosError as exc:
                        exc.args = (f"sigma_angle={sa}, sigma_range={sr}, ue={u}, trial={k}: {exc}",)
                        raise
                    for m, (pos, bias, used, det) in result.items():
                        a = acc[m]
                        a.positions.append(pos - sc.rx)
                        a.biases.append(bias - sc.clock_bias)
                        a.used.append(used)
                        a.detected.append(det)
                        if details is not None:
                            details.append(TrialRecord(
                                sa, sr, u, k, m,
                                float(np.linalg.norm(pos - sc.rx)),
                                (bias - sc.clock_bias) * 1e9,
                                used, det,
                            ))
            for m in METHODS:
                a = acc[m]
                rows.append(MetricsRow(
                    sigma_angle=float(sa),
                    sigma_range=float(sr),
                    method=m,
                    rmse_position_m=rmse_position(a.positions, np.zeros(3)),
                    rms_position_m=rms_position_error(a.positions, np.zeros(3)),
                    rmse_clock_bias_ns=rmse_clock_bias(a.biases, 0.0, unit="ns"),
                    rms_clock_bias_ns=rms_clock_bias_error(a.biases, 0.0, unit="ns"),
                    mean_paths_used=float(np.mean(a.used)),
                    detection_rate=float(np.mean(a.detected)),
                    trials=len(a.used),
                ))
    return rows


def _write_dataclass_rows(path, rows: Iterable, cls) -> None:
    names = [f.name for f in fields(cls)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in rows:
            values = asdict(row)
            writer.writerow(
                [repr(v) if isinstance(v, float) else v for v in (values[n] for n in names)]
            )


def write_metrics(path: str | os.PathLike, rows: Sequence[MetricsRow]) -> None:
    ordered = sorted(rows, key=lambda r: (r.sigma_angle, r.sigma_range, METHODS.index(r.method)))
    _write_dataclass_rows(path, ordered, MetricsRow)


def write_details(path: str | os.PathLike, records: Sequence[TrialRecord]) -> None:
    ordered = sorted(
        records,
        key=lambda r: (r.sigma_angle, r.sigma_range, r.ue_index, r.trial, METHODS.index(r.method)),
    )
    _write_dataclass_rows(path, ordered, TrialRecord)


def read_metrics(path: str | os.PathLike) -> list[MetricsRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for rec in reader:
            out.append(MetricsRow(
                sigma_angle=float(rec["sigma_angle"]),
                sigma_range=float(rec["sigma_range"]),
                method=rec["method"],
                rmse_position_m=float(rec["rmse_position_m"]),
                rms_position_m=float(rec["rms_position_m"]),
                rmse_clock_bias_ns=float(rec["rmse_clock_bias_ns"]),
                rms_clock_bias_ns=float(rec["rms_clock_bias_ns"]),
                mean_paths_used=float(rec["mean_paths_used"]),
                detection_rate=float(rec["detection_rate"]),
                trials=int(rec["trials"]),
            ))
        return out
