"""Iterative path selection: grow the WLS estimate one path at a time and stop at a slope change."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .detector import DetectionOutcome, DetectorConfig, max_statistic, slope_mle
from .errors import InsufficientPathsError
from .geometry import PathObservation
from .wls import EstimateVector, estimate_position


class OrderingMode(str, Enum):
    DELAY = "delay"
    AMPLITUDE = "amplitude"


@dataclass(frozen=True, eq=False)
class LocalizationResult:
    position: np.ndarray
    clock_bias: float
    paths_used: int
    residual_series: tuple[float, ...]
    detection: DetectionOutcome | None
    per_step_estimates: tuple[EstimateVector, ...]
    fallback_all_paths: bool
    estimate: EstimateVector
    order: tuple[int, ...]

    @property
    def used_indices(self) -> tuple[int, ...]:
        """Input indices of the paths that entered the final estimate."""
        return self.order[: self.paths_used]


def order_indices(paths: Sequence[PathObservation], mode=OrderingMode.DELAY) -> list[int]:
    mode = OrderingMode(mode)
    if mode is OrderingMode.DELAY:
        return sorted(range(len(paths)), key=lambda i: paths[i].toa)
    return sorted(range(len(paths)), key=lambda i: -paths[i].gain)


def order_paths(paths: Sequence[PathObservation], mode=OrderingMode.DELAY) -> list[PathObservation]:
    """Stable sort by ascending delay or descending amplitude."""
    return [paths[i] for i in order_indices(paths, mode)]


def grow_estimates(
    paths: Sequence[PathObservation],
    mode=OrderingMode.DELAY,
    weight_mode: str = "gain",
    tx=(0.0, 0.0, 0.0),
) -> tuple[list[float], list[EstimateVector]]:
    """Full residual series and per-step estimates, without stopping early."""
    if len(paths) < 2:
        raise InsufficientPathsError(f"need at least 2 paths, got {len(paths)}")
    ordered = order_paths(paths, mode)
    steps = [estimate_position(ordered[:m], weight_mode, tx) for m in range(2, len(ordered) + 1)]
    residuals = [float(np.linalg.norm(e.position - steps[0].position)) for e in steps]
    residuals[0] = 0.0
    return residuals, steps


def run(
    paths: Sequence[PathObservation],
    mode=OrderingMode.DELAY,
    weight_mode: str = "gain",
    detector: DetectorConfig | None = None,
    tx=(0.0, 0.0, 0.0),
) -> LocalizationResult:
    """Localize from ordered paths, excluding those after a detected slope change.

    Step t estimates from the first t+1 ordered paths and appends
    ``||p(t) - p(1)||`` to the residual series. The detector is evaluated after
    every append. A change point k means residuals 1..k are pre-change, so the
    final estimate uses the first k+1 paths (never fewer than 2). Without a
    detection all paths are used.
    """
    n = len(paths)
    if n < 2:
        raise InsufficientPathsError(f"need at least 2 paths, got {n}")
    detector = detector or DetectorConfig()
    order = tuple(order_indices(paths, mode))
    ordered = [paths[i] for i in order]

    def solve(count: int) -> EstimateVector:
        return estimate_position(ordered[:count], weight_mode, tx)

    first = solve(2)
    steps = [first]
    residuals = [0.0]
    if n == 2:
        return LocalizationResult(
            position=first.position,
            clock_bias=first.clock_bias,
            paths_used=2,
            residual_series=(0.0,),
            detection=None,
            per_step_estimates=(first,),
            fallback_all_paths=False,
            estimate=first,
            order=order,
        )

    outcome = None
    last_stat = 0.0
    for t in range(2, n):
        est = solve(t + 1)
        steps.append(est)
        residuals.append(float(np.linalg.norm(est.position - first.position)))
        stat, k = max_statistic(residuals, t, detector)
        if k is None:
            continue
        last_stat = stat
        if stat >= detector.threshold:
            outcome = DetectionOutcome(
                detected=True,
                statistic=stat,
                stop_index=t,
                change_point=k,
                slope_estimate=slope_mle(residuals, k, t, detector.baseline_mean),
            )
            break

    if outcome is None:
        outcome = DetectionOutcome(detected=False, statistic=last_stat)
        used = n
    else:
        used = max(2, outcome.change_point + 1)

    final = steps[used - 2]
    if not final.identifiable:
        for cand in steps[: used - 1]:
            if cand.identifiable:
                final = cand
                used = cand.n_paths
                break

    return LocalizationResult(
        position=final.position,
        clock_bias=final.clock_bias,
        paths_used=used,
        residual_series=tuple(residuals),
        detection=outcome,
        per_step_estimates=tuple(steps),
        fallback_all_paths=not outcome.detected,
        estimate=final,
        order=order,
    )
