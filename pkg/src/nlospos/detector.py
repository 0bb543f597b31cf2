"""GLRT detection of a slope change in the mean of a residual sequence.

Under the null hypothesis the residuals are i.i.d. N(mu, sigma^2). Under the
alternative their mean grows as ``mu + s*(i - k)`` after an unknown change
point k. With the slope replaced by its maximum-likelihood estimate the GLR
statistic for a candidate ``(k, t)`` is ``U_{k,t}^2 / 2`` with

    U_{k,t} = sum_{i=k+1}^{t} (i-k) (x_i - mu) / (sigma * sqrt(A_{t-k})),
    A_tau   = 1^2 + ... + tau^2.

Sums use ``math.fsum`` so that results do not depend on summation order.
Residuals are indexed from 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

from .errors import ValidationError

SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class DetectorConfig:
    baseline_mean: float = 0.0
    baseline_sigma: float = 1.0
    threshold: float = 10.0
    min_post_samples: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.baseline_sigma) and self.baseline_sigma > 0):
            raise ValidationError(f"baseline_sigma must be > 0, got {self.baseline_sigma}")
        if not (math.isfinite(self.threshold) and self.threshold > 0):
            raise ValidationError(f"threshold must be > 0, got {self.threshold}")
        if int(self.min_post_samples) < 1:
            raise ValidationError(f"min_post_samples must be >= 1, got {self.min_post_samples}")
        if not math.isfinite(self.baseline_mean):
            raise ValidationError("baseline_mean must be finite")


@dataclass(frozen=True)
class DetectionOutcome:
    detected: bool
    statistic: float
    stop_index: int | None = None
    change_point: int | None = None
    slope_estimate: float | None = None


def _check_indices(n: int, k: int, t: int) -> None:
    if not 1 <= k < t <= n:
        raise IndexError(f"need 1 <= k < t <= {n}, got k={k}, t={t}")


def sum_of_squares(tau: int) -> int:
    """1^2 + 2^2 + ... + tau^2."""
    return tau * (tau + 1) * (2 * tau + 1) // 6


def slope_mle(series: Sequence[float], k: int, t: int, mean: float = 0.0) -> float:
    """Maximum-likelihood slope of the segment after change point ``k`` up to ``t``."""
    _check_indices(len(series), k, t)
    num = math.fsum((i - k) * (series[i - 1] - mean) for i in range(k + 1, t + 1))
    return num / sum_of_squares(t - k)


def glrt_statistic(series: Sequence[float], k: int, t: int, config: DetectorConfig) -> float:
    """``U_{k,t}^2 / 2`` for change point ``k`` and current time ``t``."""
    _check_indices(len(series), k, t)
    mu = config.baseline_mean
    w = math.fsum((i - k) * (series[i - 1] - mu) for i in range(k + 1, t + 1))
    w /= config.baseline_sigma
    return w * w / (2.0 * sum_of_squares(t - k))


def max_statistic(
    series: Sequence[float], t: int, config: DetectorConfig
) -> tuple[float, int | None]:
    """Largest statistic over admissible change points at time ``t`` and its argmax.

    Change points range over ``1 .. t - min_post_samples``; ties go to the
    smallest k. Returns ``(-inf, None)`` when no change point is admissible.
    """
    best, best_k = -math.inf, None
    for k in range(1, t - config.min_post_samples + 1):
        stat = glrt_statistic(series, k, t, config)
        if stat > best:
            best, best_k = stat, k
    return best, best_k


def detect(series: Sequence[float], config: DetectorConfig) -> DetectionOutcome:
    """First time ``t`` at which the maximized statistic reaches the threshold."""
    last = 0.0
    for t in range(2, len(series) + 1):
        stat, k = max_statistic(series, t, config)
        if k is None:
            continue
        last = stat
        if stat >= config.threshold:
            return DetectionOutcome(
                detected=True,
                statistic=stat,
                stop_index=t,
                change_point=k,
                slope_estimate=slope_mle(series, k, t, config.baseline_mean),
            )
    return DetectionOutcome(detected=False, statistic=last)


def threshold_for_alpha(alpha: float, horizon: int) -> float:
    """Threshold bounding the family-wise false-alarm rate by ``alpha``.

    Bonferroni over all ``horizon*(horizon-1)/2`` pairs (k, t); each
    ``U_{k,t}`` is standard normal under the null, so the per-pair two-sided
    level is alpha divided by the number of pairs.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0, 1), got {alpha}")
    if horizon < 2:
        raise ValidationError(f"horizon must be >= 2, got {horizon}")
    pairs = horizon * (horizon - 1) // 2
    z = -NormalDist().inv_cdf(alpha / pairs / 2.0)
    return 0.5 * z * z
