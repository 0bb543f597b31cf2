"""Stacked weighted least squares for joint position and clock-bias estimation.

Every LOS or single-bounce path n contributes three linear equations

    p_r - xi_n * u_n - c * tau_B * f_r,n + tau_xi,n * v_n = delta_n

with ``delta_n = p_t - c*toa_n*f_r,n``, ``u_n = c*toa_n*(f_t,n + f_r,n)`` and
``v_n = c*(f_t,n + f_r,n)``. The unknown vector is laid out as

    [p_r (3), xi_1..xi_N, tau_B, tau_xi,1..tau_xi,N]

Since ``u_n = toa_n * v_n``, the two per-path columns are parallel and the
design matrix always has an N-dimensional null space. That null space only
touches the per-path unknowns, so position and clock bias remain determined
as long as the remaining columns are independent. :class:`EstimateVector`
reports both the literal rank test (``rank_deficient``) and whether position
and clock bias are determined (``identifiable``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientPathsError, NumericalError, ValidationError
from .geometry import (
    SPEED_OF_LIGHT,
    PathObservation,
    as_vec3,
    direction_from_angles_rx,
    direction_from_angles_tx,
)

RANK_TOL = 1e-10
WEIGHT_MODES = ("gain", "uniform")


@dataclass(frozen=True, eq=False)
class StackedSystem:
    """Design matrix U (3N x 2N+4), right-hand side delta (3N) and per-path weights."""

    design_matrix: np.ndarray
    rhs: np.ndarray
    weights: np.ndarray

    @property
    def n_paths(self) -> int:
        return len(self.weights)

    def row_weights(self) -> np.ndarray:
        return np.repeat(self.weights, 3)

    def weighted(self) -> tuple[np.ndarray, np.ndarray]:
        """``W^(1/2) U`` and ``W^(1/2) delta``."""
        s = np.sqrt(self.row_weights())
        return self.design_matrix * s[:, None], self.rhs * s


@dataclass(frozen=True, eq=False)
class EstimateVector:
    position: np.ndarray
    xi: np.ndarray
    clock_bias: float
    tau_xi: np.ndarray
    condition_diagnostic: float
    rank_deficient: bool
    identifiable: bool = True

    @property
    def n_paths(self) -> int:
        return len(self.xi)

    def as_array(self) -> np.ndarray:
        """The unknown vector in canonical column order."""
        return np.concatenate([self.position, self.xi, [self.clock_bias], self.tau_xi])

    @classmethod
    def from_array(cls, mu: np.ndarray, **diagnostics) -> "EstimateVector":
        n = (len(mu) - 4) // 2
        return cls(
            position=mu[:3].copy(),
            xi=mu[3 : 3 + n].copy(),
            clock_bias=float(mu[3 + n]),
            tau_xi=mu[4 + n :].copy(),
            **diagnostics,
        )


def path_weights(gains: Sequence[float], mode: str = "gain") -> np.ndarray:
    """Normalized per-path weights: proportional to gain, or uniform."""
    gains = np.asarray(gains, dtype=float)
    if gains.size == 0:
        raise InsufficientPathsError("no paths to weight")
    if mode == "uniform":
        return np.full(gains.size, 1.0 / gains.size)
    if mode != "gain":
        raise ValidationError(f"unknown weight mode {mode!r}; expected one of {WEIGHT_MODES}")
    if np.any(gains < 0) or not np.all(np.isfinite(gains)):
        raise ValidationError("gains must be finite and non-negative")
    total = gains.sum()
    if total <= 0:
        raise ValidationError("gain-normalized weights need at least one positive gain")
    return gains / total


def build_system(
    paths: Sequence[PathObservation], weights: Sequence[float], tx=(0.0, 0.0, 0.0)
) -> StackedSystem:
    """Stack the per-path equations for a transmitter at ``tx``."""
    n = len(paths)
    if n < 2:
        raise InsufficientPathsError(f"need at least 2 paths, got {n}")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (n,):
        raise ValidationError(f"expected {n} weights, got shape {weights.shape}")
    tx = as_vec3(tx, "tx")

    c = SPEED_OF_LIGHT
    U = np.zeros((3 * n, 2 * n + 4))
    delta = np.zeros(3 * n)
    for i, obs in enumerate(paths):
        f_t = direction_from_angles_tx(obs.aod)
        f_r = direction_from_angles_rx(obs.aoa)
        v = c * (f_t + f_r)
        rows = slice(3 * i, 3 * i + 3)
        U[rows, 0:3] = np.eye(3)
        U[rows, 3 + i] = -obs.toa * v
        U[rows, 3 + n] = -c * f_r
        U[rows, 4 + n + i] = v
        delta[rows] = tx - c * obs.toa * f_r
    return StackedSystem(U, delta, weights)


def solve_wls(system: StackedSystem, rcond: float = RANK_TOL) -> EstimateVector:
    """Minimize ``||W^(1/2) (U mu - delta)||`` by truncated SVD.

    Columns are equilibrated before factorizing: the clock-bias columns carry a
    factor c and would otherwise swamp the position columns. On a full-rank
    system the result is the unique minimizer; otherwise it is the minimum-norm
    minimizer in equilibrated coordinates.
    """
    A, b = system.weighted()
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise NumericalError("stacked system has non-finite entries")
    m, k = A.shape

    col_norm = np.linalg.norm(A, axis=0)
    scale = 1.0 / np.where(col_norm > 0, col_norm, 1.0)
    try:
        sv = np.linalg.svd(A, compute_uv=False)
        Q, s, Vt = np.linalg.svd(A * scale, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc

    smin = sv[-1] if m >= k else 0.0
    rank_deficient = bool(smin < rcond * sv[0])
    condition = math.inf if smin == 0.0 else float(sv[0] / smin)

    rank = int(np.count_nonzero(s > rcond * s[0]))
    coeffs = (Q[:, :rank].T @ b) / s[:rank]
    mu = scale * (Vt[:rank].T @ coeffs)

    # position and clock bias are determined iff the null space does not reach them
    null = Vt[rank:]
    n = system.n_paths
    core = [0, 1, 2, 3 + n]
    identifiable = bool(null.size == 0 or np.max(np.abs(null[:, core])) < 1e-8)

    return EstimateVector.from_array(
        mu,
        condition_diagnostic=condition,
        rank_deficient=rank_deficient,
        identifiable=identifiable,
    )


def estimate_position(
    paths: Sequence[PathObservation],
    weight_mode: str = "gain",
    tx=(0.0, 0.0, 0.0),
) -> EstimateVector:
    """Weights, stacked system and WLS solve in one call."""
    weights = path_weights([p.gain for p in paths], weight_mode)
    return solve_wls(build_system(paths, weights, tx))
