"""Independent reference implementations used by the tests."""

import math
from fractions import Fraction

import numpy as np


def brute_force_detect(series, mean, sigma, threshold, min_post=1):
    """Scan every (t, k) directly from the defining formula, no shared helpers."""
    for t in range(2, len(series) + 1):
        best, best_k = None, None
        for k in range(1, t - min_post + 1):
            terms = [(i - k) * (series[i - 1] - mean) for i in range(k + 1, t + 1)]
            a = sum(j * j for j in range(1, t - k + 1))
            u = math.fsum(terms) / sigma
            stat = u * u / (2.0 * a)
            if best is None or stat > best:
                best, best_k = stat, k
        if best is not None and best >= threshold:
            return t, best_k, best
    return None


def exact_slope(series, k, t, mean=0):
    num = sum(Fraction(i - k) * (Fraction(series[i - 1]) - Fraction(mean)) for i in range(k + 1, t + 1))
    den = sum(Fraction(j * j) for j in range(1, t - k + 1))
    return num / den


def pinv_wls(U, b, w):
    """Dense pseudo-inverse of the row-weighted system (avoids squaring the condition number)."""
    s = np.sqrt(np.repeat(w, 3))
    return np.linalg.pinv(U * s[:, None]) @ (b * s)


def random_stacked_system(rng, n):
    """A stacked system with the WLS block layout whose per-path columns are independent."""
    U = np.zeros((3 * n, 2 * n + 4))
    b = rng.normal(size=3 * n) * 100
    for i in range(n):
        rows = slice(3 * i, 3 * i + 3)
        U[rows, :3] = np.eye(3)
        U[rows, 3 + i] = rng.normal(size=3) * 50
        U[rows, 3 + n] = rng.normal(size=3)
        U[rows, 4 + n + i] = rng.normal(size=3) * 3
    return U, b, rng.uniform(0.05, 1.0, n)
