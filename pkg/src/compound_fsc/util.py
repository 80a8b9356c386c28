"""Small numeric helpers used throughout the package.

All information quantities are in nats; conversion to bits happens only at
output boundaries (CLI, reports).
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import ValidationError

LN2 = math.log(2.0)


def xlogy(x, y):
    """Elementwise x*log(y) with the convention 0*log(0) = 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    mask = x > 0
    out[mask] = x[mask] * np.log(y[mask])
    return out


def entropy_nats(p) -> float:
    """Entropy of a probability vector, in nats."""
    p = np.asarray(p, dtype=float)
    return float(-xlogy(p, p).sum())


def binary_entropy_nats(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def l1_distance(p, q) -> float:
    return float(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)).sum())


def project_rows_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of v onto the probability simplex.

    Sort-based algorithm; exact up to float rounding.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n = v.shape[1]
    u = np.sort(v, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    # rho: last index where the condition holds, guaranteed >= 1
    rho = n - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(v.shape[0]), rho - 1] / rho
    w = np.maximum(v - theta[:, None], 0.0)
    return w


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if trials <= 0:
        raise ValidationError("trials must be positive")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def mixed_radix_index(digits, base: int) -> int:
    """Integer code of a digit string, earliest digit most significant."""
    h = 0
    for d in digits:
        h = h * base + int(d)
    return h


def enumerate_paths(card: int, length: int) -> np.ndarray:
    """All sequences of given length over {0..card-1} as an int matrix.

    Row order matches mixed_radix_index: row k encodes the digits of k.
    """
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((card,) * length).reshape(length, -1).T
    return np.ascontiguousarray(grids, dtype=np.int64)


def worker_count() -> int:
    """Thread budget taken from COMPOUND_FSC_THREADS (0 or unset = auto)."""
    raw = os.environ.get("COMPOUND_FSC_THREADS", "0")
    try:
        k = int(raw)
    except ValueError:
        raise ValidationError(f"COMPOUND_FSC_THREADS must be an integer, got {raw!r}")
    if k < 0:
        raise ValidationError("COMPOUND_FSC_THREADS must be >= 0")
    if k == 0:
        return min(4, os.cpu_count() or 1)
    return k
