"""Integer-order Bessel functions of the first kind.

Miller's backward recurrence, normalised with ``J_0 + 2 sum_k J_2k = 1``.
"""
from __future__ import annotations

from math import exp, lgamma, log

import numpy as np

SERIES_BELOW = 1e-3


def _start_order(x: float, n_max: int) -> int:
    # start well above both the requested order and the turning point
    return int(max(n_max, abs(x)) + 20 + 2 * np.sqrt(max(n_max, abs(x)) + 1) * 3)


def besselj_orders(n_max: int, x: float) -> np.ndarray:
    """Return ``[J_0(x), J_1(x), ..., J_{n_max}(x)]``."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    x = float(x)
    out = np.zeros(n_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    sign = 1.0
    if x < 0:
        x, sign = -x, -1.0
    if x < SERIES_BELOW:
        out = _small_argument(n_max, x)
        if sign < 0:
            out[1::2] *= -1.0
        return out
    top = _start_order(x, n_max)
    top += top % 2
    vals = np.zeros(top + 2)
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    for k in range(top, 0, -1):
        vals[k] = j_cur
        j_prev = 2.0 * k / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > 1e250:
            vals[k:] *= 1e-250
            j_next *= 1e-250
            j_cur *= 1e-250
    vals[0] = j_cur
    norm = vals[0] + 2.0 * vals[2:top + 1:2].sum()
    out[:] = vals[: n_max + 1] / norm
    if sign < 0:
        out[1::2] *= -1.0
    return out


def _small_argument(n_max: int, x: float) -> np.ndarray:
    # ascending series; four terms reach double precision for x < 1e-3
    out = np.zeros(n_max + 1)
    q = -(x * x) / 4
    for n in range(n_max + 1):
        lead = n * (log(x) - log(2.0)) - lgamma(n + 1)
        if lead < -745:
            break
        term, total = 1.0, 1.0
        for m in range(1, 5):
            term *= q / (m * (m + n))
            total += term
        out[n] = exp(lead) * total
    return out


def besselj(n: int, x: float) -> float:
    """``J_n(x)`` for integer ``n`` (negative orders via ``J_-n = (-1)^n J_n``)."""
    n = int(n)
    v = besselj_orders(abs(n), x)[abs(n)]
    return -v if (n < 0 and n % 2) else v
