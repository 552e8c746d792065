"""Bessel J0, J1, J2 and Hankel H0(1), H1(1) for real nonnegative arguments.

Three regimes, each vectorized over numpy arrays:

* ascending power series for ``x < SERIES_MAX`` (J only),
* Miller backward recurrence normalized by ``J0 + 2 sum J_2k = 1`` for
  ``x < ASYMPTOTIC_MIN``; the same sweep feeds the Neumann series for Y0, Y1,
* Hankel asymptotic expansion for ``x >= ASYMPTOTIC_MIN``.
"""

import math

import numpy as np

SERIES_MAX = 4.0
ASYMPTOTIC_MIN = 25.0

_EULER_GAMMA = 0.57721566490153286061
_RESCALE_AT = 1e250


def _as_argument(x, *, positive=False):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Bessel argument must be finite")
    if positive:
        if np.any(arr <= 0):
            raise ValueError("Hankel argument must be strictly positive (log singularity at 0)")
    elif np.any(arr < 0):
        raise ValueError("Bessel argument must be nonnegative")
    return arr


def _series_j(order, x):
    # sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!)
    half = 0.5 * x
    q = -half * half
    term = half**order / math.factorial(order)
    total = term.copy()
    for k in range(1, 40):
        term = term * q / (k * (k + order))
        total += term
    return total


def _miller(x):
    """Backward recurrence returning (J0, J1, J2, Y0, Y1) for 0 < x < ASYMPTOTIC_MIN."""
    xmax = float(np.max(x))
    start = int(xmax + 30 + 8 * math.sqrt(xmax + 1))
    start += start % 2  # even
    inv = 2.0 / x
    j_next = np.zeros_like(x)      # J_{n+1}
    j_cur = np.full_like(x, 1e-300)  # J_n
    # accumulators (unnormalized)
    norm = np.zeros_like(x)         # J0 + 2 sum_{k>=1} J_2k
    s_y0 = np.zeros_like(x)         # sum_{k>=1} (-1)^k J_2k / k
    s_y1 = np.zeros_like(x)         # sum_{k>=1} (-1)^k (J_{2k-1} - J_{2k+1}) / k
    j_odd_above = np.zeros_like(x)  # J_{2k+1} remembered for the Y1 sum
    j0 = j1 = j2 = None
    for n in range(start, 0, -1):
        if n % 2 == 0:
            k = n // 2
            sign = -1.0 if k % 2 else 1.0
            norm += 2.0 * j_cur
            s_y0 += sign * j_cur / k
            j_odd_above = j_next
        else:
            k = (n + 1) // 2
            sign = -1.0 if k % 2 else 1.0
            # n = 2k-1 is the lower odd neighbour of J_2k
            s_y1 += sign * (j_cur - j_odd_above) / k
        if n == 2:
            j2 = j_cur
        if n == 1:
            j1 = j_cur
        j_prev = n * inv * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        big = np.abs(j_cur) > _RESCALE_AT
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE_AT, 1.0)
            j_cur = j_cur * scale
            j_next = j_next * scale
            norm *= scale
            s_y0 *= scale
            s_y1 *= scale
            j_odd_above = j_odd_above * scale
            if j2 is not None:
                j2 = j2 * scale
            if j1 is not None:
                j1 = j1 * scale
    j0 = j_cur
    norm += j0
    j0, j1, j2 = j0 / norm, j1 / norm, j2 / norm
    s_y0 /= norm
    s_y1 /= norm
    log_term = np.log(0.5 * x) + _EULER_GAMMA
    y0 = (2.0 / np.pi) * log_term * j0 - (4.0 / np.pi) * s_y0
    y1 = (2.0 / np.pi) * (log_term * j1 - j0 / x) + (2.0 / np.pi) * s_y1
    return j0, j1, j2, y0, y1


def _asymptotic(order, x):
    """Hankel expansion; returns (J_order, Y_order)."""
    mu = 4.0 * order * order
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 60):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if k % 2:
            q += (-1) ** ((k - 1) // 2) * term
        else:
            p += (-1) ** (k // 2) * term
        if np.max(np.abs(term)) < 1e-17:
            break
    chi = x - (0.5 * order + 0.25) * np.pi
    amp = np.sqrt(2.0 / (np.pi * x))
    c, s = np.cos(chi), np.sin(chi)
    return amp * (p * c - q * s), amp * (p * s + q * c)


def bessel_j(order, x):
    """J_order(x) for order in {0, 1, 2} and finite x >= 0.

    Scalars in, float out; arrays in, arrays out.
    """
    if order not in (0, 1, 2):
        raise ValueError(f"unsupported Bessel order {order!r}")
    arr = _as_argument(x)
    flat = arr.ravel()
    out = np.empty_like(flat)
    lo = flat < SERIES_MAX
    hi = flat >= ASYMPTOTIC_MIN
    mid = ~lo & ~hi
    if np.any(lo):
        out[lo] = _series_j(order, flat[lo])
    if np.any(mid):
        out[mid] = _miller(flat[mid])[order]
    if np.any(hi):
        out[hi] = _asymptotic(order, flat[hi])[0]
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def bessel_y(order, x):
    """Y_order(x) for order in {0, 1} and finite x > 0."""
    if order not in (0, 1):
        raise ValueError(f"unsupported Neumann order {order!r}")
    arr = _as_argument(x, positive=True)
    flat = arr.ravel()
    out = np.empty_like(flat)
    hi = flat >= ASYMPTOTIC_MIN
    if np.any(~hi):
        out[~hi] = _miller(flat[~hi])[3 + order]
    if np.any(hi):
        out[hi] = _asymptotic(order, flat[hi])[1]
    out = out.reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def hankel1(order, x):
    """H_order^(1)(x) = J_order(x) + i Y_order(x), order in {0, 1}, x > 0."""
    if order not in (0, 1):
        raise ValueError(f"unsupported Hankel order {order!r}")
    _as_argument(x, positive=True)
    return bessel_j(order, x) + 1j * bessel_y(order, x)
