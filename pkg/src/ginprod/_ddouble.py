"""Vectorized double-double arithmetic on numpy arrays.

A value is a pair ``(hi, lo)`` of float64 arrays with ``|lo| <= ulp(hi)/2``.
Only the handful of operations needed for partial-fraction sums are provided.
"""

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def add(a, b):
    s, e = two_sum(a[0], b[0])
    t, f = two_sum(a[1], b[1])
    e = e + t
    s, e = quick_two_sum(s, e)
    return quick_two_sum(s, e + f)


def neg(a):
    return -a[0], -a[1]


def mul(a, b):
    p, e = two_prod(a[0], b[0])
    e = e + (a[0] * b[1] + a[1] * b[0])
    return quick_two_sum(p, e)


def mul_d(a, b):
    p, e = two_prod(a[0], b)
    return quick_two_sum(p, e + a[1] * b)


def div(a, b):
    q1 = a[0] / b[0]
    r = add(a, neg(mul_d(b, q1)))
    q2 = r[0] / b[0]
    r = add(r, neg(mul_d(b, q2)))
    q3 = r[0] / b[0]
    q1, q2 = quick_two_sum(q1, q2)
    return add((q1, q2), (q3, np.zeros_like(q3)))


def from_double(a):
    a = np.asarray(a, dtype=float)
    return a, np.zeros_like(a)


def sum_axis(a, axis=-1):
    """Pairwise double-double reduction along ``axis``."""
    hi = np.moveaxis(np.asarray(a[0]), axis, -1)
    lo = np.moveaxis(np.asarray(a[1]), axis, -1)
    while hi.shape[-1] > 1:
        n = hi.shape[-1]
        if n % 2:
            pad = [(0, 0)] * (hi.ndim - 1) + [(0, 1)]
            hi = np.pad(hi, pad)
            lo = np.pad(lo, pad)
            n += 1
        hi, lo = add((hi[..., 0:n:2], lo[..., 0:n:2]), (hi[..., 1:n:2], lo[..., 1:n:2]))
    return hi[..., 0], lo[..., 0]
