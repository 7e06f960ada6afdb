"""Pure-numpy kernel backend.

All functions operate on ``np.uint64`` arrays holding ring elements and a
Python-int ``mask`` equal to 2**ell - 1.  Arithmetic relies on C wrap-around
semantics of unsigned 64-bit integers, then masks down to the ring width.
Signed helpers interpret values in two's complement at width ``ell``.
"""
import numpy as np

NAME = "numpy"


def _u64(x):
    return np.asarray(x, dtype=np.uint64)


def add(a, b, mask):
    with np.errstate(over="ignore"):
        return (_u64(a) + _u64(b)) & np.uint64(mask)


def sub(a, b, mask):
    with np.errstate(over="ignore"):
        return (_u64(a) - _u64(b)) & np.uint64(mask)


def neg(a, mask):
    with np.errstate(over="ignore"):
        return (np.uint64(0) - _u64(a)) & np.uint64(mask)


def mul(a, b, mask):
    with np.errstate(over="ignore"):
        return (_u64(a) * _u64(b)) & np.uint64(mask)


def scale(a, k, mask):
    """Multiply by a public integer constant (k taken mod 2**64)."""
    with np.errstate(over="ignore"):
        return (_u64(a) * np.uint64(k & 0xFFFFFFFFFFFFFFFF)) & np.uint64(mask)


def sum_mod(a, mask):
    """Ring sum of all elements, returned as a 0-d uint64 array."""
    with np.errstate(over="ignore"):
        return np.add.reduce(_u64(a).ravel(), dtype=np.uint64) & np.uint64(mask)


def to_signed(a, ell):
    """Two's-complement interpretation at width ell, as int64."""
    shift = 64 - ell
    with np.errstate(over="ignore"):
        widened = _u64(a) << np.uint64(shift)
    return widened.view(np.int64) >> np.int64(shift)


def from_signed(s, mask):
    return np.asarray(s, dtype=np.int64).view(np.uint64) & np.uint64(mask)


def lt_signed(a, b, ell):
    """Elementwise signed a < b, as a uint64 0/1 array."""
    return (to_signed(a, ell) < to_signed(b, ell)).astype(np.uint64)


def trunc_round(a, f, ell):
    """Arithmetic shift right by f with round-half-up on the signed value."""
    mask = (1 << ell) - 1
    s = to_signed(a, ell)
    with np.errstate(over="ignore"):
        t = (s + np.int64(1 << (f - 1))) >> np.int64(f)
    return from_signed(t, mask)


def beaver_combine(c, d, b, e, a, add_de, mask):
    """Fused Beaver reconstruction: c + d*b + e*a (+ d*e for party 0)."""
    m = np.uint64(mask)
    with np.errstate(over="ignore"):
        z = _u64(c) + _u64(d) * _u64(b) + _u64(e) * _u64(a)
        if add_de:
            z += _u64(d) * _u64(e)
    return z & m
