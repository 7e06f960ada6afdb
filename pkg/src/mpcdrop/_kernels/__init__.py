"""Kernel backend selection.

The hot ring-arithmetic loops have two interchangeable implementations: a
compiled Cython core (``_core``) and a pure-numpy fallback (``_numpy``).
Selection happens once at import:

  * ``MPCDROP_BACKEND=c``      require the compiled core (ImportError if absent)
  * ``MPCDROP_BACKEND=numpy``  force the fallback
  * unset / ``auto``           compiled core if importable, else fallback

``mpcdrop backend-bench`` compares the two on representative workloads.
"""
import os

import numpy as np

from . import _numpy

_impl = None
_requested = os.environ.get("MPCDROP_BACKEND", "auto").lower()

if _requested in ("auto", "c"):
    try:
        from . import _core as _impl
    except ImportError:
        if _requested == "c":
            raise
        _impl = None
if _impl is None:
    _impl = _numpy


def backend_name():
    return _impl.NAME


def get_backend(name):
    """Return a raw backend module by name ('c' or 'numpy'); for benchmarks."""
    if name == "numpy":
        return _numpy
    from . import _core

    return _core


def _flat(x):
    return np.ascontiguousarray(np.asarray(x, dtype=np.uint64).ravel())


def _flat_i64(x):
    return np.ascontiguousarray(np.asarray(x, dtype=np.int64).ravel())


if _impl.NAME == "numpy":
    add = _impl.add
    sub = _impl.sub
    neg = _impl.neg
    mul = _impl.mul
    scale = _impl.scale
    to_signed = _impl.to_signed
    from_signed = _impl.from_signed
    lt_signed = _impl.lt_signed
    trunc_round = _impl.trunc_round
    beaver_combine = _impl.beaver_combine

    def sum_mod(a, mask):
        return np.uint64(_impl.sum_mod(a, mask))

else:
    # The C kernels take 1-D contiguous arrays; broadcast and reshape here.
    def _binary(fn):
        def wrapped(a, b, mask):
            a = np.asarray(a, dtype=np.uint64)
            b = np.asarray(b, dtype=np.uint64)
            if a.shape != b.shape:
                a, b = np.broadcast_arrays(a, b)
            if a.ndim == 1 and a.flags.c_contiguous and b.flags.c_contiguous:
                return fn(a, b, mask)
            return fn(_flat(a), _flat(b), mask).reshape(a.shape)

        return wrapped

    add = _binary(_impl.add)
    sub = _binary(_impl.sub)
    mul = _binary(_impl.mul)

    def neg(a, mask):
        a = np.asarray(a, dtype=np.uint64)
        return _impl.neg(_flat(a), mask).reshape(a.shape)

    def scale(a, k, mask):
        a = np.asarray(a, dtype=np.uint64)
        return _impl.scale(_flat(a), k & 0xFFFFFFFFFFFFFFFF, mask).reshape(a.shape)

    def sum_mod(a, mask):
        return np.uint64(_impl.sum_mod(_flat(a), mask))

    def to_signed(a, ell):
        a = np.asarray(a, dtype=np.uint64)
        return _impl.to_signed(_flat(a), ell).reshape(a.shape)

    def from_signed(s, mask):
        s = np.asarray(s, dtype=np.int64)
        return _impl.from_signed(_flat_i64(s), mask).reshape(s.shape)

    def lt_signed(a, b, ell):
        a, b = np.broadcast_arrays(
            np.asarray(a, dtype=np.uint64), np.asarray(b, dtype=np.uint64)
        )
        return _impl.lt_signed(_flat(a), _flat(b), ell).reshape(a.shape)

    def trunc_round(a, f, ell):
        a = np.asarray(a, dtype=np.uint64)
        return _impl.trunc_round(_flat(a), f, ell).reshape(a.shape)

    def beaver_combine(c, d, b, e, a, add_de, mask):
        arrs = np.broadcast_arrays(
            *(np.asarray(x, dtype=np.uint64) for x in (c, d, b, e, a))
        )
        shape = arrs[0].shape
        flat = [_flat(x) for x in arrs]
        return _impl.beaver_combine(
            flat[0], flat[1], flat[2], flat[3], flat[4], bool(add_de), mask
        ).reshape(shape)
