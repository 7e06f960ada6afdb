"""Ring parameters and fixed-point encoding over Z_{2^ell}.

Values live in the unsigned ring [0, 2^ell); the upper half denotes
negatives (two's complement).  Reals are carried as round(x * 2^frac).
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels as kern
from .errors import RangeError


@dataclass(frozen=True)
class RingParams:
    """Width and fixed-point scale of the arithmetic ring.

    ell:  ring bit width, 32..64
    frac: fractional bits; must satisfy 2 <= frac < ell - 8 so products
          keep headroom before truncation
    """

    ell: int = 64
    frac: int = 12

    def __post_init__(self):
        if not 32 <= self.ell <= 64:
            raise ValueError(f"ring width must be in [32, 64], got {self.ell}")
        if not 2 <= self.frac < self.ell - 8:
            raise ValueError(
                f"frac bits must satisfy 2 <= f < ell - 8, got f={self.frac}"
            )

    @property
    def modulus(self):
        return 1 << self.ell

    @property
    def mask(self):
        return (1 << self.ell) - 1

    @property
    def half(self):
        return 1 << (self.ell - 1)

    @property
    def scale(self):
        return 1 << self.frac

    @property
    def max_abs(self):
        """Largest representable magnitude in fixed point."""
        return float(2 ** (self.ell - self.frac - 1))


def encode_fixed(x, params: RingParams):
    """Encode reals as ring elements: round(x * 2^f) mod 2^ell.

    Raises RangeError when |x| >= 2^(ell - f - 1).
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise RangeError("cannot encode non-finite values")
    if np.any(np.abs(arr) >= params.max_abs):
        raise RangeError(
            f"value exceeds representable range (+-{params.max_abs:g})"
        )
    scaled = np.round(arr * params.scale).astype(np.int64)
    return kern.from_signed(scaled, params.mask)


def decode_fixed(v, params: RingParams):
    """Inverse of encode_fixed up to quantization 2^(-f-1)."""
    return kern.to_signed(v, params.ell).astype(np.float64) / params.scale


def encode_int(x, params: RingParams):
    """Embed signed integers (counts, indices, bits) directly in the ring."""
    return kern.from_signed(np.asarray(x, dtype=np.int64), params.mask)


def decode_int(v, params: RingParams):
    return kern.to_signed(v, params.ell)
