"""Token-importance scoring on the raw (pre-softmax) attention matrix.

Scores are computed per attention row as the deviation from the row maximum,
scaled by a reciprocal power of that maximum: (x - max) / (max + offset)^n.
The row maximum maps to zero, large maxima compress magnitudes, and in-row
ordering is preserved.  Column sums over all heads and rows yield one score
per token, entirely with local additions.

The public ``offset`` shifts every row maximum into positive territory (a
uniform monotone shift, so ordering is unaffected); ``n_exp`` is a public
hyperparameter and never depends on data.
"""
import numpy as np

from .errors import DomainError
from .protocol import Protocol
from .ring import encode_fixed
from .sharing import Shares


def _concat(a: Shares, b: Shares, axis=-1) -> Shares:
    return Shares(np.concatenate([a.s0, b.s0], axis=axis),
                  np.concatenate([a.s1, b.s1], axis=axis))


def secure_row_max(proto: Protocol, rows: Shares) -> Shares:
    """Tournament maximum along the last axis: len-1 cmp and len-1 mux per row.

    Cost is attributed to the softmax stage: the maximum is a prerequisite
    of the softmax evaluation and is treated as already paid for there.
    """
    length = rows.shape[-1]
    if length < 1:
        raise DomainError("row maximum of an empty row")
    cur = rows
    with proto.ledger.stage("softmax"):
        while cur.shape[-1] > 1:
            n = cur.shape[-1]
            half = n // 2
            a = cur[..., :half]
            b = cur[..., half:2 * half]
            bit = proto.cmp(a, b)
            mx = proto.mux(bit, b, a)
            if n % 2:
                mx = _concat(mx, cur[..., 2 * half:])
            cur = mx
    return cur[..., 0]


def normalize_rows(proto: Protocol, rows: Shares, row_max: Shares = None,
                   n_exp: int = 2, offset: float = 0.0) -> Shares:
    """Max-relative normalization of each row (last axis).

    Reconstructs to (x - max) / (max + offset)^n_exp within fixed-point
    tolerance: one reciprocal per row plus n_exp truncating multiplications
    per element.  Requires max + offset > 0.
    """
    if n_exp < 1:
        raise DomainError("normalization exponent must be >= 1")
    if row_max is None:
        row_max = secure_row_max(proto, rows)
    with proto.ledger.stage("scoring"):
        denom = proto.add_public(row_max, encode_fixed(offset, proto.params))
        recip = proto.recip_fixed(denom)
        recip_col = recip.reshape(*recip.shape, 1)
        y = proto.sub(rows, row_max.reshape(*row_max.shape, 1))
        for _ in range(n_exp):
            y = proto.mul(y, recip_col, fixed=True)
    return y


def aggregate_scores(proto: Protocol, attention: Shares, n_exp: int = 2,
                     offset: float = 0.0) -> Shares:
    """Per-token scores from shared attention of shape (heads, m, m).

    Normalizes every row of every head, then column-sums across heads and
    rows (local, free).  Returns shares of length m.
    """
    if attention.shape[-1] != attention.shape[-2]:
        raise DomainError("attention must be square per head")
    heads, m, _ = attention.shape
    rows = attention.reshape(heads * m, m)
    mx = secure_row_max(proto, rows)
    norm = normalize_rows(proto, rows, mx, n_exp=n_exp, offset=offset)
    return proto.sum_shares(norm.reshape(heads, m, m), axis=(0, 1))


# -- synthetic inputs ---------------------------------------------------------

def synthetic_attention(rng, m, d_model=32, heads=4):
    """Random scaled attention logits (heads, m, m): Q K^T / sqrt(d/H)."""
    dh = d_model // heads
    A = np.empty((heads, m, m))
    for h in range(heads):
        Q = rng.normal(size=(m, dh))
        K = rng.normal(size=(m, dh))
        A[h] = Q @ K.T / np.sqrt(dh)
    return A


def synthetic_scores(rng, m, d_model=32, heads=4, n_exp=2, offset=8.0):
    """Plaintext score vectors shaped like aggregated normalized attention.

    The default input for median benchmarks: smooth, gradually decreasing
    when sorted, mean close to the median.
    """
    A = synthetic_attention(rng, m, d_model, heads)
    mx = A.max(axis=2, keepdims=True)
    return ((A - mx) / (mx + offset) ** n_exp).sum(axis=(0, 1))


def synthetic_scores_batch(rng, trials, m, d_model=32, heads=4, n_exp=2, offset=8.0):
    """Vectorized batch of score vectors, shape (trials, m); for benchmarks."""
    dh = d_model // heads
    out = np.empty((trials, m))
    step = max(1, (1 << 24) // (heads * m * m))  # chunk to bound temporaries
    for lo in range(0, trials, step):
        hi = min(trials, lo + step)
        Q = rng.normal(size=(hi - lo, heads, m, dh))
        K = rng.normal(size=(hi - lo, heads, m, dh))
        A = Q @ K.transpose(0, 1, 3, 2)
        A /= np.sqrt(dh)
        mx = A.max(axis=3, keepdims=True)
        A -= mx
        mx += offset
        mx **= n_exp
        A /= mx
        out[lo:hi] = A.sum(axis=(1, 2))
    return out
