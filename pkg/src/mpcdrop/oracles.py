"""Independent brute-force references used by tests and benchmarks.

Everything here is implemented from scratch on plain numpy (no imports from
the protocol stack), so agreement between an oracle and the secure path is
evidence, not tautology.  Float oracles serve tolerance checks; the *_q
family mirrors fixed-point arithmetic semantics bit-exactly for keep-set
equality checks.
"""
import numpy as np

from .errors import DomainError


def sort_median(v):
    """Rank-ceil(len/2) smallest element via a full ascending sort.

    For even length this is the len/2-th smallest, matching the convention
    that keeping strictly-greater scores retains exactly half the tokens.
    """
    v = np.asarray(v)
    if v.size == 0:
        raise DomainError("median of an empty vector")
    return np.sort(v, kind="stable")[(v.size + 1) // 2 - 1]


def select_rank(v, k):
    """k-th smallest (1-indexed) by an independent quickselect routine."""
    items = list(v)
    if not 1 <= k <= len(items):
        raise DomainError(f"rank {k} out of range for length {len(items)}")
    rng = np.random.default_rng(0xC0FFEE)
    lo = items
    while True:
        pivot = lo[int(rng.integers(len(lo)))]
        below = [x for x in lo if x < pivot]
        equal = [x for x in lo if x == pivot]
        if k <= len(below):
            lo = below
        elif k <= len(below) + len(equal):
            return pivot
        else:
            k -= len(below) + len(equal)
            lo = [x for x in lo if x > pivot]


def masked_mean(v, mask):
    v = np.asarray(v, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DomainError("masked mean over an empty selection")
    return float(v[mask].mean())


def stable_filter(tokens, keep_bits):
    """Kept rows in original order."""
    tokens = np.asarray(tokens)
    keep = np.asarray(keep_bits).astype(bool)
    if len(tokens) != len(keep):
        raise DomainError("tokens and keep bits must have equal length")
    return tokens[keep]


# -- scoring references (float) ----------------------------------------------

def expsum_scores(A):
    """Unnormalized exponential column sums: the sort-baseline's scorer.

    score_j = sum over heads and rows of exp(A_hij - rowmax_hi); the division
    by the row sum (the second softmax phase) is deliberately omitted.
    """
    A = np.asarray(A, dtype=np.float64)
    mx = A.max(axis=-1, keepdims=True)
    return np.exp(A - mx).sum(axis=tuple(range(A.ndim - 1)))


def expsum_scores_alt(A):
    """Loop-based reimplementation of expsum_scores for cross-checking."""
    A = np.asarray(A, dtype=np.float64)
    heads = A.reshape(-1, A.shape[-2], A.shape[-1])
    m = A.shape[-1]
    out = np.zeros(m)
    for head in heads:
        for i in range(head.shape[0]):
            row = head[i]
            mx = row[0]
            for x in row[1:]:
                if x > mx:
                    mx = x
            for j in range(m):
                out[j] += float(np.exp(row[j] - mx))
    return out


def maxnorm_row(row, offset=0.0, n_exp=2):
    """(x - max) / (max + offset)^n for one row; max must exceed -offset."""
    row = np.asarray(row, dtype=np.float64)
    mx = row.max()
    denom = mx + offset
    if denom <= 0:
        raise DomainError("row maximum (plus offset) must be positive")
    return (row - mx) / denom**n_exp


def maxnorm_scores(A, offset=0.0, n_exp=2):
    """Column sums of max-relative normalized rows, summed over heads."""
    A = np.asarray(A, dtype=np.float64)
    mx = A.max(axis=-1, keepdims=True)
    denom = mx + offset
    if np.any(denom <= 0):
        raise DomainError("row maximum (plus offset) must be positive")
    return ((A - mx) / denom**n_exp).sum(axis=tuple(range(A.ndim - 1)))


# -- fixed-point-faithful mirrors ---------------------------------------------

def encode_q(x, f):
    """Quantize reals to the fixed-point grid used by the secure path."""
    return np.round(np.asarray(x, dtype=np.float64) * (1 << f)).astype(np.int64)


def _trunc_q(p, f):
    # arithmetic shift with round-half-up, matching dealer truncation
    return (p + (1 << (f - 1))) >> f


def _recip_q(v, f):
    num = 1 << (2 * f)
    return (2 * num + v) // (2 * v)


def maxnorm_rows_q(A_q, f, offset, n_exp=2):
    """Integer mirror of the secure normalization over rows (last axis)."""
    A_q = np.asarray(A_q, dtype=np.int64)
    mx = A_q.max(axis=-1, keepdims=True)
    denom = mx + encode_q(offset, f)
    if np.any(denom <= 0):
        raise DomainError("row maximum (plus offset) must be positive")
    r = _recip_q(denom, f)
    y = A_q - mx
    for _ in range(n_exp):
        y = _trunc_q(y * r, f)
    return y


def maxnorm_scores_q(A_q, f, offset, n_exp=2):
    return maxnorm_rows_q(A_q, f, offset, n_exp).sum(axis=tuple(range(np.ndim(A_q) - 1)))


def keep_set_q(scores_q, keep_count):
    """Indices kept by the half-drop rule on quantized scores.

    Ranks by (score, index) ascending and keeps the top ``keep_count``:
    exactly the tie-broken rule the oblivious path implements.
    """
    scores_q = np.asarray(scores_q)
    order = np.lexsort((np.arange(len(scores_q)), scores_q))
    kept = np.sort(order[len(scores_q) - keep_count:])
    return kept
