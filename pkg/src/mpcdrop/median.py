"""Oblivious median selection over a secret-shared score vector.

The protocol finds the rank-N/2 smallest element (N even) while touching
every index with exactly one comparison and one select per round, in a fixed
schedule, so the access pattern reveals nothing about the data.  Eliminated
elements are never moved or removed: a secret alive-mask tracks the shrinking
candidate band (pseudo-partitioning).  The only values ever opened are the
per-round done bits, making the round count R the single public observable.

Round structure
  1. a randomly selected element is the first pivot, chosen through a
     dealer-issued one-hot mask jointly seeded by both parties;
  2. the masked average of the still-alive scores (the average tracks the
     median closely on smooth score distributions);
  3+. secret bracket interpolation (regula falsi on the two best enclosing
     pivots), with an average-pivot round every third round to bound tails;
     ``pivot_mode='avg'`` uses the masked average for every refinement round.

Scores are lifted to tie-free keys (score << c) + index before selection, so
exact duplicates cannot stall the search and the returned element is exact.
A round is "done" when the below-pivot count lands in {N/2 - 1, N/2}; a final
oblivious tournament then extracts the boundary element itself.  If the
search ever exhausts max_rounds it falls back to the sorting-network baseline
(correct on every input; counted under its own stage tag).

The sorting-network baseline (bitonic) is implemented alongside for exact
operation-count comparison: (N/4) log2(N) (log2(N)+1) comparators, each one
comparison and two selects.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as kern
from .errors import DomainError, ProtocolError
from .protocol import Protocol
from .sharing import Shares


@dataclass(frozen=True)
class MedianConfig:
    pivot_mode: str = "interp"        # 'interp' (default) or 'avg'
    divide_by_total: bool = False     # average pivot divides by constant N
    max_rounds: Optional[int] = None  # default 4*ceil(log2 N) + 8
    score_bound_bits: int = 14        # public |score| < 2^bits guarantee

    def rounds_limit(self, n):
        if self.max_rounds is not None:
            return self.max_rounds
        return 4 * math.ceil(math.log2(n)) + 8


@dataclass
class MedianResult:
    median: Shares                 # scalar share, score domain
    median_key: Shares             # scalar share, tie-broken key domain
    rounds: int                    # partition rounds (public via done bits)
    fell_back: bool
    key_shift: int
    keys: Shares
    first_pivot: Shares = None     # round-1 pivot (randomized element)
    alive_trail: list = field(default_factory=list)  # debug mode only


def default_max_rounds(n):
    return MedianConfig().rounds_limit(n)


def build_keys(proto: Protocol, scores: Shares):
    """Lift scores to distinct keys: (score << c) | index, c = ceil(log2 N)."""
    n = scores.shape[0]
    c = max(1, math.ceil(math.log2(n)))
    keys = proto.add_public(
        proto.scale_public(scores, 1 << c),
        np.arange(n, dtype=np.uint64),
    )
    return keys, c


def _key_bound(proto, cfg, c, n):
    bound = (1 << (proto.params.frac + cfg.score_bound_bits + c)) + n
    w = int(n).bit_length() + 1
    if bound * (1 << w) * 4 >= proto.params.modulus // 2:
        raise DomainError(
            "ring too narrow for tie-broken selection at this length; "
            "increase ell or lower score_bound_bits"
        )
    return bound, w


def random_pivot(proto: Protocol, keys: Shares, onehot: Shares) -> Shares:
    """Inner product of the score keys with a shared one-hot mask: n muls."""
    if onehot.shape != keys.shape:
        raise ProtocolError("one-hot mask length must match the score vector")
    return proto.dot_raw(onehot, keys)


def average_pivot(proto: Protocol, keys: Shares, alive: Shares,
                  divide_by_total: bool) -> Shares:
    """Masked average of the alive scores: n products, one free sum, one division.

    The division is by the secret alive count at the dealer (the count is
    never opened); ``divide_by_total`` switches to the public constant N, a
    variant reading under which the average drifts toward zero as the band
    shrinks.
    """
    masked = proto.mul_raw(alive, keys)
    total = proto.sum_shares(masked)
    if divide_by_total:
        return proto.div_public(total, keys.shape[0])
    count = proto.sum_shares(alive)
    return proto.div_secret(total, count)


def _interp_pivot(proto, lo_packed, hi_packed, k, w):
    """Bracket interpolation aimed at rank k + 1/2 (dealer ideal functionality).

    Priced as one secret division plus one multiplication; exchanges no
    comparisons or selects.
    """
    proto.ledger.add_recip(1)
    proto.ledger.add_mul(1)
    ell = proto.params.ell
    lo = int(kern.to_signed(proto.reconstruct(lo_packed), ell))
    hi = int(kern.to_signed(proto.reconstruct(hi_packed), ell))
    pl, bcl = lo >> w, lo - ((lo >> w) << w)
    ph, bch = hi >> w, hi - ((hi >> w) << w)
    num = 2 * (k - bcl) - 1
    den = 2 * (bch - bcl)
    p = pl + (ph - pl) * num // den
    p = min(max(p, pl + 1), max(ph - 1, pl + 1))
    return proto.dealer.share(kern.from_signed(np.int64(p), proto.params.mask))


def _masked_max(proto, values: Shares) -> Shares:
    """Tournament maximum of a vector: n-1 cmp + n-1 mux, fixed schedule."""
    cur = values
    while cur.shape[-1] > 1:
        n = cur.shape[-1]
        half = n // 2
        a, b = cur[..., :half], cur[..., half:2 * half]
        bit = proto.cmp(a, b, indices=np.arange(half))
        mx = proto.mux(bit, b, a, indices=np.arange(half))
        if n % 2:
            mx = Shares(np.concatenate([mx.s0, cur.s0[..., 2 * half:]]),
                        np.concatenate([mx.s1, cur.s1[..., 2 * half:]]))
        cur = mx
    return cur[..., 0]


def _use_average(cfg, r):
    """Pivot schedule for round r >= 2: averages at 2, 5, 8, ... in interp mode."""
    if cfg.pivot_mode == "avg":
        return True
    return (r - 2) % 3 == 0


def oblivious_median(proto: Protocol, scores: Shares, cfg: MedianConfig = None,
                     stage_tag: str = "median") -> MedianResult:
    """Select the rank-N/2 smallest score; returns shares of its exact value.

    N must be even and at least 2.  Reveals one done bit per round; every
    partition round costs exactly N+3 comparisons and N+3 selects, and the
    final extraction pass costs N-1 of each.
    """
    cfg = cfg or MedianConfig()
    n = scores.shape[0]
    if n < 2 or n % 2:
        raise DomainError("median selection expects an even vector of length >= 2")
    k = n // 2

    with proto.ledger.stage(stage_tag):
        keys, c = build_keys(proto, scores)
        bound, w = _key_bound(proto, cfg, c, n)
        if np.any(np.abs(kern.to_signed(proto.reconstruct(scores), proto.params.ell))
                  >= (bound - n) >> c):
            raise DomainError("scores exceed the public bound for key-space selection")

        if proto.trace is not None:
            proto.trace.set_round(0)
        onehot = proto.dealer.onehot_pair(n)
        pivot = random_pivot(proto, keys, onehot)
        first_pivot = pivot

        pack = lambda p, bc: p * (1 << w) + bc
        lo_packed = proto.share_int(pack(-bound, 0))
        hi_packed = proto.share_int(pack(bound, n))
        alive = proto.const_shares(np.ones(n, dtype=np.uint64))
        thresholds = proto.share_int(np.array([k - 1, k + 1, k], dtype=np.int64))
        idx = np.arange(n)
        result = None
        trail = []

        max_rounds = cfg.rounds_limit(n)
        rounds_used = 0
        for r in range(1, max_rounds + 1):
            rounds_used = r
            if proto.trace is not None:
                proto.trace.set_round(r)

            below = proto.cmp(keys, pivot, indices=idx)            # n cmp
            bc = proto.sum_shares(below)                           # free
            below_alive = proto.mul_raw(below, alive)              # n AND products

            bits3 = proto.cmp(proto._broadcast(bc, (3,)), thresholds)  # 3 cmp
            ge_km1 = proto.bit_not(bits3[0:1])
            le_k = bits3[1:2]
            side = proto.bit_not(bits3[2:3])                       # [k <= bc]

            # one batched select updates the done bit and both brackets
            packed_cur = proto.add(proto.scale_public(pivot, 1 << w), bc)
            sel = _stack3(ge_km1, side, side)
            takes = _stack3(le_k, packed_cur, lo_packed)
            keeps = _stack3(proto.zeros((1,)), hi_packed, packed_cur)
            picked = proto.mux(sel, takes, keeps)                  # 3 mux
            gap = picked[0:1]
            hi_packed = picked[1:2].reshape(())
            lo_packed = picked[2:3].reshape(())

            alive = proto.mux(side, below_alive,
                              proto.sub(alive, below_alive), indices=idx)  # n mux
            if proto.debug:
                trail.append(kern.to_signed(proto.reconstruct(alive),
                                            proto.params.ell).copy())

            done = int(proto.open(gap)[0])
            if done:
                if proto.trace is not None:
                    proto.trace.set_round(r + 1)
                eq_k = proto.mul_raw(side, gap).reshape(())        # [bc == k]
                eq_km1 = proto.sub(gap.reshape(()), eq_k)          # [bc == k-1]
                low_cand = proto.mul_raw(below, proto.add_public(keys, kern.from_signed(
                    np.int64(bound), proto.params.mask)))           # below*(key + B)
                high_cand = proto.mul_raw(
                    proto.bit_not(below),
                    proto.sub(proto.const_shares(
                        kern.from_signed(np.int64(bound), proto.params.mask),
                        (n,)), keys))                               # (1-below)*(B - key)
                cand = proto.add(low_cand,
                                 proto.mul_raw(eq_km1, proto.sub(high_cand, low_cand)))
                vmax = _masked_max(proto, cand)                     # n-1 cmp + n-1 mux
                ans_k = proto.add_public(vmax, kern.from_signed(
                    np.int64(-bound), proto.params.mask))           # vmax - B
                ans_km1 = proto.sub(proto.const_shares(kern.from_signed(
                    np.int64(bound), proto.params.mask)), vmax)     # B - vmax
                key_out = proto.add(ans_k,
                                    proto.mul_raw(eq_km1, proto.sub(ans_km1, ans_k)))
                result = MedianResult(
                    median=proto.shift_down(key_out, c),
                    median_key=key_out,
                    rounds=r,
                    fell_back=False,
                    key_shift=c,
                    keys=keys,
                    first_pivot=first_pivot,
                )
                break

            if _use_average(cfg, r + 1):
                pivot = average_pivot(proto, keys, alive, cfg.divide_by_total)
            else:
                pivot = _interp_pivot(proto, lo_packed, hi_packed, k, w)

        if result is None:
            # strict-score key: ties at the median value drop with the median
            med = bitonic_median(proto, scores, stage_tag="median-fallback")
            keyed = proto.add_public(proto.scale_public(med, 1 << c),
                                     np.uint64(n - 1))
            result = MedianResult(median=med, median_key=keyed, rounds=rounds_used,
                                  fell_back=True, key_shift=c, keys=keys,
                                  first_pivot=first_pivot)
        result.alive_trail = trail
    return result


def _stack3(a: Shares, b: Shares, c: Shares) -> Shares:
    return Shares(
        np.stack([a.s0.reshape(()), b.s0.reshape(()), c.s0.reshape(())]),
        np.stack([a.s1.reshape(()), b.s1.reshape(()), c.s1.reshape(())]),
    )


# -- sorting-network baseline --------------------------------------------------

def bitonic_comparator_count(n):
    """(n/4) * log2(n) * (log2(n) + 1) compare-exchanges for power-of-two n."""
    lg = int(math.log2(n))
    if 1 << lg != n:
        raise DomainError("comparator count defined for powers of two")
    return (n // 4) * lg * (lg + 1)


def _shares_where(cond, a: Shares, b: Shares) -> Shares:
    """Public-condition mix of share arrays (free: the condition is public)."""
    return Shares(np.where(cond, a.s0, b.s0), np.where(cond, a.s1, b.s1))


def bitonic_sort_shares(proto: Protocol, values: Shares) -> Shares:
    """Oblivious ascending bitonic sort; 1 cmp + 2 mux per compare-exchange."""
    n = values.shape[0]
    if n & (n - 1):
        raise DomainError("bitonic network requires a power-of-two length")
    s0, s1 = values.s0.copy(), values.s1.copy()
    idx = np.arange(n)
    size = 2
    while size <= n:
        stride = size // 2
        while stride >= 1:
            sel = idx[(idx & stride) == 0]
            sel = sel[(sel | stride) < n]
            partner = sel | stride
            asc = (sel & size) == 0
            xi = Shares(s0[sel], s1[sel])
            xl = Shares(s0[partner], s1[partner])
            u = _shares_where(asc, xl, xi)
            v = _shares_where(asc, xi, xl)
            bit = proto.cmp(u, v)             # swap needed
            new_i = proto.mux(bit, xl, xi)
            new_l = proto.mux(bit, xi, xl)
            s0[sel], s1[sel] = new_i.s0, new_i.s1
            s0[partner], s1[partner] = new_l.s0, new_l.s1
            stride //= 2
        size *= 2
    return Shares(s0, s1)


def verify_partition_trace(lines, n, rounds):
    """Check the fixed-schedule coverage property of a selection trace.

    Every partition round 1..rounds must touch each index 0..n-1 exactly once
    with a comparison and exactly once with a select.  Returns (ok, message).
    """
    cmp_hits = {r: [] for r in range(1, rounds + 1)}
    mux_hits = {r: [] for r in range(1, rounds + 1)}
    for ev in lines:
        r, op, idx = ev["round"], ev["op"], ev["index"]
        if idx < 0 or not 1 <= r <= rounds:
            continue
        if op == "cmp":
            cmp_hits[r].append(idx)
        elif op == "mux":
            mux_hits[r].append(idx)
    want = list(range(n))
    for r in range(1, rounds + 1):
        if sorted(cmp_hits[r]) != want:
            return False, f"round {r}: cmp coverage broken ({len(cmp_hits[r])} hits)"
        if sorted(mux_hits[r]) != want:
            return False, f"round {r}: mux coverage broken ({len(mux_hits[r])} hits)"
    return True, "ok"


def traces_equal(lines_a, lines_b):
    """Byte-level access-pattern equality of two traces."""
    return list(lines_a) == list(lines_b)


def bitonic_median(proto: Protocol, scores: Shares,
                   stage_tag: str = "median-baseline") -> Shares:
    """Median via the full sorting network: rank N/2 = index N/2 - 1 ascending.

    Non-power-of-two inputs are padded with public +infinity sentinels, which
    sort to the top and leave the original ranks untouched.
    """
    n = scores.shape[0]
    with proto.ledger.stage(stage_tag):
        padded = 1 << max(1, math.ceil(math.log2(n)))
        if padded != n:
            sentinel = np.uint64(proto.params.half - 1)  # largest positive
            pad = proto.const_shares(np.full(padded - n, sentinel, dtype=np.uint64))
            scores = Shares(np.concatenate([scores.s0, pad.s0]),
                            np.concatenate([scores.s1, pad.s1]))
        ordered = bitonic_sort_shares(proto, scores)
    return ordered[n // 2 - 1].reshape(())
