"""Half-and-half token drop: keep bits, oblivious compaction, drop sites.

Tokens scoring strictly above the median are kept; an odd-even transposition
network then bubbles kept rows to the front of the sequence without revealing
which rows moved, and the tail half is discarded publicly.  All payloads that
must stay aligned (attention rows, attention columns, the value-projection
input, the residual stream) are compacted under the same keep bits.
"""
import numpy as np

from .errors import DomainError, ProtocolError
from .median import MedianConfig, MedianResult, oblivious_median
from .protocol import Protocol
from .scoring import aggregate_scores
from .sharing import Shares


def keep_bits(proto: Protocol, scores: Shares, median: Shares) -> Shares:
    """bit_i = [score_i > median], strict; N comparisons, one batch.

    With distinct scores exactly N/2 bits are set.  Equal-to-median scores
    drop with the median; the compaction's public tail truncation then tops
    the kept set back up to N/2 from the lowest surviving positions.
    """
    n = scores.shape[0]
    with proto.ledger.stage("drop-overhead"):
        return proto.cmp(proto._broadcast(median.reshape(1), (n,)), scores,
                         indices=np.arange(n))


def keep_bits_keyed(proto: Protocol, med: MedianResult) -> Shares:
    """Keep bits from the tie-broken key domain: exactly N/2 ones, always."""
    n = med.keys.shape[0]
    with proto.ledger.stage("drop-overhead"):
        return proto.cmp(proto._broadcast(med.median_key.reshape(1), (n,)),
                         med.keys, indices=np.arange(n))


def _as_2d(p: Shares):
    if p.s0.ndim == 1:
        return p.reshape(p.shape[0], 1), 1
    return p, p.shape[1]


def _swap_pass(proto, sel, s0, s1, left, right):
    """One batched conditional-transposition step: a mux pair per element.

    Both halves of every swap go through one batched select call, so a pass
    costs a single communication round however wide the payloads are.
    """
    w = s0.shape[1]
    rl = np.concatenate([s0[right], s0[left]], axis=1), \
        np.concatenate([s1[right], s1[left]], axis=1)
    lr = np.concatenate([s0[left], s0[right]], axis=1), \
        np.concatenate([s1[left], s1[right]], axis=1)
    out = proto.mux(sel, Shares(*rl), Shares(*lr))
    s0[left], s1[left] = out.s0[:, :w], out.s1[:, :w]
    s0[right], s1[right] = out.s0[:, w:], out.s1[:, w:]


def oblivious_compact(proto: Protocol, bits: Shares, payloads) -> tuple:
    """Stable front-compaction of kept rows via odd-even transposition.

    N passes of floor(N/2) conditional adjacent swaps; a swap fires when the
    left bit is 0 and the right bit is 1 (one Beaver AND per candidate pair),
    and every swapped value costs a mux pair.  The schedule is fixed, so the
    access pattern is data-independent.

    Returns (bits', payloads', schedule) still at full length; the caller
    truncates the public tail.  ``schedule`` holds the per-pass swap bits and
    can replay the same permutation over other payloads via
    ``apply_compaction`` without recomputing the swap conditions.
    """
    n = bits.shape[0]
    payloads = list(payloads)
    for p in payloads:
        if p.shape[0] != n:
            raise ProtocolError("payload length must match the bit vector")
    shaped = [_as_2d(p) for p in payloads]
    # bits travel in column 0 of one combined buffer, so a pass is exactly
    # one AND round plus one batched select round regardless of widths
    s0 = np.concatenate([bits.reshape(n, 1).s0] + [p.s0 for p, _ in shaped], axis=1).copy()
    s1 = np.concatenate([bits.reshape(n, 1).s1] + [p.s1 for p, _ in shaped], axis=1).copy()
    schedule = []

    with proto.ledger.stage("drop-overhead"):
        for pass_no in range(n):
            left = np.arange(pass_no % 2, n - 1, 2)
            if left.size == 0:
                schedule.append(None)
                continue
            right = left + 1
            bl = Shares(s0[left, 0], s1[left, 0])
            br = Shares(s0[right, 0], s1[right, 0])
            swap = proto.mul_raw(proto.bit_not(bl), br)  # left=0 and right=1
            _swap_pass(proto, swap.reshape(-1, 1), s0, s1, left, right)
            schedule.append(swap)

    out_bits = Shares(s0[:, 0], s1[:, 0])
    out_payloads = []
    offset = 1
    for orig, (_, w) in zip(payloads, shaped):
        chunk = Shares(s0[:, offset:offset + w], s1[:, offset:offset + w])
        out_payloads.append(chunk.reshape(n) if orig.s0.ndim == 1 else chunk)
        offset += w
    return out_bits, out_payloads, schedule


def apply_compaction(proto: Protocol, schedule, payload: Shares) -> Shares:
    """Replay a recorded swap schedule over another token-indexed payload.

    The swap conditions already exist in shares, so each pass costs only its
    mux pairs (one batched call, one round).
    """
    p2, _ = _as_2d(payload)
    n = p2.shape[0]
    s0, s1 = p2.s0.copy(), p2.s1.copy()
    with proto.ledger.stage("drop-overhead"):
        for pass_no, swap in enumerate(schedule):
            if swap is None:
                continue
            left = np.arange(pass_no % 2, n - 1, 2)
            right = left + 1
            _swap_pass(proto, swap.reshape(-1, 1), s0, s1, left, right)
    out = Shares(s0, s1)
    return out.reshape(*payload.shape) if payload.s0.ndim == 1 else out


def compact_tokens(proto: Protocol, tokens: Shares, bits: Shares) -> Shares:
    """Compact one token matrix (m, d) and truncate to the kept half."""
    m = tokens.shape[0]
    _, (packed,), _ = oblivious_compact(proto, bits, [tokens])
    return packed[: m // 2]


class DropPlan:
    """Public drop schedule: token counts halve at each listed layer index.

    The schedule is input-independent by design; every input of a task drops
    the same number of tokens at the same layers.
    """

    def __init__(self, drop_layers=(1, 5, 8), layers=12):
        self.drop_layers = tuple(sorted(drop_layers))
        self.layers = layers
        if any(l < 1 or l > layers for l in self.drop_layers):
            raise DomainError("drop layers must lie within the layer range")

    def is_drop_layer(self, layer):
        return layer in self.drop_layers

    def schedule(self, m0):
        """Token count entering each layer 1..layers."""
        counts = []
        m = m0
        for layer in range(1, self.layers + 1):
            counts.append(m)
            if self.is_drop_layer(layer):
                if m % 2:
                    raise DomainError("token count must be even at a drop site")
                m //= 2
        return counts


def drop_site(proto: Protocol, attention: Shares, v_input: Shares,
              residual: Shares, n_exp: int = 2, offset: float = 8.0,
              median_cfg: MedianConfig = None):
    """One full drop site on shared state.

    Scores the raw attention (heads, m, m), selects the median obliviously,
    derives keep bits, and compacts: attention rows and columns (softmax then
    sees an (m/2, m/2) matrix), the value-projection input, and the residual
    stream, all under the same bits.

    Returns (attention', v_input', residual', site_info).
    """
    heads, m, m2 = attention.shape
    if m != m2:
        raise DomainError("attention must be square per head")
    if v_input.shape[0] != m or residual.shape[0] != m:
        raise DomainError("token payloads must match the attention size")
    half = m // 2

    scores = aggregate_scores(proto, attention, n_exp=n_exp, offset=offset)
    med = oblivious_median(proto, scores, median_cfg)
    bits = keep_bits_keyed(proto, med)

    if proto.debug:
        kept = int(proto.reconstruct_int(proto.sum_shares(bits)))
        if kept != half:
            raise ProtocolError(
                f"keep bits reconstruct to {kept} ones, expected {half}")

    # network run 1: token-aligned payloads plus attention rows
    rows_view = Shares(
        np.ascontiguousarray(attention.s0.transpose(1, 0, 2).reshape(m, heads * m)),
        np.ascontiguousarray(attention.s1.transpose(1, 0, 2).reshape(m, heads * m)),
    )
    _, (rows_c, v_c, r_c), schedule = oblivious_compact(
        proto, bits, [rows_view, v_input, residual])
    att_rows = rows_c[:half].reshape(half, heads, m)

    # run 2 replays the same swap schedule over the column dimension
    cols_view = Shares(
        np.ascontiguousarray(att_rows.s0.transpose(2, 1, 0).reshape(m, heads * half)),
        np.ascontiguousarray(att_rows.s1.transpose(2, 1, 0).reshape(m, heads * half)),
    )
    cols_c = apply_compaction(proto, schedule, cols_view)
    att_out = Shares(
        cols_c.s0[:half].reshape(half, heads, half).transpose(1, 2, 0),
        cols_c.s1[:half].reshape(half, heads, half).transpose(1, 2, 0),
    )

    info = {
        "median": med,
        "bits": bits,
        "m_in": m,
        "m_out": half,
    }
    return att_out, v_c[:half], r_c[:half], info
