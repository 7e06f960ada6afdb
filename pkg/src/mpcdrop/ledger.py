"""Operation accounting: the currency of every complexity claim here.

The ledger tallies secure comparisons (cmp), secure selects (mux), share
multiplications (mul), communication rounds, and modeled bytes.  Batched
vector operations count one round per batch and per-element bytes; that
rule is what makes totals a function of (length, revealed round count)
rather than of secret data.
"""
import math
from contextlib import contextmanager
from dataclasses import dataclass


@dataclass(frozen=True)
class CostTable:
    """Per-primitive round/byte model; calibration knobs, not measurements.

    Defaults: a comparison costs ceil(log2 ell) rounds and ell * lambda_factor
    bytes (OT-extension-flavored); a select is realized as one Beaver
    multiplication, so both cost one round and 4*ell bits for the two masked
    opens.  Reciprocal-style ideal functionalities are priced as a constant
    number of multiplications and rounds.
    """

    cmp_rounds: int
    cmp_bytes: int
    mux_rounds: int
    mux_bytes: int
    mul_rounds: int
    mul_bytes: int
    recip_muls: int
    recip_rounds: int
    reveal_bytes: int

    @classmethod
    def default(cls, ell: int, lambda_factor: int = 16):
        return cls(
            cmp_rounds=math.ceil(math.log2(ell)),
            cmp_bytes=ell * lambda_factor,
            mux_rounds=1,
            mux_bytes=4 * ell // 8,
            mul_rounds=1,
            mul_bytes=4 * ell // 8,
            recip_muls=3,
            recip_rounds=3,
            reveal_bytes=2 * ell // 8,
        )


@dataclass
class Counts:
    cmp: int = 0
    mux: int = 0
    mul: int = 0
    rounds: int = 0
    bytes: int = 0

    def merged(self, other):
        return Counts(
            self.cmp + other.cmp,
            self.mux + other.mux,
            self.mul + other.mul,
            self.rounds + other.rounds,
            self.bytes + other.bytes,
        )

    def as_dict(self):
        return {
            "cmp": self.cmp,
            "mux": self.mux,
            "mul": self.mul,
            "rounds": self.rounds,
            "bytes": self.bytes,
        }


class CostLedger:
    """Monotone operation tally with stage attribution.

    Stage tags let one run attribute cost to pipeline phases (softmax,
    scoring, median, drop-overhead, ...).  Use ``stage(tag)`` as a context
    manager; nesting restores the previous tag.
    """

    def __init__(self, table: CostTable):
        self.table = table
        self.total = Counts()
        self.stages = {}
        self.stage_tag = "default"

    def _bucket(self):
        if self.stage_tag not in self.stages:
            self.stages[self.stage_tag] = Counts()
        return self.stages[self.stage_tag]

    @contextmanager
    def stage(self, tag):
        prev, self.stage_tag = self.stage_tag, tag
        try:
            yield self
        finally:
            self.stage_tag = prev

    def _charge(self, cmp=0, mux=0, mul=0, rounds=0, nbytes=0):
        for bucket in (self.total, self._bucket()):
            bucket.cmp += cmp
            bucket.mux += mux
            bucket.mul += mul
            bucket.rounds += rounds
            bucket.bytes += nbytes

    def add_cmp(self, n):
        self._charge(cmp=n, rounds=self.table.cmp_rounds, nbytes=n * self.table.cmp_bytes)

    def add_mux(self, n):
        self._charge(mux=n, rounds=self.table.mux_rounds, nbytes=n * self.table.mux_bytes)

    def add_mul(self, n):
        self._charge(mul=n, rounds=self.table.mul_rounds, nbytes=n * self.table.mul_bytes)

    def add_recip(self, n):
        self._charge(
            mul=n * self.table.recip_muls,
            rounds=self.table.recip_rounds,
            nbytes=n * self.table.recip_muls * self.table.mul_bytes,
        )

    def add_reveal(self, n):
        self._charge(rounds=1, nbytes=n * self.table.reveal_bytes)

    def snapshot(self):
        return {
            "total": self.total.as_dict(),
            "stages": {k: v.as_dict() for k, v in sorted(self.stages.items())},
        }

    def modeled_seconds(self, profile, compute_rate=None):
        """Wall time under a bandwidth/latency profile; bytes and rounds only
        unless a compute rate (ops/second over cmp+mux+mul) is supplied."""
        t = self.total
        seconds = t.bytes * 8.0 / profile.bandwidth + t.rounds * profile.latency
        if compute_rate:
            seconds += (t.cmp + t.mux + t.mul) / compute_rate
        return seconds


class TraceRecorder:
    """Access-pattern trace: (round, op, index) events.

    Round labels: 0 = setup, 1..R = partition rounds, R+1 = extraction.
    Scalar bookkeeping operations record index -1.
    """

    def __init__(self):
        self.events = []
        self.round = 0

    def set_round(self, r):
        self.round = r

    def record(self, op, indices):
        for idx in indices:
            self.events.append((self.round, op, int(idx)))

    def record_scalar(self, op, n=1):
        self.events.extend((self.round, op, -1) for _ in range(n))

    def as_lines(self):
        return [
            {"round": r, "op": op, "index": idx} for (r, op, idx) in self.events
        ]
