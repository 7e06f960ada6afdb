"""2-of-2 additive secret sharing and the trusted-dealer simulation.

Both logical parties run in lockstep inside one process, so a Shares object
holds the two share arrays side by side.  The dealer is the simulation's
trust anchor: it sources all randomness (seeded, reproducible), hands out
Beaver triples, and evaluates ideal functionalities for the protocol layer.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from .errors import ProtocolError
from .ring import RingParams


@dataclass
class AdditiveShare:
    """One party's share of a secret ring element."""

    party: int
    value: np.ndarray


class Shares:
    """Pair of additive shares (party 0, party 1) of equal shape."""

    __slots__ = ("s0", "s1")

    def __init__(self, s0, s1):
        s0 = np.asarray(s0, dtype=np.uint64)
        s1 = np.asarray(s1, dtype=np.uint64)
        if s0.shape != s1.shape:
            raise ProtocolError("share halves must have identical shape")
        self.s0 = s0
        self.s1 = s1

    @property
    def shape(self):
        return self.s0.shape

    def __len__(self):
        return self.s0.shape[0]

    def party(self, i):
        if i not in (0, 1):
            raise ProtocolError(f"party must be 0 or 1, got {i}")
        return AdditiveShare(i, self.s0 if i == 0 else self.s1)

    def reshape(self, *shape):
        return Shares(self.s0.reshape(*shape), self.s1.reshape(*shape))

    def __getitem__(self, idx):
        return Shares(self.s0[idx], self.s1[idx])


def add_local(a: AdditiveShare, b: AdditiveShare, params: RingParams):
    """Local share addition; both inputs must belong to the same party."""
    if a.party != b.party:
        raise ProtocolError("cannot add shares held by different parties")
    return AdditiveShare(a.party, kern.add(a.value, b.value, params.mask))


@dataclass
class BeaverTriple:
    """Single-use multiplication triple with reconstruct(a)*reconstruct(b) = reconstruct(c)."""

    a: Shares
    b: Shares
    c: Shares
    used: bool = field(default=False)

    def mark_used(self):
        if self.used:
            raise ProtocolError("Beaver triple reuse detected")
        self.used = True


class TrustedDealer:
    """Seeded randomness source and offline-phase material generator."""

    def __init__(self, params: RingParams, seed):
        self.params = params
        self.rng = np.random.default_rng(seed)

    def random_ring(self, shape=()):
        return self.rng.integers(
            0, self.params.modulus, size=shape, dtype=np.uint64
        )

    def share(self, values) -> Shares:
        """Split ring values into two additive shares; share 0 is uniform."""
        values = np.asarray(values, dtype=np.uint64)
        s0 = self.random_ring(values.shape)
        s1 = kern.sub(values, s0, self.params.mask)
        return Shares(s0, s1)

    def triple(self, shape=()) -> BeaverTriple:
        # one batched draw covers (a, b) and the three party-0 shares
        shape = tuple(shape) if isinstance(shape, (tuple, list)) else (shape,)
        flat = int(np.prod(shape)) if shape else 1
        r = self.rng.integers(0, self.params.modulus, size=(5, flat), dtype=np.uint64)
        a, b, a0, b0, c0 = (r[i].reshape(shape) for i in range(5))
        m = self.params.mask
        c = kern.mul(a, b, m)
        return BeaverTriple(
            Shares(a0, kern.sub(a, a0, m)),
            Shares(b0, kern.sub(b, b0, m)),
            Shares(c0, kern.sub(c, c0, m)),
        )

    def onehot_pair(self, n):
        """Jointly seeded random one-hot selector of length n.

        Each party contributes one random draw (r0 from the server, r1 from
        the client); the one-hot marks index (r0 + r1) mod n and is handed
        out in shares, so neither draw alone determines the position.
        """
        if n < 1:
            raise ProtocolError("one-hot length must be >= 1")
        r0 = int(self.rng.integers(0, n))
        r1 = int(self.rng.integers(0, n))
        onehot = np.zeros(n, dtype=np.uint64)
        onehot[(r0 + r1) % n] = 1
        return self.share(onehot)

    def setup(self, triple_count, n, triple_shape=()):
        """Offline batch: multiplication triples plus a one-hot selector."""
        triples = [self.triple(triple_shape) for _ in range(triple_count)]
        return triples, self.onehot_pair(n)


def reconstruct(shares: Shares, params: RingParams):
    """Open both halves (test/dealer-side helper; free of protocol cost)."""
    return kern.add(shares.s0, shares.s1, params.mask)
