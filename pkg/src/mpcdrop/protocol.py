"""Two-party protocol engine: cost-accounted secure primitives.

Comparison, select, reciprocal and division run as dealer-assisted ideal
functionalities: the dealer reconstructs operands internally, evaluates the
function, and re-shares the result.  Outputs are faithful; the ledger is
charged as if the real sub-protocol had run.  Share multiplication executes
the genuine Beaver algebra (masked opens and linear combination), with
fixed-point truncation applied at the dealer afterwards.

Every vector primitive is one logical batch: the ledger adds per-element
operation counts and bytes but a single batch of rounds.
"""
import numpy as np

from . import _kernels as kern
from .errors import DomainError, ProtocolError
from .ledger import CostLedger, CostTable, TraceRecorder
from .ring import RingParams, decode_fixed, encode_fixed, encode_int
from .sharing import BeaverTriple, Shares, TrustedDealer


class Protocol:
    """One protocol instance: ring params, dealer, ledger, optional trace.

    Instances are single-threaded; independent instances never share state.
    ``debug=True`` enables dealer-side sanity checks (selector-bit checks,
    keep-count diagnostics) that a real deployment would not run.
    """

    def __init__(self, params: RingParams = None, seed=0, cost_table: CostTable = None,
                 debug: bool = False):
        self.params = params or RingParams()
        self.dealer = TrustedDealer(self.params, seed)
        self.table = cost_table or CostTable.default(self.params.ell)
        self.ledger = CostLedger(self.table)
        self.trace = None
        self.debug = debug

    # -- trace plumbing ----------------------------------------------------

    def start_trace(self):
        self.trace = TraceRecorder()
        return self.trace

    def stop_trace(self):
        t, self.trace = self.trace, None
        return t

    def _trace_vec(self, op, n, indices):
        if self.trace is None:
            return
        if indices is None:
            self.trace.record_scalar(op, n)
        else:
            self.trace.record(op, indices)

    # -- sharing and local arithmetic (communication-free) ------------------

    def share(self, raw) -> Shares:
        return self.dealer.share(np.asarray(raw, dtype=np.uint64))

    def share_fixed(self, x) -> Shares:
        return self.share(encode_fixed(x, self.params))

    def share_int(self, x) -> Shares:
        return self.share(encode_int(x, self.params))

    def reconstruct(self, x: Shares):
        return kern.add(x.s0, x.s1, self.params.mask)

    def reconstruct_fixed(self, x: Shares):
        return decode_fixed(self.reconstruct(x), self.params)

    def reconstruct_int(self, x: Shares):
        return kern.to_signed(self.reconstruct(x), self.params.ell)

    def add(self, x: Shares, y: Shares) -> Shares:
        m = self.params.mask
        return Shares(kern.add(x.s0, y.s0, m), kern.add(x.s1, y.s1, m))

    def sub(self, x: Shares, y: Shares) -> Shares:
        m = self.params.mask
        return Shares(kern.sub(x.s0, y.s0, m), kern.sub(x.s1, y.s1, m))

    def neg(self, x: Shares) -> Shares:
        m = self.params.mask
        return Shares(kern.neg(x.s0, m), kern.neg(x.s1, m))

    def add_public(self, x: Shares, raw) -> Shares:
        """Add a public ring constant (party 0 absorbs it)."""
        raw = np.asarray(raw, dtype=np.uint64)
        s0 = kern.add(x.s0, np.broadcast_to(raw, x.shape), self.params.mask)
        return Shares(s0, x.s1.copy())

    def scale_public(self, x: Shares, k: int) -> Shares:
        """Multiply by a public integer constant; local, free."""
        m = self.params.mask
        return Shares(kern.scale(x.s0, k, m), kern.scale(x.s1, k, m))

    def sum_shares(self, x: Shares, axis=None) -> Shares:
        """Ring sum along an axis (or all elements); local, free."""
        m = np.uint64(self.params.mask)
        with np.errstate(over="ignore"):
            if axis is None:
                return Shares(np.asarray(kern.sum_mod(x.s0, self.params.mask)),
                              np.asarray(kern.sum_mod(x.s1, self.params.mask)))
            return Shares(np.add.reduce(x.s0, axis=axis, dtype=np.uint64) & m,
                          np.add.reduce(x.s1, axis=axis, dtype=np.uint64) & m)

    # -- interactive primitives ---------------------------------------------

    def open(self, x: Shares, indices=None):
        """Publish a shared value to both parties (one round of exchange)."""
        n = int(np.prod(x.shape)) if x.shape else 1
        self.ledger.add_reveal(n)
        self._trace_vec("open", n, indices)
        return self.reconstruct(x)

    def beaver_mul(self, x: Shares, y: Shares, triple: BeaverTriple,
                   fixed: bool = False) -> Shares:
        """One share multiplication via a (single-use) Beaver triple.

        fixed=True treats operands as fixed-point and truncates the product
        back to scale 2^f (faithful rounding at the dealer; the truncation
        sub-protocol's cost is folded into the multiplication charge).
        """
        triple.mark_used()
        m = self.params.mask
        d = self.reconstruct(self.sub(x, triple.a))
        e = self.reconstruct(self.sub(y, triple.b))
        s0 = kern.beaver_combine(triple.c.s0, d, triple.b.s0, e, triple.a.s0, True, m)
        s1 = kern.beaver_combine(triple.c.s1, d, triple.b.s1, e, triple.a.s1, False, m)
        z = Shares(s0, s1)
        if fixed:
            z = self.dealer.share(
                kern.trunc_round(self.reconstruct(z), self.params.frac, self.params.ell)
            )
        return z

    def mul(self, x: Shares, y: Shares, fixed: bool = True, indices=None) -> Shares:
        """Batched share multiplication; draws fresh triples from the dealer."""
        shape = np.broadcast_shapes(x.shape, y.shape)
        x, y = self._broadcast(x, shape), self._broadcast(y, shape)
        n = int(np.prod(shape)) if shape else 1
        self.ledger.add_mul(n)
        self._trace_vec("mul", n, indices)
        return self.beaver_mul(x, y, self.dealer.triple(shape), fixed=fixed)

    def mul_raw(self, x: Shares, y: Shares, indices=None) -> Shares:
        """Integer-domain multiplication (bits, counts): no truncation."""
        return self.mul(x, y, fixed=False, indices=indices)

    def dot_raw(self, x: Shares, y: Shares) -> Shares:
        """Inner product of integer-domain vectors: n muls plus a free sum."""
        return self.sum_shares(self.mul_raw(x, y))

    def cmp(self, x: Shares, y: Shares, indices=None) -> Shares:
        """Secure signed less-than: bit shares of [x < y].

        Ideal functionality at the dealer; neither party's simulated view
        contains the operands.  Ledger: one cmp per element, one batch of
        rounds, bytes per the cost table.
        """
        shape = np.broadcast_shapes(x.shape, y.shape)
        xv = np.broadcast_to(self.reconstruct(x), shape)
        yv = np.broadcast_to(self.reconstruct(y), shape)
        n = int(np.prod(shape)) if shape else 1
        self.ledger.add_cmp(n)
        self._trace_vec("cmp", n, indices)
        bits = kern.lt_signed(xv, yv, self.params.ell)
        return self.dealer.share(bits)

    def mux(self, c: Shares, a: Shares, b: Shares, indices=None) -> Shares:
        """Secure select: reconstructs to a where c=1, else b.

        Realized as b + c*(a - b) with one Beaver product, charged as mux.
        """
        shape = np.broadcast_shapes(c.shape, a.shape, b.shape)
        c = self._broadcast(c, shape)
        a, b = self._broadcast(a, shape), self._broadcast(b, shape)
        if self.debug:
            cv = self.reconstruct(c)
            if not np.all((cv == 0) | (cv == 1)):
                raise ProtocolError("mux selector does not reconstruct to bits")
        n = int(np.prod(shape)) if shape else 1
        self.ledger.add_mux(n)
        self._trace_vec("mux", n, indices)
        diff = self.sub(a, b)
        prod = self.beaver_mul(c, diff, self.dealer.triple(shape), fixed=False)
        return self.add(b, prod)

    def recip_fixed(self, x: Shares) -> Shares:
        """Fixed-point reciprocal 1/x for x > 0 (ideal functionality).

        Priced as a constant number of multiplications and rounds (cost
        table); result is the correctly rounded fixed-point encoding, so
        the relative error is x * 2^(-f-1) at worst.
        """
        v = kern.to_signed(self.reconstruct(x), self.params.ell)
        if np.any(v <= 0):
            raise DomainError("reciprocal requires a positive operand")
        n = int(np.prod(x.shape)) if x.shape else 1
        self.ledger.add_recip(n)
        num = 1 << (2 * self.params.frac)  # exact integers: 2^{2f} can pass 2^63
        r = (2 * num + v.astype(object)) // (2 * v.astype(object))
        r = np.asarray(r, dtype=object).astype(np.int64)
        return self.dealer.share(kern.from_signed(r, self.params.mask))

    def div_public(self, x: Shares, n: int) -> Shares:
        """Divide by a public positive integer; zero communication charged."""
        if n < 1:
            raise DomainError("public divisor must be >= 1")
        v = kern.to_signed(self.reconstruct(x), self.params.ell).astype(object)
        q = np.asarray((2 * v + n) // (2 * n), dtype=object)
        return self.dealer.share(kern.from_signed(q.astype(np.int64), self.params.mask))

    def div_secret(self, x: Shares, count: Shares) -> Shares:
        """Divide by a secret positive integer count (ideal functionality).

        The count never leaves the dealer; cost is priced like a reciprocal
        followed by a multiplication.
        """
        v = kern.to_signed(self.reconstruct(x), self.params.ell)
        c = kern.to_signed(self.reconstruct(count), self.params.ell)
        if np.any(c <= 0):
            raise ProtocolError("secret divisor must reconstruct positive")
        n = int(np.prod(x.shape)) if x.shape else 1
        self.ledger.add_recip(n)
        v_obj, c_obj = v.astype(object), c.astype(object)
        q = np.asarray((2 * v_obj + c_obj) // (2 * c_obj), dtype=object)
        return self.dealer.share(kern.from_signed(q.astype(np.int64), self.params.mask))

    def shift_down(self, x: Shares, bits: int) -> Shares:
        """Arithmetic right shift on the signed value (dealer-side, free)."""
        v = kern.to_signed(self.reconstruct(x), self.params.ell) >> np.int64(bits)
        return self.dealer.share(kern.from_signed(v, self.params.mask))

    # -- helpers -------------------------------------------------------------

    def _broadcast(self, x: Shares, shape) -> Shares:
        if x.shape == shape:
            return x
        return Shares(np.broadcast_to(x.s0, shape), np.broadcast_to(x.s1, shape))

    def const_shares(self, raw, shape=None) -> Shares:
        """Shares of a public constant: party 0 holds it, party 1 holds zero."""
        raw = np.asarray(raw, dtype=np.uint64)
        if shape is not None:
            raw = np.broadcast_to(raw, shape)
        return Shares(raw.copy(), np.zeros(raw.shape, dtype=np.uint64))

    def zeros(self, shape=()) -> Shares:
        return Shares(np.zeros(shape, dtype=np.uint64), np.zeros(shape, dtype=np.uint64))

    def ones(self, shape=()) -> Shares:
        return self.const_shares(np.ones(shape, dtype=np.uint64), shape)

    def bit_not(self, b: Shares) -> Shares:
        """1 - b, local."""
        return self.sub(self.const_shares(1, b.shape), b)
