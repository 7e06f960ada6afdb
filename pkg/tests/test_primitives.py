"""Cost-accounted primitives: comparison, select, reciprocal, division."""
import numpy as np
import pytest

from mpcdrop import DomainError, Protocol, ProtocolError, RingParams


class TestSecureCmp:
    def test_basic(self, proto):
        assert int(proto.reconstruct_int(proto.cmp(proto.share_int(3),
                                                   proto.share_int(5)))) == 1

    def test_equality_is_strict(self, proto):
        assert int(proto.reconstruct_int(proto.cmp(proto.share_int(5),
                                                   proto.share_int(5)))) == 0

    def test_signed_interpretation(self, proto):
        bit = proto.cmp(proto.share_fixed(-2.0), proto.share_fixed(1.0))
        assert int(proto.reconstruct_int(bit)) == 1

    def test_random_pairs_match_oracle(self, params, rng):
        proto = Protocol(params, seed=8)
        # straddle the sign boundary on purpose
        x = rng.uniform(-500, 500, 10_000)
        y = rng.uniform(-500, 500, 10_000)
        got = proto.reconstruct_int(proto.cmp(proto.share_fixed(x), proto.share_fixed(y)))
        want = (np.round(x * params.scale) < np.round(y * params.scale)).astype(int)
        assert np.array_equal(got, want)

    def test_ledger_charges_once_per_element(self, params):
        proto = Protocol(params, seed=8)
        proto.cmp(proto.share_int(np.arange(100)), proto.share_int(np.arange(100)))
        assert proto.ledger.total.cmp == 100
        assert proto.ledger.total.rounds == proto.table.cmp_rounds  # one batch


class TestSecureMux:
    def test_select_a(self, proto):
        out = proto.mux(proto.share_int(1), proto.share_int(7), proto.share_int(9))
        assert int(proto.reconstruct_int(out)) == 7

    def test_select_b(self, proto):
        out = proto.mux(proto.share_int(0), proto.share_int(7), proto.share_int(9))
        assert int(proto.reconstruct_int(out)) == 9

    def test_identity_when_equal(self, params, rng):
        proto = Protocol(params, seed=9)
        for c in (0, 1):
            a = proto.share_fixed(3.25)
            out = proto.mux(proto.share_int(c), a, a)
            assert proto.reconstruct_fixed(out) == 3.25

    def test_composition_sums_to_both(self, params, rng):
        proto = Protocol(params, seed=10)
        a = rng.uniform(-5, 5, 64)
        b = rng.uniform(-5, 5, 64)
        for c in (0, 1):
            cs = proto.share_int(np.full(64, c))
            lhs = proto.add(proto.mux(cs, proto.share_fixed(a), proto.share_fixed(b)),
                            proto.mux(cs, proto.share_fixed(b), proto.share_fixed(a)))
            np.testing.assert_allclose(proto.reconstruct_fixed(lhs), a + b,
                                       atol=2.0 ** (-proto.params.frac))

    def test_non_bit_selector_debug(self, params):
        proto = Protocol(params, seed=11, debug=True)
        with pytest.raises(ProtocolError):
            proto.mux(proto.share_int(2), proto.share_int(1), proto.share_int(0))

    def test_ledger_mux(self, params):
        proto = Protocol(params, seed=12)
        proto.mux(proto.share_int(np.ones(7)), proto.share_int(np.zeros(7)),
                  proto.share_int(np.zeros(7)))
        assert proto.ledger.total.mux == 7
        assert proto.ledger.total.cmp == 0


class TestRecip:
    def test_two(self, proto):
        out = proto.recip_fixed(proto.share_fixed(2.0))
        assert proto.reconstruct_fixed(out) == 0.5

    def test_one(self, proto):
        out = proto.recip_fixed(proto.share_fixed(1.0))
        assert proto.reconstruct_fixed(out) == 1.0

    def test_relative_error(self, params, rng):
        proto = Protocol(params, seed=13)
        x = np.round(rng.uniform(0.1, 8.0, 1000) * params.scale) / params.scale
        r = proto.reconstruct_fixed(proto.recip_fixed(proto.share_fixed(x)))
        assert np.max(np.abs(r * x - 1.0)) <= 2.0 ** (-params.frac + 2)

    def test_domain_error(self, proto):
        with pytest.raises(DomainError):
            proto.recip_fixed(proto.share_fixed(-1.0))
        with pytest.raises(DomainError):
            proto.recip_fixed(proto.share_fixed(0.0))

    def test_cost_model(self, params):
        proto = Protocol(params, seed=14)
        proto.recip_fixed(proto.share_fixed(2.0))
        assert proto.ledger.total.mul == proto.table.recip_muls
        assert proto.ledger.total.rounds == proto.table.recip_rounds


class TestDivision:
    def test_div_public(self, proto):
        out = proto.div_public(proto.share_fixed(10.0), 5)
        assert proto.reconstruct_fixed(out) == 2.0

    def test_div_public_identity(self, proto):
        out = proto.div_public(proto.share_fixed(-7.25), 1)
        assert proto.reconstruct_fixed(out) == -7.25

    def test_div_public_random(self, params, rng):
        proto = Protocol(params, seed=15)
        x = rng.uniform(-100, 100, 500)
        n = int(rng.integers(1, 50))
        out = proto.reconstruct_fixed(proto.div_public(proto.share_fixed(x), n))
        assert np.max(np.abs(out - x / n)) <= 2.0 ** (-params.frac + 1)

    def test_div_public_zero_divisor(self, proto):
        with pytest.raises(DomainError):
            proto.div_public(proto.share_fixed(1.0), 0)

    def test_div_public_charges_nothing(self, params):
        proto = Protocol(params, seed=16)
        proto.div_public(proto.share_fixed(10.0), 5)
        t = proto.ledger.total
        assert (t.cmp, t.mux, t.mul, t.rounds, t.bytes) == (0, 0, 0, 0, 0)

    def test_div_secret(self, params, rng):
        proto = Protocol(params, seed=17)
        total = proto.share_int(91)
        count = proto.share_int(7)
        assert int(proto.reconstruct_int(proto.div_secret(total, count))) == 13

    def test_div_secret_nonpositive_count(self, proto):
        with pytest.raises(ProtocolError):
            proto.div_secret(proto.share_int(5), proto.share_int(0))


class TestCountsAreDataIndependent:
    def test_counts_depend_only_on_shape(self, params, rng):
        def run(seed, values):
            proto = Protocol(params, seed=seed)
            x = proto.share_fixed(values)
            y = proto.share_fixed(values[::-1].copy())
            proto.mux(proto.cmp(x, y), x, y)
            t = proto.ledger.total
            return (t.cmp, t.mux, t.mul, t.rounds, t.bytes)

        a = run(1, rng.uniform(-9, 9, 33))
        b = run(99, rng.uniform(-9, 9, 33))
        assert a == b


class TestWideFraction:
    def test_recip_survives_large_frac(self):
        # 2^{2f} exceeds int64 here; the dealer math must stay exact
        params = RingParams(64, 40)
        proto = Protocol(params, seed=19)
        out = proto.recip_fixed(proto.share_fixed(2.0))
        assert proto.reconstruct_fixed(out) == 0.5
