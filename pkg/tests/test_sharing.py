"""Additive sharing, Beaver triples, and the trusted dealer."""
import numpy as np
import pytest
from scipy.stats import chisquare

from mpcdrop import AdditiveShare, Protocol, ProtocolError, Shares, add_local
from mpcdrop.sharing import TrustedDealer, reconstruct


class TestShares:
    def test_manual_shares_reconstruct(self, params):
        # x=12 with first share 5 forces the second share to 7
        s = Shares(np.uint64(5), np.uint64(7))
        assert int(reconstruct(s, params)) == 12

    def test_zero_shares(self, params):
        s = Shares(np.uint64(0), np.uint64(0))
        assert int(reconstruct(s, params)) == 0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ProtocolError):
            Shares(np.zeros(3, dtype=np.uint64), np.zeros(4, dtype=np.uint64))

    def test_roundtrip_many(self, params):
        dealer = TrustedDealer(params, seed=7)
        x = dealer.random_ring(10_000)
        assert np.array_equal(reconstruct(dealer.share(x), params), x)


class TestAddLocal:
    def test_adds_within_party(self, params):
        dealer = TrustedDealer(params, seed=0)
        a = dealer.share(np.uint64(3))
        b = dealer.share(np.uint64(4))
        s0 = add_local(a.party(0), b.party(0), params)
        s1 = add_local(a.party(1), b.party(1), params)
        assert int(reconstruct(Shares(s0.value, s1.value), params)) == 7

    def test_inverse_cancels(self, params):
        proto = Protocol(params, seed=3)
        x = proto.share_int(41)
        total = proto.add(x, proto.neg(x))
        assert int(proto.reconstruct(total)) == 0

    def test_party_mismatch_raises(self, params):
        a = AdditiveShare(0, np.uint64(1))
        b = AdditiveShare(1, np.uint64(2))
        with pytest.raises(ProtocolError):
            add_local(a, b, params)

    def test_vector_add_matches_plaintext(self, params, rng):
        proto = Protocol(params, seed=9)
        x = rng.uniform(-50, 50, size=256)
        y = rng.uniform(-50, 50, size=256)
        out = proto.reconstruct_fixed(proto.add(proto.share_fixed(x), proto.share_fixed(y)))
        np.testing.assert_allclose(out, x + y, atol=2.0 ** (-params.frac))


class TestBeaverTriples:
    def test_triple_identity(self, params):
        dealer = TrustedDealer(params, seed=11)
        t = dealer.triple((64,))
        a = reconstruct(t.a, params)
        b = reconstruct(t.b, params)
        c = reconstruct(t.c, params)
        assert np.array_equal((a * b) & np.uint64(params.mask), c)

    def test_single_use_enforced(self, params):
        proto = Protocol(params, seed=1)
        t = proto.dealer.triple(())
        x, y = proto.share_int(3), proto.share_int(4)
        proto.beaver_mul(x, y, t)
        with pytest.raises(ProtocolError):
            proto.beaver_mul(x, y, t)

    def test_mul_ring_exact(self, params):
        proto = Protocol(params, seed=2)
        z = proto.mul_raw(proto.share_int(3), proto.share_int(4))
        assert int(proto.reconstruct_int(z)) == 12

    def test_mul_annihilator(self, params):
        proto = Protocol(params, seed=2)
        z = proto.mul_raw(proto.share_int(887), proto.share_int(0))
        assert int(proto.reconstruct_int(z)) == 0

    def test_mul_ring_random_exact(self, params, rng):
        proto = Protocol(params, seed=4)
        x = rng.integers(0, params.modulus, 10_000, dtype=np.uint64)
        y = rng.integers(0, params.modulus, 10_000, dtype=np.uint64)
        z = proto.mul(proto.share(x), proto.share(y), fixed=False)
        assert np.array_equal(proto.reconstruct(z),
                              (x * y) & np.uint64(params.mask))

    def test_mul_fixed_tolerance(self, params, rng):
        proto = Protocol(params, seed=5)
        x = np.round(rng.uniform(-30, 30, size=10_000) * params.scale) / params.scale
        y = np.round(rng.uniform(-30, 30, size=10_000) * params.scale) / params.scale
        z = proto.mul(proto.share_fixed(x), proto.share_fixed(y))
        got = proto.reconstruct_fixed(z)
        assert np.max(np.abs(got - x * y)) <= 2.0 ** (-params.frac + 1)


class TestDealerSetup:
    def test_onehot_marks_joint_index(self, params):
        dealer = TrustedDealer(params, seed=21)
        oh = reconstruct(dealer.onehot_pair(4), params)
        assert oh.sum() == 1 and oh.shape == (4,)

    def test_onehot_degenerate_length(self, params):
        dealer = TrustedDealer(params, seed=21)
        oh = reconstruct(dealer.onehot_pair(1), params)
        assert oh.tolist() == [1]

    def test_dot_extracts_selected_element(self, params, rng):
        proto = Protocol(params, seed=33)
        for _ in range(20):
            v = rng.integers(0, 1000, 16).astype(np.uint64)
            oh = proto.dealer.onehot_pair(16)
            idx = int(np.argmax(proto.reconstruct(oh)))
            got = proto.dot_raw(oh, proto.share(v))
            assert int(proto.reconstruct(got)) == int(v[idx])

    def test_setup_batch(self, params):
        dealer = TrustedDealer(params, seed=2)
        triples, onehot = dealer.setup(5, 8)
        assert len(triples) == 5
        assert reconstruct(onehot, params).sum() == 1

    def test_index_varies_with_seed(self, params):
        positions = set()
        for seed in range(40):
            dealer = TrustedDealer(params, seed=seed)
            oh = reconstruct(dealer.onehot_pair(8), params)
            positions.add(int(np.argmax(oh)))
        assert len(positions) >= 2


class TestUniformity:
    def test_share_marginal_chisquare(self, params):
        """Share 0 of a fixed secret should look uniform across fresh seeds."""
        buckets = np.zeros(16, dtype=int)
        for seed in range(4000):
            dealer = TrustedDealer(params, seed=seed)
            s = dealer.share(np.uint64(1234567))
            buckets[int(s.s0) & 15] += 1
        assert chisquare(buckets).pvalue > 1e-4

    def test_homomorphism_random(self, params, rng):
        proto = Protocol(params, seed=6)
        x = rng.integers(0, params.modulus, 10_000, dtype=np.uint64)
        y = rng.integers(0, params.modulus, 10_000, dtype=np.uint64)
        out = proto.reconstruct(proto.add(proto.share(x), proto.share(y)))
        assert np.array_equal(out, (x + y) & np.uint64(params.mask))
