"""Oblivious median selection and the bitonic baseline."""
import numpy as np
import pytest

from mpcdrop import (DomainError, MedianConfig, Protocol, RingParams,
                     bitonic_comparator_count, bitonic_median, bitonic_sort_shares,
                     oblivious_median, synthetic_scores, traces_equal,
                     verify_partition_trace)
from mpcdrop.median import average_pivot, build_keys, random_pivot
from mpcdrop.oracles import sort_median
from mpcdrop.ring import decode_fixed, encode_fixed
from mpcdrop.scoring import synthetic_scores_batch


def quantize(x, params):
    return decode_fixed(encode_fixed(x, params), params)


class TestRandomPivot:
    def test_selects_shared_index(self, params):
        proto = Protocol(params, seed=50)
        scores = proto.share_fixed([10.0, 20.0, 30.0, 40.0])
        onehot = proto.share(np.array([0, 0, 1, 0], dtype=np.uint64))
        out = random_pivot(proto, scores, onehot)
        assert proto.reconstruct_fixed(out) == 30.0
        assert proto.ledger.total.mul == 4

    def test_degenerate_length_one(self, params):
        proto = Protocol(params, seed=51)
        out = random_pivot(proto, proto.share_fixed([13.5]),
                           proto.share(np.array([1], dtype=np.uint64)))
        assert proto.reconstruct_fixed(out) == 13.5

    def test_random_vectors_match_indexing_oracle(self, params, rng):
        for t in range(20):
            proto = Protocol(params, seed=100 + t)
            v = rng.uniform(-5, 5, 16)
            onehot = proto.dealer.onehot_pair(16)
            idx = int(np.argmax(proto.reconstruct(onehot)))
            out = random_pivot(proto, proto.share_fixed(v), onehot)
            assert proto.reconstruct_fixed(out) == quantize(v, params)[idx]

    def test_first_pivot_varies_across_seeds(self, params, rng):
        scores = rng.uniform(-2, 2, 32)
        seen = set()
        for seed in range(100):
            proto = Protocol(params, seed=seed)
            res = oblivious_median(proto, proto.share_fixed(scores))
            seen.add(float(proto.reconstruct_fixed(res.first_pivot)))
        assert len(seen) >= 2


class TestAveragePivot:
    def test_all_alive(self, params):
        proto = Protocol(params, seed=52)
        keys = proto.share_int(np.array([1, 2, 3, 4, 5]))
        alive = proto.share_int(np.ones(5, dtype=np.int64))
        out = average_pivot(proto, keys, alive, divide_by_total=False)
        assert int(proto.reconstruct_int(out)) == 3

    def test_masked_subset(self, params):
        proto = Protocol(params, seed=53)
        keys = proto.share_int(np.array([1, 2, 3, 4, 5]))
        alive = proto.share_int(np.array([0, 1, 0, 1, 0]))
        out = average_pivot(proto, keys, alive, divide_by_total=False)
        assert int(proto.reconstruct_int(out)) == 3

    def test_random_masked_mean(self, params, rng):
        proto = Protocol(params, seed=54)
        vals = rng.integers(-1000, 1000, 64)
        mask = rng.integers(0, 2, 64)
        if mask.sum() == 0:
            mask[0] = 1
        out = average_pivot(proto, proto.share_int(vals), proto.share_int(mask),
                            divide_by_total=False)
        want = round(vals[mask == 1].sum() / mask.sum() + 1e-12)
        assert abs(int(proto.reconstruct_int(out)) - want) <= 1

    def test_constant_divisor_variant(self, params):
        proto = Protocol(params, seed=55)
        keys = proto.share_int(np.array([8, 8, 8, 8]))
        alive = proto.share_int(np.array([1, 1, 0, 0]))
        out = average_pivot(proto, keys, alive, divide_by_total=True)
        assert int(proto.reconstruct_int(out)) == 4  # 16 / constant 4


class TestSelectionCorrectness:
    def test_worked_example(self, params):
        proto = Protocol(params, seed=56)
        scores = [0.9, 0.1, 0.5, 0.7, 0.3, 0.8, 0.2, 0.6]
        res = oblivious_median(proto, proto.share_fixed(scores))
        assert proto.reconstruct_fixed(res.median) == 0.5

    def test_two_elements_min(self, params, rng):
        for t in range(10):
            proto = Protocol(params, seed=300 + t)
            pair = rng.uniform(-4, 4, 2)
            res = oblivious_median(proto, proto.share_fixed(pair))
            assert proto.reconstruct_fixed(res.median) == quantize(pair, params).min()

    def test_odd_or_short_rejected(self, params):
        proto = Protocol(params, seed=57)
        with pytest.raises(DomainError):
            oblivious_median(proto, proto.share_fixed([1.0, 2.0, 3.0]))
        with pytest.raises(DomainError):
            oblivious_median(proto, proto.share_fixed([1.0]))

    @pytest.mark.parametrize("n", [2, 8, 16, 64])
    def test_exact_vs_sort_oracle(self, params, n, rng):
        vecs = synthetic_scores_batch(rng, 60, n) if n >= 8 else rng.uniform(
            -3, 3, (60, n))
        for t, s in enumerate(vecs):
            proto = Protocol(params, seed=700 + t)
            res = oblivious_median(proto, proto.share_fixed(s))
            want = sort_median(quantize(s, params))
            assert proto.reconstruct_fixed(res.median) == want

    def test_duplicate_scores_still_exact(self, params, rng):
        # ties at and around the median cannot stall or skew the search
        for t in range(20):
            proto = Protocol(params, seed=900 + t)
            base = rng.integers(-8, 8, 16) / 4.0
            res = oblivious_median(proto, proto.share_fixed(base))
            assert proto.reconstruct_fixed(res.median) == sort_median(
                quantize(base, params))

    def test_pivot_mode_avg_exact(self, params, rng):
        cfg = MedianConfig(pivot_mode="avg")
        for t in range(15):
            proto = Protocol(params, seed=1100 + t)
            s = synthetic_scores(rng, 32)
            res = oblivious_median(proto, proto.share_fixed(s), cfg)
            assert proto.reconstruct_fixed(res.median) == sort_median(
                quantize(s, params))

    def test_constant_divisor_mode_exact(self, params, rng):
        cfg = MedianConfig(divide_by_total=True)
        for t in range(15):
            proto = Protocol(params, seed=1300 + t)
            s = synthetic_scores(rng, 32)
            res = oblivious_median(proto, proto.share_fixed(s), cfg)
            assert proto.reconstruct_fixed(res.median) == sort_median(
                quantize(s, params))

    def test_fallback_preserves_correctness(self, params, rng):
        cfg = MedianConfig(max_rounds=1)
        fell = 0
        for t in range(10):
            proto = Protocol(params, seed=1500 + t)
            s = synthetic_scores(rng, 16)
            res = oblivious_median(proto, proto.share_fixed(s), cfg)
            fell += res.fell_back
            assert proto.reconstruct_fixed(res.median) == sort_median(
                quantize(s, params))
            if res.fell_back:
                assert "median-fallback" in proto.ledger.stages
        assert fell > 0


class TestSelectionInvariants:
    def test_cmp_equals_mux_and_cost_formula(self, params, rng):
        for t in range(10):
            n = 32
            proto = Protocol(params, seed=1700 + t)
            res = oblivious_median(proto, proto.share_fixed(synthetic_scores(rng, n)))
            tot = proto.ledger.total
            assert tot.cmp == tot.mux
            if not res.fell_back:
                assert tot.cmp == res.rounds * (n + 3) + (n - 1)

    def test_rank_k_element_stays_alive(self, params, rng):
        n = 32
        for t in range(10):
            proto = Protocol(params, seed=1900 + t, debug=True)
            s = synthetic_scores(rng, n)
            shares = proto.share_fixed(s)
            keys, c = build_keys(proto, shares)
            rank_idx = np.lexsort((np.arange(n), quantize(s, params)))[n // 2 - 1]
            res = oblivious_median(proto, shares)
            for alive in res.alive_trail:
                assert alive[rank_idx] == 1

    def test_round_bound_light(self, params, rng):
        bound = 2 * np.log2(64) + 2
        rs = []
        vecs = synthetic_scores_batch(rng, 100, 64)
        for t, s in enumerate(vecs):
            proto = Protocol(params, seed=2100 + t)
            rs.append(oblivious_median(proto, proto.share_fixed(s)).rounds)
        assert np.mean(np.array(rs) <= bound) >= 0.99


class TestTraces:
    def _traced(self, params, seed, n=16):
        proto = Protocol(params, seed=seed)
        rng = np.random.default_rng(seed)
        proto.start_trace()
        res = oblivious_median(proto, proto.share_fixed(synthetic_scores(rng, n)))
        return res, proto.stop_trace().as_lines()

    def test_partition_coverage(self, params):
        res, lines = self._traced(params, 60)
        ok, msg = verify_partition_trace(lines, 16, res.rounds)
        assert ok, msg

    def test_trace_count_matches_rounds(self, params):
        res, lines = self._traced(params, 61)
        part_cmp = [ev for ev in lines
                    if ev["op"] == "cmp" and ev["index"] >= 0
                    and 1 <= ev["round"] <= res.rounds]
        assert len(part_cmp) == res.rounds * 16

    def test_equal_rounds_give_equal_traces(self, params):
        res_a, lines_a = self._traced(params, 62)
        for seed in range(63, 140):
            res_b, lines_b = self._traced(params, seed)
            if res_b.rounds == res_a.rounds and not res_b.fell_back:
                assert traces_equal(lines_a, lines_b)
                return
        pytest.skip("no equal-round partner found")

    def test_negative_control_fails_verifier(self, params, rng):
        """A non-oblivious variant that skips dead indices must be caught."""
        proto = Protocol(params, seed=63)
        n = 16
        s = proto.share_fixed(synthetic_scores(rng, n))
        keys, _ = build_keys(proto, s)
        proto.start_trace()
        alive_idx = np.arange(n)
        pivot = keys[0:1]
        for r in (1, 2):
            proto.trace.set_round(r)
            sub = keys[alive_idx]
            bits = proto.cmp(sub, proto._broadcast(pivot.reshape(()), sub.shape),
                             indices=alive_idx)
            proto.mux(bits, sub, sub, indices=alive_idx)
            plain = proto.reconstruct_int(bits)
            alive_idx = alive_idx[plain == 1]  # data-dependent narrowing
            if alive_idx.size == 0:
                alive_idx = np.arange(2)
        lines = proto.stop_trace().as_lines()
        ok, _ = verify_partition_trace(lines, n, 2)
        assert not ok


class TestBitonic:
    @pytest.mark.parametrize("n,cmp_count", [(64, 672), (128, 1792), (256, 4608)])
    def test_ledger_counts_match_network_size(self, params, n, cmp_count, rng):
        proto = Protocol(params, seed=64)
        bitonic_median(proto, proto.share_fixed(rng.normal(size=n)))
        assert proto.ledger.total.cmp == cmp_count
        assert proto.ledger.total.mux == 2 * cmp_count
        assert bitonic_comparator_count(n) == cmp_count

    def test_sorting_is_correct(self, params, rng):
        proto = Protocol(params, seed=65)
        v = rng.uniform(-50, 50, 32)
        out = proto.reconstruct_fixed(bitonic_sort_shares(proto, proto.share_fixed(v)))
        assert np.array_equal(out, np.sort(quantize(v, params)))

    def test_median_matches_oracle(self, params, rng):
        for t in range(20):
            proto = Protocol(params, seed=2300 + t)
            v = rng.uniform(-9, 9, 16)
            out = bitonic_median(proto, proto.share_fixed(v))
            assert proto.reconstruct_fixed(out) == sort_median(quantize(v, params))

    def test_non_power_of_two_padding(self, params, rng):
        for t in range(10):
            proto = Protocol(params, seed=2500 + t)
            v = rng.uniform(-9, 9, 6)
            out = bitonic_median(proto, proto.share_fixed(v))
            assert proto.reconstruct_fixed(out) == sort_median(quantize(v, params))

    def test_agreement_with_selection(self, params, rng):
        for t in range(10):
            s = synthetic_scores(rng, 16)
            p1 = Protocol(params, seed=2700 + t)
            m1 = p1.reconstruct_fixed(
                oblivious_median(p1, p1.share_fixed(s)).median)
            p2 = Protocol(params, seed=2700 + t)
            m2 = p2.reconstruct_fixed(bitonic_median(p2, p2.share_fixed(s)))
            assert m1 == m2


class TestNarrowRings:
    def test_selection_exact_at_ell_48(self, rng):
        params = RingParams(48, 10)
        cfg = MedianConfig(score_bound_bits=8)
        for t in range(10):
            proto = Protocol(params, seed=2900 + t)
            s = rng.uniform(-3, 3, 8)
            res = oblivious_median(proto, proto.share_fixed(s), cfg)
            want = sort_median(decode_fixed(encode_fixed(s, params), params))
            assert proto.reconstruct_fixed(res.median) == want

    def test_too_narrow_ring_rejected_cleanly(self, rng):
        params = RingParams(32, 12)
        proto = Protocol(params, seed=3000)
        with pytest.raises(DomainError):
            oblivious_median(proto, proto.share_fixed(rng.uniform(-1, 1, 64)))
