"""Block kernel tests: hand-computed fixtures, brute-force oracles, invariants."""

import numpy as np
import pytest

from exindex.blocks import (
    BLOCK_MAX,
    FIRST_EXCEED,
    RUNS,
    BlockFunctional,
    BlockScheme,
    NormalizedSeries,
    ThresholdSpec,
    as_series,
    big_block_sums,
    disjoint_block_sum,
    normalize,
    scheme_advisories,
    sliding_block_sum,
    sliding_window_max,
    window_values,
)
from exindex.errors import (
    InsufficientBlocksError,
    InvalidThresholdError,
    SchemeError,
    WindowError,
)

FIX = [5.0, 1.0, 6.0, 2.0, 0.0, 7.0]


def brute_window_values(g, x, u, s):
    x = np.asarray(x, dtype=float)
    out = []
    for i in range(x.size - s + 1):
        w = x[i : i + s]
        out.append(g(np.where(w > u, w / u, 0.0)))
    return np.array(out)


class TestSeriesValidation:
    def test_copies_and_freezes(self):
        raw = [1.0, 2.0]
        x = as_series(raw)
        raw[0] = 99.0
        assert x[0] == 1.0
        with pytest.raises(ValueError):
            x[0] = 5.0

    def test_rejects_empty_nan_inf_2d(self):
        with pytest.raises(ValueError):
            as_series([])
        with pytest.raises(ValueError):
            as_series([1.0, np.nan])
        with pytest.raises(ValueError):
            as_series([np.inf])
        with pytest.raises(ValueError):
            as_series([[1.0, 2.0]])


class TestThreshold:
    def test_rank_resolves_kth_largest(self):
        thr = ThresholdSpec.rank(2).resolve(FIX)
        assert thr.u == 6.0
        # strict exceedance: only 7 > 6, so v_hat = 1/6 (= (k-1)/n here)
        assert thr.v_hat == pytest.approx(1 / 6)

    def test_deterministic_v_hat(self):
        thr = ThresholdSpec.deterministic(4.0).resolve(FIX)
        assert thr.u == 4.0
        assert thr.v_hat == pytest.approx(3 / 6)

    def test_d_ratio_diagnostic(self):
        thr = ThresholdSpec.rank(2).resolve(FIX, u_ref=3.0)
        assert thr.d_ratio == pytest.approx(2.0)

    def test_rank_out_of_range(self):
        with pytest.raises(ValueError):
            ThresholdSpec.rank(7).resolve(FIX)
        with pytest.raises(ValueError):
            ThresholdSpec.rank(0)


class TestNormalize:
    def test_hand_example(self):
        ns = normalize(FIX, ThresholdSpec.deterministic(4.0))
        assert np.array_equal(ns.normalized(), [1.25, 0.0, 1.5, 0.0, 0.0, 1.75])

    def test_all_below_threshold(self):
        ns = normalize([1.0, 2.0, 3.0], ThresholdSpec.deterministic(10.0))
        assert np.array_equal(ns.normalized(), [0.0, 0.0, 0.0])

    def test_rank_threshold(self):
        ns = normalize(FIX, ThresholdSpec.rank(2))
        assert np.array_equal(ns.normalized(), [0, 0, 0, 0, 0, 7 / 6])

    def test_nonpositive_threshold_rejected(self):
        with pytest.raises(InvalidThresholdError):
            NormalizedSeries(FIX, 0.0)
        with pytest.raises(InvalidThresholdError):
            NormalizedSeries(FIX, -1.0)
        # all-nonpositive data: threshold sign is unconstrained
        ns = NormalizedSeries([-1.0, -2.0], -5.0)
        assert ns.exceed_mask().sum() == 2

    def test_materialize_caches(self):
        ns = normalize(FIX, ThresholdSpec.deterministic(4.0), materialize=True)
        assert ns.normalized() is ns.normalized()

    def test_window_view(self):
        ns = normalize(FIX, ThresholdSpec.deterministic(4.0))
        assert np.array_equal(ns.window(3, 2), [1.5, 0.0])
        with pytest.raises(WindowError):
            ns.window(6, 2)


class TestSlidingWindowMax:
    def test_brute_force_fuzz(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            n = int(rng.integers(1, 60))
            s = int(rng.integers(1, n + 1))
            x = rng.normal(size=n)
            want = np.array([x[i : i + s].max() for i in range(n - s + 1)])
            assert np.array_equal(sliding_window_max(x, s), want)

    def test_window_too_long(self):
        with pytest.raises(WindowError):
            sliding_window_max(np.ones(3), 4)


class TestBlockSums:
    @pytest.fixture
    def ns(self):
        return normalize(FIX, ThresholdSpec.deterministic(4.0))

    def test_sliding_hand_examples(self, ns):
        assert sliding_block_sum(BLOCK_MAX, ns, 2) == 4.0
        assert sliding_block_sum(FIRST_EXCEED, ns, 2) == 2.0

    def test_disjoint_hand_examples(self, ns):
        assert disjoint_block_sum(BLOCK_MAX, ns, 2) == 3.0
        assert disjoint_block_sum(FIRST_EXCEED, ns, 2) == 2.0

    def test_whole_series_block(self, ns):
        assert disjoint_block_sum(BLOCK_MAX, ns, 6) == 1.0

    def test_zero_series(self):
        ns = normalize([1.0, 1.0, 1.0, 1.0], ThresholdSpec.deterministic(9.0))
        for g in (BLOCK_MAX, FIRST_EXCEED, RUNS):
            assert sliding_block_sum(g, ns, 2) == 0.0
            assert disjoint_block_sum(g, ns, 2) == 0.0

    def test_window_error(self, ns):
        with pytest.raises(WindowError):
            sliding_block_sum(BLOCK_MAX, ns, 7)
        with pytest.raises(WindowError):
            disjoint_block_sum(BLOCK_MAX, ns, 0)

    def test_builtin_kernels_match_generic_path(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            s = int(rng.integers(1, n + 1))
            x = rng.exponential(size=n) * 3
            u = float(np.quantile(x, 0.6))
            ns = normalize(x, ThresholdSpec.deterministic(u))
            for g in (BLOCK_MAX, FIRST_EXCEED, RUNS):
                generic = BlockFunctional("generic_" + g.name, g.func)
                assert np.array_equal(
                    window_values(g, ns, s), window_values(generic, ns, s)
                )

    def test_custom_functional(self):
        # sum of squared normalized exceedances; vanishes on a null block
        g = BlockFunctional("sq", lambda w: float(np.sum(w[w > 1.0] ** 2)))
        ns = normalize(FIX, ThresholdSpec.deterministic(4.0))
        assert sliding_block_sum(g, ns, 2) == pytest.approx(
            1.25**2 + 1.5**2 * 2 + 1.75**2
        )


class TestBigBlocks:
    def test_hand_example_sliding(self):
        # window maxima at starts 1..5 are 5,6,6,2,7; big block 2 holds
        # starts 3 and 4, of which only start 3 exceeds u=4
        ns = normalize(FIX, ThresholdSpec.deterministic(4.0))
        got = big_block_sums(BLOCK_MAX, ns, BlockScheme(6, 2, 2), "sliding")
        assert np.array_equal(got, [2.0, 1.0])

    def test_hand_example_disjoint(self):
        ns = normalize(FIX, ThresholdSpec.deterministic(4.0))
        got = big_block_sums(BLOCK_MAX, ns, BlockScheme(6, 2, 2), "disjoint")
        assert np.array_equal(got, [1.0, 1.0])

    def test_zero_series_gives_zeros(self):
        ns = normalize([1.0] * 9, ThresholdSpec.deterministic(5.0))
        got = big_block_sums(BLOCK_MAX, ns, BlockScheme(9, 2, 4), "sliding")
        assert np.array_equal(got, [0.0, 0.0])

    def test_no_complete_block_errors(self):
        ns = normalize(FIX, ThresholdSpec.deterministic(4.0))
        with pytest.raises(InsufficientBlocksError):
            big_block_sums(BLOCK_MAX, ns, BlockScheme(6, 2, 6), "sliding")

    def test_disjoint_requires_divisible(self):
        x = list(range(12))
        ns = normalize(x, ThresholdSpec.deterministic(5.0))
        with pytest.raises(SchemeError):
            big_block_sums(BLOCK_MAX, ns, BlockScheme(12, 2, 5), "disjoint")

    def test_decomposition_consistency_sliding(self):
        # summing big-block sums plus the remainder tail reproduces the
        # full sliding sum
        rng = np.random.default_rng(5)
        for _ in range(30):
            n = int(rng.integers(10, 80))
            s = int(rng.integers(1, 5))
            r = int(rng.integers(s, n + 1))
            if (n - s + 1) // r == 0:
                continue
            x = rng.exponential(size=n)
            u = float(np.quantile(x, 0.5))
            ns = normalize(x, ThresholdSpec.deterministic(u))
            scheme = BlockScheme(n, s, r)
            bb = big_block_sums(BLOCK_MAX, ns, scheme, "sliding")
            vals = brute_window_values(BLOCK_MAX, x, u, s)
            assert bb.sum() == pytest.approx(vals[: scheme.m * r].sum())
            assert bb.sum() + vals[scheme.m * r :].sum() == pytest.approx(
                sliding_block_sum(BLOCK_MAX, ns, s)
            )

    def test_decomposition_consistency_disjoint(self):
        # big-block disjoint sums cover the disjoint starts within the
        # first m*r positions; adding the leftover disjoint blocks gives
        # the full disjoint sum
        rng = np.random.default_rng(6)
        for _ in range(30):
            n = int(rng.integers(12, 90))
            s = int(rng.integers(1, 5))
            r = s * int(rng.integers(2, 5))
            if r > n or (n - s + 1) // r == 0:
                continue
            x = rng.exponential(size=n)
            u = float(np.quantile(x, 0.5))
            ns = normalize(x, ThresholdSpec.deterministic(u))
            scheme = BlockScheme(n, s, r)
            bb = big_block_sums(BLOCK_MAX, ns, scheme, "disjoint")
            vals = brute_window_values(BLOCK_MAX, x, u, s)
            starts = np.arange(0, (n // s) * s, s)
            covered = starts[starts < scheme.m * r]
            rest = starts[starts >= scheme.m * r]
            assert bb.sum() == pytest.approx(vals[covered].sum())
            assert bb.sum() + vals[rest].sum() == pytest.approx(
                disjoint_block_sum(BLOCK_MAX, ns, s)
            )


class TestScheme:
    def test_m_derived(self):
        assert BlockScheme(6, 2, 2).m == 2
        assert BlockScheme(100, 8, 32).m == (100 - 8 + 1) // 32

    def test_ordering_enforced(self):
        with pytest.raises(SchemeError):
            BlockScheme(10, 5, 3)
        with pytest.raises(SchemeError):
            BlockScheme(10, 0, 3)
        with pytest.raises(SchemeError):
            BlockScheme(10, 2, 11)

    def test_advisories_levels(self):
        levels = {lvl for lvl, _, _ in scheme_advisories(50000, 8, 32, 0.02)}
        assert levels == {"green"}
        assert any(lvl == "yellow" for lvl, _, _ in scheme_advisories(50000, 8, 35, 0.02))
        assert any(lvl == "red" for lvl, _, _ in scheme_advisories(50000, 16, 8, 0.02))


class TestInvariants:
    def test_s1_sliding_equals_disjoint(self):
        rng = np.random.default_rng(11)
        sq = BlockFunctional("sq", lambda w: float(np.sum(w[w > 1.0] ** 2)))
        for _ in range(40):
            n = int(rng.integers(1, 50))
            x = rng.exponential(size=n)
            ns = normalize(x, ThresholdSpec.deterministic(0.5))
            for g in (BLOCK_MAX, FIRST_EXCEED, RUNS, sq):
                assert sliding_block_sum(g, ns, 1) == disjoint_block_sum(g, ns, 1)

    def test_monotone_transform_invariance(self):
        phi = lambda t: t**3 + t
        rng = np.random.default_rng(12)
        for _ in range(40):
            n = int(rng.integers(4, 60))
            s = int(rng.integers(1, n + 1))
            x = rng.uniform(0, 10, size=n)
            u = float(np.quantile(x, 0.5)) + 0.01
            a = normalize(x, ThresholdSpec.deterministic(u))
            b = normalize(phi(x), ThresholdSpec.deterministic(phi(u)))
            for g in (BLOCK_MAX, FIRST_EXCEED, RUNS):
                assert sliding_block_sum(g, a, s) == sliding_block_sum(g, b, s)
                assert disjoint_block_sum(g, a, s) == disjoint_block_sum(g, b, s)

    def test_block_max_dominates_runs(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            n = int(rng.integers(2, 60))
            s = int(rng.integers(1, n + 1))
            x = rng.exponential(size=n)
            ns = normalize(x, ThresholdSpec.deterministic(1.0))
            assert sliding_block_sum(BLOCK_MAX, ns, s) >= sliding_block_sum(RUNS, ns, s)

    def test_first_exceed_counts_exceedances(self):
        rng = np.random.default_rng(14)
        for _ in range(40):
            n = int(rng.integers(2, 60))
            s = int(rng.integers(1, n + 1))
            x = rng.exponential(size=n)
            ns = normalize(x, ThresholdSpec.deterministic(1.0))
            assert sliding_block_sum(FIRST_EXCEED, ns, s) == np.count_nonzero(
                x[: n - s + 1] > 1.0
            )
