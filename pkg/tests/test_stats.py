from __future__ import annotations

import itertools
import math
import random

import pytest
from scipy.stats import rankdata

from lidos.planner import RunTrace, TraceEvent
from lidos.stats import (
    SampleGroup,
    a12,
    scott_knott,
    speedup,
    split_delta,
    summarize,
    wilcoxon_rank_sum,
)


def exact_rank_sum_p(xs, ys):
    """Independent oracle: enumerate every assignment of the combined midranks."""
    combined = list(xs) + list(ys)
    ranks = rankdata(combined)
    n1 = len(xs)
    mu = n1 * (len(combined) + 1) / 2.0
    observed = abs(sum(ranks[:n1]) - mu)
    extreme = total = 0
    for combo in itertools.combinations(range(len(combined)), n1):
        total += 1
        if abs(sum(ranks[i] for i in combo) - mu) >= observed - 1e-9:
            extreme += 1
    return extreme / total


class TestWilcoxon:
    def test_identical_multisets(self):
        assert wilcoxon_rank_sum([3, 1, 2], [1, 2, 3]) == 1.0

    def test_disjoint_small_samples(self):
        p = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
        assert abs(p - 0.1) < 1e-12  # 2 of the 20 rank assignments are as extreme

    def test_matches_enumeration_oracle(self):
        rng = random.Random(100)
        for _ in range(60):
            n1 = rng.randint(1, 8)
            n2 = rng.randint(1, 9 - n1 if n1 < 9 else 1)
            pool = [0, 1, 2, 5]  # heavy ties on purpose
            xs = [rng.choice(pool) for _ in range(n1)]
            ys = [rng.choice(pool) for _ in range(n2)]
            assert wilcoxon_rank_sum(xs, ys) == pytest.approx(
                exact_rank_sum_p(xs, ys), abs=1e-6
            )

    def test_monotone_transform_invariance(self):
        rng = random.Random(5)
        xs = [rng.uniform(0, 10) for _ in range(12)]
        ys = [rng.uniform(2, 12) for _ in range(9)]
        p1 = wilcoxon_rank_sum(xs, ys)
        p2 = wilcoxon_rank_sum([math.exp(x) for x in xs], [math.exp(y) for y in ys])
        assert p1 == p2

    def test_large_sample_null_calibration(self):
        quiet = 0
        for trial in range(100):
            rng = random.Random(trial)
            xs = [rng.gauss(0, 1) for _ in range(50)]
            ys = [rng.gauss(0, 1) for _ in range(50)]
            if wilcoxon_rank_sum(xs, ys) > 0.05:
                quiet += 1
        assert quiet >= 90

    def test_large_sample_detects_separation(self):
        rng = random.Random(0)
        xs = [rng.gauss(0, 1) for _ in range(50)]
        ys = [rng.gauss(2, 1) for _ in range(50)]
        assert wilcoxon_rank_sum(xs, ys) < 0.001

    def test_degenerate_constant_samples(self):
        assert wilcoxon_rank_sum([4.0] * 60, [4.0] * 60) == 1.0

    def test_large_tie_free_samples_match_scipy(self):
        # Without ties the correction term vanishes, so the approximation must
        # agree with scipy's rank-sum z-test.
        from scipy.stats import ranksums

        rng = random.Random(77)
        for _ in range(20):
            xs = [rng.uniform(0, 1) for _ in range(40)]
            ys = [rng.uniform(0.2, 1.2) for _ in range(35)]
            assert wilcoxon_rank_sum(xs, ys) == pytest.approx(
                ranksums(xs, ys).pvalue, abs=1e-10
            )

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            wilcoxon_rank_sum([], [1.0])


class TestA12:
    def test_identical_samples(self):
        assert a12([1, 2, 3], [1, 2, 3]) == 0.5

    def test_total_separation(self):
        assert a12([1, 2], [3, 4], "minimize") == 1.0
        assert a12([1, 2], [3, 4], "maximize") == 0.0

    def test_hand_example(self):
        assert a12([1, 2], [1, 3], "minimize") == 0.625

    def test_pairwise_counting_oracle(self):
        rng = random.Random(8)
        for _ in range(50):
            xs = [rng.randint(0, 5) for _ in range(rng.randint(1, 12))]
            ys = [rng.randint(0, 5) for _ in range(rng.randint(1, 12))]
            wins = sum(1 for x in xs for y in ys if x < y)
            ties = sum(1 for x in xs for y in ys if x == y)
            expected = (wins + 0.5 * ties) / (len(xs) * len(ys))
            assert a12(xs, ys, "minimize") == expected

    def test_complement_identity(self):
        rng = random.Random(9)
        for _ in range(50):
            xs = [rng.uniform(0, 3) for _ in range(6)]
            ys = [rng.uniform(0, 3) for _ in range(7)]
            assert a12(xs, ys) + a12(ys, xs) == pytest.approx(1.0, abs=1e-12)

    def test_scale_invariance(self):
        xs, ys = [1.0, 2.0, 5.0], [2.0, 4.0]
        assert a12(xs, ys) == a12([7 * x for x in xs], [7 * y for y in ys])

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            a12([1], [2], "upward")


class TestSplitDelta:
    def test_hand_arithmetic(self):
        assert split_delta([1, 1], [5, 5]) == 4.0

    def test_no_separation_is_zero(self):
        assert split_delta([2, 2], [2, 2]) == 0.0

    def test_empty_side_rejected(self):
        with pytest.raises(ValueError):
            split_delta([], [1])


def groups(*specs, direction="minimize"):
    return [
        SampleGroup(label=label, values=tuple(values), direction=direction)
        for label, values in specs
    ]


class TestScottKnott:
    def test_constant_groups_two_ranks(self):
        table = scott_knott(
            groups(("p", [0.0] * 10), ("q", [0.0] * 10), ("r", [5.0] * 10))
        )
        assert table.rank_of("p") == 1
        assert table.rank_of("q") == 1
        assert table.rank_of("r") == 2

    def test_identical_distributions_share_rank(self):
        rng = random.Random(2)
        a = [rng.gauss(0, 1) for _ in range(30)]
        b = [rng.gauss(0, 1) for _ in range(30)]
        table = scott_knott(groups(("a", a), ("b", b)))
        assert table.rank_of("a") == table.rank_of("b") == 1

    def test_relabeling_invariance(self):
        rng = random.Random(3)
        samples = {
            "x": [rng.gauss(0, 0.5) for _ in range(25)],
            "y": [rng.gauss(4, 0.5) for _ in range(25)],
            "z": [rng.gauss(8, 0.5) for _ in range(25)],
        }
        forward = scott_knott(groups(*samples.items()),
                              rng=random.Random(0))
        shuffled = scott_knott(groups(*reversed(list(samples.items()))),
                               rng=random.Random(0))
        assert {e.label: e.rank for e in forward.entries} == {
            e.label: e.rank for e in shuffled.entries
        }

    def test_maximize_direction_ranks_high_first(self):
        table = scott_knott(
            groups(("low", [1.0] * 10), ("high", [9.0] * 10), direction="maximize")
        )
        assert table.rank_of("high") == 1
        assert table.rank_of("low") == 2

    def test_entries_sorted_by_rank_then_median(self):
        rng = random.Random(4)
        table = scott_knott(
            groups(
                ("worst", [rng.gauss(9, 0.1) for _ in range(20)]),
                ("best", [rng.gauss(0, 0.1) for _ in range(20)]),
                ("mid", [rng.gauss(5, 0.1) for _ in range(20)]),
            )
        )
        assert [e.label for e in table.entries] == ["best", "mid", "worst"]
        assert [e.rank for e in table.entries] == [1, 2, 3]

    def test_mixed_directions_rejected(self):
        gs = groups(("a", [1.0] * 3)) + groups(("b", [2.0] * 3), direction="maximize")
        with pytest.raises(ValueError, match="direction"):
            scott_knott(gs)

    def test_single_group_rejected(self):
        with pytest.raises(ValueError, match="at least two"):
            scott_knott(groups(("a", [1.0, 2.0])))


class TestSummarize:
    def test_even_median_midpoint(self):
        out = summarize(groups(("g", [1, 2, 3, 4])))
        assert out["g"].median == 2.5

    def test_singleton(self):
        out = summarize(groups(("g", [5])))
        assert out["g"].median == 5.0
        assert out["g"].iqr == 0.0

    def test_iqr_linear_interpolation(self):
        out = summarize(groups(("g", [1, 2, 3, 4, 5, 6, 7, 8])))
        assert out["g"].iqr == pytest.approx(6.25 - 2.75, abs=1e-12)

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            summarize(groups(("g", [1]), ("g", [2])))


def synthetic_trace(post_change_fts, pre_change_fts=(10.0,), env=("A", "B")):
    trace = RunTrace()
    index = 0
    best = math.inf
    for ft in pre_change_fts:
        index += 1
        best = min(best, ft)
        trace.events.append(TraceEvent(index, env[0], plan=(0,), ft=ft, best_ft=best))
    trace.events.append(TraceEvent(index, env[1], env_change=True))
    best = math.inf
    for ft in post_change_fts:
        index += 1
        best = min(best, ft)
        trace.events.append(TraceEvent(index, env[1], plan=(0,), ft=ft, best_ft=best))
    return trace


class TestSpeedup:
    def test_hand_arithmetic(self):
        # Baseline first attains its post-change best (10) at position 100;
        # the other trace attains <= 10 already at position 20.
        base = synthetic_trace([50.0] * 99 + [10.0] + [30.0] * 50)
        fast = synthetic_trace([40.0] * 19 + [9.0] + [35.0] * 130)
        assert speedup(base, fast) == 5.0

    def test_identical_traces(self):
        trace = synthetic_trace([30.0, 20.0, 25.0, 15.0, 18.0])
        assert speedup(trace, trace) == 1.0

    def test_unreachable_target_is_infinite(self):
        base = synthetic_trace([5.0, 1.0])
        slow = synthetic_trace([9.0, 8.0, 7.0])
        assert speedup(base, slow) == math.inf

    def test_requires_change_marker(self):
        trace = RunTrace()
        trace.events.append(TraceEvent(1, "A", plan=(0,), ft=1.0, best_ft=1.0))
        other = synthetic_trace([1.0])
        with pytest.raises(ValueError, match="change marker"):
            speedup(trace, other)

    def test_empty_post_change_segment(self):
        empty = synthetic_trace([])
        other = synthetic_trace([1.0])
        with pytest.raises(ValueError, match="empty post-change"):
            speedup(empty, other)

    def test_first_attainment_counts(self):
        base = synthetic_trace([7.0, 3.0, 3.0, 3.0])
        other = synthetic_trace([3.0, 9.0, 9.0, 9.0])
        assert speedup(base, other) == 2.0


class TestSampleGroup:
    def test_canonicalisation(self):
        g = SampleGroup("g", (1.0, 4.0), direction="maximize")
        assert g.canonical() == (-1.0, -4.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            SampleGroup("g", ())

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            SampleGroup("g", (1.0, math.nan))
