from __future__ import annotations

import itertools

import pytest

from lidos.twin import CyberTwin, Environment, load_measurements, synth_landscape

from conftest import make_space, make_table, make_twin


def write_csv(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadMeasurements:
    def test_two_row_file(self, tmp_path):
        path = write_csv(tmp_path, "m.csv", "a,b,performance\n0,1,3.5\n1,2,4.5\n")
        table = load_measurements(path, Environment("e"))
        assert len(table) == 2
        assert table.rows[(0, 1)] == 3.5
        assert table.option_names == ("a", "b")

    def test_implied_space_sorted_distinct(self, tmp_path):
        path = write_csv(tmp_path, "m.csv", "a,b,perf\n1,9,0\n0,9,1\n1,2,2\n")
        table = load_measurements(path, Environment("e"))
        space = table.implied_space()
        assert space.options[0].domain == (0, 1)
        assert space.options[1].domain == (2, 9)

    def test_conflicting_duplicate_rows(self, tmp_path):
        path = write_csv(tmp_path, "m.csv", "a,perf\n0,1.0\n0,2.0\n")
        with pytest.raises(ValueError, match="conflicting"):
            load_measurements(path, Environment("e"))

    def test_identical_duplicate_rows_collapse(self, tmp_path):
        path = write_csv(tmp_path, "m.csv", "a,perf\n0,1.0\n0,1.0\n1,2.0\n")
        table = load_measurements(path, Environment("e"))
        assert len(table) == 2

    def test_non_numeric_cell(self, tmp_path):
        path = write_csv(tmp_path, "m.csv", "a,perf\nzero,1.0\n")
        with pytest.raises(ValueError, match="m.csv:2"):
            load_measurements(path, Environment("e"))

    def test_missing_performance_column(self, tmp_path):
        path = write_csv(tmp_path, "m.csv", "a\n0\n")
        with pytest.raises(ValueError, match="performance column"):
            load_measurements(path, Environment("e"))

    def test_fractional_option_value(self, tmp_path):
        path = write_csv(tmp_path, "m.csv", "a,perf\n0.5,1.0\n")
        with pytest.raises(ValueError, match="not an integer"):
            load_measurements(path, Environment("e"))

    def test_integral_float_option_accepted(self, tmp_path):
        path = write_csv(tmp_path, "m.csv", "a,perf\n1.0,3.0\n")
        table = load_measurements(path, Environment("e"))
        assert table.rows[(1,)] == 3.0


class TestMeasure:
    def test_returns_value(self):
        space = make_space((0, 1))
        twin = make_twin(space, make_table(space, {(0,): 7.0, (1,): 9.0}), current="e")
        assert twin.measure((0,)) == 7.0

    def test_cache_hit_keeps_counter(self):
        space = make_space((0, 1))
        twin = make_twin(space, make_table(space, {(0,): 7.0, (1,): 9.0}), current="e")
        first = twin.measure((0,))
        assert twin.counter == 1
        second = twin.measure((0,))
        assert twin.counter == 1
        assert first == second

    def test_remeasured_after_environment_change(self):
        space = make_space((0, 1))
        twin = make_twin(space, make_table(space, {(0,): 7.0, (1,): 9.0}), current="e")
        twin.measure((0,))
        twin.set_environment("e")
        assert not twin.is_cached((0,))
        twin.measure((0,))
        assert twin.counter == 2

    def test_same_environment_reentry_clears_cache(self):
        space = make_space((0, 1))
        twin = make_twin(space, make_table(space, {(0,): 7.0, (1,): 9.0}), current="e")
        twin.measure((0,))
        twin.measure((1,))
        assert twin.coverage() == 1.0
        twin.set_environment("e")
        assert twin.coverage() == 0.0

    def test_unknown_plan(self):
        space = make_space((0, 1))
        twin = make_twin(space, make_table(space, {(0,): 7.0}), current="e")
        with pytest.raises(KeyError):
            twin.measure((1,))

    def test_unknown_environment(self):
        space = make_space((0, 1))
        twin = make_twin(space, make_table(space, {(0,): 7.0}))
        with pytest.raises(ValueError, match="unknown environment"):
            twin.set_environment("nope")

    def test_maximize_negated_at_boundary(self):
        space = make_space((0, 1))
        table = make_table(space, {(0,): 7.0, (1,): 9.0}, direction="maximize")
        twin = make_twin(space, table, current="e")
        # Larger raw is better, so the canonical value of the better plan is lower.
        assert twin.measure((1,)) == -9.0
        assert twin.measure((0,)) == -7.0

    def test_counter_untouched_by_change(self):
        space = make_space((0, 1))
        twin = make_twin(space, make_table(space, {(0,): 1.0, (1,): 2.0}), current="e")
        twin.measure((0,))
        twin.set_environment("e")
        assert twin.counter == 1


class TestCoverage:
    def test_fresh_zero(self):
        space = make_space((0, 1))
        twin = make_twin(space, make_table(space, {(0,): 1.0, (1,): 2.0}), current="e")
        assert twin.coverage() == 0.0

    def test_half(self):
        space = make_space((0, 1, 2), (0, 1))
        rows = {p: float(i) for i, p in enumerate(itertools.product((0, 1, 2), (0, 1)))}
        twin = make_twin(space, make_table(space, rows), current="e")
        for plan in list(rows)[:3]:
            twin.measure(plan)
        assert twin.coverage() == 0.5

    def test_monotone_within_epoch(self):
        space = make_space((0, 1, 2))
        twin = make_twin(space, make_table(space, {(0,): 1, (1,): 2, (2,): 3}), current="e")
        seen = [twin.coverage()]
        for plan in [(0,), (0,), (1,), (2,)]:
            twin.measure(plan)
            seen.append(twin.coverage())
        assert seen == sorted(seen)
        assert seen[-1] == 1.0


class TestRepair:
    def test_on_table_passthrough(self):
        space = make_space((0, 1), (0, 1))
        twin = make_twin(space, make_table(space, {(0, 0): 1.0, (1, 1): 2.0}), current="e")
        assert twin.repair((1, 1)) == (1, 1)

    def test_nearest_measured(self):
        space = make_space((0, 1), (0, 1))
        twin = make_twin(space, make_table(space, {(0, 0): 1.0, (1, 1): 2.0}), current="e")
        # (0, 1) is one step from both; tie resolves to the lexicographically lowest.
        assert twin.repair((0, 1)) == (0, 0)

    def test_nearest_wins_over_lexicographic(self):
        space = make_space((0, 1, 2, 3, 4), (0, 1))
        twin = make_twin(space, make_table(space, {(0, 0): 1.0, (4, 1): 2.0}), current="e")
        assert twin.repair((3, 1)) == (4, 1)


class TestSynthLandscape:
    def test_deterministic(self):
        a1, b1 = synth_landscape(n_options=3, domain_size=4, n_peaks=3, noise_seed=5)
        a2, b2 = synth_landscape(n_options=3, domain_size=4, n_peaks=3, noise_seed=5)
        assert a1.rows == a2.rows
        assert b1.rows == b2.rows

    def test_different_seeds_differ(self):
        a1, _ = synth_landscape(n_options=3, domain_size=4, n_peaks=3, noise_seed=5)
        a2, _ = synth_landscape(n_options=3, domain_size=4, n_peaks=3, noise_seed=6)
        assert a1.rows != a2.rows

    def test_shared_space_and_direction(self):
        ta, tb = synth_landscape(n_options=3, domain_size=4, n_peaks=3)
        assert set(ta.rows) == set(tb.rows)
        assert ta.environment.direction == "minimize"
        assert ta.implied_space() == tb.implied_space()

    def test_two_peaks_optimum_shift(self):
        ta, tb = synth_landscape(n_options=3, domain_size=5, n_peaks=2, noise_seed=1)
        argmin_a = min(ta.rows, key=ta.rows.get)
        argmin_b = min(tb.rows, key=tb.rows.get)
        assert argmin_a != argmin_b
        # Brute-force neighbor scan, written here independently: one step in
        # one option. Environment A's best plan must still be a local optimum
        # of environment B, just not its global one.
        domain = sorted({p[0] for p in ta.rows})
        for q in _one_step_neighbors(argmin_a, domain):
            assert tb.rows[q] > tb.rows[argmin_a]

    def test_too_many_peaks(self):
        with pytest.raises(ValueError, match="too small"):
            synth_landscape(n_options=2, domain_size=2, n_peaks=5)

    def test_too_few_peaks(self):
        with pytest.raises(ValueError, match="at least 2"):
            synth_landscape(n_peaks=1)

    def test_identity_shift_rejected(self):
        with pytest.raises(ValueError, match="peak_shift"):
            synth_landscape(n_options=3, domain_size=4, n_peaks=3, peak_shift=3)


def _one_step_neighbors(plan, domain):
    out = []
    for i, v in enumerate(plan):
        pos = domain.index(v)
        if pos > 0:
            out.append(plan[:i] + (domain[pos - 1],) + plan[i + 1 :])
        if pos + 1 < len(domain):
            out.append(plan[:i] + (domain[pos + 1],) + plan[i + 1 :])
    return out


class TestCyberTwinConstruction:
    def test_duplicate_environment_ids(self):
        space = make_space((0, 1))
        t1 = make_table(space, {(0,): 1.0})
        t2 = make_table(space, {(1,): 2.0})
        with pytest.raises(ValueError, match="duplicate environment"):
            CyberTwin(space, [t1, t2])

    def test_plan_outside_space_rejected(self):
        space = make_space((0, 1))
        bad = make_table(make_space((0, 1, 2)), {(2,): 1.0})
        with pytest.raises(ValueError, match="outside the config space"):
            CyberTwin(space, [bad])
