import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twinfuse.detector import AnomalyFlags, check
from twinfuse.fusion import (
    FusionState,
    UnfusableCycleError,
    auto_correct,
    fuse,
    fusion_cycle,
)
from twinfuse.model import Reading, Threshold, ThresholdMode, TriadWindow

from conftest import assert_close

ABS3 = Threshold(3.0, ThresholdMode.ABSOLUTE)


def window_from(rows, participating=None):
    n = len(rows[0])
    if participating is None:
        participating = tuple(True for _ in rows)
    return TriadWindow(
        timestamps=tuple(60 * i for i in range(n)),
        rows=tuple(
            tuple(Reading.absent() if v is None else Reading.of(v) for v in row)
            for row in rows
        ),
        participating=participating,
    )


def no_flags(rows=3, n=5):
    return AnomalyFlags(tuple((False,) * n for _ in range(rows)))


class TestFuse:
    def test_documented_clean_cycle(self):
        elementwise, composite = fuse(
            ((7, 8, 8, 7, 6), (6, 7, 8, 8, 7), (7, 6, 7, 8, 8))
        )
        expected = (20 / 3, 7.0, 23 / 3, 23 / 3, 7.0)
        for got, want in zip(elementwise, expected):
            assert_close(got, want)
        assert_close(composite, 7.20)

    def test_documented_corrected_cycle(self):
        elementwise, composite = fuse(
            ((7, 8, 8, 7, 6), (6, 7.20, 7.20, 8, 7), (7, 6, 7, 8, 8))
        )
        expected = (20 / 3, 21.2 / 3, 7.4, 23 / 3, 7.0)
        for got, want in zip(elementwise, expected):
            assert_close(got, want)
        assert_close(composite, 7.16)

    def test_identical_rows_identity(self):
        elementwise, composite = fuse(((4.2,) * 3, (4.2,) * 3, (4.2,) * 3))
        assert elementwise == (4.2, 4.2, 4.2)
        assert composite == 4.2

    def test_two_row_fusion(self):
        elementwise, composite = fuse(((1.0, 3.0), (3.0, 5.0)))
        assert elementwise == (2.0, 4.0)
        assert composite == 3.0

    def test_single_row_fusion(self):
        elementwise, composite = fuse(((2.0, 4.0, 6.0),))
        assert elementwise == (2.0, 4.0, 6.0)
        assert composite == 4.0

    def test_grand_mean_oracle_over_random_windows(self):
        # Brute-force oracle: with equal-length rows the mean of column
        # means equals the grand mean over all entries.
        rng = np.random.default_rng(123)
        for _ in range(1000):
            n = int(rng.integers(1, 11))
            matrix = rng.uniform(-100, 100, size=(3, n))
            _, composite = fuse(tuple(tuple(row) for row in matrix))
            grand_mean = matrix.sum() / matrix.size
            assert abs(composite - grand_mean) <= 1e-12

    @given(
        data=st.lists(
            st.tuples(
                st.floats(-1000, 1000, allow_nan=False),
                st.floats(-1000, 1000, allow_nan=False),
                st.floats(-1000, 1000, allow_nan=False),
            ),
            min_size=1,
            max_size=10,
        ),
        perm=st.permutations([0, 1, 2]),
    )
    def test_permutation_invariance(self, data, perm):
        rows = tuple(tuple(col[i] for col in data) for i in range(3))
        base = fuse(rows)
        permuted = fuse(tuple(rows[p] for p in perm))
        assert permuted == base

    @given(
        data=st.lists(
            st.tuples(
                st.floats(-1000, 1000, allow_nan=False),
                st.floats(-1000, 1000, allow_nan=False),
                st.floats(-1000, 1000, allow_nan=False),
            ),
            min_size=1,
            max_size=10,
        )
    )
    def test_composite_bounded_by_corrected(self, data):
        rows = tuple(tuple(col[i] for col in data) for i in range(3))
        elementwise, composite = fuse(rows)
        flat = [v for row in rows for v in row]
        assert min(flat) - 1e-9 <= composite <= max(flat) + 1e-9
        for j, value in enumerate(elementwise):
            column = [rows[i][j] for i in range(3)]
            assert min(column) - 1e-9 <= value <= max(column) + 1e-9


class TestAutoCorrect:
    def test_documented_replacement(self):
        window = window_from(((7, 8, 8, 7, 6), (6, 0, 0, 8, 7), (7, 6, 7, 8, 8)))
        flags = AnomalyFlags(
            ((False,) * 5, (False, True, True, False, False), (False,) * 5)
        )
        corrected = auto_correct(window, flags, FusionState(last_composite=7.20))
        assert corrected[1] == (6, 7.20, 7.20, 8, 7)
        assert corrected[0] == (7, 8, 8, 7, 6)
        assert corrected[2] == (7, 6, 7, 8, 8)

    def test_no_flags_passthrough(self):
        window = window_from(((1, 2), (3, 4), (5, 6)))
        corrected = auto_correct(window, no_flags(n=2), FusionState(last_composite=9.0))
        assert corrected == ((1, 2), (3, 4), (5, 6))

    def test_bootstrap_composite_from_unflagged(self):
        # Without a previous composite the replacement is the grand mean of
        # the 13 unflagged readings: 93 / 13.
        window = window_from(((7, 8, 8, 7, 6), (6, 0, 0, 8, 7), (7, 6, 7, 8, 8)))
        flags = AnomalyFlags(
            ((False,) * 5, (False, True, True, False, False), (False,) * 5)
        )
        corrected = auto_correct(window, flags, FusionState())
        bootstrap = 93 / 13
        assert_close(corrected[1][1], bootstrap, tol=1e-12)
        assert_close(corrected[1][2], bootstrap, tol=1e-12)

    def test_absent_readings_replaced(self):
        window = window_from(((1.0, None), (1.0, 1.0), (1.0, 1.0)))
        flags = AnomalyFlags(((False, True), (False, False), (False, False)))
        corrected = auto_correct(window, flags, FusionState(last_composite=2.0))
        assert corrected[0] == (1.0, 2.0)

    def test_all_flagged_without_composite_is_unfusable(self):
        window = window_from(((None, None), (None, None), (None, None)))
        flags = AnomalyFlags(((True, True),) * 3)
        with pytest.raises(UnfusableCycleError):
            auto_correct(window, flags, FusionState())


class TestFusionCycle:
    def test_first_documented_cycle(self, paper_window_clean):
        output, state = fusion_cycle(paper_window_clean, FusionState(), ABS3)
        assert_close(output.composite, 7.20)
        assert state.last_composite == output.composite
        assert state.cycle_index == 1

    def test_second_documented_cycle(self, paper_window_faulted):
        state = FusionState(last_composite=7.20, cycle_index=1)
        output, state2 = fusion_cycle(paper_window_faulted, state, ABS3)
        assert output.corrected[1] == (6, 7.20, 7.20, 8, 7)
        assert_close(output.composite, 7.16)
        assert state2.cycle_index == 2

    def test_constant_windows_fixed_point(self):
        state = FusionState()
        window = window_from(((5.5,) * 4,) * 3)
        for _ in range(20):
            output, state = fusion_cycle(window, state, ABS3)
            assert output.composite == 5.5

    def test_excluded_rows_reduce_m(self):
        window = window_from(
            ((1.0, 2.0), (None, None), (3.0, 6.0)), participating=(True, False, True)
        )
        output, _ = fusion_cycle(window, FusionState(), ABS3)
        assert output.row_indices == (0, 2)
        assert output.elementwise == (2.0, 4.0)
        assert output.composite == 3.0

    def test_determinism(self, paper_window_faulted):
        state = FusionState(last_composite=7.20, cycle_index=1)
        runs = {fusion_cycle(paper_window_faulted, state, ABS3)[0].composite
                for _ in range(10)}
        assert len(runs) == 1

    def test_single_corruption_masking_bound(self):
        # Brute-force check of the masking property on small instances: a
        # flagged single-sensor corruption moves the composite by at most
        # flagged_count * |last_composite - true value| / (3N).
        rng = np.random.default_rng(99)
        for _ in range(200):
            n = int(rng.integers(1, 6))
            # Clean readings stay within the threshold of the prior composite
            # so the corruption is the only flagged position.
            base = rng.uniform(4.0, 6.0, size=(3, n))
            clean_composite = base.sum() / base.size
            last = clean_composite  # prior composite equals the clean estimate
            sensor = int(rng.integers(0, 3))
            position = int(rng.integers(0, n))
            true_value = base[sensor][position]
            corrupted = base.copy()
            corrupted[sensor][position] = true_value + 50.0  # far over threshold
            window = window_from(tuple(tuple(row) for row in corrupted))
            output, _ = fusion_cycle(window, FusionState(last_composite=last), ABS3)
            flagged_count = sum(sum(row) for row in output.flags.flags)
            assert flagged_count == 1
            bound = flagged_count * abs(last - true_value) / (3 * n) + 1e-9
            assert abs(output.composite - clean_composite) <= bound


class TestFlagInteraction:
    def test_cycle_flags_match_detector(self, paper_window_faulted):
        state = FusionState(last_composite=7.20)
        output, _ = fusion_cycle(paper_window_faulted, state, ABS3)
        expected = check(paper_window_faulted, 7.20, ABS3)
        assert output.flags == expected

    def test_grand_mean_identity_without_flags(self):
        rng = np.random.default_rng(5)
        matrix = rng.uniform(4, 6, size=(3, 5))
        window = window_from(tuple(tuple(row) for row in matrix))
        output, _ = fusion_cycle(window, FusionState(last_composite=5.0), ABS3)
        assert not any(any(row) for row in output.flags.flags)
        assert abs(output.composite - matrix.mean()) < 1e-12
