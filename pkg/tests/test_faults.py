import pytest
from hypothesis import given, strategies as st

from twinfuse.faults import (
    FaultKind,
    FaultSpec,
    FaultSpecError,
    FaultWindowError,
    SoftMode,
    inject,
    repair_index,
)

from conftest import constant_trace, make_trace


class TestInject:
    def test_hard_fault_blanks_window(self):
        trace = constant_trace(5.0, 20)
        spec = FaultSpec(FaultKind.HARD, start_idx=10, duration=5)
        faulted, mask = inject(trace, spec, seed=0)
        for i, r in enumerate(faulted.readings):
            if 10 <= i < 15:
                assert not r.present
                assert mask.flags[i]
            else:
                assert r == trace.readings[i]
                assert not mask.flags[i]

    def test_soft_stuck_at_zero(self):
        # Stuck-at-0 over two steps of a constant-5 trace.
        trace = constant_trace(5.0, 5)
        spec = FaultSpec(FaultKind.SOFT, 1, 2, soft=SoftMode.stuck(0.0))
        faulted, mask = inject(trace, spec, seed=0)
        assert [r.value for r in faulted.readings] == [5.0, 0.0, 0.0, 5.0, 5.0]
        assert mask.flags == (False, True, True, False, False)

    def test_soft_offset_and_scale(self):
        trace = constant_trace(4.0, 4)
        off, _ = inject(trace, FaultSpec(FaultKind.SOFT, 0, 4, soft=SoftMode.offset(1.5)), 0)
        assert [r.value for r in off.readings] == [5.5] * 4
        scl, _ = inject(trace, FaultSpec(FaultKind.SOFT, 0, 4, soft=SoftMode.scale(2.0)), 0)
        assert [r.value for r in scl.readings] == [8.0] * 4

    def test_transient_matches_soft_mechanics(self):
        trace = constant_trace(5.0, 6)
        soft_spec = FaultSpec(FaultKind.SOFT, 2, 2, soft=SoftMode.stuck(-1.0))
        trans_spec = FaultSpec(FaultKind.TRANSIENT, 2, 2, soft=SoftMode.stuck(-1.0))
        assert inject(trace, soft_spec, 0) == inject(trace, trans_spec, 0)

    def test_intermittent_same_seed_same_mask(self):
        trace = constant_trace(5.0, 120)
        spec = FaultSpec(
            FaultKind.INTERMITTENT, 10, 100, soft=SoftMode.stuck(0.0), probability=0.5
        )
        first = inject(trace, spec, seed=42)
        second = inject(trace, spec, seed=42)
        assert first == second
        # A faulted episode of 100 steps at p = 0.5 corrupts some but not all.
        assert 0 < sum(first[1].flags) < 100

    def test_intermittent_different_seed_differs(self):
        trace = constant_trace(5.0, 120)
        spec = FaultSpec(
            FaultKind.INTERMITTENT, 10, 100, soft=SoftMode.stuck(0.0), probability=0.5
        )
        assert inject(trace, spec, 1)[1] != inject(trace, spec, 2)[1]

    def test_identity_soft_modes_leave_mask_empty(self):
        trace = constant_trace(5.0, 10)
        for mode in (SoftMode.offset(0.0), SoftMode.scale(1.0)):
            _, mask = inject(trace, FaultSpec(FaultKind.SOFT, 2, 5, soft=mode), 0)
            assert not mask.any()

    def test_absent_readings_stay_absent_under_soft(self):
        trace = make_trace([5.0, None, 5.0])
        spec = FaultSpec(FaultKind.SOFT, 0, 3, soft=SoftMode.stuck(1.0))
        faulted, mask = inject(trace, spec, 0)
        assert not faulted.readings[1].present
        assert mask.flags == (True, False, True)

    def test_window_out_of_range(self):
        trace = constant_trace(5.0, 10)
        with pytest.raises(FaultWindowError):
            inject(trace, FaultSpec(FaultKind.HARD, 8, 5), 0)

    @given(
        start=st.integers(min_value=0, max_value=30),
        duration=st.integers(min_value=1, max_value=20),
        seed=st.integers(min_value=0, max_value=2**32),
        kind=st.sampled_from(list(FaultKind)),
    )
    def test_outside_window_untouched(self, start, duration, seed, kind):
        trace = make_trace([float(i) for i in range(50)])
        if start + duration > 50:
            duration = 50 - start
        spec = FaultSpec(
            kind,
            start,
            duration,
            soft=None if kind is FaultKind.HARD else SoftMode.offset(3.0),
            probability=0.5 if kind is FaultKind.INTERMITTENT else None,
        )
        faulted, mask = inject(trace, spec, seed)
        for i in range(50):
            inside = start <= i < start + duration
            if not inside:
                assert faulted.readings[i] == trace.readings[i]
                assert not mask.flags[i]
            else:
                assert mask.flags[i] == (faulted.readings[i] != trace.readings[i])


class TestSpecValidation:
    def test_soft_requires_mode(self):
        with pytest.raises(FaultSpecError):
            FaultSpec(FaultKind.SOFT, 0, 1)

    def test_intermittent_requires_probability_in_open_interval(self):
        for p in (None, 0.0, 1.0):
            with pytest.raises(FaultSpecError):
                FaultSpec(
                    FaultKind.INTERMITTENT, 0, 1, soft=SoftMode.stuck(0.0), probability=p
                )


class TestRepairIndex:
    def test_immediate(self):
        spec = FaultSpec(FaultKind.HARD, 10, 2)
        assert repair_index(spec, 0, 60) == 10

    def test_exact_division(self):
        spec = FaultSpec(FaultKind.HARD, 10, 2)
        assert repair_index(spec, 120, 60) == 12

    def test_ceiling(self):
        spec = FaultSpec(FaultKind.HARD, 10, 2)
        assert repair_index(spec, 90, 60) == 12
