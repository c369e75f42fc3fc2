import io
import math

import pytest
from hypothesis import given, strategies as st

from twinfuse.ingest import (
    EmptyInputError,
    UnknownChannelError,
    parse_log,
    parse_row,
    resample,
)
from twinfuse.model import SensorKind

SAMPLE_ROW = "2004-03-01 00:00:07 123 7 19.5 38.2 45.0 2.68"


class TestParseLog:
    def test_maps_fields(self):
        result = parse_log(io.StringIO(SAMPLE_ROW), 7, SensorKind.TEMPERATURE)
        assert len(result.pairs) == 1
        _, value = result.pairs[0]
        assert value == 19.5
        assert result.skipped == 0

    def test_channel_columns(self):
        for channel, expected in [
            (SensorKind.TEMPERATURE, 19.5),
            (SensorKind.HUMIDITY, 38.2),
            (SensorKind.LIGHT, 45.0),
            (SensorKind.VOLTAGE, 2.68),
        ]:
            result = parse_log(io.StringIO(SAMPLE_ROW), 7, channel)
            assert result.pairs[0][1] == expected

    def test_duplicate_timestamp_keeps_last(self):
        text = (
            "2004-03-01 00:00:07 123 7 19.5 38.2 45.0 2.68\n"
            "2004-03-01 00:00:07 124 7 19.7 38.2 45.0 2.68\n"
        )
        result = parse_log(io.StringIO(text), 7, SensorKind.TEMPERATURE)
        assert len(result.pairs) == 1
        assert result.pairs[0][1] == 19.7

    def test_rows_sorted_by_time(self):
        text = (
            "2004-03-01 00:01:00 2 7 20.0 38 45 2.6\n"
            "2004-03-01 00:00:00 1 7 19.0 38 45 2.6\n"
        )
        result = parse_log(io.StringIO(text), 7, SensorKind.TEMPERATURE)
        assert [v for _, v in result.pairs] == [19.0, 20.0]
        assert result.pairs[0][0] < result.pairs[1][0]

    def test_other_motes_ignored_without_counting(self):
        text = (
            "2004-03-01 00:00:07 123 7 19.5 38.2 45.0 2.68\n"
            "2004-03-01 00:00:09 124 8 21.0 40.0 50.0 2.70\n"
        )
        result = parse_log(io.StringIO(text), 7, SensorKind.TEMPERATURE)
        assert len(result.pairs) == 1
        assert result.skipped == 0

    def test_missing_field_skipped_and_counted(self):
        text = (
            "2004-03-01 00:00:07 123 7 19.5\n"  # humidity onward missing
            "2004-03-01 00:00:38 124 7 19.6 38.0 45.0 2.68\n"
        )
        result = parse_log(io.StringIO(text), 7, SensorKind.HUMIDITY)
        assert len(result.pairs) == 1
        assert result.skipped == 1

    def test_only_malformed_rows_is_error(self):
        text = "not a row\nalso-not 1 2\n"
        with pytest.raises(EmptyInputError):
            parse_log(io.StringIO(text), 7, SensorKind.TEMPERATURE)

    def test_unknown_channel(self):
        with pytest.raises(UnknownChannelError):
            parse_log(io.StringIO(SAMPLE_ROW), 7, SensorKind.SYNTHETIC)

    def test_comma_delimited_accepted(self):
        row = "2004-03-01,00:00:07,123,7,19.5,38.2,45.0,2.68"
        result = parse_log(io.StringIO(row), 7, SensorKind.TEMPERATURE)
        assert result.pairs[0][1] == 19.5

    def test_parse_row_requires_some_channel(self):
        assert parse_row("2004-03-01 00:00:07 123 7 junk") is None


class TestResample:
    def test_locf_example(self):
        pairs = [(0.0, 1.0), (31.0, 2.0), (62.0, 3.0)]
        trace = resample(pairs, start=0, interval_s=60, length=2, policy="locf")
        assert [r.value for r in trace.readings] == [1.0, 2.0]

    def test_linear_example(self):
        pairs = [(0.0, 1.0), (31.0, 2.0), (62.0, 3.0)]
        trace = resample(pairs, start=0, interval_s=60, length=2, policy="linear")
        assert trace.readings[0].value == 1.0
        # Interpolating between (31, 2.0) and (62, 3.0) at t = 60.
        expected = 2.0 + (60 - 31) / (62 - 31) * 1.0
        assert abs(trace.readings[1].value - expected) < 1e-12

    def test_empty_observations_all_absent(self):
        trace = resample([], start=0, interval_s=60, length=3)
        assert all(not r.present for r in trace.readings)

    def test_before_first_observation_absent(self):
        trace = resample([(100.0, 5.0)], start=0, interval_s=60, length=3)
        assert [r.present for r in trace.readings] == [False, False, True]

    @pytest.mark.parametrize("policy", ["locf", "linear"])
    def test_on_grid_series_unchanged(self, policy):
        values = [3.0, 1.5, -2.0, 8.0]
        pairs = [(60.0 * i, v) for i, v in enumerate(values)]
        trace = resample(pairs, start=0, interval_s=60, length=4, policy=policy)
        assert [r.value for r in trace.readings] == values

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=0, max_value=1000, allow_nan=False),
                st.floats(min_value=-100, max_value=100, allow_nan=False),
            ),
            min_size=1,
            max_size=20,
        )
    )
    def test_locf_values_come_from_input(self, raw_pairs):
        pairs = sorted(raw_pairs)
        trace = resample(pairs, start=0, interval_s=37, length=30, policy="locf")
        values = {v for _, v in pairs}
        for r in trace.readings:
            if r.present:
                assert r.value in values

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=2000),
                st.floats(min_value=-100, max_value=100, allow_nan=False),
            ),
            min_size=2,
            max_size=20,
            unique_by=lambda p: p[0],
        )
    )
    def test_linear_within_bracketing_bounds(self, raw_pairs):
        pairs = sorted((float(t), v) for t, v in raw_pairs)
        trace = resample(pairs, start=0, interval_s=41, length=40, policy="linear")
        times = [t for t, _ in pairs]
        for i, r in enumerate(trace.readings):
            if not r.present:
                continue
            t = 41 * i
            left = max((p for p in pairs if p[0] <= t), key=lambda p: p[0])
            right = min(
                (p for p in pairs if p[0] > t), key=lambda p: p[0], default=None
            )
            bracket = [left[1]] if right is None else [left[1], right[1]]
            assert min(bracket) - 1e-9 <= r.value <= max(bracket) + 1e-9
        assert times  # sanity: strategy produced observations
