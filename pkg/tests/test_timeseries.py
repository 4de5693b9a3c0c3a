import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaoscast.timeseries import (
    SeriesFrame,
    TimeseriesError,
    WindowPlan,
    first_difference,
    load_csv,
    save_csv,
    walk_forward_windows,
)


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadCsv:
    def test_three_row_csv_with_dates(self, tmp_path):
        p = _write(tmp_path, "date,djia\n2001-01-02,100.5\n2001-01-03,101.0\n2001-01-04,99.25\n")
        frame = load_csv(p)
        assert frame.length == 3
        assert frame.names == ("djia",)
        assert frame.dates == ("2001-01-02", "2001-01-03", "2001-01-04")
        np.testing.assert_array_equal(frame.column("djia"), [100.5, 101.0, 99.25])

    def test_duplicate_headers_rejected(self, tmp_path):
        p = _write(tmp_path, "a,a\n1,2\n")
        with pytest.raises(TimeseriesError, match="duplicate"):
            load_csv(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv")

    def test_ragged_rows_reported(self, tmp_path):
        p = _write(tmp_path, "a,b\n1,2\n3\n")
        with pytest.raises(TimeseriesError, match="expected 2 cells"):
            load_csv(p)

    def test_non_numeric_cell_reports_row_and_column(self, tmp_path):
        p = _write(tmp_path, "a,b\n1,2\n3,oops\n")
        with pytest.raises(TimeseriesError, match=r"3.*'oops'.*'b'"):
            load_csv(p)

    def test_synthetic_roundtrip_cell_by_cell(self, tmp_path):
        # Dow-style file at larger scale: values round-trip bit-exactly
        rng = np.random.default_rng(0)
        T = 2006
        values = np.cumsum(rng.standard_normal((T, 3)), axis=0) + 100.0
        dates = tuple(
            f"{1999 + t // 372:04d}-{1 + (t % 372) // 31:02d}-{1 + t % 31:02d}"
            for t in range(T)
        )
        frame = SeriesFrame(("djia", "djta", "djua"), values, dates)
        p = tmp_path / "dow.csv"
        save_csv(frame, p)
        back = load_csv(p)
        assert back.length == T
        assert back.dates == frame.dates
        np.testing.assert_array_equal(back.values, frame.values)


class TestSeriesFrame:
    def test_ragged_columns_rejected(self):
        with pytest.raises(TimeseriesError):
            SeriesFrame(("a",), np.ones((2, 2)))

    def test_dates_must_increase(self):
        with pytest.raises(TimeseriesError, match="increasing"):
            SeriesFrame(("a",), np.ones((2, 1)), ("2001-01-02", "2001-01-01"))

    def test_values_are_immutable(self):
        frame = SeriesFrame(("a",), np.ones((3, 1)))
        with pytest.raises(ValueError):
            frame.values[0, 0] = 2.0


class TestFirstDifference:
    def test_hand_case(self):
        frame = SeriesFrame(("v",), np.array([[1.0], [3.0], [6.0]]))
        out = first_difference(frame, "v")
        np.testing.assert_array_equal(out.column("v"), [2.0, 3.0])

    def test_constant_series(self):
        frame = SeriesFrame(("v",), np.full((3, 1), 5.0))
        np.testing.assert_array_equal(first_difference(frame, "v").column("v"), [0.0, 0.0])

    def test_unknown_column(self):
        frame = SeriesFrame(("v",), np.ones((3, 1)))
        with pytest.raises(TimeseriesError):
            first_difference(frame, "w")

    def test_too_short(self):
        frame = SeriesFrame(("v",), np.ones((1, 1)))
        with pytest.raises(TimeseriesError):
            first_difference(frame, "v")

    def test_cumsum_inverts(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(100)
        out = first_difference(SeriesFrame(("v",), v[:, None]), "v")
        recovered = np.concatenate(([v[0]], v[0] + np.cumsum(out.column("v"))))
        np.testing.assert_allclose(recovered, v, rtol=1e-12)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
    def test_length_and_endpoint_property(self, values):
        v = np.asarray(values)
        out = first_difference(SeriesFrame(("v",), v[:, None]), "v")
        assert out.length == v.size - 1
        scale = max(1.0, np.abs(v).max())
        assert abs(out.column("v").sum() - (v[-1] - v[0])) <= 1e-12 * scale * v.size


class TestWalkForwardWindows:
    def test_hand_enumeration(self):
        plan = WindowPlan(fit_len=3, select_len=2, test_len=2, stride=2)
        windows = walk_forward_windows(10, plan)
        assert windows == [
            (range(0, 3), range(3, 5), range(5, 7)),
            (range(2, 5), range(5, 7), range(7, 9)),
        ]

    def test_exact_fit_single_window(self):
        plan = WindowPlan(fit_len=3, select_len=2, test_len=2)
        assert len(walk_forward_windows(7, plan)) == 1

    def test_infeasible_plan(self):
        plan = WindowPlan(fit_len=3, select_len=2, test_len=2)
        with pytest.raises(TimeseriesError):
            walk_forward_windows(6, plan)

    def test_trading_year_analogue_tiles_post_training_era(self):
        spy = 250
        plan = WindowPlan(fit_len=6 * spy, select_len=2 * spy, test_len=2 * spy)
        T = 2000 * 10  # arbitrary long history
        windows = walk_forward_windows(T, plan)
        covered = []
        for _, _, test in windows:
            covered.extend(test)
        first_test = 8 * spy
        last_test = windows[-1][2].stop
        assert covered == list(range(first_test, last_test))

    def test_each_test_step_in_exactly_one_window(self):
        plan = WindowPlan(fit_len=5, select_len=3, test_len=4)
        windows = walk_forward_windows(57, plan)
        seen = [t for _, _, test in windows for t in test]
        assert len(seen) == len(set(seen))
