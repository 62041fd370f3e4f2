import datetime as dt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatntl.core_types import RowError
from heatntl.ntl_aggregate import (NoValidPixelsError, PixelObservation, QualityFlag, aggregate_daily,
                                   aggregate_series, gap_filled_fraction, load_pixel_csv)

D0 = dt.date(2019, 7, 1)


def px(i, radiance, area=1.0, flag="good_quality", fill=False, date=D0):
    return PixelObservation(f"p{i}", date, radiance, area, flag, fill)


def test_equal_area_mean():
    assert aggregate_daily([px(0, 10), px(1, 20)]).radiance == pytest.approx(15)


def test_area_weighted_mean():
    assert aggregate_daily([px(0, 10, 1), px(1, 30, 3)]).radiance == pytest.approx(25)


def test_fill_pixel_ignored():
    out = aggregate_daily([px(0, 12.0), px(1, 65535.0, fill=True)])
    assert out.radiance == pytest.approx(12.0)


def test_scale_factor_applied():
    assert aggregate_daily([px(0, 100), px(1, 300)], scale_factor=0.1).radiance == pytest.approx(20)


def test_all_fill_raises():
    with pytest.raises(NoValidPixelsError, match="no valid pixels for date"):
        aggregate_daily([px(0, 1, fill=True)])


@pytest.mark.parametrize("n_gap,n,expected", [(0, 4, 0.0), (4, 4, 1.0), (3, 10, 0.3)])
def test_gap_fraction(n_gap, n, expected):
    pixels = [px(i, 5, flag="gap_filled" if i < n_gap else "good_quality") for i in range(n)]
    assert gap_filled_fraction(pixels) == pytest.approx(expected)


def test_gap_fraction_no_valid():
    with pytest.raises(NoValidPixelsError):
        gap_filled_fraction([px(0, 1, fill=True)])


pixel_lists = st.lists(
    st.tuples(st.floats(0.5, 500), st.floats(0.01, 10), st.sampled_from(list(QualityFlag))),
    min_size=1, max_size=12)


@settings(max_examples=200, deadline=None)
@given(pixel_lists, st.floats(0.1, 100))
def test_aggregate_properties(cells, k):
    pixels = [px(i, r, a, f) for i, (r, a, f) in enumerate(cells)]
    out = aggregate_daily(pixels)
    rads = [r for r, _, _ in cells]
    assert min(rads) - 1e-9 <= out.radiance <= max(rads) + 1e-9
    rescaled = aggregate_daily([px(i, r, a * k, f) for i, (r, a, f) in enumerate(cells)])
    assert rescaled.radiance == pytest.approx(out.radiance, rel=1e-12)
    with_fill = aggregate_daily(pixels + [px(99, 1e6, 5.0, fill=True)])
    assert with_fill == out


def test_series_skips_empty_and_warns_on_inconsistent_pixels():
    d1 = D0 + dt.timedelta(days=1)
    d2 = D0 + dt.timedelta(days=2)
    pixels = [px(0, 10), px(1, 20), px(0, 1, fill=True, date=d1), px(1, 1, fill=True, date=d1),
              px(0, 5, date=d2), px(2, 7, flag="poor_quality", date=d2)]
    with pytest.warns(UserWarning, match="pixel sample"):
        out, report = aggregate_series(pixels)
    assert [r.date for r in out] == [D0, d2]
    assert report.skipped_dates == [d1]
    assert report.poor_quality_counts[d2] == 1


def test_load_pixel_csv(tmp_path):
    p = tmp_path / "px.csv"
    p.write_text("pixel_id,date,raw_radiance,area,quality_flag,is_fill\n"
                 "a,2019-07-01,10,1,good_quality,false\n"
                 "b,2019-07-01,-999,1,good_quality,0\n"
                 "c,2019-07-01,30,3,gap_filled,no\n")
    pixels = load_pixel_csv(p, fill_value=-999)
    assert [q.is_fill for q in pixels] == [False, True, False]
    out = aggregate_daily(pixels)
    assert out.radiance == pytest.approx(25) and out.gap_fraction == pytest.approx(0.5)


def test_load_pixel_csv_bad_flag(tmp_path):
    p = tmp_path / "px.csv"
    p.write_text("pixel_id,date,raw_radiance,area,quality_flag,is_fill\na,2019-07-01,10,1,great,false\n")
    with pytest.raises(RowError):
        load_pixel_csv(p)
