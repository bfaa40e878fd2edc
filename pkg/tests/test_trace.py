import pytest
from hypothesis import given, settings, strategies as st

from vpki.errors import EmptyTrace, MalformedRow, UnsortedInput
from vpki.policy import TripRecord
from vpki.trace import format_trace, parse_trace, read_trace, synth_trace, synth_trips, trace_stats, write_trace

FIXTURE = "vehicle_id,depart_s,duration_s\ncar1,0,600.5\ncar2,12.25,30\ncar3,12.25,1\n"


def lines(text):
    return text.splitlines(keepends=True)


def test_three_rows(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text(FIXTURE)
    assert parse_trace(f) == [TripRecord("car1", 0, 600_500), TripRecord("car2", 12_250, 30_000),
                              TripRecord("car3", 12_250, 1000)]


def test_offset_shifts_origin():
    trips = read_trace(lines(FIXTURE), offset_ms=6 * 3600_000)
    assert trips[0].depart == 6 * 3600_000


def test_zero_duration_is_malformed():
    with pytest.raises(MalformedRow) as err:
        read_trace(lines("vehicle_id,depart_s,duration_s\na,0,5\nb,1,0\n"))
    assert err.value.line == 3


@pytest.mark.parametrize("row", ["a,x,5", "a,1", "a,1,5,7", ",1,5", "a,1,-2", "a,1,nan"])
def test_malformed_rows(row):
    with pytest.raises(MalformedRow) as err:
        read_trace(lines(f"vehicle_id,depart_s,duration_s\n{row}\n"))
    assert err.value.line == 2


def test_bad_header():
    with pytest.raises(MalformedRow):
        read_trace(lines("id,start,len\na,1,2\n"))


def test_unsorted():
    text = "vehicle_id,depart_s,duration_s\na,10,5\nb,3,5\n"
    with pytest.raises(UnsortedInput):
        read_trace(lines(text))
    assert [t.vehicle_id for t in read_trace(lines(text), sort=True)] == ["b", "a"]


def test_stats():
    s = trace_stats([TripRecord("a", 0, 1000), TripRecord("b", 0, 2000), TripRecord("c", 0, 3000)])
    assert (s.count, s.mean_duration, s.min_duration, s.max_duration) == (3, 2.0, 1.0, 3.0)
    with pytest.raises(EmptyTrace):
        trace_stats([])


def test_synthetic_mean_within_two_percent(tmp_path):
    out = synth_trace(10_000, 7200, 590.49, 42, tmp_path / "s.csv")
    trips = parse_trace(out)
    assert len(trips) == 10_000
    assert abs(trace_stats(trips).mean_duration - 590.49) / 590.49 < 0.02
    assert all(0 <= t.depart < 7_200_000 for t in trips)


def test_synthetic_is_deterministic(tmp_path):
    a = synth_trace(500, 3600, 300, 7, tmp_path / "a.csv").read_bytes()
    b = synth_trace(500, 3600, 300, 7, tmp_path / "b.csv").read_bytes()
    c = synth_trace(500, 3600, 300, 8, tmp_path / "c.csv").read_bytes()
    assert a == b != c


def test_single_trip_and_bimodal():
    assert len(synth_trips(1, 60, 30, 0)) == 1
    trips = synth_trips(4000, 7200, 600, 3, bimodal=True)
    middle = sum(1 for t in trips if 3000_000 <= t.depart < 4200_000)
    peak = sum(1 for t in trips if 1560_000 <= t.depart < 2760_000)
    assert peak > 2 * middle


def test_synth_rejects_empty():
    with pytest.raises(ValueError):
        synth_trips(0, 60, 30, 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.from_regex(r"[A-Za-z0-9_#-]{1,12}", fullmatch=True),
                          st.integers(0, 10 ** 9), st.integers(1, 10 ** 8)), max_size=30))
def test_parse_write_identity(rows):
    trips = sorted((TripRecord(v, d, n) for v, d, n in rows), key=lambda t: t.depart)
    assert read_trace(lines(format_trace(trips))) == trips


def test_write_read_file(tmp_path):
    trips = synth_trips(50, 600, 120, 1)
    write_trace(trips, tmp_path / "w.csv")
    assert parse_trace(tmp_path / "w.csv") == trips
    assert (tmp_path / "w.csv").read_bytes().count(b"\r") == 0
