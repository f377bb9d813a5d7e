from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bikeflow.errors import (DuplicateStationInSnapshot, MalformedDocument, NonMonotonicTimestamp,
                             SchemaViolation)
from bikeflow.ingest import (CSV_HEADER, Snapshot, SnapshotStore, SnapshotTable, StationObservation,
                             ValidationLimits, append_snapshot, load_snapshots, parse_kml,
                             read_kml_file, serialize_snapshots, validate_snapshot, write_kml)

from conftest import obs, snapshot

ONE = """<?xml version="1.0"?>
<kml xmlns="http://www.opengis.net/kml/2.2"><Document>
  <Placemark id="13">
    <name>Pg. Lluis Companys</name>
    <description>bikes=7|slots=12</description>
    <Point><coordinates> 2.194,41.397 </coordinates></Point>
  </Placemark>
</Document></kml>"""


def test_parse_empty_document():
    assert parse_kml("<kml><Document></Document></kml>") == []


def test_parse_one_placemark():
    (o,) = parse_kml(ONE)
    assert (o.station_id, o.name, o.lat, o.lon, o.bikes, o.free_slots) == \
        ("13", "Pg. Lluis Companys", 41.397, 2.194, 7, 12)


def test_parse_tokens_any_order_and_whitespace():
    doc = ONE.replace("bikes=7|slots=12", "  slots = 12 ;\n bikes=7 ")
    (o,) = parse_kml(doc)
    assert (o.bikes, o.free_slots) == (7, 12)


def test_missing_bikes_is_skipped():
    res = parse_kml(ONE.replace("bikes=7|", ""))
    assert res == [] and len(res.skipped) == 1
    assert res.skipped[0].station_id == "13" and "bikes" in res.skipped[0].reason


@pytest.mark.parametrize("broken", [
    ONE.replace("<Point><coordinates> 2.194,41.397 </coordinates></Point>", ""),
    ONE.replace("2.194,41.397", "abc"),
    ONE.replace("bikes=7", "bikes=-3"),
    ONE.replace(' id="13"', ""),
])
def test_bad_placemarks_skipped_not_fatal(broken):
    res = parse_kml(broken)
    assert len(res) == 0 and len(res.skipped) == 1


def test_malformed_xml():
    with pytest.raises(MalformedDocument):
        parse_kml("<kml><Document>")


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), max_size=40))
def test_parse_never_fails_on_wellformed(desc):
    from xml.sax.saxutils import escape
    doc = ONE.replace("bikes=7|slots=12", escape(desc))
    res = parse_kml(doc)
    assert len(res) + len(res.skipped) == 1


def test_write_kml_round_trip(t0):
    items = [obs("1", 3, 4, name="A, B & <C>"), obs("2", 0, 20)]
    doc = write_kml(items, t0)
    assert list(parse_kml(doc)) == items


def test_kml_timestamp_from_stem(tmp_path):
    p = tmp_path / "20080515T120000Z.kml"
    p.write_text(ONE, encoding="utf-8")
    snap, skipped = read_kml_file(p)
    assert snap.timestamp.isoformat() == "2008-05-15T12:00:00+00:00" and skipped == []


def test_kml_without_any_timestamp(tmp_path):
    p = tmp_path / "latest.kml"
    p.write_text(ONE, encoding="utf-8")
    with pytest.raises(MalformedDocument):
        read_kml_file(p)


def test_observation_invariants():
    with pytest.raises(ValueError):
        StationObservation("1", "x", 41.0, 2.0, -1, 3)
    with pytest.raises(ValueError):
        StationObservation("1", "x", 91.0, 2.0, 1, 3)


def test_append_to_empty_store(tmp_path, t0):
    store = SnapshotStore.open(tmp_path / "s.csv")
    append_snapshot(store, snapshot(t0, {"a": (1, 2), "b": (3, 4)}))
    assert store.n_snapshots == 1 and set(store.registry) == {"a", "b"} and store.n_rows == 2


def test_new_station_registered(tmp_path, t0):
    store = SnapshotStore.open(tmp_path / "s.csv")
    append_snapshot(store, snapshot(t0, {"a": (1, 2)}))
    append_snapshot(store, snapshot(t0 + timedelta(minutes=2), {"a": (1, 2), "z": (0, 5)}))
    assert len(store.registry) == 2
    assert len(SnapshotStore.open(tmp_path / "s.csv").registry) == 2


def test_equal_timestamp_rejected(tmp_path, t0):
    store = SnapshotStore.open(tmp_path / "s.csv")
    append_snapshot(store, snapshot(t0, {"a": (1, 2)}))
    with pytest.raises(NonMonotonicTimestamp):
        append_snapshot(store, snapshot(t0, {"a": (2, 1)}))
    # reopening sees the same last timestamp
    with pytest.raises(NonMonotonicTimestamp):
        append_snapshot(SnapshotStore.open(tmp_path / "s.csv"), snapshot(t0, {"a": (2, 1)}))


def test_duplicate_station_rejected(tmp_path, t0):
    store = SnapshotStore.open(tmp_path / "s.csv")
    snap = Snapshot(t0, (obs("a"), obs("a")))
    with pytest.raises(DuplicateStationInSnapshot):
        append_snapshot(store, snap)


def test_append_only(tmp_path, t0):
    path = tmp_path / "s.csv"
    store = SnapshotStore.open(path)
    append_snapshot(store, snapshot(t0, {"a": (1, 2)}))
    before = path.read_bytes()
    append_snapshot(store, snapshot(t0 + timedelta(minutes=2), {"a": (2, 1)}))
    assert path.read_bytes().startswith(before)


def test_load_header_only(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text(",".join(CSV_HEADER) + "\n", encoding="utf-8")
    assert load_snapshots(p) == []
    assert len(SnapshotTable.load(p)) == 0


def test_load_time_range(tmp_path, t0):
    p = tmp_path / "s.csv"
    snaps = [snapshot(t0 + timedelta(minutes=2 * i), {"a": (i, 5)}) for i in range(3)]
    p.write_text(serialize_snapshots(snaps), encoding="utf-8")
    mid = load_snapshots(p, (t0 + timedelta(minutes=1), t0 + timedelta(minutes=3)))
    assert len(mid) == 1 and mid[0].observations[0].bikes == 1
    table = SnapshotTable.load(p, (t0 + timedelta(minutes=1), t0 + timedelta(minutes=3)))
    assert len(table) == 1 and table.bikes[0, 0] == 1


@pytest.mark.parametrize("loader", [load_snapshots, SnapshotTable.load])
def test_negative_bikes_is_schema_violation(tmp_path, t0, loader):
    p = tmp_path / "s.csv"
    text = serialize_snapshots([snapshot(t0, {"a": (1, 2), "b": (3, 4)})])
    p.write_text(text.replace(",3,4", ",-3,4"), encoding="utf-8")
    with pytest.raises(SchemaViolation) as exc:
        loader(p)
    assert exc.value.line == 3


@pytest.mark.parametrize("loader", [load_snapshots, SnapshotTable.load])
def test_wrong_arity(tmp_path, loader):
    p = tmp_path / "s.csv"
    p.write_text(",".join(CSV_HEADER) + "\n2008-05-15T05:00:00Z,a,b\n", encoding="utf-8")
    with pytest.raises(SchemaViolation) as exc:
        loader(p)
    assert exc.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_snapshots(tmp_path / "nope.csv")


def test_csv_format(t0):
    text = serialize_snapshots([Snapshot(t0, (obs("7", 1, 2, name="Plaza, Sur"), obs("8", 0, 3)))])
    lines = text.split("\n")
    assert lines[0] == "timestamp,station_id,name,lat,lon,bikes,free_slots"
    assert lines[1] == '2008-05-15T05:00:00Z,7,"Plaza, Sur",41.397,2.194,1,2'
    assert lines[2].startswith("2008-05-15T05:00:00Z,8,station 8,")
    assert "\r" not in text


def test_kml_csv_round_trip(tmp_path, t0):
    parsed = parse_kml(ONE)
    p = tmp_path / "s.csv"
    p.write_text(serialize_snapshots([Snapshot(t0, tuple(parsed))]), encoding="utf-8")
    (snap,) = load_snapshots(p)
    assert list(snap.observations) == list(parsed)


def test_table_load_matches_object_path(tmp_path, t0, rng):
    snaps = []
    for i in range(20):
        ids = [s for s in "abcdef" if rng.random() > 0.2]
        snaps.append(snapshot(t0 + timedelta(minutes=2 * i),
                              {s: (int(rng.integers(0, 9)), int(rng.integers(0, 9))) for s in ids}))
    p = tmp_path / "s.csv"
    p.write_text(serialize_snapshots(snaps), encoding="utf-8")
    a = SnapshotTable.load(p)
    b = SnapshotTable.from_snapshots(load_snapshots(p))
    assert a.station_ids == b.station_ids and (a.times == b.times).all()
    np.testing.assert_array_equal(a.bikes, b.bikes)
    np.testing.assert_array_equal(a.free_slots, b.free_slots)
    out = tmp_path / "out.csv"
    a.write_csv(out)
    assert out.read_bytes() == p.read_bytes()


def test_validate_clean(t0):
    assert validate_snapshot(snapshot(t0, {"a": (5, 15), "b": (10, 10)})) == []


def test_validate_small_capacity(t0):
    (w,) = validate_snapshot(snapshot(t0, {"a": (2, 3), "b": (10, 10)}))
    assert w.kind == "capacity" and w.station_id == "a"


def test_validate_total_bikes(t0):
    counts = {str(i): (20, 0) for i in range(200)}  # 4000 bikes
    report = validate_snapshot(snapshot(t0, counts))
    assert [w.kind for w in report] == ["total_bikes"]


def test_validate_zero_capacity(t0):
    (w,) = validate_snapshot(snapshot(t0, {"a": (0, 0)}))
    assert w.kind == "zero_capacity"


def test_limits_file(tmp_path):
    p = tmp_path / "limits.txt"
    p.write_text("min_capacity = 5\nmax_capacity=50 # wide\n", encoding="utf-8")
    assert ValidationLimits.from_file(p) == ValidationLimits(5, 50, 3657)
    p.write_text("bogus = 1\n", encoding="utf-8")
    with pytest.raises(ValueError):
        ValidationLimits.from_file(p)
