from datetime import date

import numpy as np
import pytest

from bikeflow.errors import InvalidSpec
from bikeflow.preprocess import DayClass
from bikeflow.simgen import (Archetype, NetworkSpec, NoiseSpec, ODSchedule, TripLog,
                             archetype_schedule, commuter_scenario, generate_network,
                             ground_truth_transition, planted_coupling_scenario, simulate)


def _net(n=6, seed=0, **kw):
    return generate_network(NetworkSpec(n_stations=n, seed=seed, **kw))


def test_network_bounds_and_determinism():
    a, b = _net(20, 3), _net(20, 3)
    assert np.array_equal(a.lat, b.lat) and np.array_equal(a.capacity, b.capacity)
    assert a.capacity.min() >= 15 and a.capacity.max() <= 39
    s, w, n, e = NetworkSpec().bbox
    assert np.all((a.lat >= s) & (a.lat <= n) & (a.lon >= w) & (a.lon <= e))
    assert np.all((a.initial_stock >= 0) & (a.initial_stock <= a.capacity))


def test_single_station_network():
    net = _net(1)
    res = simulate(net, ODSchedule.zeros(net.station_ids), 1)
    assert res.table.bikes.shape[1] == 1


def test_archetype_initial_fill():
    net = _net(2, archetypes=(Archetype.RESIDENTIAL, Archetype.OFFICE))
    fill = net.initial_stock / net.capacity
    assert fill[0] > 0.6 and fill[1] < 0.3


@pytest.mark.parametrize("kw", [dict(n_stations=0), dict(capacity_range=(20, 10)),
                                dict(bbox=(41.4, 2.1, 41.3, 2.2)), dict(archetypes=("office",)),
                                dict(archetype_weights={"office": -1})])
def test_invalid_spec(kw):
    args = dict(n_stations=3)
    args.update(kw)
    with pytest.raises(InvalidSpec):
        generate_network(NetworkSpec(**args))


def test_zero_rate_schedule_is_static():
    net = _net(5)
    res = simulate(net, ODSchedule.zeros(net.station_ids), 2)
    assert np.all(res.table.bikes == net.initial_stock)
    assert len(res.trips) == 0
    assert np.all(res.table.bikes + res.table.free_slots == net.capacity)


def test_drain_single_pair():
    # equal capacities and a near-empty destination: it can absorb every bike
    net = _net(2, capacity_range=(30, 30), archetypes=(Archetype.RESIDENTIAL, Archetype.OFFICE))
    assert net.initial_stock.sum() <= 30
    sched = ODSchedule.zeros(net.station_ids)
    sched.add(DayClass.WEEKDAY, 5 * 60, 24 * 60, 0, 1, 60.0)
    res = simulate(net, sched, 1)
    origin = res.true_bikes[:, 0]
    assert np.all(np.diff(origin) <= 0) and origin[-1] == 0
    assert res.rerouted == 0


def test_conservation_and_determinism():
    net = _net(10, 1)
    sched = archetype_schedule(net)
    a = simulate(net, sched, 3, seed=5)
    b = simulate(net, sched, 3, seed=5)
    assert np.array_equal(a.table.bikes, b.table.bikes)
    assert np.array_equal(a.trips.depart, b.trips.depart)
    total = a.true_bikes.sum(axis=1) + a.in_transit
    assert np.all(total == net.initial_stock.sum())
    assert np.all(a.trips.arrive >= a.trips.depart)


def test_travel_time_speed():
    net = _net(8, 2)
    res = simulate(net, archetype_schedule(net), 1, seed=1)
    assert len(res.trips) > 0
    dur = (res.trips.arrive - res.trips.depart).astype(np.int64)
    direct = net.distances()[res.trips.origin, res.trips.dest] / (25 / 3.6)
    # rerouted trips take longer; all others within flooring of the direct time
    assert np.all(dur >= np.floor(direct) - 1)
    assert np.mean(np.abs(dur - direct) <= 1) > 0.9


def test_dropouts_report_low_totals():
    net = _net(6)
    res = simulate(net, archetype_schedule(net), 2, NoiseSpec(dropout_prob=1.0), seed=3)
    total = res.table.bikes + res.table.free_slots
    assert (total < 10).any() and np.all(total <= net.capacity)
    assert np.all(res.table.bikes <= res.true_bikes)


def test_trucks_keep_conservation():
    net = _net(8)
    res = simulate(net, archetype_schedule(net), 2, NoiseSpec(trucks_per_day=10), seed=4)
    assert np.all(res.true_bikes.sum(axis=1) + res.in_transit == net.initial_stock.sum())
    assert np.all((res.true_bikes >= 0) & (res.true_bikes <= net.capacity))


def _log(o, d, minutes, ids=("a", "b", "c")):
    dep = np.datetime64("2008-05-19T00:00:00") + np.array(minutes, dtype="timedelta64[m]").astype("timedelta64[s]")
    return TripLog(list(ids), np.array(o), np.array(d), dep, dep + np.timedelta64(60, "s"))


def test_ground_truth_examples():
    P, I, F = ground_truth_transition(TripLog.empty(["a", "b"]), initial=[3, 4])
    assert np.array_equal(P, np.eye(2)) and np.array_equal(F, I)
    P, _, F = ground_truth_transition(_log([0] * 10, [1] * 10, [400] * 10, ("a", "b")), initial=[10, 0])
    assert P[:, 0].tolist() == [0.0, 1.0] and F.tolist() == [0, 10]
    P, _, _ = ground_truth_transition(_log([0] * 5, [2] * 5, [400] * 5), initial=[10, 2, 0])
    assert P[:, 0].tolist() == [0.5, 0.0, 0.5]
    assert np.allclose(P.sum(axis=0), 1)


def test_ground_truth_window_filter():
    P, _, _ = ground_truth_transition(_log([0, 0], [1, 1], [200, 400]), initial=[4, 0, 0])
    assert P[1, 0] == 0.25


def test_ground_truth_column_stochastic_on_simulation():
    net, sched, pairs = planted_coupling_scenario(seed=1)
    res = simulate(net, sched, 5, seed=1)
    P, I, F = ground_truth_transition(res.trips, initial=res.day_stock)
    assert np.allclose(P.sum(axis=0), 1) and np.all(P >= 0)
    assert abs(F.sum() - I.sum()) < 1e-9


def test_planted_scenario_shape():
    net, sched, pairs = planted_coupling_scenario(n_pairs=4)
    assert len(pairs) == 4 and len(net) == 12
    for k, m in pairs:
        d = net.distances()[net.station_ids.index(k), net.station_ids.index(m)]
        assert d == pytest.approx(2000, rel=0.02)


def test_commuter_scenario_runs():
    net, sched = commuter_scenario(n_stations=6, seed=2)[:2]
    assert len(net) == 6 and sched.weekday.sum() > sched.weekend.sum() * 0.5


def test_schedule_csv_roundtrip(tmp_path):
    net = _net(4)
    sched = archetype_schedule(net)
    p = tmp_path / "sched.csv"
    sched.to_csv(p)
    back = ODSchedule.from_csv(p, net.station_ids)
    assert np.allclose(back.weekday, sched.weekday) and np.allclose(back.weekend, sched.weekend)
    assert p.read_text().splitlines()[0] == "day_class,start,end,origin_id,dest_id,rate_per_hour"


def test_schedule_rejects_negative_rates():
    s = ODSchedule.zeros(["a", "b"])
    with pytest.raises((InvalidSpec, ValueError)):
        s.add(DayClass.WEEKDAY, 300, 360, 0, 1, -1.0)


def test_trip_csv_roundtrip(tmp_path):
    net = _net(5)
    res = simulate(net, archetype_schedule(net), 1, seed=2)
    p = tmp_path / "trips.csv"
    res.trips.to_csv(p)
    back = TripLog.from_csv(p, net.station_ids)
    assert np.array_equal(back.origin, res.trips.origin)
    assert np.array_equal(back.arrive, res.trips.arrive)


def test_weekend_uses_weekend_rates():
    net = _net(3)
    sched = ODSchedule.zeros(net.station_ids)
    sched.add(DayClass.WEEKEND, 5 * 60, 24 * 60, 0, 1, 30.0)
    res = simulate(net, sched, 7, start=date(2008, 5, 19))
    days = res.trips.depart.astype("datetime64[D]").astype(object)
    assert len(days) > 0 and all(d.weekday() >= 5 for d in days)
