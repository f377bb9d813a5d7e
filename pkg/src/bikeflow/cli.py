"""``bikeflow`` command line.

Exit status: 0 on success, 1 on usage errors, 2 on data errors. Data goes
to files or stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, resolve_seed
from .errors import DataError, EmptyInput, UnknownStation, UsageError

log = logging.getLogger("bikeflow")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if getattr(args, "store", None):
        cfg = RunConfig.from_mapping({"store": args.store}, cfg)
    return cfg


def _table(cfg):
    from .ingest import SnapshotTable

    if not cfg.store:
        raise UsageError("--store is required")
    table = SnapshotTable.load(cfg.store)
    if len(table) == 0:
        raise EmptyInput(f"{cfg.store} holds no snapshots")
    return table


def _day_class(text):
    from .preprocess import DayClass

    try:
        return DayClass(text)
    except ValueError:
        raise UsageError(f"day class must be weekday or weekend, got {text!r}") from None


def _step(cfg):
    return timedelta(minutes=cfg.step_minutes)


def _station_cycles(table, cfg, day_class):
    from .cycles import station_cycles

    return station_cycles(table, day_class, cfg.holidays, cfg.service_window, _step(cfg),
                          cfg.min_total_slots, cfg.median_window, cfg.median_order)


# -- subcommands ---------------------------------------------------------------

def cmd_ingest(args):
    from .ingest import SnapshotStore, ValidationLimits, append_snapshot, read_kml_file, validate_snapshot

    kml_dir = Path(args.kml_dir)
    if not kml_dir.is_dir():
        raise UsageError(f"not a directory: {kml_dir}")
    limits = ValidationLimits.from_file(args.limits) if args.limits else ValidationLimits()
    snaps = []
    for path in sorted(kml_dir.glob("*.kml")):
        snap, skipped = read_kml_file(path)
        for s in skipped:
            print(f"{path.name}: skipped placemark {s.index} ({s.station_id}): {s.reason}",
                  file=sys.stderr)
        snaps.append(snap)
    snaps.sort(key=lambda s: s.timestamp)
    store = SnapshotStore.open(args.store)
    for snap in snaps:
        for w in validate_snapshot(snap, limits):
            print(f"warning: {w.kind} {w.station_id or ''} {w.message}".rstrip(), file=sys.stderr)
        append_snapshot(store, snap)
    print(f"snapshots={len(snaps)} rows={sum(len(s.observations) for s in snaps)} "
          f"stations={len(store.registry)}")


def cmd_validate(args):
    from .ingest import ValidationLimits, format_timestamp, load_snapshots, validate_snapshot

    cfg = _config(args)
    limits = ValidationLimits.from_file(args.limits) if args.limits else ValidationLimits()
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["timestamp", "kind", "station_id", "message"])
    for snap in load_snapshots(cfg.store):
        for warn in validate_snapshot(snap, limits):
            w.writerow([format_timestamp(snap.timestamp), warn.kind, warn.station_id or "",
                        warn.message])


def cmd_cycles(args):
    from .cycles import global_cycle, station_cycle, write_cycle_csv
    from .preprocess import filter_low_capacity, regularize

    cfg = _config(args)
    table = _table(cfg)
    cls = _day_class(args.day_class)
    if args.global_:
        cyc = global_cycle(table, cls, cfg.global_min_slots, _step(cfg), cfg.holidays,
                           cfg.service_window, cfg.median_window)
    else:
        if args.station not in table.station_ids:
            raise UnknownStation(f"unknown station {args.station!r}")
        series = filter_low_capacity(regularize(table, args.station, _step(cfg)), cfg.min_total_slots)
        cyc = station_cycle(series, cls, cfg.holidays, cfg.service_window, cfg.median_window,
                            cfg.median_order)
    write_cycle_csv(cyc, args.out)
    print(f"day_class={cls.value} days={cyc.n_days}", file=sys.stderr)


def cmd_geopattern(args):
    from .cycles import geo_delta, grid_to_geojson, idw_grid, write_geojson

    cfg = _config(args)
    table = _table(cfg)
    try:
        rows, cols = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        raise UsageError(f"--grid must look like 100x100, got {args.grid!r}") from None
    cycles = _station_cycles(table, cfg, _day_class(args.day_class))
    deltas = geo_delta(cycles, args.time, args.baseline)
    coords = {s: (table.lat[i], table.lon[i]) for i, s in enumerate(table.station_ids)}
    grid = idw_grid(deltas, coords, resolution=(rows, cols), reference_time=args.time,
                    baseline_time=args.baseline)
    stations = {s: (float(coords[s][0]), float(coords[s][1]), d) for s, d in deltas.items()}
    write_geojson(grid_to_geojson(grid, stations), args.out)


def cmd_cluster(args):
    from .cluster import UNGROUPED, common_grid, kmeans_abs, meta_cluster, select_k
    from .cycles import write_geojson
    from .preprocess import DayClass

    cfg = _config(args)
    seed = resolve_seed(args.seed, cfg)
    table = _table(cfg)
    cycles = _station_cycles(table, cfg, DayClass.WEEKDAY)
    sids, vectors = common_grid(cycles)
    if len(sids) < 2:
        raise EmptyInput("need at least two stations with weekday cycles")
    if args.k == "auto":
        k = select_k(vectors, range(cfg.k_min, min(cfg.k_max, len(sids)) + 1), seed=seed,
                     method=cfg.internal_similarity)
    else:
        try:
            k = int(args.k)
        except ValueError:
            raise UsageError(f"--k must be 'auto' or an integer, got {args.k!r}") from None
    meta_k = args.meta_k if args.meta_k is not None else cfg.meta_k
    model = kmeans_abs(vectors, k, seed=seed, station_ids=sids)
    model = meta_cluster(model, min(meta_k, k), seed=seed, ceiling=cfg.ungrouped_ceiling)
    meta = model.station_meta()
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["station_id", "cluster", "meta_cluster"])
        for sid, c, m in zip(sids, model.labels, meta):
            w.writerow([sid, int(c), "UNGROUPED" if m == UNGROUPED else int(m)])
    if args.out_geojson:
        at = {s: i for i, s in enumerate(table.station_ids)}
        feats = [{"type": "Feature",
                  "geometry": {"type": "Point",
                               "coordinates": [float(table.lon[at[s]]), float(table.lat[at[s]])]},
                  "properties": {"station_id": s, "cluster": int(c),
                                 "meta_cluster": "UNGROUPED" if m == UNGROUPED else int(m)}}
                 for s, c, m in zip(sids, model.labels, meta)]
        write_geojson({"type": "FeatureCollection", "features": feats}, args.out_geojson)
    print(f"k={k} meta_k={model.meta_k} empty_meta={model.empty_meta}", file=sys.stderr)


def _parse_time(text):
    try:
        return np.datetime64(datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ"), "s")
    except ValueError:
        pass
    try:
        return np.datetime64(datetime.strptime(text, "%Y-%m-%dT%H:%M"), "s")
    except ValueError:
        raise UsageError(f"--at must look like 2008-05-15T09:30:00Z, got {text!r}") from None


def cmd_predict(args):
    from .predict import Scheme, build_cycle_model, predict_gradient, station_days

    cfg = _config(args)
    table = _table(cfg)
    if args.station not in table.station_ids:
        raise UnknownStation(f"unknown station {args.station!r}")
    at = _parse_time(args.at)
    days = station_days(table, [args.station], _step(cfg), cfg.service_window, cfg.min_total_slots)
    sd = days[args.station]
    day = at.astype("datetime64[D]").astype(date)
    if day not in sd.dates:
        raise DataError(f"no data for {args.station} on {day}")
    row = sd.dates.index(day)
    minutes = int((at - at.astype("datetime64[D]")) / np.timedelta64(60, "s"))
    b = (minutes - cfg.service_window.start) * 60 // sd.step_s
    if not 0 <= b < sd.bikes.shape[1] or np.isnan(sd.bikes[row, b]):
        raise DataError(f"no observation for {args.station} at {args.at}")
    current, capacity = float(sd.bikes[row, b]), float(sd.total[row, b])
    model = build_cycle_model(days, Scheme(args.scheme), day, calendar=cfg.holidays,
                              median_window=cfg.median_window)
    fc = predict_gradient(current, at, timedelta(minutes=args.offset), model, capacity,
                          station_id=args.station)
    print("station_id,issue_time,offset_min,current_bikes,predicted_bikes,model,fallback")
    print(f"{args.station},{args.at},{args.offset},{current:g},{fc.predicted_bikes:.3f},"
          f"{fc.model},{int(fc.fallback)}")


def cmd_eval_predict(args):
    from .predict import GradientModel, PersistenceModel, Scheme, evaluate, station_days, write_error_table

    cfg = _config(args)
    table = _table(cfg)
    try:
        offsets = [int(v) for v in args.offsets.split(",") if v.strip()]
        schemes = [Scheme(s.strip()) for s in args.schemes.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not offsets or min(offsets) <= 0:
        raise UsageError("offsets must be positive minutes")
    days = station_days(table, None, _step(cfg), cfg.service_window, cfg.min_total_slots)
    models = [PersistenceModel()] + [GradientModel(s, cfg.median_window) for s in schemes]
    rows = evaluate(days, models, offsets, calendar=cfg.holidays, step=_step(cfg))
    write_error_table(rows, args.out)


def cmd_routes(args):
    from .preprocess import ServiceWindow
    from .routes import infer_routes, write_json, write_routes_csv
    from .cycles import write_geojson

    cfg = _config(args)
    table = _table(cfg)
    window = ServiceWindow.parse(args.window) if args.window else cfg.morning_window
    threshold = args.threshold if args.threshold is not None else cfg.route_threshold
    cycles = _station_cycles(table, cfg, _day_class(args.day_class))
    inf = infer_routes(table, window, _day_class(args.day_class), cfg.holidays, threshold,
                       cfg.role_threshold, cfg.coupling_score, cfg.speed_kmh, cfg.lognormal_sigma,
                       cfg.feature_floor, cfg.min_total_slots, cycles=cycles)
    if args.out:
        write_routes_csv(inf, args.out)
    if args.out_geojson:
        write_geojson(inf.to_geojson(), args.out_geojson)
    if args.report:
        write_json(inf.report(), args.report)
    print(f"routes={len(inf.routes)} couplings={len(inf.couplings)} "
          f"objective={inf.model.objective:.6g} converged={inf.model.converged}", file=sys.stderr)


def cmd_simulate(args):
    from . import simgen

    cfg = _config(args)
    seed = resolve_seed(args.seed, cfg)
    if args.scenario == "planted":
        net, sched, pairs = simgen.planted_coupling_scenario(args.stations, seed=seed)
        print("planted pairs: " + " ".join(f"{k}->{m}" for k, m in pairs), file=sys.stderr)
    else:
        net = simgen.generate_network(simgen.NetworkSpec(n_stations=args.stations, seed=seed))
        sched = simgen.archetype_schedule(net)
    if args.schedule:
        sched = simgen.ODSchedule.from_csv(args.schedule, net.station_ids)
    noise = simgen.NoiseSpec.from_level(args.noise, len(net)) if args.noise else simgen.NoiseSpec()
    try:
        start = date.fromisoformat(args.start)
    except ValueError:
        raise UsageError(f"--start must be YYYY-MM-DD, got {args.start!r}") from None
    res = simgen.simulate(net, sched, args.days, noise, seed=seed, start=start,
                          step_minutes=cfg.step_minutes, calendar=cfg.holidays,
                          window=cfg.service_window)
    if args.out_store:
        res.table.write_csv(args.out_store)
    if args.out_trips:
        res.trips.to_csv(args.out_trips)
    if args.out_schedule:
        sched.to_csv(args.out_schedule)
    print(f"snapshots={len(res.table)} trips={len(res.trips)} refused={res.refused} "
          f"rerouted={res.rerouted}", file=sys.stderr)


# -- parser ------------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="bikeflow", description="Bike-share occupancy analytics.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    def add(name, func, help_text, store=True):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", help="key = value configuration file")
        if store:
            sp.add_argument("--store", help="snapshot CSV store")
        sp.set_defaults(func=func)
        return sp

    sp = add("ingest", cmd_ingest, "append a directory of KML snapshots to a store", store=False)
    sp.add_argument("--kml-dir", required=True)
    sp.add_argument("--store", required=True)
    sp.add_argument("--limits", help="validation limits file")

    sp = add("validate", cmd_validate, "report plausibility warnings for a store")
    sp.add_argument("--limits", help="validation limits file")

    sp = add("cycles", cmd_cycles, "average daily cycle of a station or the whole network")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--station")
    grp.add_argument("--global", dest="global_", action="store_true")
    sp.add_argument("--day-class", default="weekday")
    sp.add_argument("--out", required=True)

    sp = add("geopattern", cmd_geopattern, "interpolated change in bikes since a baseline time")
    sp.add_argument("--time", required=True)
    sp.add_argument("--baseline", default="05:00")
    sp.add_argument("--grid", default="100x100")
    sp.add_argument("--day-class", default="weekday")
    sp.add_argument("--out", required=True)

    sp = add("cluster", cmd_cluster, "two-stage clustering of weekday station cycles")
    sp.add_argument("--k", default="auto")
    sp.add_argument("--meta-k", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True)
    sp.add_argument("--out-geojson")

    sp = add("predict", cmd_predict, "forecast one station's bikes at a future offset")
    sp.add_argument("--station", required=True)
    sp.add_argument("--at", required=True, help="issue time, e.g. 2008-05-15T09:30:00Z")
    sp.add_argument("--offset", type=int, required=True, help="minutes ahead")
    sp.add_argument("--scheme", default="same-weekday",
                    choices=["all-other-days", "same-weekday", "weekday-weekend"])

    sp = add("eval-predict", cmd_eval_predict, "mean absolute forecast error per model and offset")
    sp.add_argument("--offsets", default="10,20,30,60,120,240")
    sp.add_argument("--schemes", default="all-other-days,same-weekday,weekday-weekend")
    sp.add_argument("--out", required=True)

    sp = add("routes", cmd_routes, "infer the morning transition matrix and probable routes")
    sp.add_argument("--window", help="HH:MM-HH:MM, default from config (05:00-12:00)")
    sp.add_argument("--day-class", default="weekday")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--out")
    sp.add_argument("--out-geojson")
    sp.add_argument("--report", help="fit report JSON")

    sp = add("simulate", cmd_simulate, "generate a synthetic network and snapshot store", store=False)
    sp.add_argument("--stations", type=int, default=20)
    sp.add_argument("--days", type=int, default=28)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--start", default="2008-05-19")
    sp.add_argument("--scenario", choices=["archetype", "planted"], default="archetype")
    sp.add_argument("--schedule", help="OD schedule CSV overriding the scenario's rates")
    sp.add_argument("--noise", type=float, default=0.0, help="noise level, e.g. 0.1")
    sp.add_argument("--out-store")
    sp.add_argument("--out-trips")
    sp.add_argument("--out-schedule")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        if not getattr(args, "func", None):
            parser.print_usage(sys.stderr)
            raise UsageError("a subcommand is required")
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
