"""Command line entry point: ``irswarm run|experiment|scan-gallery``.

The exit status is 0 exactly when every declared bound passes.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from .geometry import Pose
from .perception import MotionMode, canonical_scenes, perform_scan, profile_rows
from .sim import experiments as ex
from .sim.runner import run
from .sim.scenario import load_scenario


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _emit_report(report, args) -> bool:
    if args.out:
        out = Path(args.out)
        if args.format == "json":
            _write(out, f"{report.name}.json", report.to_json())
        else:
            _write(out, f"{report.name}.csv", report.to_csv())
    elif args.format == "json":
        sys.stdout.write(report.to_json())
    print(report.line(), file=sys.stderr if args.format == "json" and not args.out else sys.stdout)
    return report.passed


def cmd_run(args) -> int:
    config = load_scenario(args.scenario)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    result = run(config)
    if args.out:
        out = Path(args.out)
        if result.trace.wants_pulses:
            _write(out, "pulses.csv", result.trace.pulses_csv())
        if result.trace.wants_events:
            _write(out, "events.csv", result.trace.events_csv())
    else:
        sys.stdout.write(result.trace.events_csv())
    return 0 if _emit_report(result.report, args) else 1


def cmd_experiment(args) -> int:
    seed = 1 if args.seed is None else args.seed
    name = args.name
    if name == "contact":
        bounds = (0.8, 2.0) if args.distance <= 140.0 and args.board == "ideal" else None
        rep = ex.experiment_contact_time(args.distance, args.board, args.seeds or 1000, seed,
                                         workers=args.workers, bounds=bounds)
    elif name == "propagation":
        rep = ex.experiment_propagation(args.n, args.protocol, args.board if args.board != "ideal" else "v1",
                                        args.seeds or 30, seed, workers=args.workers)
    elif name == "channel-match":
        rep = ex.experiment_channel_match(args.trials or 100_000, args.channels, args.channels, seed,
                                          lockstep=args.lockstep, offset=args.offset)
    elif name == "deadzone":
        rep = ex.experiment_deadzone(args.board, args.probe_distance, args.threshold)
    elif name == "interference":
        rep = ex.experiment_interference(args.zone, args.half_angle, args.transmitters, args.placement,
                                         args.trials or 2000, seed)
    elif name == "bidirectional":
        rep = ex.experiment_bidirectional(args.board if args.board != "ideal" else "v1",
                                          args.trials or 50_000, master_seed=seed)
    elif name == "sensor-bands":
        rep = ex.experiment_sensor_bands(args.trials or 10_000, master_seed=seed)
    else:  # scan-recognition
        rep = ex.experiment_scan_recognition(args.trials or 200, seed)
    return 0 if _emit_report(rep, args) else 1


def cmd_scan_gallery(args) -> int:
    scenes = canonical_scenes()
    names = [args.scene] if args.scene else list(scenes)
    rng = np.random.default_rng(args.seed) if args.noise else None
    for name in names:
        prof = perform_scan(Pose(0.0, 0.0, 0.0), scenes[name].world(), motion_mode=MotionMode(args.mode), rng=rng)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("sample_index", "bearing_deg", "adc", "distance_mm_est"))
        for i, b, v, d in profile_rows(prof):
            w.writerow((i, f"{b:g}", v, "" if d is None else f"{d:.2f}"))
        if args.out:
            _write(Path(args.out), f"{name}.csv", buf.getvalue())
        else:
            sys.stdout.write(f"# {name}\n{buf.getvalue()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irswarm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None, help="master seed")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="json")

    r = sub.add_parser("run", help="run one scenario file")
    r.add_argument("scenario")
    common(r)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    e.add_argument("name", choices=ex.EXPERIMENTS)
    common(e)
    e.add_argument("--seeds", type=int, default=None, help="replications")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--board", default="ideal", choices=("ideal", "v1", "v2", "v3", "single"))
    e.add_argument("--distance", type=float, default=100.0)
    e.add_argument("--protocol", choices=("repeat", "confirm"), default="repeat")
    e.add_argument("--n", type=int, default=10, help="robots in the propagation line")
    e.add_argument("--trials", type=int, default=None)
    e.add_argument("--channels", type=int, default=6)
    e.add_argument("--lockstep", action="store_true")
    e.add_argument("--offset", type=int, default=0)
    e.add_argument("--probe-distance", type=float, default=100.0)
    e.add_argument("--threshold", type=float, default=None)
    e.add_argument("--zone", choices=tuple(ex.ZONES), default="close")
    e.add_argument("--half-angle", type=float, default=45.0)
    e.add_argument("--transmitters", type=int, default=2)
    e.add_argument("--placement", choices=("random", "co-sector", "adjacent"), default="random")
    e.set_defaults(func=cmd_experiment)

    g = sub.add_parser("scan-gallery", help="write one CSV profile per reference scene")
    g.add_argument("scene", nargs="?", choices=tuple(canonical_scenes()), default=None)
    common(g)
    g.add_argument("--mode", choices=("ideal", "biased"), default="ideal")
    g.add_argument("--noise", action="store_true", help="apply band noise")
    g.set_defaults(func=cmd_scan_gallery)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is None and args.command == "scan-gallery":
        args.seed = 1
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
