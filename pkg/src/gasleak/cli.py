"""Command-line entry point: train, simulate, detect, bench, report.

Exit codes: 0 success or no leak, 1 usage or configuration error, 2 leak
detected, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from gasleak import __version__, bench, dataio, detect, simulate
from gasleak import models as M

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_LEAK = 2
EXIT_DATA = 3

log = logging.getLogger("gasleak")

DATA_ERRORS = (OSError, dataio.SchemaError, dataio.InsufficientDataError, M.ModelFormatError,
               simulate.ScenarioInfeasibleError, detect.InsufficientStreamError)

NOISE_CHOICES = ("default", "none", "reference")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _noise(name: str) -> simulate.NoiseModel:
    return {"default": simulate.NoiseModel, "none": simulate.NoiseModel.none,
            "reference": simulate.NoiseModel.reference_fraction}[name]()


def _echo(args) -> None:
    """Print the resolved invocation so the run can be repeated exactly."""
    conf = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose")}
    print("# config " + json.dumps(conf, sort_keys=True, default=str), file=sys.stderr)


def _load_frame(path) -> "dataio.pd.DataFrame":
    result = dataio.load_telemetry(path)
    if result.rejects:
        log.warning("%d rows rejected from %s", len(result.rejects), path)
        for r in result.rejects[:10]:
            log.warning("  %s", r)
    return result.frame


def _params(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects key=value, got {pair!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _detector_config(args) -> detect.DetectorConfig:
    base = detect.DetectorConfig.code_faithful() if args.code_faithful else detect.DetectorConfig()
    overrides = {}
    if args.window is not None:
        overrides["window"] = args.window
    if args.threshold is not None:
        overrides["threshold"] = args.threshold
    if args.persistence is not None:
        overrides["persistence"] = args.persistence
    try:
        return detect.DetectorConfig(**{**base.__dict__, **overrides})
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------- commands

def cmd_train(args) -> int:
    if args.family not in M.FAMILIES:
        raise UsageError(f"unknown family {args.family!r}; choose from {', '.join(M.FAMILIES)}")
    frame = _load_frame(args.data)
    target = dataio.INLET_FLOWRATE if args.target == "inlet" else dataio.FLOWRATE
    if target not in frame.columns:
        raise dataio.SchemaError(f"column {target!r} is required for --target {args.target}")
    grids = M.QUICK_GRIDS if args.grid == "quick" else M.DEFAULT_GRIDS
    model = M.train_observer(frame, args.family, grid=grids[args.family],
                             base_params=_params(args.param), target=target, seed=args.seed,
                             jobs=args.jobs)
    M.save_model(model, args.out)
    print(f"{args.family} observer for {target!r} -> {args.out}")
    print(f"best params {json.dumps(model.params, sort_keys=True)}")
    print(M.metric_block(model))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.duration < 1:
        raise UsageError("--duration must be >= 1")
    spec = simulate.PipelineSpec()
    profile = simulate.OperatingProfile.constant() if args.constant else simulate.OperatingProfile()
    stream = simulate.synth_stream(spec, args.duration, profile, _noise(args.noise), args.seed)
    if args.leak_size:
        try:
            scenario = simulate.LeakScenario(args.leak_size, args.leak_location, args.onset)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        stream = simulate.inject_leak(stream, spec, scenario)
    dataio.write_telemetry(stream, args.out)
    print(f"wrote {len(stream)} samples to {args.out}")
    return EXIT_OK


def cmd_detect(args) -> int:
    config = _detector_config(args)
    model = M.load_model(args.model)
    inlet = M.load_model(args.inlet_model) if args.inlet_model else None
    stream = _load_frame(args.data)
    result = detect.run_detection(stream, model, config, inlet_model=inlet)
    if args.log:
        Path(args.log).write_text("\n".join(result.log_lines()) + "\n")
    print(f"threshold {result.threshold:.6f}")
    print(result.summary())
    return EXIT_LEAK if result.detected else EXIT_OK


def _write_report(out: Path, fragments) -> None:
    out.mkdir(parents=True, exist_ok=True)
    ranks = bench.sarr_rank(fragments) if len(fragments) >= 2 else None
    (out / "report.txt").write_text(bench.render_text(fragments, ranks))
    (out / "summary.csv").write_text(bench.render_csv(fragments))
    (out / "cells.csv").write_text(bench.render_cells_csv(fragments))
    (out / "summary.kv").write_text(bench.render_kv(fragments, ranks))
    if ranks is not None:
        (out / "ranks.csv").write_text(bench.render_rank_csv(ranks))
    sys.stdout.write(bench.render_text(fragments, ranks))


def cmd_bench(args) -> int:
    if args.inlet_model and len(args.inlet_model) != len(args.model):
        raise UsageError("give one --inlet-model per --model, in the same order")
    try:
        grid = bench.SweepGrid(tuple(args.leak_size or bench.DEFAULT_SIZES),
                               tuple(args.leak_location or bench.DEFAULT_LOCATIONS),
                               seed=args.seed, budget_minutes=args.budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = _detector_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fragments, used = [], set()
    for k, path in enumerate(args.model):
        model = M.load_model(path)
        inlet = M.load_model(args.inlet_model[k]) if args.inlet_model else None
        name = model.family
        while name in used:
            name += "'"
        used.add(name)
        frag = bench.evaluate(model, grid, inlet_model=inlet, name=name, n_clean=args.clean,
                              clean_seed=args.seed + 1000, with_robustness=not args.no_robustness,
                              config=config, jobs=args.jobs)
        text = json.dumps(bench.fragment_to_dict(frag), sort_keys=True, indent=1)
        (out / f"fragment_{k}_{name}.json").write_text(text + "\n")
        fragments.append(frag)
    _write_report(out, fragments)
    return EXIT_OK


def cmd_report(args) -> int:
    fragments = []
    for path in args.fragments:
        try:
            fragments.append(bench.fragment_from_dict(json.loads(Path(path).read_text())))
        except (KeyError, TypeError, ValueError) as exc:
            raise dataio.SchemaError(f"{path}: not a sweep fragment ({exc})") from None
    _write_report(Path(args.out), fragments)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_detector_flags(p) -> None:
    p.add_argument("--window", type=int, help="flag-count window in samples (default 30)")
    p.add_argument("--threshold", type=float, help="residual threshold (default test MAE + 0.01)")
    p.add_argument("--persistence", type=int, help="samples above trip before alarm (default 3)")
    p.add_argument("--code-faithful", action="store_true",
                   help="20-sample window, counter updated on flagged samples only")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gasleak", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit and save a flow observer")
    p.add_argument("--data", required=True)
    p.add_argument("--family", required=True, help=", ".join(M.FAMILIES))
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=12)
    p.add_argument("--grid", choices=("quick", "full"), default="quick")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="fixed estimator parameter (JSON value), repeatable")
    p.add_argument("--target", choices=("outlet", "inlet"), default="outlet")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="write a synthetic telemetry stream")
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=int, default=21000, help="samples (2 minutes each)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=NOISE_CHOICES, default="default")
    p.add_argument("--constant", action="store_true", help="flat operating point")
    p.add_argument("--leak-size", type=float, default=0.0, help="leak fraction of flow")
    p.add_argument("--leak-location", type=float, default=0.5, help="fraction of length")
    p.add_argument("--onset", type=int, default=30, help="first leaking sample")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="scan a stream; exit 2 on a leak")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--inlet-model", help="inlet-flow observer, enables localization")
    p.add_argument("--log", help="write the per-sample detector log here")
    _add_detector_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="leak-size by location sweep and report")
    p.add_argument("--model", required=True, action="append")
    p.add_argument("--inlet-model", action="append")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--leak-size", type=float, action="append")
    p.add_argument("--leak-location", type=float, action="append")
    p.add_argument("--budget", type=float, default=240.0, help="minutes")
    p.add_argument("--clean", type=int, default=20, help="clean streams for false alarms")
    p.add_argument("--no-robustness", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    _add_detector_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="combine saved sweep fragments")
    p.add_argument("fragments", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    _echo(args)
    if getattr(args, "jobs", 1) < 1:
        print("gasleak: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gasleak: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"gasleak: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
