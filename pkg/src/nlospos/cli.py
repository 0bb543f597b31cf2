"""Command-line entry point: ``nlospos {simulate,estimate,montecarlo,calibrate}``.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .detector import DetectorConfig, threshold_for_alpha
from .errors import NumericalError, ValidationError
from .geometry import NoiseModel
from .pathio import export_paths, import_paths
from .pipeline import OrderingMode, run
from .scenarios import load_scene
from .scene import observations_from_scene

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("nlospos")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _vec3(text: str) -> np.ndarray:
    values = _float_list(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}")
    return np.array(values)


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _out_dir(path: str | None) -> Path:
    out = Path(path or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_detector(path: Path, cfg: DetectorConfig) -> None:
    path.write_text(json.dumps(dataclasses.asdict(cfg), indent=2) + "\n")


def _read_detector(path: str) -> DetectorConfig:
    try:
        data = json.loads(Path(path).read_text())
        return DetectorConfig(**data)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ValidationError(f"bad detector config {path}: {exc}") from None


# -- subcommands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    scene = load_scene(args.scene)
    noise = NoiseModel(args.sigma_angle[0], args.sigma_range[0], args.seed)
    obs, truth = observations_from_scene(scene, noise)
    out = _out_dir(args.out) / "paths.csv"
    export_paths(out, obs, [t.bounce_count for t in truth])
    print(f"paths,{len(obs)}")
    print(f"file,{out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    paths, bounces = import_paths(args.paths)
    if args.tx is not None:
        tx = args.tx
    elif args.scene is not None:
        tx = load_scene(args.scene).tx
    else:
        tx = np.zeros(3)

    if args.detector:
        detector = _read_detector(args.detector)
    else:
        detector = DetectorConfig(
            baseline_mean=args.baseline_mean,
            baseline_sigma=args.baseline_sigma,
            threshold=threshold_for_alpha(args.alpha, max(2, len(paths) - 1)),
        )
    result = run(paths, args.ordering, args.weights, detector, tx)
    det = result.detection
    report = [
        ("x_m", repr(float(result.position[0]))),
        ("y_m", repr(float(result.position[1]))),
        ("z_m", repr(float(result.position[2]))),
        ("clock_bias_ns", repr(result.clock_bias * 1e9)),
        ("paths_total", len(paths)),
        ("paths_used", result.paths_used),
        ("used_indices", " ".join(str(i) for i in result.used_indices)),
        ("fallback_all_paths", result.fallback_all_paths),
        ("detected", bool(det and det.detected)),
        ("stop_index", "" if det is None or det.stop_index is None else det.stop_index),
        ("change_point", "" if det is None or det.change_point is None else det.change_point),
        ("statistic", "" if det is None else repr(det.statistic)),
        ("threshold", repr(detector.threshold)),
        ("identifiable", result.estimate.identifiable),
        ("residuals_m", " ".join(repr(r) for r in result.residual_series)),
    ]
    if bounces is not None:
        used_bounces = [bounces[i] for i in result.used_indices]
        report.append(("used_bounce_counts", " ".join(map(str, used_bounces))))
    if not np.all(np.isfinite(result.position)):
        raise NumericalError("estimate is not finite")

    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["key", "value"])
    writer.writerows(report)
    if args.out:
        with open(_out_dir(args.out) / "estimate.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerows(report)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    scene = load_scene(args.scene)
    config = harness.ExperimentConfig(
        scene=scene,
        sigma_angle=args.sigma_angle,
        sigma_range=args.sigma_range,
        trials=args.trials,
        seed=args.seed,
        ordering=args.ordering,
        weight_mode=args.weights,
        alpha=args.alpha,
        calibration_trials=args.calibration_trials,
        detector=_read_detector(args.detector) if args.detector else None,
        ue_positions=harness.ue_sweep_positions() if args.ue_sweep else None,
        output_dir=args.out,
    )
    details = [] if args.detail else None
    rows = harness.run_montecarlo(config, details)
    out = _out_dir(args.out)
    harness.write_metrics(out / "metrics.csv", rows)
    if details is not None:
        harness.write_details(out / "trials.csv", details)
    log.info("wrote %d metrics rows to %s", len(rows), out / "metrics.csv")
    print(f"rows,{len(rows)}")
    print(f"file,{out / 'metrics.csv'}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    scene = load_scene(args.scene)
    noise = NoiseModel(args.sigma_angle[0], args.sigma_range[0], args.seed)
    cfg = harness.calibrate_detector(
        scene, noise, args.trials, args.alpha, args.ordering, args.weights
    )
    out = _out_dir(args.out) / "detector.json"
    _write_detector(out, cfg)
    print(f"baseline_mean,{cfg.baseline_mean!r}")
    print(f"baseline_sigma,{cfg.baseline_sigma!r}")
    print(f"threshold,{cfg.threshold!r}")
    print(f"file,{out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlospos", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, scene_required=True, lists=True):
        p.add_argument("--scene", required=scene_required,
                       help="scene JSON file or builtin:<name>")
        kind = _float_list
        p.add_argument("--sigma-angle", type=kind, default=[0.0] if not lists else list(harness.DEFAULT_SIGMA_ANGLE),
                       help="angle noise std [rad], comma-separated")
        p.add_argument("--sigma-range", type=kind, default=[0.0] if not lists else list(harness.DEFAULT_SIGMA_RANGE),
                       help="range noise std [m], comma-separated")
        p.add_argument("--seed", type=_u64, default=0)
        p.add_argument("--out", help="output directory")

    def method(p):
        p.add_argument("--ordering", choices=[m.value for m in OrderingMode], default="delay")
        p.add_argument("--weights", choices=["gain", "uniform"], default="gain")
        p.add_argument("--alpha", type=float, default=0.05, help="detector false-alarm budget")

    p = sub.add_parser("simulate", help="scene -> path file")
    common(p, lists=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="path file -> position/clock-bias report")
    p.add_argument("--paths", required=True)
    p.add_argument("--scene", help="take the BS position from this scene")
    p.add_argument("--tx", type=_vec3, help="BS position x,y,z [m] (default origin)")
    p.add_argument("--detector", help="detector JSON written by 'calibrate'")
    p.add_argument("--baseline-mean", type=float, default=0.0)
    p.add_argument("--baseline-sigma", type=float, default=1.0)
    p.add_argument("--out", help="output directory")
    method(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("montecarlo", help="noise sweep -> metrics CSV")
    common(p)
    method(p)
    p.add_argument("--trials", type=int, default=harness.DEFAULT_TRIALS)
    p.add_argument("--calibration-trials", type=int, default=200)
    p.add_argument("--detector", help="fixed detector JSON instead of per-grid-point calibration")
    p.add_argument("--ue-sweep", action="store_true", help="pool over the ten reference UE positions")
    p.add_argument("--detail", action="store_true", help="also write per-trial trials.csv")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("calibrate", help="scene + noise -> detector JSON")
    common(p, lists=False)
    method(p)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
