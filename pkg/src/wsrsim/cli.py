"""Command-line interface: ``wsrsim sim|estimate|run|compare|presets``.

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal error.
The default output root is ``$WSRSIM_OUTPUT`` or ``./wsrsim-out``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import PRESETS, resolve_config
from .datastore import MANIFEST_NAME, dump_json, read_dataset, write_dataset
from .errors import DatasetError, DatasetIOError, InvariantError, ValidationError
from .estimator import BACKEND, AngleGrid
from .pipeline import aggregate, compare_profiles, estimate, simulate

log = logging.getLogger("wsrsim")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3
OUTPUT_ENV = "WSRSIM_OUTPUT"

RUN_COLUMNS = (
    "repetition", "seed", "ground_truth_azimuth_deg", "estimated_azimuth_deg", "estimated_polar_deg",
    "azimuth_error_deg", "confidence", "pair_count", "discard_count", "runtime_s",
)


def _output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "wsrsim-out"))


def _load_config(args):
    cfg = resolve_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _grid_from_args(args, default: AngleGrid) -> AngleGrid:
    grid = default
    if args.grid_step is not None:
        grid = replace(grid, azimuth_step=args.grid_step, polar_step=args.grid_step)
    if args.polar_fixed is not None:
        grid = replace(grid, polar_fixed=args.polar_fixed)
    grid.validate("grid")
    return grid


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = Path(args.output) if args.output else Path(cfg.output_dir or _output_root() / cfg.name)
    record = simulate(cfg)
    manifest = write_dataset(record, out)
    print(manifest)
    return EXIT_OK


def _estimate_record(record, args):
    grid = _grid_from_args(args, record.config.estimator.grid)
    profile, summary = estimate(record, grid=grid, steering_power=args.steering_power, fast_2d=args.fast_2d or None)
    record.profile = profile
    record.metrics = {**record.metrics, "summary": summary.to_dict()}
    return profile, summary


def cmd_estimate(args) -> int:
    record = read_dataset(args.manifest)
    _, summary = _estimate_record(record, args)
    src = Path(args.manifest)
    out = Path(args.output) if args.output else (src if src.is_dir() else src.parent)
    write_dataset(record, out)
    print(json.dumps(summary.to_dict(), indent=2))
    return EXIT_OK


def _format_table(rows: list[dict], agg: dict) -> str:
    head = f"{'rep':>4} {'seed':>6} {'truth':>9} {'est_az':>8} {'est_pol':>8} {'error':>8} {'conf':>10} {'pairs':>6}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r['repetition']:>4} {r['seed']:>6} {r['ground_truth_azimuth_deg']:>9.3f} "
            f"{r['estimated_azimuth_deg']:>8.2f} {r['estimated_polar_deg']:>8.2f} "
            f"{r['azimuth_error_deg']:>8.3f} {r['confidence']:>10.3e} {r['pair_count']:>6}"
        )
    lines.append("-" * len(head))
    lines.append(
        f"mean error {agg['mean_azimuth_error_deg']:.4f} deg, std {agg['std_azimuth_error_deg']:.4f} deg "
        f"over {agg['repetitions']} repetitions"
    )
    return "\n".join(lines)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    reps = args.reps if args.reps is not None else cfg.repetitions
    if reps < 1:
        raise ValidationError("must be >= 1", "reps")
    root = Path(args.output) if args.output else Path(cfg.output_dir or _output_root() / cfg.name)
    summaries, rows = [], []
    for k in range(reps):
        seed = cfg.rng_seed + k
        try:
            record = simulate(cfg, seed=seed)
            _, summary = _estimate_record(record, args)
        except ValidationError as exc:
            raise ValidationError(f"repetition {k} (seed {seed}) failed: {exc}") from exc
        write_dataset(record, root / f"rep_{k:03d}")
        summaries.append(summary)
        rows.append({"repetition": k, **{c: getattr(summary, c) for c in RUN_COLUMNS[1:]}})
        log.info("rep %d seed %d error %.4f deg", k, seed, summary.azimuth_error_deg)

    agg = aggregate(summaries)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "runs.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RUN_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    table = _format_table(rows, agg)
    (root / "summary.txt").write_text(table + "\n")
    dump_json({"scenario": cfg.name, **agg, "runs": [s.to_dict() for s in summaries]}, root / "aggregate.json")
    print(table)
    return EXIT_OK


def _profile_for(path: str, args):
    """Stored profile, or a fresh one when absent or a grid is forced."""
    record = read_dataset(path)
    forced = args.grid_step is not None or args.polar_fixed is not None
    if record.profile is None or forced:
        profile, _ = estimate(record, grid=_grid_from_args(args, record.config.estimator.grid))
        return profile
    return record.profile


def cmd_compare(args) -> int:
    report = compare_profiles(_profile_for(args.a, args), _profile_for(args.b, args))
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.show:
        if args.show not in PRESETS:
            raise ValidationError(f"unknown preset {args.show!r}", "preset")
        print(PRESETS[args.show].to_yaml(), end="")
    else:
        for name in PRESETS:
            print(name)
    return EXIT_OK


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-step", type=float, metavar="DEG", help="azimuth and polar step in degrees")
    p.add_argument("--polar-fixed", type=float, metavar="DEG", help="evaluate a single polar angle (90 = horizontal)")
    p.add_argument("--steering-power", type=int, choices=(1, 2), help="exponent applied to the steering vector")
    p.add_argument("--fast-2d", action="store_true", help="horizontal plane only when the trajectory is coplanar")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsrsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernel)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="simulate a scenario and write a dataset")
    p.add_argument("config", help="YAML config path or preset name")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", metavar="DIR")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="compute the AoA profile of a dataset")
    p.add_argument("manifest", help=f"dataset directory or its {MANIFEST_NAME}")
    p.add_argument("--output", metavar="DIR")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("run", help="simulate and estimate over repeated seeds")
    p.add_argument("config", help="YAML config path or preset name")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--output", metavar="DIR")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="compare the AoA profiles of two datasets")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--grid-step", type=float, metavar="DEG", help="re-estimate both on this grid step")
    p.add_argument("--polar-fixed", type=float, metavar="DEG", help="re-estimate both at this polar angle")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("presets", help="list presets or print one as YAML")
    p.add_argument("--show", metavar="NAME")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s", force=True
    )
    warnings.simplefilter("default")
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except DatasetIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:
        log.exception("unexpected failure")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
