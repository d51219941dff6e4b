"""Command-line front end.

Exit codes: 0 success, 1 mathematical-check failure, 2 input error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .avdonin import check_conditions
from .errors import ConditionFailure, QuasibasisError, ScenarioError
from .geometry import verify_multitiling
from .pipeline import (
    TILING_SAMPLES,
    apply_enum_control,
    build_lattice,
    build_region,
    prepare_system,
    run_demo,
    run_frame_stage,
    scenario_out_dir,
    stage_seed,
    write_avdonin_artifacts,
    write_frame_artifacts,
    write_json,
    write_points_artifacts,
    RunManifest,
)
from . import __version__
from .scenario import BUNDLED_NAMES, load_bundled, load_scenario

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2


def _common_flags(p, with_scenario=True):
    if with_scenario:
        p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--out", default="quasibasis-out", help="output directory")
    p.add_argument("--seed", type=int, default=None,
                   help="override the scenario seed")
    p.add_argument("--force", action="store_true",
                   help="skip the tiling precheck where one is required")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quasibasis",
        description="Construct and certify exponential Riesz-basis frequency "
                    "sets for lattice multi-tiling domains.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, hint in (
        ("check-tiling", "sampled multi-tiling verification"),
        ("generate", "emit the frequency point sets"),
        ("avdonin", "enumeration condition report"),
        ("frame", "truncated Gram frame-bound trends"),
    ):
        p = sub.add_parser(name, help=hint)
        _common_flags(p)
    demo = sub.add_parser("demo", help="run the full pipeline on a bundled scenario")
    demo.add_argument("name", help=f"one of: {', '.join(BUNDLED_NAMES)}")
    _common_flags(demo, with_scenario=False)
    return parser


def _load(args):
    scn = load_scenario(args.scenario)
    seed = scn.seed if args.seed is None else args.seed
    return scn, seed


def cmd_check_tiling(args) -> int:
    scn, seed = _load(args)
    out_dir = scenario_out_dir(args.out, scn)
    report = verify_multitiling(build_region(scn), build_lattice(scn), scn.k,
                                TILING_SAMPLES, stage_seed(seed, "verify"))
    write_json(os.path.join(out_dir, "tiling_report.json"), report.to_json_dict())
    if report.consistent:
        print(f"tiling ok: k={report.k_observed} over {report.samples_tested} samples")
        return EXIT_OK
    print(f"tiling check failed: observed {report.k_observed}, "
          f"expected {scn.k}, {report.failure_count} failing samples",
          file=sys.stderr)
    return EXIT_CHECK_FAILED


def _prepared(args, scn, seed):
    if not args.force:
        report = verify_multitiling(build_region(scn), build_lattice(scn), scn.k,
                                    TILING_SAMPLES, stage_seed(seed, "verify"))
        if not report.consistent:
            raise QuasibasisError(
                f"tiling precheck failed (observed {report.k_observed}); "
                "use --force to generate anyway"
            )
        return prepare_system(scn, seed=seed, tiling_report=report)
    return prepare_system(scn, seed=seed)


def cmd_generate(args) -> int:
    scn, seed = _load(args)
    out_dir = scenario_out_dir(args.out, scn)
    system = _prepared(args, scn, seed)
    manifest = RunManifest(scenario_digest=scn.digest(),
                           tool_version=__version__, seed=seed)
    write_points_artifacts(out_dir, system, manifest)
    print(f"generated {len(system.points)} window points and "
          f"{len(system.enumeration)} enumeration entries")
    return EXIT_OK


def cmd_avdonin(args) -> int:
    scn, seed = _load(args)
    out_dir = scenario_out_dir(args.out, scn)
    system = _prepared(args, scn, seed)
    manifest = RunManifest(scenario_digest=scn.digest(),
                           tool_version=__version__, seed=seed)
    enum = apply_enum_control(system.enumeration, scn.control)
    try:
        report = check_conditions(enum, system.region_translated, system.params,
                                  n_grid=scn.deviation_grid)
    except ConditionFailure as exc:
        if exc.report is not None:
            write_avdonin_artifacts(out_dir, exc.report, manifest,
                                    f"failed:{type(exc).__name__}")
        print(f"conditions not satisfied: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    write_avdonin_artifacts(out_dir, report, manifest, "ok")
    print(f"conditions hold: gap={report.gap:.6g}, "
          f"smallest passing N={report.smallest_passing_N}")
    return EXIT_OK


def cmd_frame(args) -> int:
    scn, seed = _load(args)
    out_dir = scenario_out_dir(args.out, scn)
    system = _prepared(args, scn, seed)
    manifest = RunManifest(scenario_digest=scn.digest(),
                           tool_version=__version__, seed=seed)
    frame = run_frame_stage(system)
    write_frame_artifacts(out_dir, frame, manifest)
    if frame.rank_collapse:
        print("rank collapse detected in a truncated Gram matrix", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"frame trends stable; condition ratio "
          f"{frame.trend_1d.condition_ratio:.3g} (interval side)")
    return EXIT_OK


def cmd_demo(args) -> int:
    scn = load_bundled(args.name)
    try:
        run_demo(scn, args.out, seed=args.seed)
    except QuasibasisError as exc:
        print(f"demo {args.name} failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    print(f"demo {args.name}: all stages ok, artifacts under "
          f"{os.path.join(args.out, scn.name)}")
    return EXIT_OK


_DISPATCH = {
    "check-tiling": cmd_check_tiling,
    "generate": cmd_generate,
    "avdonin": cmd_avdonin,
    "frame": cmd_frame,
    "demo": cmd_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except QuasibasisError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
