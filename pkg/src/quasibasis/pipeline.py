"""Scenario pipeline: stage execution, controls, and artifact writers.

Stage order: tiling check -> normalization to Z^d -> generic translation ->
parameters -> enumeration (both sides) -> condition report -> frame reports.
All artifacts are deterministic functions of (scenario, seed): JSON uses
shortest-roundtrip floats with fixed key order, CSV uses %.17g.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .avdonin import block_sum_identity_check, check_conditions
from .errors import ConditionFailure, QuasibasisError
from .geometry import (
    BoxUnionRegion,
    Lattice,
    generic_translate,
    normalize_to_integer_lattice,
    verify_multitiling,
)
from .quasicrystal import (
    default_params,
    generate_lambda,
    generate_lambda_star,
    make_params,
)
from .riesz import (
    RANK_COLLAPSE_TOL,
    DualityReport,
    duality_cross_check,
    frame_bounds,
    gram_dd,
    integer_frequency_grid,
    riesz_trend,
)
from .scenario import Scenario

TILING_SAMPLES = 10_000

_STAGE_SEED_KEYS = {"verify": 0, "translate": 1, "params": 2}


def stage_seed(seed, stage) -> int:
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=(_STAGE_SEED_KEYS[stage],))
    return int(ss.generate_state(1, np.uint64)[0])


def build_region(scn: Scenario) -> BoxUnionRegion:
    return BoxUnionRegion(scn.boxes)


def build_lattice(scn: Scenario) -> Lattice:
    return Lattice(scn.lattice_basis)


def auto_window_radius(scn: Scenario, params) -> float:
    if scn.window_radius is not None:
        return scn.window_radius
    max_order = max(scn.orders + [scn.duality_order])
    per_axis = (2.0 * max_order / scn.k) ** (1.0 / scn.dim)
    return 0.5 * per_axis + scn.k * float(np.max(np.abs(params.beta))) + 1.0


@dataclass
class PreparedSystem:
    """Everything downstream stages need, computed once per scenario."""

    scenario: Scenario
    seed: int
    region: BoxUnionRegion
    lattice: Lattice
    tiling: object
    region_normalized: object
    pullback: np.ndarray
    region_translated: object
    params: object
    enumeration: object
    points: object


def prepare_system(scn: Scenario, seed=None, tiling_report=None) -> PreparedSystem:
    """Run the geometric and generative stages for a scenario."""
    seed = scn.seed if seed is None else int(seed)
    region = build_region(scn)
    lattice = build_lattice(scn)
    if tiling_report is None:
        tiling_report = verify_multitiling(
            region, lattice, scn.k, TILING_SAMPLES, stage_seed(seed, "verify")
        )
    region_n, pullback = normalize_to_integer_lattice(region, lattice)
    if scn.params_mode == "default":
        params = default_params(scn.dim, scn.k, stage_seed(seed, "params"),
                                beta_scale=scn.beta_scale)
    else:
        params = make_params(scn.dim, scn.k, scn.alpha, scn.beta)
    region_t = generic_translate(region_n, params.alpha, scn.n_range,
                                 stage_seed(seed, "translate"))
    enum = generate_lambda_star(params, region_t, scn.n_range)
    radius = auto_window_radius(scn, params)
    window = (np.full(scn.dim, -radius), np.full(scn.dim, radius))
    points = generate_lambda(params, window)
    return PreparedSystem(
        scenario=scn, seed=seed, region=region, lattice=lattice,
        tiling=tiling_report, region_normalized=region_n, pullback=pullback,
        region_translated=region_t, params=params, enumeration=enum,
        points=points,
    )


# ---------------------------------------------------------------- controls

def apply_enum_control(enum, control):
    """Controls on the enumeration: perturb shifts every lambda by magnitude.

    A constant offset leaves gaps (and the Gram spectrum) untouched but
    displaces every window mean from the analytic constant, so the
    mean-deviation detector must flag it.
    """
    if control.kind == "perturb" and control.magnitude != 0.0:
        return enum.with_lambdas(enum.lam + control.magnitude)
    return enum


def apply_frequency_control(values, control):
    """Controls on a frequency list; returns (values, allow_duplicates).

    delete_fraction drops every round(1/fraction)-th entry of the full list;
    duplicate repeats the middle entry.
    """
    arr = np.asarray(values)
    if control.kind == "delete_fraction":
        period = max(2, int(round(1.0 / control.fraction)))
        keep = np.arange(arr.shape[0]) % period != 0
        return arr[keep], False
    if control.kind == "duplicate":
        mid = arr.shape[0] // 2
        dup = np.insert(arr, mid, arr[mid], axis=0)
        return dup, True
    return arr, False


# ---------------------------------------------------------------- stages

@dataclass
class FrameStageResult:
    trend_1d: object
    trend_dd: object
    duality: DualityReport
    fuglede: object
    rank_collapse: bool


def run_frame_stage(system: PreparedSystem) -> FrameStageResult:
    scn = system.scenario
    control = scn.control
    lam_full = system.enumeration.centered_slice(len(system.enumeration))
    lam_ctl, dup1 = apply_frequency_control(lam_full, control)
    trend_1d = riesz_trend(lam_ctl, scn.orders, k=scn.k, allow_duplicates=dup1)
    pts_ctl, dupd = apply_frequency_control(system.points.points, control)
    trend_dd = riesz_trend(pts_ctl, scn.orders, region=system.region_translated,
                           allow_duplicates=dupd)
    duality = duality_cross_check(
        system.enumeration, system.points, system.region_translated,
        scn.duality_order,
    )
    fuglede = None
    if scn.k == 1:
        order = max(scn.orders)
        grid = integer_frequency_grid(scn.dim, order)
        gram = gram_dd(grid, system.region_translated)
        rep = frame_bounds(gram)
        off = gram.entries.copy()
        np.fill_diagonal(off, 0.0)
        fuglede = {
            "order": order,
            "max_offdiagonal": float(np.abs(off).max()),
            "condition_number": rep.condition_number,
        }
    collapse = any(
        r.lambda_min <= RANK_COLLAPSE_TOL
        for r in trend_1d.reports + trend_dd.reports
    )
    return FrameStageResult(trend_1d=trend_1d, trend_dd=trend_dd,
                            duality=duality, fuglede=fuglede,
                            rank_collapse=collapse)


# ---------------------------------------------------------------- writers

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj == math.inf else "-inf" if obj == -math.inf else "nan"
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2)
        fh.write("\n")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


@dataclass
class RunManifest:
    scenario_digest: str
    tool_version: str
    seed: int
    stages: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def record(self, stage, status):
        self.stages.append({"name": stage, "status": status})

    def add_output(self, path):
        self.outputs.append(path)

    def to_json_dict(self):
        return {
            "scenario_digest": self.scenario_digest,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "stages": self.stages,
            "outputs": sorted(self.outputs),
        }


def write_points_artifacts(out_dir, system, manifest):
    pts = system.points.points
    header = [f"x{i}" for i in range(pts.shape[1])]
    write_csv(os.path.join(out_dir, "lambda_points.csv"), header, pts)
    manifest.add_output("lambda_points.csv")
    write_json(os.path.join(out_dir, "lambda_points.json"),
               {"points": pts, "window_radius": float(system.points.window[1][0])})
    manifest.add_output("lambda_points.json")
    if system.pullback is not None:
        mapped = pts @ system.pullback.T
        write_csv(os.path.join(out_dir, "lambda_points_original_lattice.csv"),
                  header, mapped)
        manifest.add_output("lambda_points_original_lattice.csv")
    enum = system.enumeration
    rows = zip(enum.j, enum.n, enum.lam, enum.delta)
    write_csv(os.path.join(out_dir, "enumeration.csv"),
              ["j", "n", "lambda", "delta"], rows)
    manifest.add_output("enumeration.csv")
    write_json(os.path.join(out_dir, "enumeration.json"), {
        "k": enum.k,
        "n_min": enum.n_min,
        "n_max": enum.n_max,
        "entries": [
            {"j": int(j), "n": int(n), "lambda": float(l), "delta": float(d)}
            for j, n, l, d in zip(enum.j, enum.n, enum.lam, enum.delta)
        ],
    })
    manifest.add_output("enumeration.json")


def write_avdonin_artifacts(out_dir, report, manifest, status):
    write_json(os.path.join(out_dir, "avdonin_report.json"),
               dict(report.to_json_dict(), status=status))
    manifest.add_output("avdonin_report.json")
    write_csv(os.path.join(out_dir, "deviation.csv"),
              ["N", "deviation", "threshold"],
              [(n, v, report.threshold) for n, v in report.deviations])
    manifest.add_output("deviation.csv")


def write_frame_artifacts(out_dir, frame: FrameStageResult, manifest):
    rows = []
    for label, trend in (("interval", frame.trend_1d), ("region", frame.trend_dd)):
        for rep in trend.reports:
            rows.append((label, rep.order, rep.lambda_min, rep.lambda_max,
                         rep.condition_number))
    with open(os.path.join(out_dir, "frame_trend.csv"), "w", encoding="utf-8") as fh:
        fh.write("system,order,lambda_min,lambda_max,condition\n")
        for label, order, lmin, lmax, cond in rows:
            fh.write(f"{label},{order},{_fmt(lmin)},{_fmt(lmax)},{_fmt(cond)}\n")
    manifest.add_output("frame_trend.csv")
    doc = {
        "interval_trend": frame.trend_1d.to_json_dict(),
        "region_trend": frame.trend_dd.to_json_dict(),
        "duality": frame.duality.to_json_dict(),
        "rank_collapse": frame.rank_collapse,
    }
    if frame.fuglede is not None:
        doc["fuglede_control"] = frame.fuglede
    write_json(os.path.join(out_dir, "frame_reports.json"), doc)
    manifest.add_output("frame_reports.json")


def scenario_out_dir(out_root, scn: Scenario) -> str:
    path = os.path.join(out_root, scn.name)
    os.makedirs(path, exist_ok=True)
    return path


def run_demo(scn: Scenario, out_root, seed=None) -> RunManifest:
    """Full pipeline for one scenario; writes all artifacts and a manifest."""
    seed = scn.seed if seed is None else int(seed)
    out_dir = scenario_out_dir(out_root, scn)
    manifest = RunManifest(scenario_digest=scn.digest(),
                           tool_version=__version__, seed=seed)
    region = build_region(scn)
    lattice = build_lattice(scn)
    tiling = verify_multitiling(region, lattice, scn.k, TILING_SAMPLES,
                                stage_seed(seed, "verify"))
    write_json(os.path.join(out_dir, "tiling_report.json"), tiling.to_json_dict())
    manifest.add_output("tiling_report.json")
    if not tiling.consistent:
        manifest.record("check_tiling", "failed:multiplicity mismatch")
        _finish(out_dir, manifest)
        raise QuasibasisError(f"tiling check failed for scenario {scn.name}")
    manifest.record("check_tiling", "ok")

    system = prepare_system(scn, seed=seed, tiling_report=tiling)
    manifest.record("generate", "ok")
    write_points_artifacts(out_dir, system, manifest)

    enum_ctl = apply_enum_control(system.enumeration, scn.control)
    try:
        report = check_conditions(enum_ctl, system.region_translated,
                                  system.params, n_grid=scn.deviation_grid)
        manifest.record("avdonin", "ok")
        write_avdonin_artifacts(out_dir, report, manifest, "ok")
        avdonin_ok = True
    except ConditionFailure as exc:
        manifest.record("avdonin", f"failed:{type(exc).__name__}")
        if exc.report is not None:
            write_avdonin_artifacts(out_dir, exc.report, manifest,
                                    f"failed:{type(exc).__name__}")
        avdonin_ok = False

    frame = run_frame_stage(system)
    write_frame_artifacts(out_dir, frame, manifest)
    manifest.record("frame", "failed:rank collapse" if frame.rank_collapse else "ok")

    residual = block_sum_identity_check(
        system.enumeration, system.region_translated, system.params,
        min(1000, scn.n_range),
    )
    write_json(os.path.join(out_dir, "block_identity.json"),
               {"r_range": min(1000, scn.n_range), "max_residual": residual})
    manifest.add_output("block_identity.json")
    manifest.record("block_identity", "ok" if residual <= 1e-9 else "failed:residual")

    _finish(out_dir, manifest)
    if not avdonin_ok or frame.rank_collapse or residual > 1e-9:
        raise QuasibasisError(f"pipeline stage failed for scenario {scn.name}")
    return manifest


def _finish(out_dir, manifest):
    write_json(os.path.join(out_dir, "manifest.json"), manifest.to_json_dict())
