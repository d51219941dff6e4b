"""Scenario documents: schema validation, canonical form, bundled demos."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

from .errors import ScenarioError

SCHEMA_VERSION = 1
BUNDLED_NAMES = ("cube", "two-intervals", "four-squares", "commensurable-intervals")

_TOP_KEYS = {
    "version", "name", "dim", "k", "boxes", "lattice_basis", "seed",
    "params", "window_radius", "n_range", "orders", "deviation_grid",
    "duality_order", "control",
}
_REQUIRED = ("version", "name", "dim", "k", "boxes", "lattice_basis", "seed")
_CONTROL_KINDS = ("none", "delete_fraction", "duplicate", "perturb")


@dataclass
class Control:
    kind: str = "none"
    fraction: float = 0.0
    magnitude: float = 0.0

    def to_json_dict(self):
        out = {"kind": self.kind}
        if self.kind == "delete_fraction":
            out["fraction"] = self.fraction
        if self.kind == "perturb":
            out["magnitude"] = self.magnitude
        return out


@dataclass
class Scenario:
    """Validated scenario: region, lattice, parameters, run sizes, control."""

    name: str
    dim: int
    k: int
    boxes: list
    lattice_basis: list
    seed: int
    params_mode: str = "default"
    beta_scale: float = 0.25
    alpha: list | None = None
    beta: list | None = None
    window_radius: float | None = None
    n_range: int = 15500
    orders: list = field(default_factory=lambda: [64, 128, 256, 512])
    deviation_grid: list = field(default_factory=lambda: [10, 100, 1000, 10000])
    duality_order: int = 256
    control: Control = field(default_factory=Control)

    def canonical_dict(self):
        params = {"mode": self.params_mode}
        if self.params_mode == "default":
            params["beta_scale"] = self.beta_scale
        else:
            params["alpha"] = self.alpha
            params["beta"] = self.beta
        return {
            "version": SCHEMA_VERSION,
            "name": self.name,
            "dim": self.dim,
            "k": self.k,
            "boxes": self.boxes,
            "lattice_basis": self.lattice_basis,
            "seed": self.seed,
            "params": params,
            "window_radius": self.window_radius,
            "n_range": self.n_range,
            "orders": self.orders,
            "deviation_grid": self.deviation_grid,
            "duality_order": self.duality_order,
            "control": self.control.to_json_dict(),
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _expect(cond, msg):
    if not cond:
        raise ScenarioError(msg)


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def parse_scenario(doc) -> Scenario:
    """Validate a scenario dictionary; unknown fields are rejected."""
    _expect(isinstance(doc, dict), "scenario document must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    _expect(not unknown, f"unknown scenario fields: {sorted(unknown)}")
    for key in _REQUIRED:
        _expect(key in doc, f"missing required field '{key}'")
    _expect(doc["version"] == SCHEMA_VERSION,
            f"unsupported schema version {doc['version']!r}")
    name = doc["name"]
    _expect(isinstance(name, str) and name, "name must be a nonempty string")
    dim = doc["dim"]
    _expect(isinstance(dim, int) and dim >= 1, "dim must be an integer >= 1")
    k = doc["k"]
    _expect(isinstance(k, int) and k >= 1, "k must be an integer >= 1")
    seed = doc["seed"]
    _expect(isinstance(seed, int) and seed >= 0, "seed must be a nonnegative integer")

    boxes = doc["boxes"]
    _expect(isinstance(boxes, list) and boxes, "boxes must be a nonempty list")
    for b in boxes:
        _expect(isinstance(b, list) and len(b) == 2, "each box is a [lo, hi] pair")
        for side in b:
            _expect(isinstance(side, list) and len(side) == dim
                    and all(_is_num(v) for v in side),
                    f"box corners must be length-{dim} number lists")
    basis = doc["lattice_basis"]
    _expect(isinstance(basis, list) and len(basis) == dim
            and all(isinstance(r, list) and len(r) == dim
                    and all(_is_num(v) for v in r) for r in basis),
            f"lattice_basis must be a {dim}x{dim} number matrix")

    scn = Scenario(name=name, dim=dim, k=k, boxes=boxes,
                   lattice_basis=basis, seed=seed)

    params = doc.get("params", {"mode": "default"})
    _expect(isinstance(params, dict), "params must be an object")
    mode = params.get("mode", "default")
    if mode == "default":
        _expect(set(params) <= {"mode", "beta_scale"},
                "default params accept only 'mode' and 'beta_scale'")
        scale = params.get("beta_scale", 0.25)
        _expect(_is_num(scale) and 0 < scale <= 0.25,
                "beta_scale must lie in (0, 0.25]")
        scn.params_mode = "default"
        scn.beta_scale = float(scale)
    elif mode == "explicit":
        _expect(set(params) <= {"mode", "alpha", "beta"},
                "explicit params accept only 'mode', 'alpha', 'beta'")
        for key in ("alpha", "beta"):
            v = params.get(key)
            _expect(isinstance(v, list) and len(v) == dim
                    and all(_is_num(x) for x in v),
                    f"params.{key} must be a length-{dim} number list")
        scn.params_mode = "explicit"
        scn.alpha = [float(v) for v in params["alpha"]]
        scn.beta = [float(v) for v in params["beta"]]
    else:
        raise ScenarioError(f"params.mode must be 'default' or 'explicit', got {mode!r}")

    if "window_radius" in doc and doc["window_radius"] is not None:
        _expect(_is_num(doc["window_radius"]) and doc["window_radius"] >= 0,
                "window_radius must be a nonnegative number")
        scn.window_radius = float(doc["window_radius"])
    if "n_range" in doc:
        _expect(isinstance(doc["n_range"], int) and doc["n_range"] >= 1,
                "n_range must be an integer >= 1")
        scn.n_range = doc["n_range"]
    if "orders" in doc:
        orders = doc["orders"]
        _expect(isinstance(orders, list) and orders
                and all(isinstance(o, int) and o >= 1 for o in orders)
                and orders == sorted(orders),
                "orders must be an ascending list of positive integers")
        scn.orders = list(orders)
    if "deviation_grid" in doc:
        grid = doc["deviation_grid"]
        _expect(isinstance(grid, list) and grid
                and all(isinstance(n, int) and n >= 1 for n in grid)
                and grid == sorted(grid),
                "deviation_grid must be an ascending list of positive integers")
        scn.deviation_grid = list(grid)
    if "duality_order" in doc:
        _expect(isinstance(doc["duality_order"], int) and doc["duality_order"] >= 1,
                "duality_order must be a positive integer")
        scn.duality_order = doc["duality_order"]

    control = doc.get("control", {"kind": "none"})
    _expect(isinstance(control, dict), "control must be an object")
    kind = control.get("kind", "none")
    _expect(kind in _CONTROL_KINDS, f"control.kind must be one of {_CONTROL_KINDS}")
    if kind == "delete_fraction":
        _expect(set(control) <= {"kind", "fraction"}, "unknown control fields")
        frac = control.get("fraction", 0.1)
        _expect(_is_num(frac) and 0 < frac < 1, "fraction must lie in (0, 1)")
        scn.control = Control(kind=kind, fraction=float(frac))
    elif kind == "perturb":
        _expect(set(control) <= {"kind", "magnitude"}, "unknown control fields")
        mag = control.get("magnitude", 0.0)
        _expect(_is_num(mag) and mag >= 0, "magnitude must be nonnegative")
        scn.control = Control(kind=kind, magnitude=float(mag))
    else:
        _expect(set(control) <= {"kind"}, "unknown control fields")
        scn.control = Control(kind=kind)
    return scn


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file is not valid JSON: {exc}") from exc
    return parse_scenario(doc)


def load_bundled(name) -> Scenario:
    if name not in BUNDLED_NAMES:
        raise ScenarioError(
            f"unknown demo {name!r}; bundled scenarios: {', '.join(BUNDLED_NAMES)}"
        )
    ref = resources.files("quasibasis.scenarios").joinpath(f"{name}.json")
    return parse_scenario(json.loads(ref.read_text(encoding="utf-8")))
