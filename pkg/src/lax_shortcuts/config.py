"""Scenario configuration: defaults, strict schema validation and physics prechecks."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

SCENARIOS = ("kdv_transport", "kdv_certify", "toda_n3", "toda_soliton", "spin_spectrum",
             "spin_transfer", "inverse_engineering", "nonisospectral", "verify_all")

_DEMO = {"kappas": [1.2, 1.0], "amps": [3.0, 3.0]}

DEFAULTS = {
    "kdv_transport": {**_DEMO, "grid": {"x_min": -40.0, "x_max": 40.0, "n_points": 1024},
                      "t_window": [-2.0, 2.0], "dt": 1e-4, "convention": "shifted", "record_every": 0.01,
                      "snapshot_times": [-2.0, -1.0, 0.0, 1.0, 2.0]},
    "kdv_certify": {**_DEMO, "grid": {"x_min": -20.0, "x_max": 20.0, "n_points": 512}, "t_sample": 0.3,
                    "eps": 1e-4, "n_random": 10000, "kappa5": 1.0},
    "toda_n3": {"v1": 1.0, "v2": 2.0, "t_window": [0.0, 5.0], "dt": 1e-3, "record_every": 10},
    "toda_soliton": {"n_sites": 60, "kappa": 1.0, "c0": 1.0, "first_site": -30,
                     "times": [-4.0, -2.0, 0.0, 2.0, 4.0], "dt": 1e-3},
    "spin_spectrum": {"n_sites": 100, "kappa": 2.0, "c0": 1.0, "first_site": -50,
                      "times": [-5.0, 0.0, 5.0], "lift_check_sites": 10},
    "spin_transfer": {"n_sites": 40, "kappa": 1.0, "c0": 1.0, "first_site": -20, "t_window": [-5.0, 5.0],
                      "dt": 0.01, "compression": 10.0, "oracle_sites": 5},
    "inverse_engineering": {"v1": 1.0, "v2": 2.0, "tau": 1.0, "k": 1.0, "mu": 1.0, "n_samples": 9},
    "nonisospectral": {"gamma": {"kind": "linear", "rate": 0.1},
                       "grid": {"x_min": -20.0, "x_max": 20.0, "n_points": 512}, "t_window": [0.0, 5.0],
                       "n_samples": 6, "n_levels": 3, **_DEMO},
    "verify_all": {"suites": ["kdv_certify", "toda_n3", "toda_soliton", "spin_spectrum", "spin_transfer",
                              "inverse_engineering", "nonisospectral", "kdv_transport"],
                   "quick": False},
}
for _p in DEFAULTS.values():
    _p.setdefault("tolerances", {})
    _p.setdefault("seed", 0)


def load_schema() -> dict:
    text = resources.files("lax_shortcuts").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


@dataclass
class ScenarioConfig:
    scenario: str
    params: dict = field(default_factory=dict)
    outputs: str = "out"
    formats: tuple = ("csv", "json")

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        """Defaults merged under the raw params; call :func:`validate` first."""
        params = merge(DEFAULTS[raw["scenario"]], raw.get("params", {}))
        return cls(raw["scenario"], params, raw.get("outputs", "out"), tuple(raw.get("formats", ("csv", "json"))))

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "params": self.params, "outputs": self.outputs,
                "formats": list(self.formats)}


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _path(parts) -> str:
    return "/" + "/".join(str(p) for p in parts)


def validate(raw) -> list:
    """Schema violations and physics precondition failures as ``{"path", "message"}`` dicts."""
    validator = jsonschema.Draft202012Validator(load_schema())
    diags = [{"path": _path(e.absolute_path), "message": e.message}
             for e in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))]
    if diags or not isinstance(raw, dict):
        return diags
    params = merge(DEFAULTS[raw["scenario"]], raw.get("params", {}))
    return [{"path": "/params" + p, "message": m} for p, m in _semantic(raw["scenario"], params)]


def _grid_issues(grid, prefix="/grid"):
    if not grid["x_max"] > grid["x_min"]:
        yield prefix, "x_max must exceed x_min"


def _window_issues(w, key="/t_window"):
    if not w[1] > w[0]:
        yield key, "window end must exceed its start"


def _semantic(scenario: str, p: dict):
    if "kappas" in p and p["kappas"][0] == p["kappas"][1]:
        yield "/kappas", "degenerate double soliton: kappa1 == kappa2"
    if "grid" in p:
        yield from _grid_issues(p["grid"])
    if "t_window" in p:
        yield from _window_issues(p["t_window"])
    if scenario == "kdv_transport":
        g = p["grid"]
        if g["x_max"] > g["x_min"]:
            kmax = np.pi * g["n_points"] / (g["x_max"] - g["x_min"])
            if p["dt"] * kmax ** 2 >= 0.5:
                yield "/dt", f"dt * k_max^2 = {p['dt'] * kmax ** 2:.3f} must stay below 0.5"
        t0, t1 = p["t_window"]
        for i, ts in enumerate(p["snapshot_times"]):
            if not t0 <= ts <= t1:
                yield f"/snapshot_times/{i}", "snapshot time outside the window"
        if p["record_every"] < p["dt"]:
            yield "/record_every", "record_every must be at least dt"
    if scenario in ("toda_soliton", "spin_spectrum", "spin_transfer"):
        if p["n_sites"] < 8:
            yield "/n_sites", "soliton chains need at least 8 sites to relax at the ends"
    if scenario == "nonisospectral":
        kind, rate = p["gamma"]["kind"], p["gamma"].get("rate", 0.0)
        if kind == "linear":
            for t in p["t_window"]:
                if not 1 + rate * t > 0:
                    yield "/gamma/rate", f"gamma(t) = 1 + rate t is not positive at t = {t}"
    if scenario == "verify_all" and not p["suites"]:
        yield "/suites", "at least one suite is required"
