"""Scenario schema, validation and the bundled example scenarios."""

from __future__ import annotations

import copy
import json

import numpy as np

from .family import FamilyChart, FamilyGenerator
from .geometry import TorusGeometry


class ScenarioError(ValueError):
    """Raised for schema violations; mapped to exit code 2 by the CLI."""


ALL_TASKS = ("hym", "pw-metric", "pw-curvature", "sigma", "fiber-integral",
             "hyperkahler", "verify")

DEFAULT_SOLVER = {
    "tol_hym": 1e-11,
    "tol_harm": 1e-7,
    "max_steps": 4000,
    "cg_tol": 1e-11,
}


def _as_complex(entry):
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(entry[0], entry[1])
    raise ScenarioError(f"expected number or [re, im] pair, got {entry!r}")


def _complex_matrix(rows, shape=None):
    M = np.array([[_as_complex(e) for e in row] for row in rows])
    if shape is not None and M.shape != shape:
        raise ScenarioError(f"matrix shape {M.shape} != {shape}")
    return M


def validate(raw):
    """Validate a raw scenario dict; returns a normalised copy."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be an object")
    if raw.get("schema_version") != 1:
        raise ScenarioError("schema_version must be 1")
    for key in ("name", "geometry", "bundle", "family", "tasks"):
        if key not in raw:
            raise ScenarioError(f"missing scenario key {key!r}")
    geo = raw["geometry"]
    n = geo.get("complex_dim")
    if n not in (1, 2):
        raise ScenarioError("geometry.complex_dim must be 1 or 2")
    periods = geo.get("periods")
    if not isinstance(periods, list) or len(periods) != n:
        raise ScenarioError("geometry.periods must list one [L, M] per direction")
    for LM in periods:
        if len(LM) != 2 or LM[0] <= 0 or LM[1] <= 0:
            raise ScenarioError("periods must be positive [L, M] pairs")
    N = geo.get("grid")
    if not isinstance(N, int) or N < 4 or (N & (N - 1)):
        raise ScenarioError("geometry.grid must be a power of two >= 4")
    bundle = raw["bundle"]
    r = bundle.get("rank")
    if not isinstance(r, int) or r < 1:
        raise ScenarioError("bundle.rank must be a positive integer")
    fam = raw["family"]
    m = fam.get("base_dim")
    if not isinstance(m, int) or m < 1:
        raise ScenarioError("family.base_dim must be a positive integer")
    if not isinstance(fam.get("terms"), list):
        raise ScenarioError("family.terms must be a list")
    step = fam.get("step", 1e-2)
    if not (0 < step < 1):
        raise ScenarioError("family.step must be in (0, 1)")
    solver = dict(DEFAULT_SOLVER)
    solver.update(raw.get("solver", {}))
    for key, val in solver.items():
        if key in ("tol_hym", "tol_harm", "cg_tol") and not (
                isinstance(val, (int, float)) and val > 0):
            raise ScenarioError(f"solver.{key} must be positive")
    if not isinstance(solver["max_steps"], int) or solver["max_steps"] < 1:
        raise ScenarioError("solver.max_steps must be a positive integer")
    tasks = raw["tasks"]
    if not isinstance(tasks, list) or not tasks:
        raise ScenarioError("tasks must be a non-empty list")
    for t in tasks:
        if t not in ALL_TASKS:
            raise ScenarioError(f"unknown task {t!r}")
    out = copy.deepcopy(raw)
    out["solver"] = solver
    out.setdefault("seed", 20260809)
    return out


def build_chart(scn) -> FamilyChart:
    """Construct the solved-family machinery of a validated scenario."""
    geo = scn["geometry"]
    metric = _complex_matrix(geo["metric"])
    geom = TorusGeometry(geo["complex_dim"],
                         [tuple(p) for p in geo["periods"]],
                         metric, geo["grid"])
    bundle = scn["bundle"]
    r = bundle["rank"]
    twist = bundle.get("twist")
    if twist is not None:
        twist = np.asarray(twist, dtype=float)
    K = bundle.get("scalar_curvature")
    if K is not None:
        K = _complex_matrix(K, (geom.n, geom.n))
    fam = scn["family"]
    terms = []
    for t in fam["terms"]:
        term = {
            "kind": t["kind"],
            "direction": t["direction"],
            "powers": tuple(t["powers"]),
            "matrix": _complex_matrix(t["matrix"], (r, r)),
        }
        if t.get("fourier"):
            term["fourier"] = [(tuple(kv), _as_complex(c))
                               for kv, c in t["fourier"]]
        terms.append(term)
    gen = FamilyGenerator(geom, r, fam["base_dim"], terms)
    center = [_as_complex(c) for c in fam.get("center",
                                              [0.0] * fam["base_dim"])]
    solver = scn["solver"]
    return FamilyChart(geom, r, gen, center=center, step=fam.get("step", 1e-2),
                       tol_hym=solver["tol_hym"],
                       max_steps=solver["max_steps"], twist=twist,
                       scalar_curvature=K, cg_tol=solver["cg_tol"])


# -- bundled scenarios -------------------------------------------------------------

_D = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]


def _scale_D(c):
    return [[[c, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-c, 0.0]]]


_PROFILE = [[[0, 0], [1.0, 0.0]], [[1, 0], [0.4, 0.0]], [[-1, 0], [0.25, 0.0]],
            [[0, 1], [0.0, 0.3]], [[1, -1], [0.15, 0.0]]]

BUILTIN = {}

BUILTIN["rank1-tstar-jacobian"] = {
    "schema_version": 1,
    "name": "rank1-tstar-jacobian",
    "description": "Flat mixed chart on the cotangent space of the Jacobian:"
                   " one bundle direction, one Higgs direction, rank 1.",
    "geometry": {"complex_dim": 1, "periods": [[1.0, 0.5]],
                 "metric": [[1.0]], "grid": 32},
    "bundle": {"rank": 1},
    "family": {
        "base_dim": 2,
        "center": [[0.0, 0.0], [0.0, 0.0]],
        "step": 1e-2,
        "terms": [
            {"kind": "A", "direction": 0, "powers": [1, 0],
             "matrix": [[[-1.0, 0.0]]]},
            {"kind": "phi", "direction": 0, "powers": [0, 1],
             "matrix": [[[1.0, 0.0]]]},
        ],
    },
    "tasks": ["hym", "pw-metric", "pw-curvature", "sigma", "fiber-integral",
              "hyperkahler", "verify"],
    "seed": 20260809,
}

BUILTIN["rank2-normal-n1"] = {
    "schema_version": 1,
    "name": "rank2-normal-n1",
    "description": "Rank-2 diagonal (normal) family with an x-dependent"
                   " bundle profile and nonlinear parameter dependence.",
    "geometry": {"complex_dim": 1, "periods": [[1.0, 0.5]],
                 "metric": [[1.0]], "grid": 32},
    "bundle": {"rank": 2},
    "family": {
        "base_dim": 2,
        "center": [[0.4, 0.0], [0.3, 0.0]],
        "step": 5e-2,
        "terms": (
            [{"kind": "phi", "direction": 0, "powers": list(p),
              "matrix": _scale_D(c)}
             for p, c in [((1, 0), 1.0), ((2, 0), 0.3), ((1, 1), 0.2),
                          ((3, 0), 0.15), ((4, 0), 0.1), ((2, 2), 0.12),
                          ((1, 3), 0.1), ((1, 5), 0.08)]]
            + [{"kind": "A", "direction": 0, "powers": list(p),
                "matrix": _scale_D(c), "fourier": _PROFILE}
               for p, c in [((0, 1), 1.0), ((0, 2), 0.25), ((1, 1), 0.1),
                            ((0, 3), 0.2), ((0, 4), 0.1), ((2, 1), 0.15),
                            ((3, 1), 0.1), ((5, 1), 0.06)]]
        ),
    },
    "tasks": ["hym", "pw-metric", "pw-curvature", "sigma", "fiber-integral",
              "hyperkahler", "verify"],
    "seed": 20260809,
}

BUILTIN["rank1-twisted-deg1"] = {
    "schema_version": 1,
    "name": "rank1-twisted-deg1",
    "description": "Degree-one line bundle (constant scalar curvature"
                   " twist): nonzero slope, pure Higgs family along the"
                   " fibre of the forgetful retraction.",
    "geometry": {"complex_dim": 1, "periods": [[1.0, 0.5]],
                 "metric": [[1.0]], "grid": 32},
    "bundle": {"rank": 1,
               "scalar_curvature": [[[6.283185307179586, 0.0]]]},
    "family": {
        "base_dim": 1,
        "center": [[0.2, 0.0]],
        "step": 1e-2,
        "terms": [
            {"kind": "phi", "direction": 0, "powers": [1],
             "matrix": [[[1.0, 0.0]]]},
            {"kind": "phi", "direction": 0, "powers": [2],
             "matrix": [[[0.4, 0.0]]]},
        ],
    },
    "tasks": ["hym", "pw-metric", "sigma", "hyperkahler", "verify"],
    "seed": 20260809,
}

BUILTIN["rank1-n2"] = {
    "schema_version": 1,
    "name": "rank1-n2",
    "description": "Two-dimensional torus base at desk scale: rank 1,"
                   " one mixed family direction.",
    "geometry": {"complex_dim": 2,
                 "periods": [[1.0, 0.7], [0.9, 1.1]],
                 "metric": [[[1.3, 0.0], [0.2, 0.1]],
                            [[0.2, -0.1], [0.9, 0.0]]],
                 "grid": 16},
    "bundle": {"rank": 1},
    "family": {
        "base_dim": 1,
        "center": [[0.1, 0.0]],
        "step": 1e-2,
        "terms": [
            {"kind": "phi", "direction": 0, "powers": [1],
             "matrix": [[[1.0, 0.0]]]},
            {"kind": "phi", "direction": 1, "powers": [1],
             "matrix": [[[0.5, 0.2]]]},
            {"kind": "A", "direction": 0, "powers": [1],
             "matrix": [[[-0.4, 0.0]]]},
        ],
    },
    "tasks": ["hym", "pw-metric", "sigma", "verify"],
    "seed": 20260809,
}


def load(name_or_path):
    """Load a scenario by builtin name or JSON file path."""
    if name_or_path in BUILTIN:
        return validate(BUILTIN[name_or_path])
    try:
        with open(name_or_path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"unknown scenario {name_or_path!r}")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid scenario JSON: {exc}")
    return validate(raw)
