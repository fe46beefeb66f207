"""Scenario execution: configs in, trajectories / verdicts / CSVs out.

Everything here is deterministic for a fixed config and seed: initial data
derive from the seed through a splittable generator, the integrator is
fixed-step, and CSV floats are printed with 17 significant digits, so two
runs of the same scenario produce byte-identical files.

Sweeps grid over one or two dotted config paths (e.g. ``couplings.00`` or
``init.spread``) and emit a long-form CSV with one verdict row per cell.
Cells can run in parallel processes (LOHELAB_THREADS); rows are gathered
and written in grid order by the single parent process.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import diagnostics, dynamics, lowrank, serialize
from .config import CheckResult, ConfigError, RunVerdict, ScenarioConfig
from .freeflow import DEFAULT_SSP_TIMES, FreeFlowOp, split_verify, ssp_check
from .state import CouplingSet, EnsembleState, SimParams

__all__ = [
    "build_free_flow",
    "build_initial_state",
    "build_params",
    "run_simulation",
    "run_ssp",
    "run_reduce_compare",
    "run_sweep",
    "parse_axis",
    "REDUCE_PRESETS",
    "MONOTONICITY_TOL",
]

MONOTONICITY_TOL = 1e-9
THREAD_ENV_VAR = "LOHELAB_THREADS"


def _load_matrix_spec(spec: dict, base_dir: Optional[Path], fld: str) -> np.ndarray:
    if "file" in spec:
        path = Path(spec["file"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        try:
            return serialize.load_matrix(path)
        except FileNotFoundError:
            raise ConfigError(fld, f"matrix file not found: {path}") from None
    return np.asarray(spec["value"], dtype=np.complex128)


def build_free_flow(cfg: ScenarioConfig, base_dir: Optional[Path] = None) -> Optional[FreeFlowOp]:
    spec = cfg.free_flow_dict
    kind = spec.get("kind", "none")
    if kind == "none":
        return None
    if kind == "kuramoto":
        if cfg.dims != ():
            raise ConfigError("free_flow", "kuramoto flow needs rank-0 dims")
        return FreeFlowOp.kuramoto(spec["nu"])
    mat = _load_matrix_spec(spec, base_dir, "free_flow")
    if kind == "sphere":
        if len(cfg.dims) != 1:
            raise ConfigError("free_flow", "sphere flow needs rank-1 dims")
        if np.abs(mat.imag).max(initial=0.0) > 1e-12:
            raise ConfigError("free_flow", "sphere generator must be real")
        return FreeFlowOp.sphere(mat.real)
    if kind == "matrix":
        if len(cfg.dims) != 2 or cfg.dims[0] != cfg.dims[1]:
            raise ConfigError("free_flow", "matrix flow needs square rank-2 dims")
        return FreeFlowOp.matrix(mat)
    return FreeFlowOp.from_matrix(cfg.dims, mat)


def build_initial_state(cfg: ScenarioConfig, base_dir: Optional[Path] = None) -> EnsembleState:
    spec = cfg.init_dict
    kind = spec["kind"]
    if kind == "random":
        return dynamics.random_ensemble(cfg.dims, cfg.n_members, cfg.seed)
    if kind == "clustered":
        return dynamics.clustered_ensemble(
            cfg.dims,
            cfg.n_members,
            cfg.seed,
            spread=spec.get("spread"),
            diameter=spec.get("diameter"),
        )
    if kind == "bipolar":
        return dynamics.bipolar_ensemble(cfg.dims, cfg.n_members, spec["n_plus"], cfg.seed)
    path = Path(spec["path"])
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    with open(path, encoding="utf-8") as fh:
        tensors = serialize.ensemble_from_dict(json.load(fh))
    if len(tensors) != cfg.n_members:
        raise ConfigError("init.path", f"file holds {len(tensors)} members, config wants {cfg.n_members}")
    return EnsembleState.from_tensors(tensors)


def build_params(cfg: ScenarioConfig, free_flow: Optional[FreeFlowOp]) -> SimParams:
    return SimParams(
        couplings=CouplingSet.from_strings(dict(cfg.couplings), rank=len(cfg.dims)),
        dt=cfg.dt,
        horizon=cfg.horizon,
        free_flow=free_flow,
        renormalize=cfg.renormalize,
        drift_tolerance=cfg.drift_tolerance,
        sample_stride=cfg.sample_stride,
    )


def run_simulation(
    cfg: ScenarioConfig,
    out_dir=None,
    base_dir: Optional[Path] = None,
    seed_override: Optional[int] = None,
) -> tuple[RunVerdict, dynamics.Trajectory]:
    """Simulate one scenario, write its CSV + verdict JSON, return both."""
    if seed_override is not None:
        cfg = cfg.replace(seed=seed_override)
    flow = build_free_flow(cfg, base_dir)
    state = build_initial_state(cfg, base_dir)
    params = build_params(cfg, flow)
    traj = dynamics.simulate(state, params)
    diagnostics.fill_dissipation_residuals(traj.records)

    checks = cfg.checks_dict
    verdict = RunVerdict(scenario_id=cfg.scenario_id)
    if checks.get("conservation", True):
        verdict.checks["conservation"] = CheckResult(
            passed=traj.max_norm_drift <= cfg.drift_tolerance,
            measured=traj.max_norm_drift,
            threshold=cfg.drift_tolerance,
        )
    if checks.get("monotonicity", True) and params.couplings.nonnegative:
        increases = [
            b.variance - a.variance for a, b in zip(traj.records, traj.records[1:])
        ]
        worst = max(increases) if increases else 0.0
        verdict.checks["monotonicity"] = CheckResult(
            passed=worst <= MONOTONICITY_TOL, measured=worst, threshold=MONOTONICITY_TOL
        )
    if checks.get("classify", False):
        pole = diagnostics.classify_poles(traj.final)
        expected = checks.get("expect_verdict")
        passed = pole.verdict == expected if expected else pole.verdict != "UNRESOLVED"
        verdict.classification = {
            "verdict": pole.verdict,
            "passed": passed,
            "a": [int(x) for x in pole.a],
            "residual_max": float(pole.residuals.max()),
            "r_final": pole.r_final,
            "r_from_signs": pole.r_from_signs,
            "r_gap": pole.r_gap,
        }
    decay_spec = checks.get("decay_fit")
    if decay_spec:
        slope = diagnostics.decay_rate_fit(traj.records, decay_spec.get("t_start", 0.0))
        max_slope = decay_spec.get("max_slope")
        verdict.decay = {
            "slope": slope,
            "max_slope": max_slope,
            "passed": True if max_slope is None else slope <= max_slope,
        }

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        words = [w for w, _ in params.couplings.active()]
        diagnostics.write_records_csv(out_dir / f"{cfg.scenario_id}.csv", traj.records, words)
        (out_dir / f"{cfg.scenario_id}.verdict.json").write_text(
            verdict.to_json() + "\n", encoding="utf-8"
        )
    return verdict, traj


def run_ssp(
    cfg: ScenarioConfig,
    out_dir=None,
    base_dir: Optional[Path] = None,
) -> dict:
    """Splitting check (and optional trajectory verification) for the
    configured flow and couplings; returns the JSON-ready report."""
    flow = build_free_flow(cfg, base_dir)
    if flow is None:
        raise ConfigError("free_flow", "the splitting check needs a nontrivial free flow")
    spec = cfg.ssp_dict or {}
    times = spec.get("times", list(DEFAULT_SSP_TIMES))
    tol = spec.get("tol", 1e-10)
    couplings = CouplingSet.from_strings(dict(cfg.couplings), rank=len(cfg.dims))
    reports = ssp_check(flow, couplings, times=times, tol=tol)
    out = {
        "scenario_id": cfg.scenario_id,
        "tol": tol,
        "times": [float(t) for t in times],
        "couplings": {},
        "all_passed": all(r.passed for r in reports.values()),
    }
    for word, rep in sorted(reports.items()):
        key = "".join(str(b) for b in word)
        out["couplings"][key] = {
            "passed": rep.passed,
            "max_residual": rep.max_residual,
            "residual_by_time": {repr(t): v for t, v in rep.residual_by_time.items()},
        }
    if spec.get("split_verify", False):
        state = build_initial_state(cfg, base_dir)
        deviation = split_verify(
            flow,
            couplings,
            state,
            horizon=spec.get("split_horizon", 10.0),
            dt=spec.get("split_dt", 1e-3),
        )
        threshold = spec.get("split_tolerance", 1e-6)
        out["split_verify"] = {
            "deviation": deviation,
            "threshold": threshold,
            "passed": deviation <= threshold,
        }
        out["all_passed"] = out["all_passed"] and out["split_verify"]["passed"]
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{cfg.scenario_id}.ssp.json").write_text(
            json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return out


# --- reduction comparisons ---------------------------------------------------

# Fixed desk-scale presets; deterministic by construction.
REDUCE_PRESETS = {
    "kuramoto": {
        "kind": "kuramoto",
        "n_members": 5,
        "params": {"nu": 0.7, "kappa": 1.0},
    },
    "sphere": {
        "kind": "sphere",
        "n_members": 4,
        "params": {
            "omega": [[0.0, 0.8, -0.2], [-0.8, 0.0, 0.5], [0.2, -0.5, 0.0]],
            "kappa": 1.0,
        },
    },
    "lohe-matrix": {
        "kind": "matrix",
        "n_members": 3,
        "params": {"h": [[0.9, 0.25], [0.25, -0.4]], "kappa": 1.0},
    },
}


def _preset_native_init(kind: str, n_members: int, seed: int, params: dict):
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if kind == "kuramoto":
        return rng.uniform(-math.pi, math.pi, size=n_members)
    if kind == "sphere":
        d = len(params["omega"])
        x = rng.standard_normal((n_members, d))
        return x / np.linalg.norm(x, axis=1, keepdims=True)
    d = len(params["h"])
    us = []
    for _ in range(n_members):
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        q, r = np.linalg.qr(z)
        us.append(q * (np.diagonal(r) / np.abs(np.diagonal(r))))
    return np.stack(us)


def run_reduce_compare(
    preset: str,
    seed: int = 0,
    horizon: float = 10.0,
    dt: float = 1e-3,
    threshold: float = 1e-6,
    out_dir=None,
) -> dict:
    """Side-by-side native / embedded-tensor run for a named preset."""
    if preset not in REDUCE_PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(REDUCE_PRESETS)}")
    entry = REDUCE_PRESETS[preset]
    kind = entry["kind"]
    init = _preset_native_init(kind, entry["n_members"], seed, entry["params"])
    deviation = lowrank.cross_validate(kind, init, entry["params"], horizon=horizon, dt=dt)
    report = {
        "preset": preset,
        "kind": kind,
        "seed": seed,
        "horizon": horizon,
        "dt": dt,
        "deviation": deviation,
        "threshold": threshold,
        "passed": deviation <= threshold,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"reduce_{preset}.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return report


# --- sweeps -------------------------------------------------------------------


def parse_axis(spec: str) -> tuple[str, list[float]]:
    """Parse ``path=lo:hi:count`` (inclusive linear grid) or ``path=v1,v2,...``."""
    if "=" not in spec:
        raise ValueError(f"axis spec {spec!r} must look like path=lo:hi:count or path=v1,v2")
    path, _, rest = spec.partition("=")
    path = path.strip()
    rest = rest.strip()
    if ":" in rest:
        parts = rest.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid spec {rest!r} must be lo:hi:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("grid count must be >= 1")
        values = [float(v) for v in np.linspace(lo, hi, count)]
    else:
        values = [float(v) for v in rest.split(",") if v]
        if not values:
            raise ValueError(f"axis spec {spec!r} has no values")
    return path, values


def _apply_axis(obj: dict, path: str, value: float):
    keys = path.split(".")
    node = obj
    for key in keys[:-1]:
        if key not in node or not isinstance(node[key], dict):
            raise ValueError(f"axis path {path!r} does not exist in the config")
        node = node[key]
    leaf = keys[-1]
    old = node.get(leaf)
    if isinstance(old, int) and not isinstance(old, bool) and float(value).is_integer():
        node[leaf] = int(value)
    else:
        node[leaf] = float(value)


def _sweep_cell(args):
    cfg_dict, index, values = args
    cfg = ScenarioConfig.from_dict(cfg_dict)
    verdict, traj = run_simulation(cfg, out_dir=None)
    last = traj.records[-1]
    row = {
        "index": index,
        "all_passed": verdict.all_passed,
        "verdict": (verdict.classification or {}).get("verdict", ""),
        "r_final": last.order_parameter,
        "v_final": last.variance,
        "d_final": last.diameter,
        "max_norm_drift": traj.max_norm_drift,
    }
    return index, values, row


def run_sweep(cfg: ScenarioConfig, axis_specs: list[str], out_path) -> Path:
    """Grid over one or two config paths; writes a long-form verdict CSV."""
    if not 1 <= len(axis_specs) <= 2:
        raise ValueError("sweeps take one or two axis specs")
    axes = [parse_axis(s) for s in axis_specs]
    grid: list[tuple] = [()]
    for _, values in axes:
        grid = [g + (v,) for g in grid for v in values]
    jobs = []
    for index, values in enumerate(grid):
        obj = cfg.to_dict()
        for (path, _), value in zip(axes, values):
            _apply_axis(obj, path, value)
        obj["scenario_id"] = f"{cfg.scenario_id}_{index:04d}"
        jobs.append((obj, index, values))

    workers = int(os.environ.get(THREAD_ENV_VAR, "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, jobs))
    else:
        results = [_sweep_cell(job) for job in jobs]
    results.sort(key=lambda r: r[0])

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    axis_names = [path for path, _ in axes]
    fields = ["index", *axis_names, "all_passed", "verdict", "r_final", "v_final", "d_final", "max_norm_drift"]
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# schema_version=1\n")
        fh.write(",".join(fields) + "\n")
        for index, values, row in results:
            cells = [str(index)]
            cells += [format(v, ".17g") for v in values]
            cells += [
                str(row["all_passed"]).lower(),
                row["verdict"],
                format(row["r_final"], ".17g"),
                format(row["v_final"], ".17g"),
                format(row["d_final"], ".17g"),
                format(row["max_norm_drift"], ".17g"),
            ]
            fh.write(",".join(cells) + "\n")
    return out_path
