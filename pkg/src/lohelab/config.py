"""Scenario configuration schema (JSON) and run verdicts.

A scenario config is a flat JSON object, schema_version 1:

    {
      "schema_version": 1,
      "scenario_id": "demo",
      "seed": 12345,
      "dims": [2, 2],
      "n_members": 6,
      "couplings": {"00": 1.0, "11": 0.05},
      "free_flow": {"kind": "none"},
      "init": {"kind": "clustered", "diameter": 0.1},
      "dt": 0.001,
      "horizon": 10.0,
      "sample_stride": 100,
      "renormalize": false,
      "drift_tolerance": 1e-06,
      "checks": {"conservation": true, "monotonicity": true,
                 "classify": false, "expect_verdict": null,
                 "decay_fit": null},
      "ssp": null
    }

Coupling keys are bitmask strings, leftmost character = first axis; the
rank-0 word is the empty string "".  Free-flow kinds: "none",
``{"kind": "kuramoto", "nu": x}``, ``{"kind": "sphere", "file": ...}``,
``{"kind": "matrix", "file": ...}``, ``{"kind": "raw", "file": ...}``
(files use the matrix serialization format; "sphere"/"matrix" also accept
an inline "value" array).  Init kinds: "random", ``{"kind": "clustered",
"spread"|"diameter": x}``, ``{"kind": "bipolar", "n_plus": n}``,
``{"kind": "file", "path": ...}``.  Supplying a list of free flows (one per
member) is rejected: the model runs with one shared flow.

Configs round-trip exactly: ``from_dict(cfg.to_dict()) == cfg``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import reshape

SCHEMA_VERSION = 1

__all__ = ["ConfigError", "ScenarioConfig", "RunVerdict", "CheckResult"]


class ConfigError(ValueError):
    """Malformed configuration; carries the offending field."""

    def __init__(self, fld: str, message: str):
        self.field = fld
        super().__init__(f"config field {fld!r}: {message}")


_FREE_FLOW_KINDS = ("none", "kuramoto", "sphere", "matrix", "raw")
_INIT_KINDS = ("random", "clustered", "bipolar", "file")

_DEFAULT_CHECKS = {
    "conservation": True,
    "monotonicity": True,
    "classify": False,
    "expect_verdict": None,
    "decay_fit": None,
}


def _require(obj, key, fld):
    if key not in obj:
        raise ConfigError(fld, f"missing key {key!r}")
    return obj[key]


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    seed: int
    dims: tuple[int, ...]
    n_members: int
    couplings: tuple[tuple[str, float], ...]  # sorted bitmask -> strength
    free_flow: tuple[tuple[str, object], ...]  # sorted key/value pairs
    init: tuple[tuple[str, object], ...]
    dt: float
    horizon: float
    sample_stride: Optional[int]
    renormalize: bool
    drift_tolerance: float
    checks: tuple[tuple[str, object], ...]
    ssp: Optional[tuple[tuple[str, object], ...]]

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_dict(cls, obj: dict) -> "ScenarioConfig":
        if not isinstance(obj, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {
            "schema_version", "scenario_id", "seed", "dims", "n_members", "couplings",
            "free_flow", "init", "dt", "horizon", "sample_stride", "renormalize",
            "drift_tolerance", "checks", "ssp",
        }
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key")
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"expected {SCHEMA_VERSION}")

        dims = _require(obj, "dims", "dims")
        if not isinstance(dims, (list, tuple)) or any(not isinstance(d, int) or d < 1 for d in dims):
            raise ConfigError("dims", "must be a list of positive integers")
        dims = tuple(dims)
        rank = len(dims)

        n_members = _require(obj, "n_members", "n_members")
        if not isinstance(n_members, int) or n_members < 1:
            raise ConfigError("n_members", "must be a positive integer")

        couplings = _require(obj, "couplings", "couplings")
        if not isinstance(couplings, dict):
            raise ConfigError("couplings", "must be an object mapping bitmask -> strength")
        coup_items = []
        for key, val in couplings.items():
            try:
                word = reshape.word_from_string(key)
            except ValueError as exc:
                raise ConfigError(f"couplings.{key}", str(exc)) from None
            if len(word) != rank:
                raise ConfigError(f"couplings.{key}", f"word length {len(word)} != rank {rank}")
            if not isinstance(val, (int, float)):
                raise ConfigError(f"couplings.{key}", "strength must be a number")
            coup_items.append((key, float(val)))

        free_flow = obj.get("free_flow", {"kind": "none"})
        if isinstance(free_flow, (list, tuple)):
            raise ConfigError(
                "free_flow",
                "per-member free flows are not supported; give one shared flow "
                "(heterogeneous flows are out of scope)",
            )
        if not isinstance(free_flow, dict):
            raise ConfigError("free_flow", "must be an object")
        ff_kind = free_flow.get("kind", "none")
        if ff_kind not in _FREE_FLOW_KINDS:
            raise ConfigError("free_flow.kind", f"must be one of {_FREE_FLOW_KINDS}")
        if ff_kind == "kuramoto" and not isinstance(free_flow.get("nu"), (int, float)):
            raise ConfigError("free_flow.nu", "kuramoto flow needs a numeric 'nu'")
        if ff_kind in ("sphere", "matrix", "raw"):
            if "file" not in free_flow and "value" not in free_flow:
                raise ConfigError(f"free_flow.{ff_kind}", "needs a 'file' path or inline 'value'")

        init = _require(obj, "init", "init")
        if not isinstance(init, dict):
            raise ConfigError("init", "must be an object")
        init_kind = init.get("kind")
        if init_kind not in _INIT_KINDS:
            raise ConfigError("init.kind", f"must be one of {_INIT_KINDS}")
        if init_kind == "clustered":
            has_spread = isinstance(init.get("spread"), (int, float))
            has_diam = isinstance(init.get("diameter"), (int, float))
            if has_spread == has_diam:
                raise ConfigError("init", "clustered needs exactly one of 'spread'/'diameter'")
        if init_kind == "bipolar" and not isinstance(init.get("n_plus"), int):
            raise ConfigError("init.n_plus", "bipolar needs an integer 'n_plus'")
        if init_kind == "file" and not isinstance(init.get("path"), str):
            raise ConfigError("init.path", "file init needs a 'path'")

        dt = _require(obj, "dt", "dt")
        horizon = _require(obj, "horizon", "horizon")
        if not isinstance(dt, (int, float)) or dt <= 0:
            raise ConfigError("dt", "must be a positive number")
        if not isinstance(horizon, (int, float)) or horizon < 0:
            raise ConfigError("horizon", "must be a nonnegative number")

        stride = obj.get("sample_stride", 1)
        if stride is not None and (not isinstance(stride, int) or stride < 1):
            raise ConfigError("sample_stride", "must be a positive integer or null")

        renorm = obj.get("renormalize", False)
        if not isinstance(renorm, bool):
            raise ConfigError("renormalize", "must be a boolean")

        tol = obj.get("drift_tolerance", 1e-6)
        if not isinstance(tol, (int, float)) or tol <= 0:
            raise ConfigError("drift_tolerance", "must be a positive number")

        checks = dict(_DEFAULT_CHECKS)
        user_checks = obj.get("checks", {})
        if not isinstance(user_checks, dict):
            raise ConfigError("checks", "must be an object")
        bad = set(user_checks) - set(_DEFAULT_CHECKS)
        if bad:
            raise ConfigError(f"checks.{sorted(bad)[0]}", "unknown check")
        checks.update(user_checks)

        ssp = obj.get("ssp")
        if ssp is not None and not isinstance(ssp, dict):
            raise ConfigError("ssp", "must be an object or null")

        seed = obj.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed", "must be an integer")

        return cls(
            scenario_id=str(obj.get("scenario_id", "scenario")),
            seed=seed,
            dims=dims,
            n_members=n_members,
            couplings=tuple(sorted(coup_items)),
            free_flow=tuple(sorted(free_flow.items())),
            init=tuple(sorted(init.items())),
            dt=float(dt),
            horizon=float(horizon),
            sample_stride=stride,
            renormalize=renorm,
            drift_tolerance=float(tol),
            checks=tuple(sorted(checks.items())),
            ssp=None if ssp is None else tuple(sorted(ssp.items())),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(obj)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    # -- emission -------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario_id": self.scenario_id,
            "seed": self.seed,
            "dims": list(self.dims),
            "n_members": self.n_members,
            "couplings": dict(self.couplings),
            "free_flow": dict(self.free_flow),
            "init": dict(self.init),
            "dt": self.dt,
            "horizon": self.horizon,
            "sample_stride": self.sample_stride,
            "renormalize": self.renormalize,
            "drift_tolerance": self.drift_tolerance,
            "checks": dict(self.checks),
            "ssp": None if self.ssp is None else dict(self.ssp),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    # -- convenience ----------------------------------------------------------

    @property
    def free_flow_dict(self) -> dict:
        return dict(self.free_flow)

    @property
    def init_dict(self) -> dict:
        return dict(self.init)

    @property
    def checks_dict(self) -> dict:
        return dict(self.checks)

    @property
    def ssp_dict(self) -> Optional[dict]:
        return None if self.ssp is None else dict(self.ssp)

    def replace(self, **kw) -> "ScenarioConfig":
        obj = self.to_dict()
        for key, value in kw.items():
            obj[key] = value
        return ScenarioConfig.from_dict(obj)


@dataclass
class CheckResult:
    passed: bool
    measured: float
    threshold: float

    def to_dict(self):
        return {"passed": bool(self.passed), "measured": self.measured, "threshold": self.threshold}


@dataclass
class RunVerdict:
    """Machine-readable outcome of one scenario run: every pass/fail carries
    the measured number and the threshold it was held against."""

    scenario_id: str
    checks: dict = field(default_factory=dict)  # name -> CheckResult
    classification: Optional[dict] = None
    ssp: Optional[dict] = None
    decay: Optional[dict] = None

    @property
    def all_passed(self) -> bool:
        ok = all(c.passed for c in self.checks.values())
        if self.classification is not None and "passed" in self.classification:
            ok = ok and bool(self.classification["passed"])
        if self.ssp is not None:
            ok = ok and all(entry["passed"] for entry in self.ssp.values())
        if self.decay is not None and "passed" in self.decay:
            ok = ok and bool(self.decay["passed"])
        return ok

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario_id": self.scenario_id,
            "all_passed": self.all_passed,
            "checks": {k: v.to_dict() for k, v in self.checks.items()},
            "classification": self.classification,
            "ssp": self.ssp,
            "decay": self.decay,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)
