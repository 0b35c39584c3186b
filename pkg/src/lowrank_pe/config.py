"""JSON experiment configuration.

A config document has the sections ``model``, ``strategy``, ``stopping``,
``trials``, ``seed`` and ``output`` (plus ``sweep`` for grid runs)::

    {
      "model": {"kind": "graded", "N": 64, "d": 4},
      "strategy": ["uniform_eba", {"name": "alg2", "spanner": "exact"}],
      "stopping": {"type": "fixed", "n": 2000},
      "trials": 400,
      "seed": 7,
      "output": {"curve": false}
    }

Model kinds: ``hypercube``, ``block``, ``graded`` and ``explicit`` (kernel
from CSV / inline rows / a finite mixture, seed law given explicitly).
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any

import numpy as np

from .algs import StrategySpec
from .env import (BlockSchedule, ExplicitSchedule, FiniteKernel, FiniteSupport, FixedHorizon,
                  FixedKernel, Geometric, PointMass, RewardModel, SignedBasis, StoppingRule,
                  UniformBox, load_kernel_csv, make_block_instance, make_graded_gap_instance,
                  make_hypercube_hard_instance, validate_model)
from .harness import ExperimentConfig


class ConfigError(ValueError):
    pass


DEFAULTS = {"trials": 100, "seed": 0, "output": {"curve": False, "stride": None}}


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return resolve(doc, base_dir=path.parent)


def resolve(doc: dict, base_dir: str | Path = ".") -> dict:
    """Fill defaults and normalise strategy entries; returns a new dict."""
    out = copy.deepcopy(doc)
    model = out.get("model")
    if isinstance(model, dict) and model.get("kind") == "block" and "n" in model:
        out.setdefault("stopping", {"type": "fixed", "n": model["n"]})
    for key in ("model", "strategy", "stopping"):
        if key not in out:
            raise ConfigError(f"config is missing the {key!r} section")
    out.setdefault("trials", DEFAULTS["trials"])
    out.setdefault("seed", DEFAULTS["seed"])
    output = dict(DEFAULTS["output"])
    output.update(out.get("output") or {})
    out["output"] = output
    strategies = out["strategy"]
    if not isinstance(strategies, list):
        strategies = [strategies]
    out["strategy"] = [_strategy_dict(s) for s in strategies]
    model = out["model"]
    kernel = model.get("kernel") if isinstance(model, dict) else None
    if isinstance(kernel, dict) and "csv" in kernel:
        kernel["csv"] = str((Path(base_dir) / kernel["csv"]).resolve())
    return out


def _strategy_dict(s: Any) -> dict:
    if isinstance(s, str):
        s = {"name": s}
    if not isinstance(s, dict) or "name" not in s:
        raise ConfigError(f"bad strategy entry: {s!r}")
    d = {"name": s["name"], "spanner": s.get("spanner", "exact"), "C": float(s.get("C", 2.0)),
         "probs": s.get("probs"), "label": s.get("label", "")}
    unknown = set(s) - set(d)
    if unknown:
        raise ConfigError(f"unknown strategy keys: {sorted(unknown)}")
    return d


def strategy_specs(doc: dict) -> list[StrategySpec]:
    try:
        return [StrategySpec(s["name"], s["spanner"], s["C"],
                             None if s["probs"] is None else tuple(s["probs"]), s["label"])
                for s in doc["strategy"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _seed_law(spec: dict):
    kind = spec.get("type")
    if kind == "point":
        return PointMass(spec["v"])
    if kind == "box":
        return UniformBox(spec["lo"], spec["hi"])
    if kind == "finite":
        return FiniteSupport(spec["points"], spec["probs"])
    if kind == "signed":
        return SignedBasis(spec["b"], float(spec["eps"]))
    raise ConfigError(f"unknown seed type {kind!r} (point | box | finite | signed)")


def _kernel_law(spec: dict):
    if "csv" in spec:
        return FixedKernel(load_kernel_csv(spec["csv"]))
    if "rows" in spec:
        return FixedKernel(spec["rows"])
    if "support" in spec:
        return FiniteKernel(spec["support"], spec["probs"])
    raise ConfigError("kernel needs one of 'csv', 'rows' or 'support'")


def build_source(model: dict, d_override: int | None = None) -> RewardModel | BlockSchedule:
    model = dict(model)
    if d_override is not None:
        model["d"] = d_override
    kind = model.get("kind")
    try:
        if kind == "hypercube":
            d = int(model["d"])
            b = model.get("b") or [1] * d
            if d_override is not None and len(b) != d:
                b = [1] * d  # a d-sweep cannot reuse a fixed sign vector
            src = make_hypercube_hard_instance(d, float(model["eps"]), b)
        elif kind == "block":
            return make_block_instance(int(model["d"]), int(model["k"]), float(model["eps"]),
                                       int(model["n"]), model["bs"])
        elif kind == "graded":
            params = {k: model[k] for k in ("N", "d", "gap_max", "level", "spread", "jitter")
                      if k in model}
            src = make_graded_gap_instance(**params)
        elif kind == "explicit":
            src = RewardModel(_kernel_law(model["kernel"]), _seed_law(model["seed"]))
        else:
            raise ConfigError(f"unknown model kind {kind!r} (hypercube | block | graded | explicit)")
    except ConfigError:
        raise
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"model section: missing or malformed field {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"model section: {exc}") from exc
    bad = validate_model(src)
    if bad is not None:
        raise ConfigError(f"model violates the reward range: {bad}")
    return src


def build_stopping(spec: dict) -> StoppingRule:
    try:
        kind = spec.get("type", "fixed")
        if kind == "fixed":
            return FixedHorizon(int(spec["n"]))
        if kind == "geometric":
            return Geometric(float(spec["mean_n"]))
        if kind == "schedule":
            return ExplicitSchedule(tuple(int(n) for n in spec["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"stopping section: {exc}") from exc
    raise ConfigError(f"unknown stopping type {kind!r} (fixed | geometric | schedule)")


def experiment_configs(doc: dict, d_override: int | None = None,
                       n_grid: list[int] | None = None) -> list[ExperimentConfig]:
    """One ExperimentConfig per configured strategy."""
    source = build_source(doc["model"], d_override)
    if isinstance(source, BlockSchedule):
        stopping: StoppingRule = FixedHorizon(source.n)
    elif n_grid:
        stopping = ExplicitSchedule(tuple(n_grid))
    else:
        stopping = build_stopping(doc["stopping"])
    out = doc["output"]
    try:
        trials, seed = int(doc["trials"]), int(doc["seed"])
        return [ExperimentConfig(source, spec, stopping, trials, seed, curve=bool(out["curve"]),
                                 stride=out.get("stride"))
                for spec in strategy_specs(doc)]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
