"""Flat ``key = value`` configuration files.

Lines are ``key = value`` (``key: value`` also accepted); ``#`` starts a
comment. Keys prefixed ``ubar.`` set the elimination-bound constants.
Unknown keys are rejected so that typos do not silently fall back to
defaults.
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

from .datagen import SyntheticConfig, load_pairs_csv
from .designs import RunConfig, UbarConfig
from .errors import InputError

SYNTHETIC_KEYS = {"hypothesis": str, "s": float, "sigma2": float,
                  "population_size": int, "f_variant": str}
RUN_KEYS = {
    "design": str, "budget": int, "alpha": float, "gamma": float, "classifier": str,
    "n_committee": int, "n_init": int, "seed": int, "match_tol": float,
    "refit_every": int, "count_init_in_budget": bool, "lambda_init": float,
    "lambda_clamp": float, "predictor": str, "predictor_refit_full_until": int,
    "predictor_refit_stride": int, "solver": str, "regressor": str,
    "stop_on_reject": bool, "holdout": float, "theory_thresholds": int,
    "theory_candidates": int, "theory_eval_size": int,
}
UBAR_KEYS = {f.name: float for f in dataclasses.fields(UbarConfig)}
HARNESS_KEYS = {"data": str, "n_validation": int, "validation_size": int, "parallelism": int}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key, raw, kind):
    try:
        if kind is bool:
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise InputError(f"config key {key!r}: cannot read {raw!r} as {kind.__name__}") from None


def parse_config(text: str) -> dict:
    """Parse config text into a typed flat dict (``ubar.*`` keys kept dotted)."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise InputError(f"config line {lineno}: expected key = value")
        key, raw = (p.strip() for p in line.split(sep, 1))
        if key.startswith("ubar."):
            kind = UBAR_KEYS.get(key[5:])
        else:
            kind = SYNTHETIC_KEYS.get(key) or RUN_KEYS.get(key) or HARNESS_KEYS.get(key)
        if kind is None:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        if key in out:
            raise InputError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = _convert(key, raw, kind)
    return out


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))


def synthetic_config(params: dict) -> SyntheticConfig:
    return SyntheticConfig(**{k: params[k] for k in SYNTHETIC_KEYS if k in params})


def build_run_config(params: dict, **overrides) -> RunConfig:
    """RunConfig from parsed params; non-None ``overrides`` (CLI flags) win."""
    merged = dict(params)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    kwargs = {k: merged[k] for k in RUN_KEYS if k in merged}
    kwargs["synthetic"] = synthetic_config(merged)
    ubar = {k[5:]: v for k, v in merged.items() if k.startswith("ubar.")}
    kwargs["ubar"] = UbarConfig(**ubar)
    if merged.get("data"):
        kwargs["data"] = load_pairs_csv(merged["data"])
    return RunConfig(**kwargs)
