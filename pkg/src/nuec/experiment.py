"""Experiment files: flat key-value configs with one optional sweep block.

Format, line by line:

    # comment
    engine = nuec
    data_type = topk-rmv
    n_ops = 5000
    crashes = 0@120 3@4000

    [sweep]
    engine = nuec fullop stateship
    seed = 1 2 3

Keys are SimConfig field names.  Values in the sweep block are lists
(whitespace or comma separated); the cross product is expanded in file
order, last key varying fastest, so expansion is deterministic.  Crash
entries are replica@event pairs.  The NUEC_SEED environment variable,
when set, overrides every expanded config's seed.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import fields
from typing import Any, Optional

from .sim.config import ConfigError, SimConfig

__all__ = ["load_experiment", "parse_experiment", "ConfigError"]


_FIELD_TYPES: dict[str, Any] = {f.name: f.type for f in fields(SimConfig)}


def _parse_crashes(raw: str, line_no: int) -> tuple[tuple[int, int], ...]:
    entries = []
    for chunk in raw.replace(",", " ").split():
        rid, sep, at = chunk.partition("@")
        if not sep or not rid.isdigit() or not at.isdigit():
            raise ConfigError(
                f"line {line_no}: crashes: expected replica@event pairs, got {chunk!r}"
            )
        entries.append((int(rid), int(at)))
    return tuple(entries)


def _coerce(key: str, raw: str, line_no: int) -> Any:
    if key not in _FIELD_TYPES:
        raise ConfigError(f"line {line_no}: unknown field {key!r}")
    if key == "crashes":
        return _parse_crashes(raw, line_no)
    ftype = _FIELD_TYPES[key]
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"line {line_no}: {key}: expected {ftype}, got {raw!r}") from None
    return raw


def _split_values(raw: str) -> list[str]:
    return raw.replace(",", " ").split()


def parse_experiment(text: str, env_seed: Optional[str] = None) -> list[SimConfig]:
    """Parse and expand an experiment file into validated configs.

    ``env_seed`` is the NUEC_SEED override (already read from the
    environment by the caller, injectable for tests)."""
    base: dict[str, Any] = {}
    sweep: list[tuple[str, list[Any]]] = []
    in_sweep = False
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if stripped != "[sweep]":
                raise ConfigError(f"line {line_no}: unknown section {stripped!r}")
            if in_sweep:
                raise ConfigError(f"line {line_no}: duplicate [sweep] section")
            in_sweep = True
            continue
        key, sep, raw = (part.strip() for part in stripped.partition("="))
        if not sep or not key:
            raise ConfigError(f"line {line_no}: expected key = value, got {stripped!r}")
        if in_sweep:
            values = _split_values(raw)
            if not values:
                raise ConfigError(f"line {line_no}: {key}: sweep entry needs at least one value")
            if key == "crashes":
                raise ConfigError(f"line {line_no}: crashes: cannot be swept")
            sweep.append((key, [_coerce(key, v, line_no) for v in values]))
        else:
            if not raw:
                raise ConfigError(f"line {line_no}: {key}: missing value")
            base[key] = _coerce(key, raw, line_no)

    configs = []
    keys = [k for k, _ in sweep]
    for combo in itertools.product(*(vals for _, vals in sweep)):
        merged = dict(base)
        merged.update(zip(keys, combo))
        if env_seed is not None:
            try:
                merged["seed"] = int(env_seed)
            except ValueError:
                raise ConfigError(f"NUEC_SEED: expected an integer, got {env_seed!r}") from None
        try:
            cfg = SimConfig(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        configs.append(cfg)
    return configs


def load_experiment(path: str) -> list[SimConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_experiment(text, env_seed=os.environ.get("NUEC_SEED"))
