"""Flat ``key=value`` run configuration shared by the CLI and scripts."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass
class RunConfig:
    n: int = 200
    p: float = 0.1
    d: int = 64
    seed: int = 0
    trials: int = 20
    workers: int = 1
    out: str | None = None
    # coupling / recursive
    margin_c: float = 1.0
    schedule_C: float = 1.0
    T: int | None = None
    # robust testing
    epsilon: float = 0.05
    decider: str = "witness"
    adversary: str = "clique"
    calibration: str | None = None
    iters: int = 200
    # experiments
    property: str = "connectivity"
    model: str = "ER"
    p_min: float = 0.004
    p_max: float = 0.03
    grid: int = 30
    d_list: str = "1024,4096,16384"
    N: int = 1_000_000

    def d_values(self) -> list[int]:
        try:
            return [int(x) for x in self.d_list.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"d_list must be comma-separated integers, got {self.d_list!r}") from None

    def update(self, values: dict) -> RunConfig:
        fields = {f.name: f for f in dataclasses.fields(self)}
        for key, raw in values.items():
            if key not in fields:
                raise ConfigError(f"unknown config key {key!r}")
            setattr(self, key, _coerce(key, raw, fields[key].type))
        return self


def _coerce(key: str, raw, typ: str):
    if raw is None or not isinstance(raw, str):
        return raw
    base = typ.replace(" | None", "")
    if "None" in typ and raw.lower() in ("", "none"):
        return None
    try:
        if base == "int":
            return int(raw)
        if base == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {base}") from None
    return raw


def parse_config_text(text: str) -> dict[str, str]:
    """Lines ``key=value``; blank lines and ``#`` comments are ignored."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)
