"""Run configuration: a flat YAML mapping of model and numerics keys.

Model keys: drift, sigma, a1, lambda, g12, g21, profit1, profit2, x0, regime0.
Optional numerics keys: x_min, x_max, n_nodes, tol, max_iter, n_paths, seed,
t_max, dt. Profits are strings such as ``zero``, ``linear(0.2)``,
``saturating(1,1)`` or ``piecewise(0:0,1:0.5,2:0.7)``.

Presets are looked up in ``$POISSWITCH_PRESET_DIR`` first, then in the
bundled ``presets`` directory.
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .model import ModelSpec, ProfitSpec

PRESET_ENV = "POISSWITCH_PRESET_DIR"
BUNDLED_PRESETS = Path(__file__).with_name("presets")

MODEL_KEYS = ("drift", "sigma", "a1", "lambda", "g12", "g21", "profit1", "profit2", "x0", "regime0")
REQUIRED_KEYS = ("drift", "sigma", "a1", "lambda", "g12", "g21", "profit1", "profit2")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    x_min: float = 1e-3
    x_max: float = 1e3
    n_nodes: int = 401
    tol: float = 1e-8
    max_iter: int = 200
    n_paths: int = 100_000
    seed: int = 12345
    t_max: float | None = None
    dt: float | None = None
    out_dir: Path = Path(".")
    formats: tuple[str, ...] = ("csv", "json", "svg")
    source: str = ""

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_NUMERIC = {
    "x_min": float, "x_max": float, "n_nodes": int, "tol": float, "max_iter": int,
    "n_paths": int, "seed": int, "t_max": float, "dt": float,
}


def model_from_mapping(data: dict) -> ModelSpec:
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    try:
        return ModelSpec(
            drift=float(data["drift"]), sigma=float(data["sigma"]), a1=float(data["a1"]),
            lam=float(data["lambda"]), g12=float(data["g12"]), g21=float(data["g21"]),
            profit1=ProfitSpec.parse(data["profit1"]), profit2=ProfitSpec.parse(data["profit2"]),
            x0=float(data.get("x0", 1.0)), regime0=int(data.get("regime0", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_from_mapping(data: dict, source: str = "") -> RunConfig:
    unknown = set(data) - set(MODEL_KEYS) - set(_NUMERIC)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    model = model_from_mapping(data)
    extra = {}
    for k, conv in _NUMERIC.items():
        if k in data and data[k] is not None:
            try:
                extra[k] = conv(data[k])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {k}: {data[k]!r}") from exc
    return RunConfig(model=model, source=source, **extra)


def load_mapping(path: str | os.PathLike) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} is not a key/value mapping")
    return data


def preset_dirs() -> list[Path]:
    dirs = []
    if os.environ.get(PRESET_ENV):
        dirs.append(Path(os.environ[PRESET_ENV]))
    dirs.append(BUNDLED_PRESETS)
    return dirs


def preset_path(name: str) -> Path:
    for d in preset_dirs():
        for ext in (".yaml", ".yml"):
            p = d / f"{name}{ext}"
            if p.is_file():
                return p
    raise ConfigError(f"unknown preset {name!r}")


def list_presets() -> list[str]:
    names = set()
    for d in preset_dirs():
        if d.is_dir():
            names.update(p.stem for p in d.glob("*.y*ml"))
    return sorted(names)


def load_config(path: str | os.PathLike | None = None, preset: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    if (path is None) == (preset is None):
        raise ConfigError("give exactly one of a config file or a preset")
    p = Path(path) if path is not None else preset_path(preset)
    data = load_mapping(p)
    data.update(overrides or {})
    return config_from_mapping(data, source=str(p))


def load_preset(name: str) -> RunConfig:
    return load_config(preset=name)
