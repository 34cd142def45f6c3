"""Cached preset solves shared by the test modules."""
from __future__ import annotations

from functools import lru_cache

from poisswitch import (build_grid, load_preset, solve_penalized_system, value_iteration,
                        verify)
from poisswitch.model import ModelSpec, ProfitSpec

PRESETS = ("P1", "P2", "P3", "P4", "P5")
EXPECTED_CASE = {"P1": 1, "P2": 2, "P3": 3, "P4": 4, "P5": 5}


def base_model(**changes) -> ModelSpec:
    m = ModelSpec(drift=0.05, sigma=0.3, a1=1.0, lam=0.3, g12=1.5, g21=0.1,
                  profit1=ProfitSpec.zero(), profit2=ProfitSpec.saturating(1, 1))
    return m.replace(**changes)


def noswitch_model() -> ModelSpec:
    return load_preset("noswitch").model


@lru_cache(maxsize=None)
def grid_for(name: str, n: int = 401):
    cfg = load_preset(name)
    return build_grid(cfg.model, cfg.x_min, cfg.x_max, n)


@lru_cache(maxsize=None)
def fd(name: str, n: int = 401):
    model = load_preset(name).model
    return model, solve_penalized_system(model, grid_for(name, n))


@lru_cache(maxsize=None)
def oracle(name: str, n: int = 401):
    model = load_preset(name).model
    return value_iteration(model, grid_for(name, n))


@lru_cache(maxsize=None)
def report(name: str, n: int = 401):
    model, sol = fd(name, n)
    return verify(model, sol)
