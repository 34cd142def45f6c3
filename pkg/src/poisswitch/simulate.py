"""Monte Carlo evaluation of switching policies.

Paths of ``X`` are stepped exactly on a ``dt`` grid; Poisson arrivals are
drawn as cumulative exponential gaps and every arrival splits its step, so the
switch decision sees ``X`` at the arrival time itself. The discounted profit
integral uses the trapezoid rule on the split grid and the cost
``e^{-a1 T_k} g`` is charged at every switch.

All policies in one call share the same paths and arrivals (common random
numbers). Paths are simulated in fixed-size blocks, each with its own spawned
seed, so results do not depend on how blocks are scheduled.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import ModelSpec
from .odesolver import ValueSolution, interp_values

INF = math.inf


class BudgetError(ValueError):
    def __init__(self, message: str, suggested_t_max: float):
        super().__init__(message)
        self.suggested_t_max = suggested_t_max


@dataclass(frozen=True)
class PolicySpec:
    """Rule applied at each arrival.

    ``threshold`` switches 1->2 when ``X >= lower1`` and 2->1 when
    ``X <= upper2``; ``optimal`` switches when ``v^i(X) <= v^j(X) - g^ij`` on
    the interpolated solution.
    """

    kind: str
    solution: ValueSolution | None = field(default=None, compare=False)
    lower1: float = INF
    upper2: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("optimal", "never", "always", "threshold"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "optimal" and self.solution is None:
            raise ValueError("optimal policy needs a solution")
        if self.kind == "threshold" and not self.upper2 < self.lower1:
            raise ValueError("threshold policy needs upper2 < lower1")
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self) -> str:
        if self.kind == "threshold":
            return f"threshold({self.lower1:.6g},{self.upper2:.6g})"
        return self.kind

    @classmethod
    def optimal(cls, solution: ValueSolution) -> "PolicySpec":
        return cls("optimal", solution=solution)

    @classmethod
    def never(cls) -> "PolicySpec":
        return cls("never")

    @classmethod
    def always(cls) -> "PolicySpec":
        return cls("always")

    @classmethod
    def threshold(cls, lower1: float, upper2: float, name: str = "") -> "PolicySpec":
        return cls("threshold", lower1=lower1, upper2=upper2, name=name)

    def switches(self, model: ModelSpec, regime: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Boolean mask of paths that switch at an arrival with state ``x``."""
        if self.kind == "never":
            return np.zeros(len(x), dtype=bool)
        if self.kind == "always":
            return np.ones(len(x), dtype=bool)
        if self.kind == "threshold":
            return np.where(regime == 1, x >= self.lower1, x <= self.upper2)
        nodes = self.solution.grid.nodes
        v1 = interp_values(nodes, self.solution.v1, x)
        v2 = interp_values(nodes, self.solution.v2, x)
        # ties switch
        return np.where(regime == 1, v1 <= v2 - model.g12, v2 <= v1 - model.g21)


@dataclass(frozen=True)
class PathConfig:
    x0: float
    regime0: int
    t_max: float
    dt: float
    n_paths: int
    seed: int = 12345
    block_size: int = 8192

    @classmethod
    def for_model(cls, model: ModelSpec, n_paths: int = 100_000, seed: int = 12345,
                  x0: float | None = None, regime0: int | None = None,
                  t_max: float | None = None, dt: float | None = None) -> "PathConfig":
        return cls(
            x0=model.x0 if x0 is None else float(x0),
            regime0=model.regime0 if regime0 is None else int(regime0),
            t_max=40.0 / (model.a1 - max(model.drift, 0.0)) if t_max is None else float(t_max),
            dt=1.0 / (20.0 * (model.a1 + model.lam)) if dt is None else float(dt),
            n_paths=int(n_paths), seed=int(seed),
        )

    def check(self, model: ModelSpec):
        if self.dt > 1.0 / (10.0 * (model.a1 + model.lam)) * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} exceeds 1/(10(a1+lam))")
        if self.regime0 not in (1, 2):
            raise ValueError("regime0 must be 1 or 2")
        if not (self.x0 > 0 and self.t_max > 0 and self.n_paths > 1):
            raise ValueError("x0, t_max must be positive and n_paths > 1")


def truncation_bound(model: ModelSpec, config: PathConfig) -> float:
    """Bound on the profit discarded after ``t_max``."""
    C = model.lipschitz
    rate = model.a1 - model.drift
    return C * config.x0 * math.exp(-rate * config.t_max) / rate


def suggested_t_max(model: ModelSpec, x0: float, accuracy: float) -> float:
    C = model.lipschitz
    rate = model.a1 - model.drift
    if C == 0:
        return 1.0
    return max(1.0, math.log(C * x0 / (rate * accuracy)) / rate)


@dataclass(frozen=True)
class PolicyResult:
    name: str
    mean: float
    se: float
    switch_counts: dict
    payoffs: np.ndarray = field(repr=False, compare=False)

    def row(self) -> dict:
        return {"policy": self.name, "mean": self.mean, "se": self.se}


@dataclass(frozen=True)
class SimulationReport:
    rows: tuple[PolicyResult, ...]
    truncation_bound: float
    mean_arrivals: float
    se_arrivals: float
    config: PathConfig

    def __getitem__(self, name: str) -> PolicyResult:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def mean(self) -> float:
        return self.rows[0].mean

    @property
    def se(self) -> float:
        return self.rows[0].se

    def summary(self) -> dict:
        return {
            "truncation_bound": self.truncation_bound,
            "mean_arrivals": self.mean_arrivals,
            "se_arrivals": self.se_arrivals,
            "n_paths": self.config.n_paths,
            "t_max": self.config.t_max,
            "dt": self.config.dt,
            "seed": self.config.seed,
            "policies": [
                {**r.row(), "switch_counts": {str(k): v for k, v in sorted(r.switch_counts.items())}}
                for r in self.rows
            ],
        }


def _simulate_block(model: ModelSpec, policies: Sequence[PolicySpec], config: PathConfig,
                    n: int, rng: np.random.Generator):
    a1, b, sigma, lam = model.a1, model.drift, model.sigma, model.lam
    mu = b - 0.5 * sigma ** 2
    h = (model.profit1, model.profit2)
    k = len(policies)
    x = np.full(n, config.x0)
    tc = np.zeros(n)
    regime = np.full((k, n), config.regime0, dtype=np.int8)
    payoff = np.zeros((k, n))
    nsw = np.zeros((k, n), dtype=np.int64)
    arrivals = np.zeros(n, dtype=np.int64)
    next_arr = rng.exponential(1.0 / lam, n)
    hx = (h[0](x), h[1](x))
    prev = np.where(regime == 1, hx[0], hx[1])  # discounted integrand at tc (e^0 = 1)

    def advance(idx, t_to):
        dtau = t_to - tc[idx]
        z = rng.standard_normal(dtau.shape[0])
        xn = x[idx] * np.exp(mu * dtau + sigma * np.sqrt(dtau) * z)
        disc = np.exp(-a1 * t_to)
        h1, h2 = h[0](xn) * disc, h[1](xn) * disc
        cur = np.where(regime[:, idx] == 1, h1, h2)
        payoff[:, idx] += 0.5 * dtau * (prev[:, idx] + cur)
        prev[:, idx] = cur
        x[idx] = xn
        tc[idx] = t_to
        return h1, h2

    n_steps = int(math.ceil(config.t_max / config.dt - 1e-12))
    every = slice(None)
    for step in range(n_steps):
        t_next = min((step + 1) * config.dt, config.t_max)
        while True:
            idx = np.flatnonzero(next_arr <= t_next)
            if idx.size == 0:
                break
            t_arr = next_arr[idx]
            h1, h2 = advance(idx, t_arr)
            disc = np.exp(-a1 * t_arr)
            xa = x[idx]
            for p, pol in enumerate(policies):
                reg = regime[p, idx]
                sw = pol.switches(model, reg, xa)
                if sw.any():
                    cost = np.where(reg == 1, model.g12, model.g21)
                    payoff[p, idx] -= np.where(sw, disc * cost, 0.0)
                    newreg = np.where(sw, 3 - reg, reg).astype(np.int8)
                    regime[p, idx] = newreg
                    nsw[p, idx] += sw
                    prev[p, idx] = np.where(newreg == 1, h1, h2)
            arrivals[idx] += 1
            next_arr[idx] += rng.exponential(1.0 / lam, idx.size)
        advance(every, t_next)
    return payoff, nsw, arrivals


def simulate_policies(model: ModelSpec, policies: Sequence[PolicySpec], config: PathConfig,
                      accuracy: float | None = None) -> SimulationReport:
    """Evaluate several policies on common paths."""
    config.check(model)
    bound = truncation_bound(model, config)
    if accuracy is not None and bound > accuracy:
        t_sug = suggested_t_max(model, config.x0, accuracy)
        raise BudgetError(
            f"truncation bound {bound:g} exceeds requested accuracy {accuracy:g}; "
            f"use t_max >= {t_sug:.4g}", t_sug)
    n_blocks = -(-config.n_paths // config.block_size)
    seeds = np.random.SeedSequence(config.seed).spawn(n_blocks)
    pays, sws, arrs = [], [], []
    for bi, ss in enumerate(seeds):
        n = min(config.block_size, config.n_paths - bi * config.block_size)
        p, s, a = _simulate_block(model, policies, config, n, np.random.Generator(np.random.Philox(ss)))
        pays.append(p)
        sws.append(s)
        arrs.append(a)
    payoff = np.concatenate(pays, axis=1)
    nsw = np.concatenate(sws, axis=1)
    arrivals = np.concatenate(arrs)
    n = config.n_paths
    rows = []
    for p, pol in enumerate(policies):
        rows.append(PolicyResult(
            name=pol.name,
            mean=float(payoff[p].mean()),
            se=float(payoff[p].std(ddof=1) / math.sqrt(n)),
            switch_counts=dict(Counter(nsw[p].tolist())),
            payoffs=payoff[p],
        ))
    return SimulationReport(tuple(rows), bound, float(arrivals.mean()),
                            float(arrivals.std(ddof=1) / math.sqrt(n)), config)


def simulate_policy(model: ModelSpec, policy: PolicySpec, config: PathConfig,
                    accuracy: float | None = None) -> SimulationReport:
    return simulate_policies(model, [policy], config, accuracy)


def first_arrival_discount(model: ModelSpec, n_paths: int = 100_000, seed: int = 12345):
    """Monte Carlo ``E[e^{-a1 T1}]`` with ``T1 ~ Exp(lam)``; returns (mean, se)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    d = np.exp(-model.a1 * rng.exponential(1.0 / model.lam, n_paths))
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(n_paths))


@dataclass(frozen=True)
class TournamentRow:
    policy: str
    mean: float
    se: float
    diff: float
    se_diff: float

    @property
    def dominated(self) -> bool:
        """Optimal beats or ties this policy within 3 paired standard errors."""
        return self.diff >= -3.0 * self.se_diff


def policy_tournament(model: ModelSpec, solution: ValueSolution, config: PathConfig,
                      x_lower1: float = INF, x_upper2: float = 0.0,
                      perturb: float = 0.2) -> tuple[list[TournamentRow], SimulationReport]:
    """Optimal against never, always and thresholds moved by ``±perturb``.

    Perturbations of a threshold at 0 or infinity are no-ops and skipped.
    """
    policies = [PolicySpec.optimal(solution), PolicySpec.never(), PolicySpec.always()]
    for f in (1 - perturb, 1 + perturb):
        if 0 < x_lower1 < INF:
            lo = x_lower1 * f
            if x_upper2 < lo:
                policies.append(PolicySpec.threshold(lo, x_upper2, name=f"lower1*{f:g}"))
        if 0 < x_upper2 < INF:
            up = x_upper2 * f
            if up < x_lower1:
                policies.append(PolicySpec.threshold(x_lower1, up, name=f"upper2*{f:g}"))
    report = simulate_policies(model, policies, config)
    opt = report.rows[0]
    n = config.n_paths
    table = []
    for r in report.rows:
        d = opt.payoffs - r.payoffs
        se_d = float(d.std(ddof=1) / math.sqrt(n))
        table.append(TournamentRow(r.name, r.mean, r.se, float(d.mean()), se_d))
    return table, report
