"""Switching regions from the gap functions

    G1 = v1 - v2 + g12,   G2 = v2 - v1 + g21,

with ``S^i = {G_i <= 0}``, and the five-case structure they must follow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .model import ModelSpec, f_limit
from .odesolver import Grid, ValueSolution, zero_state_values

INF = math.inf

Case = Union[int, str]

# (S1 shape, S2 shape) -> case; shapes: empty / half / full
_SHAPE_TO_CASE = {
    ("empty", "empty"): 1,
    ("empty", "prefix"): 2,
    ("empty", "full"): 3,
    ("half", "empty"): 4,
    ("half", "prefix"): 5,
}

CASE_DESCRIPTION = {
    1: "S1 empty, S2 empty",
    2: "S1 empty, S2=(0,x2]",
    3: "S1 empty, S2=(0,inf)",
    4: "S1=[x1,inf), S2 empty",
    5: "S1=[x1,inf), S2=(0,x2]",
}


class ClassificationError(AssertionError):
    pass


def g_functions(solution: ValueSolution, model: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    G1 = solution.v1 - solution.v2 + model.g12
    G2 = solution.v2 - solution.v1 + model.g21
    return G1, G2


def g_at_zero(model: ModelSpec) -> tuple[float, float]:
    """Exact ``(G1(0), G2(0))`` from the zero-state values.

    Equals ``(g12, g21)`` when ``g21 >= 0`` and
    ``(g12 + lam g21/(a1+lam), a1 g21/(a1+lam))`` when ``g21 < 0``.
    """
    v1, v2 = zero_state_values(model)
    return v1 - v2 + model.g12, v2 - v1 + model.g21


@dataclass(frozen=True)
class Detection:
    x_lower1: float
    x_upper2: float
    structure_ok: bool
    bracket1: tuple[float, float] | None = None
    bracket2: tuple[float, float] | None = None
    diagnostics: tuple[str, ...] = ()

    def __iter__(self):
        # unpacks as (x_lower1, x_upper2, structure_ok)
        return iter((self.x_lower1, self.x_upper2, self.structure_ok))


def _clusters(mask: np.ndarray) -> int:
    """Number of maximal runs of True."""
    if not mask.any():
        return 0
    return int(np.count_nonzero(np.diff(mask.astype(int)) == 1) + (1 if mask[0] else 0))


def _root(x0, x1, g0, g1):
    return x0 + g0 / (g0 - g1) * (x1 - x0)


def detect_regions(G1: np.ndarray, G2: np.ndarray, grid: Grid) -> Detection:
    """Thresholds ``inf S1`` and ``sup S2`` by linear interpolation at the
    sign changes, plus the half-line structure check."""
    x = grid.nodes
    n = len(x)
    s1 = G1 <= 0
    s2 = G2 <= 0
    diag = []

    bracket1 = None
    if not s1.any():
        xl1 = INF
    elif s1[0]:
        xl1 = 0.0
        diag.append("S1 reaches the lower grid boundary")
    else:
        k = int(np.argmax(s1))
        xl1 = float(_root(x[k - 1], x[k], G1[k - 1], G1[k]))
        bracket1 = (float(x[k - 1]), float(x[k]))

    bracket2 = None
    if not s2.any():
        xu2 = 0.0
    elif s2[-1]:
        xu2 = INF
    else:
        k = n - 1 - int(np.argmax(s2[::-1]))
        xu2 = float(_root(x[k], x[k + 1], G2[k], G2[k + 1]))
        bracket2 = (float(x[k]), float(x[k + 1]))

    first1 = int(np.argmax(s1)) if s1.any() else n
    suffix_ok = bool(np.all(s1 == (np.arange(n) >= first1)))
    last2 = n - 1 - int(np.argmax(s2[::-1])) if s2.any() else -1
    prefix_ok = bool(np.all(s2 == (np.arange(n) <= last2)))
    if not suffix_ok:
        diag.append(f"S1 is not a suffix of the grid ({_clusters(s1)} clusters)")
    if not prefix_ok:
        diag.append(f"S2 is not a prefix of the grid ({_clusters(s2)} clusters)")
    return Detection(xl1, xu2, suffix_ok and prefix_ok, bracket1, bracket2, tuple(diag))


def classify(model: ModelSpec) -> int:
    """Predicted case 1..5 from ``a1 g12``, ``a1 g21`` and ``F(inf)``."""
    Finf = f_limit(model)
    c12 = model.a1 * model.g12
    c21 = model.a1 * model.g21
    if c12 >= Finf:
        if c21 >= 0:
            return 1
        if c21 > -Finf:
            return 2
        return 3
    if c21 >= 0:
        return 4
    if c21 > -Finf:
        return 5
    # a1 g12 < F(inf) and a1 g21 <= -F(inf) force g12 + g21 < 0
    raise ClassificationError(
        f"unreachable sign pattern: a1*g12={c12}, a1*g21={c21}, F(inf)={Finf}")


def observed_case(det: Detection) -> Case:
    if det.x_lower1 == INF:
        shape1 = "empty"
    elif det.x_lower1 > 0:
        shape1 = "half"
    else:
        shape1 = "full"
    if det.x_upper2 == 0.0:
        shape2 = "empty"
    elif det.x_upper2 == INF:
        shape2 = "full"
    else:
        shape2 = "prefix"
    return _SHAPE_TO_CASE.get((shape1, shape2), "inconsistent")


def _near_ties(model: ModelSpec, rel: float) -> set[int]:
    """Cases reachable by perturbing the boundary inequalities by ``rel``."""
    out = set()
    for d12 in (-rel, 0.0, rel):
        for d21 in (-rel, 0.0, rel):
            m = model.replace(g12=model.g12 + d12 * max(1.0, abs(model.g12)),
                              g21=model.g21 + d21 * max(1.0, abs(model.g21)))
            try:
                out.add(classify(m))
            except ClassificationError:
                pass
    return out


def monotonicity_violation(G1: np.ndarray, G2: np.ndarray, grid: Grid, residual_sup: float) -> float:
    """Largest excess of the forward differences of G1 (G2) above (below)
    the tolerance ``10 * residual * step``; <= 0 means monotone."""
    h = np.diff(grid.nodes)
    scale = max(1.0, float(np.max(np.abs(G1))), float(np.max(np.abs(G2))))
    # rounding floor so an exactly converged solve is not held to zero
    eps = 10.0 * residual_sup * h + 64 * np.finfo(float).eps * scale
    return float(max(np.max(np.diff(G1) - eps), np.max(-np.diff(G2) - eps)))


@dataclass(frozen=True, eq=False)
class RegionReport:
    G1: np.ndarray
    G2: np.ndarray
    case_predicted: int
    case_observed: Case
    x_lower1: float
    x_upper2: float
    structure_ok: bool
    bracket1: tuple[float, float] | None = None
    bracket2: tuple[float, float] | None = None
    advisory: bool = False
    candidates: tuple[int, ...] = ()
    monotone_excess: float = 0.0
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def consistent(self) -> bool:
        if not self.structure_ok or self.case_observed == "inconsistent":
            return False
        if self.x_lower1 < INF and self.x_upper2 >= self.x_lower1:
            return False
        if self.case_observed == self.case_predicted:
            return True
        return self.advisory and self.case_observed in self.candidates

    def summary(self) -> dict:
        return {
            "case_predicted": self.case_predicted,
            "case_observed": self.case_observed,
            "description": CASE_DESCRIPTION.get(self.case_predicted, ""),
            "x_lower1": self.x_lower1,
            "x_upper2": self.x_upper2,
            "bracket1": list(self.bracket1) if self.bracket1 else None,
            "bracket2": list(self.bracket2) if self.bracket2 else None,
            "structure_ok": self.structure_ok,
            "advisory": self.advisory,
            "candidates": list(self.candidates),
            "monotone_excess": self.monotone_excess,
            "consistent": self.consistent,
            "diagnostics": list(self.diagnostics),
        }


def verify(model: ModelSpec, solution: ValueSolution, tie_rel: float = 1e-3,
           boundary_frac: float = 0.05) -> RegionReport:
    """Detect the regions on ``solution`` and compare with :func:`classify`.

    A mismatch is reported, not raised. The check is advisory when the
    parameters sit within ``tie_rel`` of a case boundary or a detected
    threshold falls in the outer boundary layer of the grid.
    """
    G1, G2 = g_functions(solution, model)
    det = detect_regions(G1, G2, solution.grid)
    predicted = classify(model)
    observed = observed_case(det)
    diag = list(det.diagnostics)

    cands = _near_ties(model, tie_rel)
    advisory = len(cands) > 1
    x = solution.grid.nodes
    k = int(np.floor(boundary_frac * len(x)))
    edge_lo, edge_hi = x[k], x[len(x) - 1 - k]
    for thr in (det.x_lower1, det.x_upper2):
        if 0 < thr < INF and (thr < edge_lo or thr > edge_hi):
            advisory = True
            diag.append(f"threshold {thr:g} lies in the grid boundary layer")
            cands |= {predicted, observed} - {"inconsistent"}
    if det.x_upper2 == INF and predicted == 2:
        diag.append("S2 fills the grid; x2 may exceed x_max")
    excess = monotonicity_violation(G1, G2, solution.grid, solution.residual_sup)
    if excess > 0:
        diag.append(f"monotonicity violated by {excess:g}")
    return RegionReport(
        G1=G1, G2=G2, case_predicted=predicted, case_observed=observed,
        x_lower1=det.x_lower1, x_upper2=det.x_upper2, structure_ok=det.structure_ok,
        bracket1=det.bracket1, bracket2=det.bracket2, advisory=advisory,
        candidates=tuple(sorted(cands)), monotone_excess=excess, diagnostics=tuple(diag),
    )
