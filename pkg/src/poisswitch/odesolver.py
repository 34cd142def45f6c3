"""Finite-difference solver for the coupled penalized system

    -L v^i + a1 v^i = lam * max(0, v^j - g^ij - v^i) + h^i,   L = sigma^2 x^2/2 d2 + b x d

on a geometric grid, by active-set iteration: with the penalty sets frozen
the system is linear in (v1, v2).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import ModelSpec

log = logging.getLogger(__name__)


class GridError(ValueError):
    pass


class SolverError(RuntimeError):
    pass


class NonConvergenceError(SolverError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class Grid:
    nodes: np.ndarray

    @property
    def x_min(self) -> float:
        return float(self.nodes[0])

    @property
    def x_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def n(self) -> int:
        return len(self.nodes)

    def __len__(self):
        return len(self.nodes)

    def interior(self, frac: float = 0.05) -> np.ndarray:
        """Boolean mask dropping ``frac`` of the nodes at each end."""
        k = int(np.floor(frac * self.n))
        mask = np.zeros(self.n, dtype=bool)
        mask[k:self.n - k] = True
        return mask

    def refined(self) -> "Grid":
        """The grid with every log-interval halved (2N-1 nodes)."""
        return build_grid(None, self.x_min, self.x_max, 2 * self.n - 1)


def build_grid(model: ModelSpec | None, x_min: float, x_max: float, n: int) -> Grid:
    """Nodes uniform in ``ln x`` on ``[x_min, x_max]``."""
    if not (x_min > 0 and x_max > x_min):
        raise GridError(f"need 0 < x_min < x_max, got {x_min}, {x_max}")
    if n < 64:
        raise GridError(f"need at least 64 nodes, got {n}")
    if model is not None and not (x_min < model.x0 < x_max):
        raise GridError(f"x0={model.x0} outside ({x_min}, {x_max})")
    if x_max / x_min < 1e3:
        log.warning("grid span x_max/x_min=%g is below 1e3", x_max / x_min)
    nodes = np.exp(np.linspace(np.log(x_min), np.log(x_max), n))
    nodes[0], nodes[-1] = x_min, x_max
    return Grid(nodes)


@dataclass(frozen=True, eq=False)
class ValueSolution:
    grid: Grid
    v1: np.ndarray
    v2: np.ndarray
    iterations: int
    residual_sup: float
    active1: np.ndarray
    active2: np.ndarray
    method: str = "fd"
    history: tuple = field(default=())

    def values(self, i: int) -> np.ndarray:
        return self.v1 if i == 1 else self.v2


# interpolation shared with the quadrature oracle and the simulator

def interp_weights(nodes: np.ndarray, x):
    """Left index and (w_left, w_right) for piecewise-linear interpolation
    with linear extrapolation from the boundary segments."""
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, len(nodes) - 2)
    xl, xr = nodes[idx], nodes[idx + 1]
    t = (x - xl) / (xr - xl)
    return idx, 1.0 - t, t


def interp_values(nodes: np.ndarray, values: np.ndarray, x):
    idx, wl, wr = interp_weights(nodes, x)
    return wl * values[idx] + wr * values[idx + 1]


def interpolate(solution: ValueSolution, x):
    """(v1(x), v2(x)) by piecewise-linear interpolation, linear outside the grid."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("interpolation needs x > 0")
    nodes = solution.grid.nodes
    return interp_values(nodes, solution.v1, x), interp_values(nodes, solution.v2, x)


def zero_state_values(model: ModelSpec) -> tuple[float, float]:
    """Exact values at x=0, where X stays at 0 and profits vanish.

    Solves ``a1 v^i = lam max(0, v^j - g^ij - v^i)`` by case split.
    """
    a1, lam, g12, g21 = model.a1, model.lam, model.g12, model.g21
    r = lam / (a1 + lam)
    candidates = [
        (0.0, 0.0),
        (0.0, -r * g21),  # regime 2 switches down
        (-r * g12, 0.0),  # regime 1 switches up
    ]
    # both switching: (a1+lam) v1 - lam v2 = -lam g12, -lam v1 + (a1+lam) v2 = -lam g21
    m = np.array([[a1 + lam, -lam], [-lam, a1 + lam]])
    candidates.append(tuple(np.linalg.solve(m, [-lam * g12, -lam * g21])))
    for v1, v2 in candidates:
        p1, p2 = v2 - g12 - v1, v1 - g21 - v2
        lhs1 = a1 * v1 - lam * max(0.0, p1)
        lhs2 = a1 * v2 - lam * max(0.0, p2)
        if abs(lhs1) < 1e-12 * (1 + abs(v1)) and abs(lhs2) < 1e-12 * (1 + abs(v2)):
            return float(v1), float(v2)
    raise SolverError("no consistent zero-state solution")  # pragma: no cover


def _operator_bands(model: ModelSpec, nodes: np.ndarray):
    """Tridiagonal bands (lower, diag, upper) of ``-L_h + a1``.

    Row 0 drops the degenerate diffusion term and upwinds the drift when
    ``b > 0``. Row N-1 is a placeholder; the outer closure is a zero second
    difference and is assembled separately.
    """
    n = len(nodes)
    b, s2, a1 = model.drift, model.sigma ** 2, model.a1
    lower = np.zeros(n)
    diag = np.full(n, float(a1))
    upper = np.zeros(n)
    x = nodes[1:-1]
    hm = nodes[1:-1] - nodes[:-2]
    hp = nodes[2:] - nodes[1:-1]
    lower[1:-1] = -(s2 * x * x - b * x * hp) / (hm * (hm + hp))
    upper[1:-1] = -(s2 * x * x + b * x * hm) / (hp * (hm + hp))
    diag[1:-1] = a1 + s2 * x * x / (hm * hp) - b * x * (hp - hm) / (hm * hp)
    if b > 0:
        c = b * nodes[0] / (nodes[1] - nodes[0])
        diag[0] += c
        upper[0] = -c
    return lower, diag, upper


def _closure_coeffs(nodes: np.ndarray):
    hl = nodes[-1] - nodes[-2]
    hp = nodes[-2] - nodes[-3]
    # (v[-1]-v[-2])/hl - (v[-2]-v[-3])/hp = 0
    return 1.0 / hp, -(1.0 / hl + 1.0 / hp), 1.0 / hl


def apply_operator(model: ModelSpec, nodes: np.ndarray, v: np.ndarray) -> np.ndarray:
    lower, diag, upper = _operator_bands(model, nodes)
    out = diag * v
    out[1:] += lower[1:] * v[:-1]
    out[:-1] += upper[:-1] * v[1:]
    c3, c2, c1 = _closure_coeffs(nodes)
    out[-1] = c3 * v[-3] + c2 * v[-2] + c1 * v[-1]
    return out


def residual(model: ModelSpec, solution: ValueSolution) -> np.ndarray:
    """Pointwise defect, shape (2, N), of the discrete equations.

    Interior and inner-boundary rows give ``(-L_h + a1) v^i - lam max(0, v^j -
    g^ij - v^i) - h^i``; the last row is the outer zero-second-difference
    closure.
    """
    nodes = solution.grid.nodes
    out = np.empty((2, len(nodes)))
    vs = (solution.v1, solution.v2)
    for i in (1, 2):
        vi, vj = vs[i - 1], vs[2 - i]
        r = apply_operator(model, nodes, vi)
        pen = model.lam * np.maximum(0.0, vj - model.cost(i) - vi)
        r[:-1] -= pen[:-1] + model.profit(i)(nodes[:-1])
        out[i - 1] = r
    return out


def _assemble(model: ModelSpec, nodes: np.ndarray, act1: np.ndarray, act2: np.ndarray):
    n = len(nodes)
    lower, diag, upper = _operator_bands(model, nodes)
    lam = model.lam
    c3, c2, c1 = _closure_coeffs(nodes)
    blocks = []
    rhs = []
    d_pen = []
    for i, act in ((1, act1), (2, act2)):
        a = act.astype(float).copy()
        a[-1] = 0.0
        d = diag + lam * a
        d[-1] = c1
        lo = lower[1:].copy()
        up = upper[:-1].copy()
        lo[-1] = c2
        t = sp.diags([lo, d, up], [-1, 0, 1], shape=(n, n), format="lil")
        t[n - 1, n - 3] = c3
        blocks.append(t.tocsr())
        d_pen.append(sp.diags(-lam * a))
        h = model.profit(i)(nodes) - lam * a * model.cost(i)
        h[-1] = 0.0
        rhs.append(h)
    mat = sp.bmat([[blocks[0], d_pen[0]], [d_pen[1], blocks[1]]], format="csc")
    return mat, np.concatenate(rhs)


def _dominance_margin(mat: sp.spmatrix, n: int) -> float:
    """Smallest diag - sum|offdiag| over all equation rows (closure rows excluded)."""
    m = sp.csr_matrix(mat)
    d = np.abs(m.diagonal())
    off = np.asarray(abs(m).sum(axis=1)).ravel() - d
    rows = np.r_[0:n - 1, n:2 * n - 1]
    return float(np.min(d[rows] - off[rows]))


def _active(model: ModelSpec, v1: np.ndarray, v2: np.ndarray):
    return (v2 - model.g12 - v1 > 0), (v1 - model.g21 - v2 > 0)


def solve_penalized_system(model: ModelSpec, grid: Grid, tol: float = 1e-8,
                           max_iter: int = 200) -> ValueSolution:
    """Active-set iteration starting from empty penalty sets (the no-switch
    values). Falls back to averaging consecutive iterates if the sets cycle."""
    nodes = grid.nodes
    n = len(nodes)
    act1 = np.zeros(n, dtype=bool)
    act2 = np.zeros(n, dtype=bool)
    seen = set()
    prev = None
    history = []
    damped = False
    for it in range(1, max_iter + 1):
        mat, rhs = _assemble(model, nodes, act1, act2)
        margin = _dominance_margin(mat, n)
        if margin <= 0:
            raise SolverError(f"frozen system lost diagonal dominance (margin {margin:g})")
        sol = spla.spsolve(mat, rhs)
        if not np.all(np.isfinite(sol)):
            raise SolverError("linear solve produced non-finite values")
        v1, v2 = sol[:n], sol[n:]
        if damped and prev is not None:
            v1, v2 = 0.5 * (v1 + prev[0]), 0.5 * (v2 + prev[1])
        prev = (v1, v2)
        new1, new2 = _active(model, v1, v2)
        history.append(int(new1.sum() + new2.sum()))
        if np.array_equal(new1, act1) and np.array_equal(new2, act2):
            out = ValueSolution(grid, v1, v2, it, 0.0, new1, new2, "fd", tuple(history))
            res = residual(model, out)[:, 1:-1]
            res_sup = float(np.max(np.abs(res)))
            out = ValueSolution(grid, v1, v2, it, res_sup, new1, new2, "fd", tuple(history))
            if res_sup <= tol:
                return out
            log.debug("active sets stable but residual %g > tol", res_sup)
        key = (new1.tobytes(), new2.tobytes())
        if key in seen and not damped:
            log.info("active sets cycle at iteration %d; switching to damped updates", it)
            damped = True
        seen.add(key)
        act1, act2 = new1, new2
    last = ValueSolution(grid, prev[0], prev[1], max_iter, 0.0, act1, act2)
    res_sup = float(np.max(np.abs(residual(model, last)[:, 1:-1])))
    raise NonConvergenceError(
        f"no convergence after {max_iter} iterations (residual {res_sup:g})", res_sup, max_iter)


@dataclass(frozen=True)
class BoundCheck:
    """Worst raw slack of the growth, lower and Lipschitz bounds (negative
    means the bound is exceeded) and the allowance ``atol`` for rounding."""
    upper: float
    lower: float
    lipschitz: float
    max_quotient: float
    atol: float

    @property
    def ok(self) -> bool:
        return min(self.upper, self.lower, self.lipschitz) >= -self.atol

    def summary(self) -> dict:
        return {"upper_slack": self.upper, "lower_slack": self.lower,
                "lipschitz_slack": self.lipschitz, "max_quotient": self.max_quotient,
                "atol": self.atol, "ok": self.ok}


def check_bounds(model: ModelSpec, solution: ValueSolution, rtol: float = 1e-8) -> BoundCheck:
    """Check on every node, for regime i with g^ii = 0,

        v^i <= C x/(a1-b) + max_j(-g^ij),   v^i >= lam/(a1+lam) max_j(-g^ij),

    and that adjacent difference quotients stay below ``C/(a1-b)``, where C
    is the larger profit Lipschitz constant. The rounding allowance is
    ``rtol`` times the largest value magnitude (floored at 1).
    """
    x = solution.grid.nodes
    a1, b, lam = model.a1, model.drift, model.lam
    slope = model.lipschitz / (a1 - b)
    up, lo, lip, q = [], [], [], 0.0
    for i, v in ((1, solution.v1), (2, solution.v2)):
        m = max(0.0, -model.cost(i))
        up.append(np.min(slope * x + m - v))
        lo.append(np.min(v - lam / (a1 + lam) * m))
        dq = np.abs(np.diff(v)) / np.diff(x)
        q = max(q, float(np.max(dq)))
        lip.append(slope - float(np.max(dq)))
    scale = max(1.0, float(np.max(np.abs(solution.v1))), float(np.max(np.abs(solution.v2))))
    return BoundCheck(float(min(up)), float(min(lo)), float(min(lip)), q, rtol * scale)
