"""Bellman-recursion oracle at Poisson arrival times.

Between arrivals the regime is frozen, so with ``R_q phi(x) = E int_0^inf
e^{-qs} phi(X_s^x) ds`` the values solve

    v^i = R_{a1+lam} h^i + lam R_{a1+lam} max(v^j - g^ij, v^i),

a contraction with modulus ``lam / (a1 + lam)``. ``R_q`` is evaluated by
Gauss-Legendre quadrature in ``sqrt(s)`` and Gauss-Hermite quadrature over the
lognormal law of ``X_s``. No finite-difference code is used here.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .model import ModelSpec
from .odesolver import Grid, ValueSolution, interp_weights

log = logging.getLogger(__name__)


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class QuadratureScheme:
    """Time nodes/weights for ``int_0^s_max e^{-qs} f(s) ds`` and normalized
    Gauss-Hermite nodes/weights for ``E f(Z)``, ``Z ~ N(0,1)``."""

    q: float
    s: np.ndarray
    ws: np.ndarray
    z: np.ndarray
    wz: np.ndarray
    s_max: float
    tail: float


def quadrature_scheme(q: float, drift: float, m: int = 32, n_time: int = 96,
                      s_max: float | None = None) -> QuadratureScheme:
    if s_max is None:
        s_max = 40.0 / (q - max(drift, 0.0))
    # s = t^2 keeps the integrand smooth when phi has kinks at x
    t, wt = np.polynomial.legendre.leggauss(n_time)
    tmax = np.sqrt(s_max)
    t = 0.5 * tmax * (t + 1.0)
    wt = 0.5 * tmax * wt
    s = t * t
    ws = wt * 2.0 * t * np.exp(-q * s)
    y, wy = np.polynomial.hermite.hermgauss(m)
    z = np.sqrt(2.0) * y
    wz = wy / np.sqrt(np.pi)
    tail = np.exp(-(q - max(drift, 0.0)) * s_max) / (q - max(drift, 0.0))
    return QuadratureScheme(q, s, ws, z, wz, s_max, float(tail))


def _sample_points(x: np.ndarray, scheme: QuadratureScheme, drift: float, sigma: float):
    """States ``x * exp(mu s + sigma sqrt(s) z)`` with shape (len(x), n_time, m)."""
    mu = drift - 0.5 * sigma ** 2
    expo = mu * scheme.s[:, None] + sigma * np.sqrt(scheme.s)[:, None] * scheme.z[None, :]
    return x[:, None, None] * np.exp(expo)[None, :, :]


def resolvent(q: float, phi: Callable, x, *, drift: float, sigma: float,
              scheme: QuadratureScheme | None = None, growth: str = "linear"):
    """``E int_0^inf e^{-qs} phi(X_s^x) ds`` for GBM ``X``."""
    if growth == "linear" and q <= max(drift, 0.0):
        raise OracleError(f"resolvent diverges: q={q} <= max(b,0) for linear growth")
    if growth == "quadratic" and q <= 2 * drift + sigma ** 2:
        raise OracleError("resolvent diverges: q <= 2b + sigma^2 for quadratic growth")
    scheme = scheme or quadrature_scheme(q, drift)
    if scheme.q != q:
        raise OracleError("quadrature scheme built for a different rate")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    pts = _sample_points(xa, scheme, drift, sigma)
    vals = np.asarray(phi(pts), dtype=float)
    out = np.einsum("ktm,t,m->k", vals, scheme.ws, scheme.wz)
    return out if np.ndim(x) else float(out[0])


def resolvent_matrix(grid: Grid, scheme: QuadratureScheme, drift: float, sigma: float) -> sp.csr_matrix:
    """Sparse ``P`` with ``(P u)_k = R_q[interp(u)](x_k)``."""
    nodes = grid.nodes
    n = len(nodes)
    pts = _sample_points(nodes, scheme, drift, sigma)
    w = (scheme.ws[:, None] * scheme.wz[None, :])[None, :, :] * np.ones((n, 1, 1))
    idx, wl, wr = interp_weights(nodes, pts)
    rows = np.broadcast_to(np.arange(n)[:, None, None], pts.shape).ravel()
    rows = np.concatenate([rows, rows])
    cols = np.concatenate([idx.ravel(), idx.ravel() + 1])
    data = np.concatenate([(w * wl).ravel(), (w * wr).ravel()])
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def value_iteration(model: ModelSpec, grid: Grid, tol: float = 1e-10,
                    max_iter: int = 500, initial: tuple[np.ndarray, np.ndarray] | None = None,
                    m: int = 32, n_time: int = 96) -> ValueSolution:
    """Iterate the arrival-time Bellman map on the grid to its fixed point.

    Stops once the sup-change is at most ``tol (1-kappa)/kappa``,
    ``kappa = lam/(a1+lam)``. Observed contraction ratios are kept in
    ``history``.
    """
    q = model.a1 + model.lam
    kappa = model.lam / q
    scheme = quadrature_scheme(q, model.drift, m=m, n_time=n_time)
    nodes = grid.nodes
    base = [resolvent(q, model.profit(i), nodes, drift=model.drift, sigma=model.sigma,
                      scheme=scheme) for i in (1, 2)]
    P = resolvent_matrix(grid, scheme, model.drift, model.sigma)
    if initial is None:
        v1, v2 = np.zeros(len(nodes)), np.zeros(len(nodes))
    else:
        v1, v2 = (np.array(a, dtype=float) for a in initial)
    stop = tol * (1 - kappa) / kappa
    ratios = []
    prev_change = None
    for it in range(1, max_iter + 1):
        n1 = base[0] + model.lam * (P @ np.maximum(v2 - model.g12, v1))
        n2 = base[1] + model.lam * (P @ np.maximum(v1 - model.g21, v2))
        change = max(np.max(np.abs(n1 - v1)), np.max(np.abs(n2 - v2)))
        if prev_change is not None and prev_change > 0:
            ratios.append(change / prev_change)
        prev_change = change
        v1, v2 = n1, n2
        if change <= stop:
            act1 = v2 - model.g12 - v1 > 0
            act2 = v1 - model.g21 - v2 > 0
            return ValueSolution(grid, v1, v2, it, float(change), act1, act2,
                                 "oracle", tuple(ratios))
    raise OracleError(f"value iteration did not converge in {max_iter} sweeps "
                      f"(last change {prev_change:g})")


@dataclass(frozen=True)
class Comparison:
    sup_abs: tuple[float, float]
    mean_abs: tuple[float, float]
    scale: float
    diff1: np.ndarray
    diff2: np.ndarray
    mask: np.ndarray

    @property
    def sup(self) -> float:
        return max(self.sup_abs)

    @property
    def sup_rel(self) -> float:
        return self.sup / self.scale if self.scale > 0 else self.sup


def compare(fd: ValueSolution, oracle: ValueSolution, frac: float = 0.05) -> Comparison:
    """Differences on the interior nodes (``frac`` dropped at each end).

    ``sup_rel`` divides by the largest interior oracle magnitude, floored at 1.
    """
    if fd.grid.n != oracle.grid.n or not np.array_equal(fd.grid.nodes, oracle.grid.nodes):
        raise ValueError("solutions live on different grids")
    mask = fd.grid.interior(frac)
    d1 = fd.v1 - oracle.v1
    d2 = fd.v2 - oracle.v2
    scale = max(1.0, float(np.max(np.abs(oracle.v1[mask]))), float(np.max(np.abs(oracle.v2[mask]))))
    return Comparison(
        sup_abs=(float(np.max(np.abs(d1[mask]))), float(np.max(np.abs(d2[mask])))),
        mean_abs=(float(np.mean(np.abs(d1[mask]))), float(np.mean(np.abs(d2[mask])))),
        scale=scale, diff1=d1, diff2=d2, mask=mask,
    )
