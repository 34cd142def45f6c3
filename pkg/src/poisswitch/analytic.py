"""Affine closed forms used as exact fixtures.

All three solve ``-L u + rate u = A + c x`` with ``u = A/rate + c x/(rate - b)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import ModelSpec


@dataclass(frozen=True)
class ClosedForm:
    name: str
    applies: Callable[[ModelSpec], bool]
    evaluate: Callable


def _linear_F_slope(model: ModelSpec) -> float | None:
    """Slope ``c`` when ``F = h2 - h1`` is exactly ``c x``, else None."""
    fams = {model.profit1.family, model.profit2.family}
    if not fams <= {"zero", "linear"}:
        return None
    c2 = model.profit2.c if model.profit2.family == "linear" else 0.0
    c1 = model.profit1.c if model.profit1.family == "linear" else 0.0
    return c2 - c1


def no_switch_value(c: float, x, a1: float, b: float):
    """Discounted profit ``c x/(a1-b)`` of staying forever in a linear regime."""
    if a1 <= b:
        raise ValueError(f"a1={a1} must exceed b={b}")
    return c * np.asarray(x, dtype=float) / (a1 - b)


def never_switch_G(model: ModelSpec, x):
    """``E int e^{-a1 t} (a1 g12 - F(X_t)) dt = g12 - c x/(a1-b)`` for ``F = c x``."""
    c = _linear_F_slope(model)
    if c is None:
        raise ValueError("never_switch_G needs a linear F")
    return model.g12 - no_switch_value(c, x, model.a1, model.drift)


def never_switch_root(model: ModelSpec) -> float:
    """Zero of :func:`never_switch_G`.

    Switching only adds ``-lam G1 >= 0`` to the G1 equation, so G1 dominates
    :func:`never_switch_G` and this root is a lower bound for ``inf S1``.
    """
    c = _linear_F_slope(model)
    if not c:
        raise ValueError("never_switch_root needs F = c x with c > 0")
    return model.g12 * (model.a1 - model.drift) / c


def case3_G2(model: ModelSpec, x):
    """``E int e^{-(a1+lam) t} (a1 g21 + F(X_t)) dt`` for ``F = c x``."""
    c = _linear_F_slope(model)
    if c is None:
        raise ValueError("case3_G2 needs a linear F")
    q = model.a1 + model.lam
    if q <= model.drift:
        raise ValueError("a1+lam must exceed b")
    return model.a1 * model.g21 / q + c * np.asarray(x, dtype=float) / (q - model.drift)


def ode_defect(u_const: float, u_slope: float, rate: float, b: float,
               rhs_const: float, rhs_slope: float, x):
    """``(-L + rate) u - rhs`` for affine ``u``, with exact derivatives."""
    x = np.asarray(x, dtype=float)
    u = u_const + u_slope * x
    Lu = b * x * u_slope  # u'' = 0
    return -Lu + rate * u - (rhs_const + rhs_slope * x)


CLOSED_FORMS = (
    ClosedForm("no_switch_value", lambda m: _linear_F_slope(m) is not None and m.a1 > m.drift,
               lambda m, x: no_switch_value(m.profit2.c, x, m.a1, m.drift)),
    ClosedForm("never_switch_G", lambda m: _linear_F_slope(m) is not None and m.a1 > m.drift,
               never_switch_G),
    ClosedForm("case3_G2", lambda m: _linear_F_slope(m) is not None
               and m.a1 + m.lam > m.drift, case3_G2),
)
