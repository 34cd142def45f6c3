"""Problem data for two-regime switching on a geometric Brownian motion.

A :class:`ModelSpec` bundles the state dynamics ``dX = b X dt + sigma X dW``,
the discount rate ``a1``, the intensity ``lam`` of the Poisson clock that
gates switching, the two switching costs and one running profit per regime.
:func:`validate` checks every standing assumption and :func:`normalize`
shifts profits so that ``h(0) = 0``.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

INF = math.inf

_FAMILIES = ("zero", "linear", "saturating", "piecewise")


@dataclass(frozen=True)
class ProfitSpec:
    """Running profit ``h(x)`` of one regime.

    Families: ``zero``; ``linear(c)`` with ``h = c x``; ``saturating(c, k)``
    with ``h = c x / (1 + k x)``; ``piecewise`` given as knots
    ``((0, y0), (x1, y1), ...)`` and continued past the last knot with the
    last segment's slope.
    """

    family: str = "zero"
    c: float = 0.0
    k: float = 0.0
    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown profit family {self.family!r}")
        if self.family == "piecewise":
            if len(self.knots) < 2:
                raise ValueError("piecewise profit needs at least two knots")
            xs = [kx for kx, _ in self.knots]
            if xs[0] != 0.0:
                raise ValueError("piecewise profit must start with a knot at x=0")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("piecewise knots must be strictly increasing")

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls) -> "ProfitSpec":
        return cls("zero")

    @classmethod
    def linear(cls, c: float) -> "ProfitSpec":
        return cls("linear", c=float(c))

    @classmethod
    def saturating(cls, c: float, k: float) -> "ProfitSpec":
        return cls("saturating", c=float(c), k=float(k))

    @classmethod
    def piecewise(cls, knots: Sequence[tuple[float, float]]) -> "ProfitSpec":
        return cls("piecewise", knots=tuple((float(a), float(b)) for a, b in knots))

    @classmethod
    def parse(cls, text: str) -> "ProfitSpec":
        """Parse ``zero``, ``linear(0.2)``, ``saturating(1,1)`` or
        ``piecewise(0:0, 1:0.5, 2:0.7)``."""
        m = re.fullmatch(r"\s*([a-z_-]+)\s*(?:\((.*)\))?\s*", str(text))
        if not m:
            raise ValueError(f"cannot parse profit {text!r}")
        name = m.group(1).replace("-", "").replace("_", "")
        args = [a.strip() for a in (m.group(2) or "").split(",") if a.strip()]
        if name == "zero" and not args:
            return cls.zero()
        if name == "linear" and len(args) == 1:
            return cls.linear(float(args[0]))
        if name == "saturating" and len(args) == 2:
            return cls.saturating(float(args[0]), float(args[1]))
        if name in ("piecewise", "piecewiselinear"):
            knots = []
            for a in args:
                kx, _, ky = a.partition(":")
                knots.append((float(kx), float(ky)))
            return cls.piecewise(knots)
        raise ValueError(f"cannot parse profit {text!r}")

    def __str__(self) -> str:
        if self.family == "zero":
            return "zero"
        if self.family == "linear":
            return f"linear({self.c!r})"
        if self.family == "saturating":
            return f"saturating({self.c!r},{self.k!r})"
        return "piecewise(" + ",".join(f"{a!r}:{b!r}" for a, b in self.knots) + ")"

    # evaluation ---------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "zero":
            return np.zeros_like(x)
        if self.family == "linear":
            return self.c * x
        if self.family == "saturating":
            return self.c * x / (1.0 + self.k * x)
        xs = np.array([a for a, _ in self.knots])
        ys = np.array([b for _, b in self.knots])
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.interp(x, xs, ys)
        return np.where(x > xs[-1], ys[-1] + slope * (x - xs[-1]), out)

    @property
    def at_zero(self) -> float:
        return float(self.knots[0][1]) if self.family == "piecewise" else 0.0

    def shifted(self, delta: float) -> "ProfitSpec":
        """Profit ``h - delta``. Only piecewise profits can carry an offset."""
        if delta == 0.0:
            return self
        if self.family != "piecewise":
            raise ValueError(f"{self.family} profit cannot be shifted")
        return ProfitSpec.piecewise([(a, b - delta) for a, b in self.knots])

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.knots[1:]) if self.family == "piecewise" else ()

    def asymptote(self) -> tuple[float, float]:
        """(slope, intercept) of the asymptotic line ``h(x) ~ s x + r``."""
        if self.family == "zero":
            return 0.0, 0.0
        if self.family == "linear":
            return self.c, 0.0
        if self.family == "saturating":
            if self.k == 0.0:
                return self.c, 0.0
            return 0.0, self.c / self.k
        (x1, y1), (x2, y2) = self.knots[-2], self.knots[-1]
        s = (y2 - y1) / (x2 - x1)
        return s, y2 - s * x2

    def limit(self) -> float:
        s, r = self.asymptote()
        if s > 0:
            return INF
        if s < 0:
            return -INF
        return r

    @property
    def lipschitz(self) -> float:
        if self.family == "zero":
            return 0.0
        if self.family in ("linear", "saturating"):
            return abs(self.c)
        return max(abs((y2 - y1) / (x2 - x1))
                   for (x1, y1), (x2, y2) in zip(self.knots, self.knots[1:]))

    @property
    def bounded(self) -> bool:
        return self.asymptote()[0] == 0.0

    def is_nonnegative(self) -> bool:
        if self.family == "zero":
            return True
        if self.family == "linear":
            return self.c >= 0
        if self.family == "saturating":
            return self.c >= 0 and self.k >= 0
        return all(y >= 0 for _, y in self.knots) and self.asymptote()[0] >= 0

    def derivative_terms(self, x: float) -> tuple[float, float, float]:
        """Derivative on the segment containing ``x`` as ``s + c/(1+kx)^2``."""
        if self.family == "linear":
            return self.c, 0.0, 0.0
        if self.family == "saturating":
            return 0.0, self.c, self.k
        if self.family == "piecewise":
            xs = [a for a, _ in self.knots]
            i = min(max(np.searchsorted(xs, x, side="right") - 1, 0), len(xs) - 2)
            (x1, y1), (x2, y2) = self.knots[i], self.knots[i + 1]
            return (y2 - y1) / (x2 - x1), 0.0, 0.0
        return 0.0, 0.0, 0.0


@dataclass(frozen=True)
class ModelSpec:
    drift: float
    sigma: float
    a1: float
    lam: float
    g12: float
    g21: float
    profit1: ProfitSpec = field(default_factory=ProfitSpec.zero)
    profit2: ProfitSpec = field(default_factory=ProfitSpec.zero)
    x0: float = 1.0
    regime0: int = 1

    def __post_init__(self):
        for name in ("drift", "sigma", "a1", "lam", "g12", "g21", "x0"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "regime0", int(self.regime0))

    def cost(self, i: int) -> float:
        """Cost of leaving regime ``i``."""
        return self.g12 if i == 1 else self.g21

    def profit(self, i: int) -> ProfitSpec:
        return self.profit1 if i == 1 else self.profit2

    @property
    def integrability_exponent(self) -> float:
        """``a = -a1 + 2.5 lam``."""
        return -self.a1 + 2.5 * self.lam

    @property
    def lipschitz(self) -> float:
        return max(self.profit1.lipschitz, self.profit2.lipschitz)

    def F(self, x):
        return self.profit2(x) - self.profit1(x)

    def replace(self, **changes) -> "ModelSpec":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "drift": self.drift, "sigma": self.sigma, "a1": self.a1,
            "lambda": self.lam, "g12": self.g12, "g21": self.g21,
            "profit1": str(self.profit1), "profit2": str(self.profit2),
            "x0": self.x0, "regime0": self.regime0,
        }


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


class ValidationError(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations))

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


@dataclass(frozen=True)
class ValidatedModel:
    spec: ModelSpec
    warnings: tuple[Violation, ...] = ()


def f_limit(spec: ModelSpec) -> float:
    """``F(inf)`` for ``F = h2 - h1`` in extended reals."""
    s2, r2 = spec.profit2.asymptote()
    s1, r1 = spec.profit1.asymptote()
    ds = s2 - s1
    if ds > 0:
        return INF
    if ds < 0:
        return -INF
    return r2 - r1


def _f_strictly_increasing(spec: ModelSpec) -> bool:
    # On each segment between knots F' = A + c2/(1+k2x)^2 - c1/(1+k1x)^2;
    # its sign is that of a polynomial of degree <= 4.
    cuts = sorted(set((0.0,) + spec.profit1.breakpoints + spec.profit2.breakpoints))
    bounds = list(zip(cuts, cuts[1:] + [INF]))
    for lo, hi in bounds:
        probe = lo + 1.0 if hi == INF else 0.5 * (lo + hi)
        s2, c2, k2 = spec.profit2.derivative_terms(probe)
        s1, c1, k1 = spec.profit1.derivative_terms(probe)
        q1 = Polynomial([1.0, k1]) ** 2
        q2 = Polynomial([1.0, k2]) ** 2
        num = (s2 - s1) * q1 * q2 + c2 * q1 - c1 * q2
        coef = num.coef
        if not np.any(coef):
            return False
        roots = [r.real for r in num.roots() if abs(r.imag) < 1e-12 and lo < r.real < hi]
        pts = sorted([lo] + roots + ([hi] if hi < INF else []))
        tests = [0.5 * (a + b) for a, b in zip(pts, pts[1:])]
        if hi == INF:
            tests.append(2.0 * pts[-1] + 1.0)
        if any(num(t) < 0 for t in tests):
            return False
    return True


def check(spec: ModelSpec) -> list[Violation]:
    """Every violated standing assumption, integrability included."""
    out: list[Violation] = []
    if not spec.sigma > 0:
        out.append(Violation("sigma", "sigma>0 violated"))
    if not spec.lam > 0:
        out.append(Violation("lambda", "lambda>0 violated"))
    if not spec.a1 > max(spec.drift, 0.0):
        out.append(Violation("discount", "a1>max(b,0) violated"))
    if not spec.g12 + spec.g21 > 0:
        out.append(Violation("cost-sum", "g12+g21>0 violated"))
    if not spec.g12 > 0:
        out.append(Violation("cost-12", "g12>0 violated"))
    for i in (1, 2):
        if not spec.profit(i).is_nonnegative():
            out.append(Violation("profit-sign", f"h{i}>=0 violated"))
    if spec.F(0.0) < 0 or not _f_strictly_increasing(spec):
        out.append(Violation("f-monotone", "F=h2-h1 nonnegative and strictly increasing violated"))
    if not spec.x0 > 0:
        out.append(Violation("x0", "x0>0 violated"))
    if spec.regime0 not in (1, 2):
        out.append(Violation("regime0", "regime0 in {1,2} violated"))

    a = spec.integrability_exponent
    if spec.profit1.bounded and spec.profit2.bounded:
        if not a < 0:
            out.append(Violation("integrability", f"a=-a1+2.5*lambda<0 violated (a={a:g})"))
    else:
        lhs = 2 * a + 2 * spec.drift + spec.sigma ** 2
        if not lhs < 0:
            out.append(Violation(
                "integrability", f"2a+2b+sigma^2<0 violated (value {lhs:g})"))
    return out


def validate(spec: ModelSpec, allow_nonintegrable: bool = False) -> ValidatedModel:
    """Return ``ValidatedModel`` or raise :class:`ValidationError` listing all
    violated rules. With ``allow_nonintegrable`` the integrability rule is
    reported as a warning instead."""
    violations = check(spec)
    warnings = ()
    if allow_nonintegrable:
        warnings = tuple(v for v in violations if v.code == "integrability")
        violations = [v for v in violations if v.code != "integrability"]
    if violations:
        raise ValidationError(violations)
    return ValidatedModel(spec, warnings)


def normalize(spec: ModelSpec) -> tuple[ModelSpec, tuple[float, float]]:
    """Shift profits to ``h(0)=0`` and adjust costs accordingly.

    Returns the shifted spec and offsets ``h^i(0)/a1`` so that
    ``v^i = v_shifted^i + offset_i``.
    """
    h10, h20 = spec.profit1.at_zero, spec.profit2.at_zero
    if h10 == 0.0 and h20 == 0.0:
        return spec, (0.0, 0.0)
    shifted = spec.replace(
        profit1=spec.profit1.shifted(h10),
        profit2=spec.profit2.shifted(h20),
        g12=spec.g12 + (h10 - h20) / spec.a1,
        g21=spec.g21 + (h20 - h10) / spec.a1,
    )
    return shifted, (h10 / spec.a1, h20 / spec.a1)
