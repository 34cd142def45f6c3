import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poisswitch.model import (ModelSpec, ProfitSpec, ValidationError, check, f_limit,
                              normalize, validate)

from _cases import base_model


def test_p1_parameters_are_valid():
    vm = validate(base_model())
    assert vm.spec.g12 == 1.5
    assert vm.warnings == ()
    assert math.isclose(vm.spec.integrability_exponent, -0.25)


def test_cost_sum_rule():
    with pytest.raises(ValidationError) as exc:
        validate(base_model(g12=0.4, g21=-0.5))
    assert "cost-sum" in exc.value.codes
    assert "g12+g21>0 violated" in str(exc.value)


def test_discount_rule():
    with pytest.raises(ValidationError) as exc:
        validate(base_model(a1=0.04, drift=0.05))
    assert "discount" in exc.value.codes
    assert "a1>max(b,0) violated" in str(exc.value)


def test_every_violation_is_listed():
    with pytest.raises(ValidationError) as exc:
        validate(base_model(sigma=0.0, lam=-1.0, g12=-0.1, g21=-0.2))
    assert {"sigma", "lambda", "cost-sum", "cost-12"} <= set(exc.value.codes)


def test_integrability_override():
    m = base_model(lam=0.5)  # a = 0.25 > 0 with bounded profits
    with pytest.raises(ValidationError):
        validate(m)
    vm = validate(m, allow_nonintegrable=True)
    assert [w.code for w in vm.warnings] == ["integrability"]


def test_f_must_increase():
    m = base_model(profit1=ProfitSpec.linear(0.3), profit2=ProfitSpec.linear(0.1))
    assert "f-monotone" in [v.code for v in check(m)]
    flat = base_model(profit1=ProfitSpec.linear(0.2), profit2=ProfitSpec.linear(0.2))
    assert "f-monotone" in [v.code for v in check(flat)]


def test_piecewise_f_with_flat_piece_is_rejected():
    m = base_model(profit2=ProfitSpec.parse("piecewise(0:0,1:0.5,2:0.5,3:0.6)"))
    assert "f-monotone" in [v.code for v in check(m)]


@pytest.mark.parametrize("p1,p2,expected", [
    ("zero", "saturating(1,1)", 1.0),
    ("zero", "linear(0.2)", math.inf),
    ("linear(0.1)", "linear(0.3)", math.inf),
    ("zero", "piecewise(0:0,1:0.5,2:0.5)", 0.5),
    ("saturating(2,4)", "saturating(3,1)", 2.5),
])
def test_f_limit(p1, p2, expected):
    m = base_model(profit1=ProfitSpec.parse(p1), profit2=ProfitSpec.parse(p2))
    assert f_limit(m) == expected


def test_profit_parse_round_trip():
    for text in ("zero", "linear(0.2)", "saturating(1.0,1.0)", "piecewise(0.0:0.0,1.0:0.5)"):
        p = ProfitSpec.parse(text)
        assert ProfitSpec.parse(str(p)) == p
    with pytest.raises(ValueError):
        ProfitSpec.parse("cubic(1)")


def test_profit_values():
    x = np.array([0.0, 1.0, 3.0])
    assert np.allclose(ProfitSpec.saturating(1, 1)(x), [0.0, 0.5, 0.75])
    pw = ProfitSpec.parse("piecewise(0:0,1:0.5,2:0.7)")
    assert np.allclose(pw([0.5, 1.5, 4.0]), [0.25, 0.6, 1.1])
    assert pw.lipschitz == 0.5


def test_normalize_identity_without_offsets():
    m = base_model()
    out, offsets = normalize(m)
    assert out == m and offsets == (0.0, 0.0)


def test_normalize_shifts_cost():
    m = base_model(g12=1.0, profit1=ProfitSpec.parse("piecewise(0:0.5,1:0.5)"),
                   profit2=ProfitSpec.parse("piecewise(0:0,1:1)"))
    out, offsets = normalize(m)
    assert out.g12 == pytest.approx(1.5)
    assert out.g21 == pytest.approx(m.g21 - 0.5)
    assert offsets == (0.5, 0.0)
    assert out.profit1.at_zero == 0.0


# property tests

finite = st.floats(-2.0, 2.0, allow_nan=False)
positive = st.floats(-0.5, 2.0, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(b=finite, sigma=positive, a1=st.floats(-0.5, 3.0), lam=positive,
       g12=finite, g21=finite, c=st.floats(0.0, 2.0), k=st.floats(0.0, 3.0),
       linear=st.booleans())
def test_validate_accepts_iff_inequalities_hold(b, sigma, a1, lam, g12, g21, c, k, linear):
    p2 = ProfitSpec.linear(c) if linear else ProfitSpec.saturating(c, k)
    m = ModelSpec(b, sigma, a1, lam, g12, g21, ProfitSpec.zero(), p2)
    a = -a1 + 2.5 * lam
    bounded = c == 0 or (not linear and k > 0)
    integrable = a < 0 if bounded else 2 * a + 2 * b + sigma ** 2 < 0
    expected = (sigma > 0 and lam > 0 and a1 > max(b, 0.0) and g12 + g21 > 0 and g12 > 0
                and c > 0 and integrable)
    try:
        validate(m)
        ok = True
    except ValidationError:
        ok = False
    assert ok == expected


@given(h10=st.floats(0, 2), h20=st.floats(0, 2), g12=st.floats(0.1, 3), g21=st.floats(-1, 3),
       a1=st.floats(0.2, 3))
def test_normalize_is_idempotent(h10, h20, g12, g21, a1):
    m = base_model(a1=a1, g12=g12, g21=g21,
                   profit1=ProfitSpec.piecewise([(0, h10), (1, h10 + 0.1)]),
                   profit2=ProfitSpec.piecewise([(0, h20), (1, h20 + 0.5)]))
    once, _ = normalize(m)
    twice, offsets = normalize(once)
    assert twice == once and offsets == (0.0, 0.0)
    # the switching cost gap is preserved
    assert once.g12 + once.g21 == pytest.approx(m.g12 + m.g21)


@given(c1=st.floats(0.01, 5), c2=st.floats(0.01, 5), k=st.floats(0.01, 5))
def test_f_limit_monotone_in_c(c1, c2, k):
    lo, hi = sorted((c1, c2))
    sat = [f_limit(base_model(profit2=ProfitSpec.saturating(c, k))) for c in (lo, hi)]
    lin = [f_limit(base_model(profit1=ProfitSpec.linear(0.1),
                              profit2=ProfitSpec.linear(0.1 + c))) for c in (lo, hi)]
    assert sat[0] <= sat[1]
    assert lin[0] <= lin[1]
