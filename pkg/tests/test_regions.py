import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from poisswitch.model import ProfitSpec, f_limit
from poisswitch.odesolver import build_grid, solve_penalized_system
from poisswitch.regions import (ClassificationError, classify, detect_regions, g_at_zero,
                                g_functions, monotonicity_violation, observed_case, verify)

from _cases import EXPECTED_CASE, PRESETS, base_model, fd, grid_for, oracle, report


@pytest.mark.parametrize("name", PRESETS)
def test_predicted_equals_observed(name):
    r = report(name)
    assert r.case_predicted == EXPECTED_CASE[name]
    assert r.case_observed == EXPECTED_CASE[name]
    assert r.consistent and r.structure_ok


def test_p2_threshold_finite():
    r = report("P2")
    assert 0 < r.x_upper2 < math.inf and r.x_lower1 == math.inf


def test_p3_s2_is_everything():
    r = report("P3")
    assert np.all(r.G2 <= 0) and r.x_upper2 == math.inf


def test_p5_thresholds_against_oracle():
    r = report("P5")
    model, _ = fd("P5")
    orc = oracle("P5")
    G1, G2 = g_functions(orc, model)
    xl1, xu2, ok = detect_regions(G1, G2, orc.grid)
    assert ok and 0 < r.x_upper2 < r.x_lower1 < math.inf
    assert r.x_lower1 == pytest.approx(xl1, rel=1e-3)
    assert r.x_upper2 == pytest.approx(xu2, rel=1e-3)
    lo, hi = r.bracket1
    assert lo <= r.x_lower1 <= hi


def test_g_sum_identity():
    model, sol = fd("P5")
    G1, G2 = g_functions(sol, model)
    assert np.allclose(G1 + G2, model.g12 + model.g21, rtol=0, atol=1e-12)


def test_detect_empty_regions():
    g = grid_for("P1")
    xl1, xu2, ok = detect_regions(np.ones(g.n), np.ones(g.n), g)
    assert xl1 == math.inf and xu2 == 0.0 and ok


def test_detect_flags_clusters():
    g = grid_for("P1")
    G1 = np.ones(g.n)
    G1[50:60] = -1.0
    G1[300:] = -1.0
    det = detect_regions(G1, np.ones(g.n), g)
    assert not det.structure_ok
    assert any("clusters" in d for d in det.diagnostics)
    assert observed_case(det) == 4  # the shape is half-line only after the first crossing


@pytest.mark.parametrize("g12,g21,expected", [
    (1.5, 0.1, 1), (1.5, -0.5, 2), (1.5, -1.2, 3), (0.4, 0.2, 4), (0.4, -0.2, 5),
    (1.0, 0.0, 1), (1.0, -1.0, 3),
])
def test_classify(g12, g21, expected):
    assert classify(base_model(g12=g12, g21=g21)) == expected


def test_linear_F_is_case_4_for_nonnegative_g21():
    m = base_model(profit2=ProfitSpec.linear(0.2), g12=50.0, g21=0.0)
    assert f_limit(m) == math.inf
    assert classify(m) == 4


def test_sixth_pattern_is_unreachable():
    # a1 g12 < F and a1 g21 <= -F give a1 (g12 + g21) < 0
    m = base_model(g12=0.4, g21=-1.5)
    with pytest.raises(ClassificationError):
        classify(m)


@given(g12=st.floats(0.01, 5), g21=st.floats(-5, 5), a1=st.floats(0.1, 3),
       c=st.floats(0.1, 3), k=st.floats(0.1, 3))
def test_classify_total_on_valid_costs(g12, g21, a1, c, k):
    m = base_model(g12=g12, g21=g21, a1=a1, profit2=ProfitSpec.saturating(c, k))
    if g12 + g21 <= 0:
        return
    assert classify(m) in (1, 2, 3, 4, 5)


@pytest.mark.parametrize("name", PRESETS)
def test_monotone_structure(name):
    r = report(name)
    assert r.monotone_excess <= 0


def test_monotonicity_detects_bump():
    g = grid_for("P1")
    G1 = np.linspace(1, 0, g.n)
    G1[100] += 0.1
    assert monotonicity_violation(G1, -G1, g, 1e-10) > 0


def test_near_tie_is_advisory():
    m = base_model(g12=1.0 + 1e-5, g21=0.1)
    sol = solve_penalized_system(m, build_grid(m, 1e-3, 1e3, 201))
    r = verify(m, sol)
    assert r.advisory and {1, 4} <= set(r.candidates)


def test_g_at_zero():
    assert g_at_zero(base_model()) == (1.5, 0.1)
    g1, g2 = g_at_zero(base_model(g21=-0.5))
    assert g2 == pytest.approx(-0.5 / 1.3)
    assert g1 == pytest.approx(1.5 - 0.3 * 0.5 / 1.3)


def test_summary_is_plain():
    s = report("P4").summary()
    assert s["case_predicted"] == 4 and s["consistent"] is True


@pytest.mark.parametrize("name", PRESETS)
def test_g_at_smallest_node_matches_zero_state(name):
    model, _ = fd(name)
    r = report(name)
    z1, z2 = g_at_zero(model)
    assert abs(r.G1[0] - z1) <= 1e-2 and abs(r.G2[0] - z2) <= 1e-2
