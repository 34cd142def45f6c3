"""Acceptance battery. Each test prints one PASS/FAIL line and the collected
lines are repeated at the end of the pytest run.

Run alone with ``pytest tests/test_acceptance.py -v`` or as a script with
``python tests/test_acceptance.py``.
"""
import math
import time

import numpy as np
import pytest

from poisswitch import load_preset
from poisswitch.analytic import no_switch_value
from poisswitch.cli import run
from poisswitch.odesolver import build_grid, check_bounds, interpolate, solve_penalized_system
from poisswitch.oracle import compare, quadrature_scheme, value_iteration
from poisswitch.simulate import (PathConfig, PolicySpec, first_arrival_discount,
                                 policy_tournament, simulate_policy)

from _acceptance_log import record
from _cases import EXPECTED_CASE, PRESETS, fd, noswitch_model, oracle, report


def test_boundary_values():
    # G1(x_min) against a1 g12/(a1+lam), G2(x_min) against a1 g21/(a1+lam)
    errs = {}
    for name in PRESETS:
        m, _ = fd(name)
        r = report(name)
        t1 = m.a1 * m.g12 / (m.a1 + m.lam)
        t2 = m.a1 * m.g21 / (m.a1 + m.lam)
        errs[name] = (abs(r.G1[0] - t1), abs(r.G2[0] - t2))
    bad = {k: v for k, v in errs.items() if max(v) > 1e-2}
    detail = ", ".join(f"{k}: |dG1|={v[0]:.3g} |dG2|={v[1]:.3g}" for k, v in errs.items())
    assert record(1, not bad, "G at smallest node", detail)


def test_analytic_no_switch():
    m = noswitch_model()
    g = build_grid(m, 1e-3, 1e3, 401)
    mask = g.interior()
    x = g.nodes[mask]
    worst = 0.0
    for sol in (solve_penalized_system(m, g), value_iteration(m, g)):
        for v, p in ((sol.v1, m.profit1), (sol.v2, m.profit2)):
            exact = no_switch_value(p.c, x, m.a1, m.drift)
            worst = max(worst, float(np.max(np.abs(v[mask] - exact) / exact)))
    assert record(2, worst <= 5e-3, "no-switch closed form",
                  f"max relative error {worst:.3g} (limit 5e-3)")


def test_cross_solver_agreement():
    rel = {name: compare(fd(name)[1], oracle(name)).sup_rel for name in PRESETS}
    ok = max(rel.values()) <= 2e-3
    assert record(3, ok, "FD vs oracle", ", ".join(f"{k}={v:.2e}" for k, v in rel.items()))


def test_region_battery(tmp_path):
    codes, obs = {}, {}
    for name in PRESETS:
        codes[name] = run(["verify", "--preset", name, "--out", str(tmp_path), "--formats", "json"])
        r = report(name)
        obs[name] = (r.case_predicted, r.case_observed, r.x_lower1, r.x_upper2)
    shape_ok = (
        0 < obs["P2"][3] < math.inf
        and obs["P3"][3] == math.inf
        and 0 < obs["P4"][2] < math.inf
        and 0 < obs["P5"][3] < obs["P5"][2] < math.inf
    )
    ok = (all(c == 0 for c in codes.values()) and shape_ok
          and all(obs[n][0] == obs[n][1] == EXPECTED_CASE[n] for n in PRESETS))
    detail = ", ".join(f"{n}: exit {codes[n]} case {obs[n][1]}" for n in PRESETS)
    assert record(4, ok, "region cases via verify", detail)


def test_monotone_structure():
    ex = {name: report(name).monotone_excess for name in PRESETS}
    assert record(5, max(ex.values()) <= 0, "G1 nonincreasing, G2 nondecreasing",
                  "max excess over eps_grid " + f"{max(ex.values()):.3g}")


def test_growth_and_lipschitz_bounds():
    slack = {}
    for name in PRESETS:
        m, sol = fd(name)
        b = check_bounds(m, sol)
        slack[name] = (b.ok, b.upper, b.lower, b.lipschitz)
    ok = all(v[0] for v in slack.values())
    assert record(6, ok, "growth, lower and Lipschitz bounds",
                  "slack (upper, lower, Lipschitz) " + ", ".join(
                      f"{k} ({v[1]:.2g}, {v[2]:.2g}, {v[3]:.2g})" for k, v in slack.items()))


@pytest.mark.slow
def test_monte_carlo_value_match():
    m, sol = fd("P4")
    r = report("P4")
    t0 = time.time()
    rows = []
    for x0 in (0.3, 1.5):
        assert (x0 < r.x_lower1) == (x0 == 0.3)
        cfg = PathConfig.for_model(m, n_paths=100_000, x0=x0, regime0=1)
        sim = simulate_policy(m, PolicySpec.optimal(sol), cfg)
        v1, _ = interpolate(sol, x0)
        rows.append((x0, sim.mean, sim.se, v1, abs(sim.mean - v1) / sim.se))
    elapsed = time.time() - t0
    ok = all(z <= 3 for *_, z in rows) and elapsed <= 300
    detail = "; ".join(f"x0={x0}: MC {mc:.5g}+-{se:.2g} vs v1 {v:.5g} (z={z:.2f})"
                       for x0, mc, se, v, z in rows) + f"; {elapsed:.0f}s"
    assert record(7, ok, "Monte Carlo value on P4", detail)


@pytest.mark.slow
def test_policy_dominance():
    worst = {}
    for name, x0 in (("P4", 1.5), ("P5", 1.0)):
        m, sol = fd(name)
        r = report(name)
        cfg = PathConfig.for_model(m, n_paths=100_000, x0=x0)
        table, _ = policy_tournament(m, sol, cfg, r.x_lower1, r.x_upper2)
        assert len(table) >= 5
        worst[name] = (all(row.dominated for row in table),
                       min(row.diff / row.se_diff for row in table if row.se_diff > 0),
                       len(table) - 1)
    ok = all(v[0] for v in worst.values())
    detail = ", ".join(f"{k}: {v[2]} alternatives, min diff/se_diff {v[1]:.2f}"
                       for k, v in worst.items())
    assert record(8, ok, "optimal policy dominates", detail)


def test_discount_identity():
    m = load_preset("P1").model
    target = m.lam / (m.a1 + m.lam)
    mean, se = first_arrival_discount(m, n_paths=100_000)
    quad = m.lam * quadrature_scheme(m.a1 + m.lam, m.drift).ws.sum()
    ok = abs(mean - target) <= 3 * se and abs(quad - target) <= 1e-8
    assert record(9, ok, "E[exp(-a1 T1)] = lam/(a1+lam)",
                  f"MC {mean:.5f}+-{se:.1e}, quadrature error {abs(quad - target):.1e}")


def test_convergence_order():
    errs = [compare(fd("P1", n)[1], oracle("P1", n)).sup for n in (401, 801)]
    factor = errs[0] / errs[1]
    assert record(10, factor >= 3, "grid refinement on P1",
                  f"sup error {errs[0]:.3g} -> {errs[1]:.3g}, factor {factor:.2f}, "
                  f"order {math.log2(factor):.2f}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
