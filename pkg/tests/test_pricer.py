import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import lognorm

from strikespan import market as mk
from strikespan import payoff as po
from strikespan import pricer as pr
from strikespan.errors import (
    BadWindow,
    DensityUnavailable,
    NotConvex,
    QuadratureNoConvergence,
    TailConditionFailed,
)
from strikespan.quadrature import QuadConfig

TOL = 1e-4  # default tol on a forward of 100


def lognormal_oracle(f, spot=100.0, vol=0.2, rate=0.05, T=1.0, points=()):
    """D * E[f(X_T)] by direct integration against scipy's lognormal density."""
    law = lognorm(s=vol * math.sqrt(T), scale=spot * math.exp((rate - 0.5 * vol * vol) * T))
    hi = law.ppf(1 - 1e-14)
    val, _ = integrate.quad(lambda x: f(x) * law.pdf(x), 0, hi, points=list(points) or None,
                            limit=500, epsabs=1e-11, epsrel=1e-12)
    return math.exp(-rate * T) * val


def test_report_fields_sum(bs_main, catalog_payoffs):
    for p in catalog_payoffs:
        r = pr.price_theorem1(p, bs_main)
        assert r.value == r.cash_term + r.integral_term + r.jump_left_term + r.jump_right_term + r.kink_term
        assert r.tail_bound >= 0


@pytest.mark.parametrize("K", [60.0, 100.0, 140.0])
def test_call_recovers_curve(bs_main, K):
    assert pr.price_theorem1(po.call(K), bs_main).value == pytest.approx(float(bs_main.lam(K)), abs=TOL)


def test_forward_recovers_lambda_zero(bs_main):
    assert pr.price_theorem1(po.forward(), bs_main).value == pytest.approx(100.0, abs=TOL)


@pytest.mark.parametrize("curve", [mk.bs_curve(100, 0.2, 0.05, 1.0),
                                   mk.table_curve([(90, 12), (100, 6), (110, 3)], 0.9),
                                   mk.EmpiricalCurve([50.0, 100.0, 100.0, 150.0], 0.97)])
def test_digital_is_exact(curve):
    for K in (95.0, 100.0, 105.0):
        r = pr.price_theorem1(po.digital_ge(K), curve)
        assert r.value == curve.discount * float(curve.digital_ge(K))
        assert r.integral_term == 0 and r.jump_right_term == 0
        r = pr.price_theorem1(po.digital_gt(K), curve)
        assert r.value == curve.discount * float(curve.digital_gt(K))


def test_digital_flavours_differ_on_atoms():
    c = mk.EmpiricalCurve([50.0, 100.0, 100.0, 150.0], 1.0)
    assert pr.price_theorem1(po.digital_ge(100), c).value == 0.75
    assert pr.price_theorem1(po.digital_gt(100), c).value == 0.25


@pytest.mark.parametrize("K", [80.0, 100.0, 120.0])
def test_put_call_parity(bs_zero_rate, K):
    v = pr.price_theorem1(po.put(K), bs_zero_rate).value
    assert v == pytest.approx(float(bs_zero_rate.lam(K)) - 100.0 + K, abs=TOL)


@pytest.mark.parametrize(
    "payoff, points",
    [(po.power_call(2, 10000), [100]), (po.straddle(100), [100]), (po.capped_call(100, 20), [100, 120]),
     (po.polynomial([1.0, 0.5, 0.01], 80, 120), [80, 120]), (po.power(2), [])],
)
def test_against_lognormal_integration(bs_main, payoff, points):
    oracle = lognormal_oracle(lambda x: float(payoff.eval(x)), points=points)
    assert pr.price_theorem1(payoff, bs_main).value == pytest.approx(oracle, abs=2 * TOL)


def test_power_call_example(bs_main):
    p = po.power_call(2, 10000)
    v = pr.price_theorem1(p, bs_main).value
    # -int_100^inf 2a lam(da) = int_100^inf 2a D Q(X > a) da
    alt, _ = integrate.quad(lambda a: 2 * a * bs_main.discount * float(bs_main.digital_gt(a)), 100, 2000, limit=400)
    assert v == pytest.approx(alt, abs=TOL)
    pool = mk.gbm_pool(7, 1_000_000, 100.0, 0.2, 0.05, 1.0)
    mean, se = mk.mc_price(pool, p)
    assert abs(v - mean) < 3 * se


def test_lebesgue_matches_theorem1(bs_main, catalog_payoffs):
    for p in catalog_payoffs:
        a = pr.price_theorem1(p, bs_main).value
        b = pr.price_lebesgue(p, bs_main).value
        assert abs(a - b) <= 2 * TOL, p.label


def test_lebesgue_table_calls_exact_at_quotes():
    c = mk.table_curve([(90, 12), (100, 6), (110, 3)], 0.9)
    for K in (90.0, 100.0, 110.0):
        assert pr.price_lebesgue(po.call(K), c).value == pytest.approx(float(c.lam(K)), abs=1e-12)


def test_lebesgue_straddle_on_coupled_samples(pool_1e5):
    c = mk.empirical_curve(pool_1e5)
    mc, _ = mk.mc_price(pool_1e5, po.straddle(100))
    assert pr.price_lebesgue(po.straddle(100), c).value == pytest.approx(mc, abs=TOL)


def test_bick_examples(bs_main):
    assert pr.price_bick(po.call(100), bs_main).value == pytest.approx(float(bs_main.lam(100.0)), abs=1e-12)
    lam = bs_main.lam
    fly = float(lam(90.0)) - 2 * float(lam(100.0)) + float(lam(110.0))
    assert pr.price_bick(po.butterfly(90, 100, 110), bs_main).value == pytest.approx(fly, abs=1e-12)
    two_int, _ = integrate.quad(lambda a: 2 * float(lam(a)), 0, 2000, points=[100], limit=400)
    assert pr.price_bick(po.power(2), bs_main).value == pytest.approx(two_int, abs=2 * TOL)
    assert pr.price_bick(po.power(2), bs_main).value == pytest.approx(
        pr.price_theorem1(po.power(2), bs_main).value, abs=2 * TOL)


def test_bl_examples(bs_main, bs_zero_rate):
    assert pr.price_bl(po.call(100), bs_main).value == pytest.approx(float(bs_main.lam(100.0)), abs=TOL)
    assert pr.price_bl(po.constant(3.0), bs_main).value == pytest.approx(3 * math.exp(-0.05), abs=TOL)
    s = po.straddle(100)
    assert pr.price_bl(s, bs_zero_rate).value == pytest.approx(pr.price_theorem1(s, bs_zero_rate).value, abs=2 * TOL)


def test_bl_needs_density(pool_1e5):
    with pytest.raises(DensityUnavailable):
        pr.price_bl(po.call(100), mk.empirical_curve(pool_1e5))
    with pytest.raises(DensityUnavailable):
        pr.price_bl(po.call(100), mk.table_curve([(90, 12), (100, 6), (110, 3)], 1.0))


def test_convex_examples(bs_main):
    lam = bs_main.lam
    assert pr.price_convex(po.convex_decompose(po.call(100)), bs_main).value == float(lam(100.0))
    put = pr.price_convex(po.convex_decompose(po.put(100)), bs_main).value
    assert put == pytest.approx(bs_main.discount * 100 - float(lam(0.0)) + float(lam(100.0)), abs=1e-12)
    sq = po.convex_decompose(po.power(2))
    assert pr.price_convex(sq, bs_main).value == pytest.approx(pr.price_bick(po.power(2), bs_main).value, abs=2 * TOL)


def test_convex_form_rejects_non_convex(bs_main):
    with pytest.raises(NotConvex):
        pr.price(po.butterfly(90, 100, 110), bs_main, "convex")
    out = pr.price_all(po.butterfly(90, 100, 110), bs_main)
    assert isinstance(out["convex"], str) and out["convex"].startswith("n/a")


def test_unknown_form(bs_main):
    with pytest.raises(ValueError):
        pr.price(po.call(100), bs_main, "fourier")


# -- windows ----------------------------------------------------------------------------
def test_window_range_digital(bs_main):
    r = pr.price_windowed(po.constant(1.0), 90, 110, (True, True), bs_main)
    expected = bs_main.discount * (float(bs_main.digital_ge(90.0)) - float(bs_main.digital_gt(110.0)))
    assert r.value == pytest.approx(expected, abs=1e-14)


def test_window_linear_on_coupled_samples(pool_1e5):
    c = mk.empirical_curve(pool_1e5)
    beta = 120.0
    r = pr.price_windowed(po.forward(), 0.0, beta, (True, True), c)
    x = pool_1e5.terminal
    mc = pool_1e5.discount * np.mean(np.where(x <= beta, x, 0.0))
    assert r.value == pytest.approx(mc, rel=1e-10)
    closed_form = float(c.lam(0.0)) - float(c.lam(beta)) - beta * c.discount * float(c.digital_gt(beta))
    assert r.value == pytest.approx(closed_form, rel=1e-10)


def test_window_open_ends_use_other_digital():
    c = mk.EmpiricalCurve([50.0, 90.0, 100.0, 110.0, 150.0], 1.0)
    one = po.constant(1.0)
    assert pr.price_windowed(one, 90, 110, (True, True), c).value == pytest.approx(0.6)
    assert pr.price_windowed(one, 90, 110, (False, False), c).value == pytest.approx(0.2)
    assert pr.price_windowed(one, 90, 110, (True, False), c).value == pytest.approx(0.4)


def test_window_open_equals_closed_on_atomless_curve(bs_main):
    p = po.power(2)
    a = pr.price_windowed(p, 80, 120, (True, True), bs_main).value
    b = pr.price_windowed(p, 80, 120, (False, False), bs_main).value
    assert a == b


def test_window_errors(bs_main):
    with pytest.raises(BadWindow):
        pr.price_windowed(po.call(100), 120, 80, (True, True), bs_main)
    with pytest.raises(BadWindow):
        pr.price_windowed(po.digital_ge(100), 80, 120, (True, True), bs_main)


# -- validity and truncation -------------------------------------------------------
def test_validate_call_passes(bs_main):
    assert pr.validate_class(po.call(100), bs_main).ok


def test_exponential_fails_tail_check(bs_main):
    rep = pr.validate_class(po.exponential(1.0), bs_main)
    assert not rep.tail_decay
    with pytest.raises(TailConditionFailed, match="tail condition"):
        pr.price_theorem1(po.exponential(1.0), bs_main)


@pytest.mark.parametrize("curve", [mk.bs_curve(100, 0.2, 0.05, 1.0),
                                   mk.table_curve([(90, 12), (100, 6), (110, 3)], 1.0),
                                   mk.EmpiricalCurve([50.0, 100.0, 150.0], 1.0)])
@pytest.mark.parametrize("payoff", [po.digital_ge(100), po.butterfly(90, 100, 110), po.capped_call(100, 20),
                                    po.constant(-2.0)])
def test_bounded_payoffs_pass(curve, payoff):
    assert pr.validate_class(payoff, curve).ok


def test_tail_bound_shrinks_with_truncation(bs_main):
    p = po.power(2)
    rows = [pr.truncation(p, bs_main, QuadConfig(tail_tol=t).resolve(100.0)) for t in (1e-3, 1e-6, 1e-9, 1e-12)]
    a_max = [r[0] for r in rows]
    bounds = [r[1] for r in rows]
    assert a_max == sorted(a_max)
    assert all(b1 >= b2 for b1, b2 in zip(bounds, bounds[1:]))


def test_budget_exhaustion_is_reported(bs_main):
    with pytest.raises(QuadratureNoConvergence):
        pr.price_theorem1(po.power(3), bs_main, QuadConfig(tol=1e-12, max_nodes=300))


# -- structural properties ------------------------------------------------------------
def test_coupled_sample_exactness(pool_1e5):
    c = mk.empirical_curve(pool_1e5)
    for p in (po.call(100), po.straddle(95), po.butterfly(90, 100, 110), po.capped_call(100, 20),
              po.piecewise_linear([[50, 0], [80, 10], [100, 5], [150, 30]]), po.put(110)):
        mc, _ = mk.mc_price(pool_1e5, p)
        v = pr.price_theorem1(p, c).value
        assert v == pytest.approx(mc, rel=1e-10, abs=1e-10), p.label


FAMILIES = [
    lambda k: po.call(k), lambda k: po.put(k), lambda k: po.straddle(k), lambda k: po.digital_ge(k),
    lambda k: po.capped_call(k, 15.0), lambda k: po.butterfly(k - 10, k, k + 10),
]


@settings(max_examples=15, deadline=None)
@given(
    a=st.floats(-2, 2), b=st.floats(-2, 2),
    i=st.integers(0, len(FAMILIES) - 1), j=st.integers(0, len(FAMILIES) - 1),
    k1=st.floats(70, 130), k2=st.floats(70, 130),
)
def test_linearity(bs_main, a, b, i, j, k1, k2):
    f, g = FAMILIES[i](k1), FAMILIES[j](k2)
    combo = po.linear_combination([(a, f), (b, g)])
    lhs = pr.price_theorem1(combo, bs_main).value
    rhs = a * pr.price_theorem1(f, bs_main).value + b * pr.price_theorem1(g, bs_main).value
    assert abs(lhs - rhs) <= 2 * TOL * max(1.0, abs(a) + abs(b))
