import math

import pytest

from strikespan import american as am
from strikespan import market as mk
from strikespan import payoff as po
from strikespan.errors import BadParams, NotConvex
from strikespan.pricer import price_convex


def bound_for(p, spot=100.0, vol=0.2, rate=0.05, T=1.0, **kw):
    curve = mk.bs_curve(spot, vol, rate, T)
    return am.american_bound(po.convex_decompose(p), curve, spot, 1.0, **kw)


def test_call_bound_is_european():
    r = bound_for(po.call(100))
    assert r.cash_gap == 0 and r.slope_gap == 0 and r.bound == r.european_value
    assert r.equality_certified


def test_put_zero_rate_bound_is_european():
    r = bound_for(po.put(100), rate=0.0)
    assert r.cash_gap == 0 and r.slope_gap == 0 and r.bound == r.european_value
    assert r.equality_certified


def test_put_positive_rate():
    r = bound_for(po.put(100))
    assert r.cash_gap == pytest.approx(100 * (1 - math.exp(-0.05)), rel=1e-14)
    assert r.slope_gap == 0.0
    assert r.bound == r.european_value + r.cash_gap + r.slope_gap
    assert not r.equality_certified
    assert r.gap_ratio == pytest.approx((r.cash_gap + r.slope_gap) / r.european_value)
    amer, euro = am.binomial_american(po.put(100), 100, 0.2, 0.05, 1.0, 1000)
    assert euro < amer <= r.bound


def test_slope_gap_when_spot_below_forward():
    # a strict submartingale: discounted spot today below E[discounted X_T]
    curve = mk.bs_curve(100, 0.2, 0.05, 1.0)
    r = am.american_bound(po.convex_decompose(po.put(100)), curve, 95.0, 1.0, martingale=False)
    assert r.slope_gap == pytest.approx(-1 * (95.0 - 100.0))
    assert r.slope_gap >= 0 and r.cash_gap >= 0
    assert any("fails" in s for s in r.reasons)


def test_certificates():
    pc = po.convex_decompose(po.power_call(2, 10000))
    assert am.equality_certificate(pc, bond_constant=False, martingale=False).equal
    put = po.convex_decompose(po.put(100))
    cert = am.equality_certificate(put, bond_constant=False, martingale=True)
    assert not cert.equal and any("f(0)" in s for s in cert.reasons)
    basket = po.convex_decompose(po.linear_combination([(0.5, po.call(100)), (0.5, po.call(120))]))
    assert am.equality_certificate(basket, bond_constant=False, martingale=True).equal


def test_non_convex_is_rejected():
    with pytest.raises(NotConvex):
        bound_for(po.butterfly(90, 100, 110))


def test_one_step_lattice_by_hand():
    K, S, vol, r = 110.0, 100.0, 0.2, 0.05
    u, d = math.exp(vol), math.exp(-vol)
    q = (math.exp(r) - d) / (u - d)
    euro = math.exp(-r) * (q * max(K - S * u, 0) + (1 - q) * max(K - S * d, 0))
    amer = max(euro, K - S)
    a, e = am.binomial_american(po.put(K), S, vol, r, 1.0, 1)
    assert e == pytest.approx(euro, rel=1e-14) and a == pytest.approx(amer, rel=1e-14)


def test_call_without_rate_has_no_early_exercise():
    a, e = am.binomial_american(po.call(100), 100, 0.2, 0.0, 1.0, 1000)
    assert a == pytest.approx(e, abs=1e-12)


@pytest.mark.parametrize("payoff, tol", [(po.put(100), 0.05), (po.call(100), 0.05),
                                         # quoted in squared price units: 0.05% of its own value
                                         (po.power_call(2, 10000), 5e-4 * 2432.7)])
def test_lattice_european_converges_to_closed_form(payoff, tol):
    curve = mk.bs_curve(100, 0.2, 0.05, 1.0)
    _, euro = am.binomial_american(payoff, 100, 0.2, 0.05, 1.0, 2000)
    assert abs(euro - price_convex(po.convex_decompose(payoff), curve).value) <= tol


@pytest.mark.parametrize("rate", [0.0, 0.05])
@pytest.mark.parametrize("vol", [0.1, 0.3])
@pytest.mark.parametrize("payoff", [po.put(100), po.call(100), po.straddle(100), po.power_call(2, 10000)])
def test_bound_validity_grid(rate, vol, payoff):
    r = bound_for(payoff, vol=vol, rate=rate)
    r = am.with_oracle(r, payoff, 100.0, vol, rate, 1.0, 1000)
    assert r.oracle_value <= r.bound + 5 * r.lattice_error + 1e-12
    assert r.oracle_value >= r.european_value - 5 * r.lattice_error - 1e-12
    if r.equality_certified:
        assert abs(r.oracle_value - r.oracle_european) <= r.lattice_error + 1e-12


def test_lattice_rejects_bad_inputs():
    with pytest.raises(BadParams):
        am.binomial_american(po.put(100), 100, 0.2, 0.05, 1.0, 0)
    with pytest.raises(BadParams):
        am.binomial_american(po.put(100), 100, 0.01, 5.0, 1.0, 1)
