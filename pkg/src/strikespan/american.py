"""Upper bound on American values for convex payoffs, and a CRR lattice oracle."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import BadParams
from .market import CallCurve
from .payoff import ConvexDecomposition, Payoff
from .pricer import price_convex
from .quadrature import QuadConfig


@dataclass(frozen=True)
class Certificate:
    equal: bool
    reasons: tuple[str, ...]


def equality_certificate(d: ConvexDecomposition, bond_constant: bool, martingale: bool) -> Certificate:
    """American == European when (B constant or f(0) <= 0) and (martingale or f'(0+) >= 0).

    Takes a convex decomposition, so non-convex payoffs have already been
    rejected by ``convex_decompose``.
    """
    reasons = []
    c1 = bond_constant or d.f0 <= 0
    if bond_constant:
        reasons.append("bond is constant")
    if d.f0 <= 0:
        reasons.append(f"f(0) = {d.f0:g} <= 0")
    c2 = martingale or d.slope0 >= 0
    if martingale:
        reasons.append("discounted underlying is a martingale")
    if d.slope0 >= 0:
        reasons.append(f"f'(0+) = {d.slope0:g} >= 0")
    if not c1:
        reasons.append(f"fails: bond grows and f(0) = {d.f0:g} > 0")
    if not c2:
        reasons.append(f"fails: strict submartingale and f'(0+) = {d.slope0:g} < 0")
    return Certificate(c1 and c2, tuple(reasons))


@dataclass(frozen=True)
class AmericanBoundReport:
    european_value: float
    bound: float
    cash_gap: float
    slope_gap: float
    equality_certified: bool
    reasons: tuple[str, ...] = ()
    gap_ratio: float | None = None
    oracle_value: float | None = None
    oracle_european: float | None = None
    lattice_error: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def american_bound(d: ConvexDecomposition, curve: CallCurve, spot_discounted: float,
                   bond_discount_now: float = 1.0, *, martingale: bool = True,
                   cfg: QuadConfig | None = None) -> AmericanBoundReport:
    """European value plus the cash and slope gaps.

    ``spot_discounted`` is the discounted underlying now and
    ``bond_discount_now`` is B_t^{-1}; ``curve`` prices the remaining period
    with lam(0) = E[discounted X_T].
    """
    european = price_convex(d, curve, cfg).value
    cash_gap = max(0.0, d.f0) * (bond_discount_now - curve.discount)
    slope_gap = min(0.0, d.slope0) * (spot_discounted - curve.forward)
    cert = equality_certificate(d, bond_discount_now == curve.discount, martingale)
    bound = european + cash_gap + slope_gap
    ratio = (cash_gap + slope_gap) / european if european != 0 else None
    return AmericanBoundReport(european, bound, cash_gap, slope_gap, cert.equal, cert.reasons, ratio)


def binomial_american(p: Payoff, spot: float, vol: float, rate: float, maturity: float,
                      steps: int) -> tuple[float, float]:
    """(American, European) values of ``p`` on a CRR lattice with ``steps`` steps.

    Backward induction V_j = max(e^{-r dt} E[V_{j+1}], f(X_j)) for the
    American value; the European value uses the same tree without exercise.
    """
    if int(steps) < 1 or not (spot > 0 and vol > 0 and maturity > 0):
        raise BadParams("need steps >= 1, spot > 0, vol > 0, maturity > 0")
    n = int(steps)
    dt = maturity / n
    u = math.exp(vol * math.sqrt(dt))
    dn = 1.0 / u
    q = (math.exp(rate * dt) - dn) / (u - dn)
    if not 0 < q < 1:
        raise BadParams(f"risk-neutral probability {q:.4g} outside (0, 1); use more steps")
    disc = math.exp(-rate * dt)
    j = np.arange(n + 1)
    amer = np.asarray(p.eval(spot * u ** (2.0 * j - n)), dtype=float)
    euro = amer.copy()
    for i in range(n - 1, -1, -1):
        amer = disc * (q * amer[1:] + (1 - q) * amer[:-1])
        euro = disc * (q * euro[1:] + (1 - q) * euro[:-1])
        j = np.arange(i + 1)
        amer = np.maximum(amer, p.eval(spot * u ** (2.0 * j - i)))
    return float(amer[0]), float(euro[0])


def with_oracle(report: AmericanBoundReport, p: Payoff, spot: float, vol: float, rate: float,
                maturity: float, steps: int) -> AmericanBoundReport:
    """Attach the lattice American value and |V_steps - V_2steps| as its error estimate."""
    a1, e1 = binomial_american(p, spot, vol, rate, maturity, steps)
    a2, _ = binomial_american(p, spot, vol, rate, maturity, 2 * steps)
    return replace(report, oracle_value=a1, oracle_european=e1, lattice_error=abs(a1 - a2))
