"""Barrier-type payoffs f(X_T) 1{Y in C} priced from a joint call curve."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .market import JointCallCurve
from .payoff import Payoff
from .pricer import price_theorem1
from .quadrature import QuadConfig


@dataclass(frozen=True)
class BarrierPriceReport:
    value: float
    cash_term: float
    integral_term: float
    jump_left_term: float
    jump_right_term: float
    barrier_prob: float
    truncation: float
    n_quadrature: int

    def as_dict(self) -> dict:
        return asdict(self)


def price_barrier(p: Payoff, jc: JointCallCurve, cfg: QuadConfig | None = None) -> BarrierPriceReport:
    """Knock-in/knock-out value from the event-weighted call curve.

    Every term of the vanilla formula carries the event: the cash term is
    scaled by Q(Y in C) and the digitals become Q(X_T >= s, Y in C) and
    Q(X_T > s, Y in C).  Tolerances scale with the unconditioned forward so
    that complementary events are priced on the same footing.
    """
    if cfg is None or cfg.tol is None:
        scale = jc.forward / jc.mass if jc.mass > 0 else jc.forward
        cfg = (cfg or QuadConfig()).resolve(scale)
    r = price_theorem1(p, jc, cfg)
    return BarrierPriceReport(r.value, r.cash_term, r.integral_term, r.jump_left_term, r.jump_right_term,
                              jc.barrier_prob, r.truncation, r.n_quadrature)
