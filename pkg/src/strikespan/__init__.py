"""Pricing and static hedging of general payoffs from call and digital price curves."""

from .american import AmericanBoundReport, american_bound, binomial_american, equality_certificate
from .barrier import BarrierPriceReport, price_barrier
from .hedge import (
    HedgePortfolio,
    build_call_spread_hedge,
    build_digital_hedge,
    price_portfolio,
    replication_report,
    terminal_payoff,
)
from .market import (
    BarrierEvent,
    Bond,
    BSCurve,
    EmpiricalCurve,
    JointCallCurve,
    SamplePool,
    TableCurve,
    bs_curve,
    empirical_curve,
    gbm_pool,
    joint_curve,
    mc_price,
    table_curve,
)
from .payoff import ConvexDecomposition, Payoff, Segment, builtin_catalog, convex_decompose
from .pricer import (
    PriceReport,
    price,
    price_all,
    price_bick,
    price_bl,
    price_convex,
    price_lebesgue,
    price_theorem1,
    price_windowed,
    validate_class,
)
from .quadrature import QuadConfig

__version__ = "0.1.0"
