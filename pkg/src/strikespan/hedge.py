"""Static hedges: a bond/digital strip, or call spreads over a window."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadGrid, BadWindow
from .market import CallCurve, SamplePool, empirical_curve, mc_price
from .payoff import Payoff, poly_segment


@dataclass(frozen=True)
class DigitalPosition:
    strike: float
    weight: float
    flavor: str  # "ge" pays 1{x >= K}, "gt" pays 1{x > K}


@dataclass(frozen=True)
class CallSpread:
    lo: float
    hi: float
    weight: float  # weight * ((x - lo)^+ - (x - hi)^+)


@dataclass(frozen=True)
class HedgePortfolio:
    kind: str
    cash: float = 0.0
    digitals: tuple[DigitalPosition, ...] = ()
    call_spreads: tuple[CallSpread, ...] = ()
    partition: tuple[float, ...] = field(default=(), repr=False)

    def terminal_payoff(self, x):
        return terminal_payoff(self, x)


def terminal_payoff(h: HedgePortfolio, x):
    """Payoff of the portfolio when the underlying ends at ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, float(h.cash))
    for d in h.digitals:
        out = out + d.weight * ((x >= d.strike) if d.flavor == "ge" else (x > d.strike))
    for s in h.call_spreads:
        out = out + s.weight * (np.maximum(x - s.lo, 0.0) - np.maximum(x - s.hi, 0.0))
    return out if out.ndim else float(out)


def build_digital_hedge(p: Payoff, grid) -> HedgePortfolio:
    """Bond + digital strip replicating ``p`` on [0, grid[-1]].

    Cell [a_j, a_{j+1}] contributes f'(midpoint) * width digitals paying
    1{x > a_j}; each value jump adds an exact digital (``ge`` for left jumps,
    ``gt`` for right jumps).
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2 or g[0] != 0.0 or np.any(np.diff(g) <= 0):
        raise BadGrid("grid must start at 0 and be strictly increasing")
    kinks = p.kinks[p.kinks <= g[-1]]
    missing = np.setdiff1d(kinks, g)
    if missing.size:
        raise BadGrid(f"grid misses payoff boundary points {missing.tolist()}")
    mid = 0.5 * (g[:-1] + g[1:])
    w = np.asarray(p.deriv(mid), dtype=float) * np.diff(g)
    strip = [DigitalPosition(float(a), float(wj), "gt") for a, wj in zip(g[:-1], w)]
    jumps = []
    for j in p.jumps():
        if j.strike > g[-1]:
            continue
        if j.left:
            jumps.append(DigitalPosition(j.strike, j.left, "ge"))
        if j.right:
            jumps.append(DigitalPosition(j.strike, j.right, "gt"))
    return HedgePortfolio("digital_strip", float(p.eval(0.0)), tuple(strip + jumps), (), tuple(g.tolist()))


def build_call_spread_hedge(p: Payoff, alpha: float, beta: float, n: int | None = None, nodes=None) -> HedgePortfolio:
    """Hedge of f(x) 1{alpha <= x <= beta} by two digitals and n call spreads.

    The spreads interpolate f linearly between partition nodes, with slope
    c_k = (f(a_{k+1}) - f(a_k)) / (a_{k+1} - a_k) on each cell.
    """
    alpha, beta = float(alpha), float(beta)
    if not (0.0 <= alpha < beta < math.inf):
        raise BadWindow(f"need 0 <= alpha < beta < inf, got ({alpha}, {beta})")
    if nodes is None:
        if n is None or int(n) < 1:
            raise BadWindow("need n >= 1 cells or explicit nodes")
        a = np.linspace(alpha, beta, int(n) + 1)
    else:
        a = np.asarray(nodes, dtype=float)
        if a[0] != alpha or a[-1] != beta or np.any(np.diff(a) <= 0):
            raise BadWindow("nodes must increase strictly from alpha to beta")
    for j in p.jumps():
        if alpha < j.strike < beta or (j.strike == alpha and j.right) or (j.strike == beta and j.left):
            raise BadWindow(f"payoff is not continuous on the window (jump at {j.strike})")
    fa = np.asarray(p.eval(a), dtype=float)
    c = np.diff(fa) / np.diff(a)
    spreads = tuple(CallSpread(float(lo), float(hi), float(ck)) for lo, hi, ck in zip(a[:-1], a[1:], c))
    digitals = (DigitalPosition(alpha, float(fa[0]), "ge"), DigitalPosition(beta, -float(fa[-1]), "gt"))
    return HedgePortfolio("call_spread", 0.0, digitals, spreads, tuple(a.tolist()))


def approximating_payoff(h: HedgePortfolio) -> Payoff:
    """The windowed linear interpolant g_n that a call-spread hedge pays, as a Payoff."""
    if h.kind != "call_spread":
        raise ValueError("only call-spread portfolios have a windowed interpolant")
    a = np.asarray(h.partition)
    ys = terminal_payoff(h, a)  # node values f(a_k)
    segs = [poly_segment(0.0, a[0], [0.0])] if a[0] > 0 else []
    for k, s in enumerate(h.call_spreads):
        segs.append(poly_segment(s.lo, s.hi, [ys[k] - s.weight * s.lo, s.weight]))
    segs.append(poly_segment(a[-1], math.inf, [0.0]))
    pv = {float(x): float(y) for x, y in zip(a, ys)}
    return Payoff(tuple(segs), pv, "call-spread interpolant")


def price_portfolio(h: HedgePortfolio, curve: CallCurve) -> float:
    """Value of the portfolio off a call curve: bond, digitals and call spreads."""
    d = curve.discount
    terms = [d * h.cash * curve.mass]
    if h.digitals:
        k = np.array([q.strike for q in h.digitals])
        ge, gt = curve.digital_ge(k), curve.digital_gt(k)
        terms += [d * q.weight * (ge[i] if q.flavor == "ge" else gt[i]) for i, q in enumerate(h.digitals)]
    if h.call_spreads:
        lo = curve.lam(np.array([s.lo for s in h.call_spreads]))
        hi = curve.lam(np.array([s.hi for s in h.call_spreads]))
        terms += [s.weight * (lo[i] - hi[i]) for i, s in enumerate(h.call_spreads)]
    return math.fsum(float(t) for t in terms)


@dataclass(frozen=True)
class ReplicationReport:
    sup_error: float
    mean_abs_error: float
    value_gap: float


def replication_report(h: HedgePortfolio, p: Payoff, pool: SamplePool, discount: float | None = None) -> ReplicationReport:
    """Pathwise errors over the pool and the portfolio-vs-Monte-Carlo value gap."""
    x = pool.terminal
    err = np.abs(terminal_payoff(h, x) - np.asarray(p.eval(x), dtype=float))
    d = pool.discount if discount is None else discount
    gap = price_portfolio(h, empirical_curve(pool, d)) - mc_price(pool, p, d)[0]
    return ReplicationReport(float(err.max()), float(err.mean()), float(gap))


def grid_errors(h: HedgePortfolio, p: Payoff, lo: float, hi: float, n: int = 10_000) -> tuple[float, float]:
    """(sup, mean) absolute replication error on ``n`` uniform points of [lo, hi]."""
    x = np.linspace(lo, hi, n)
    err = np.abs(terminal_payoff(h, x) - np.asarray(p.eval(x), dtype=float))
    return float(err.max()), float(err.mean())


def to_csv(h: HedgePortfolio) -> str:
    """Export as ``instrument,strike,strike2,weight,flavor`` rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instrument", "strike", "strike2", "weight", "flavor"])
    if h.kind == "digital_strip" or h.cash:
        w.writerow(["cash", "", "", repr(float(h.cash)), ""])
    for d in h.digitals:
        w.writerow(["digital", repr(d.strike), "", repr(d.weight), d.flavor])
    for s in h.call_spreads:
        w.writerow(["callspread", repr(s.lo), repr(s.hi), repr(s.weight), ""])
    return buf.getvalue()
