"""European prices from a call curve.

The primary form prices f(X_T) as

    D f(0) - int f'(a) lam(da) + D sum jl(s_k) Q(X_T >= s_k) + D sum jr(s_k) Q(X_T > s_k)

where jl/jr are the left/right value jumps of f.  The other forms (digital
integral, second-derivative/Bick, density, convex) are algebraically equal
rearrangements and serve as cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    BadWindow,
    DensityUnavailable,
    NotConvex,
    SecondDerivativeUnavailable,
    TailConditionFailed,
)
from .market import BSCurve, CallCurve, EmpiricalCurve, TableCurve
from .payoff import ConvexDecomposition, Payoff, convex_decompose
from .quadrature import QuadConfig, stieltjes

FORMS = ("theorem1", "lebesgue", "bick", "bl", "convex")
DIGITAL_CUTOFF = 1e-9
TAIL_CONDITION = "tail condition lim |f(x-)| Q(X_T >= x) = 0"


@dataclass(frozen=True)
class PriceReport:
    form: str
    value: float
    cash_term: float
    integral_term: float
    jump_left_term: float
    jump_right_term: float
    kink_term: float = 0.0
    truncation: float = math.nan
    tail_bound: float = 0.0
    n_quadrature: int = 0
    quad_error: float = 0.0

    @staticmethod
    def total(cash, integral, jl, jr, kink=0.0) -> float:
        return cash + integral + jl + jr + kink

    def as_dict(self) -> dict:
        return asdict(self)


def _report(form, cash, integral, jl, jr, kink=0.0, **kw) -> PriceReport:
    return PriceReport(form, PriceReport.total(cash, integral, jl, jr, kink), cash, integral, jl, jr, kink, **kw)


@dataclass
class ValidityReport:
    integrable: bool
    tail_decay: bool
    stieltjes: bool
    tail_products: list[tuple[float, float]] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.integrable and self.tail_decay and self.stieltjes

    def raise_if_invalid(self):
        if not self.tail_decay:
            raise TailConditionFailed(f"{TAIL_CONDITION} fails: " + "; ".join(self.messages))
        if not self.integrable:
            raise TailConditionFailed("integrability of f(X_T) fails: " + "; ".join(self.messages))
        if not self.stieltjes:
            raise TailConditionFailed("Stieltjes integral of f' against the call curve does not exist: "
                                      + "; ".join(self.messages))


def _anchor(p: Payoff, curve: CallCurve) -> float:
    kinks = p.kinks
    top = float(kinks.max()) if kinks.size else 0.0
    fwd = curve.forward / curve.discount if curve.mass > 0 else 0.0
    return max(1.0, top, fwd / max(curve.mass, 1e-300))


def validate_class(p: Payoff, curve: CallCurve, cfg: QuadConfig | None = None, grid_points: int = 41) -> ValidityReport:
    """Check integrability, tail decay and Stieltjes integrability of ``p`` on ``curve``."""
    cfg = (cfg or QuadConfig()).resolve(curve.forward)
    a0 = _anchor(p, curve)
    grid = a0 * 2.0 ** np.arange(grid_points)
    msgs = []
    with np.errstate(over="ignore", invalid="ignore"):
        fa = np.abs(np.asarray(p.eval(grid), dtype=float))
        prod = fa * np.asarray(curve.digital_ge(grid), dtype=float)
    prod = np.where(fa == 0, 0.0, prod)
    tail = bool(np.all(np.isfinite(prod)) and prod[-1] < cfg.tail_tol and np.all(np.diff(prod[-3:]) <= 0))
    if not tail:
        bad = grid[~np.isfinite(prod)]
        where = f"non-finite from strike {bad[0]:.4g}" if bad.size else f"last product {prod[-1]:.3g}"
        msgs.append(f"|f(a)| Q(X_T >= a) does not vanish on the grid a = {a0:.4g} * 2^m ({where})")

    integrable = True
    with np.errstate(over="ignore", invalid="ignore"):
        if isinstance(curve, BSCurve) or curve.is_lognormal():
            # lognormal has all moments: polynomial growth of f suffices
            big = a0 * 2.0 ** np.arange(10, 16)
            fb = np.abs(np.asarray(p.eval(big), dtype=float))
            if not np.all(np.isfinite(fb)):
                integrable = False
            else:
                nz = fb > 0
                if nz.sum() >= 2:
                    growth = np.diff(np.log2(fb[nz]))
                    integrable = bool(np.all(growth <= 64))
            if not integrable:
                msgs.append("payoff grows faster than any polynomial; E|f(X_T)| not certified under lognormal law")
        elif isinstance(curve, EmpiricalCurve):
            vals = np.asarray(p.eval(curve.samples), dtype=float)
            full = np.mean(np.abs(vals)) if vals.size else 0.0
            half = np.mean(np.abs(vals[::2])) if vals.size else 0.0
            integrable = bool(np.isfinite(full) and np.isfinite(half))
            if not integrable:
                msgs.append("sample mean of |f| is not finite")
        elif isinstance(curve, TableCurve):
            xs = np.linspace(0.0, curve.upper_strike(), 1025)
            integrable = bool(np.all(np.isfinite(p.eval(xs))))
            if not integrable:
                msgs.append("payoff not finite on the support of the quoted law")

    a_hi = curve.upper_strike(1e-9)
    xs = np.linspace(0.0, a_hi if math.isfinite(a_hi) and a_hi > 0 else a0, 1025)[1:]
    with np.errstate(over="ignore", invalid="ignore"):
        stj = bool(np.all(np.isfinite(p.deriv(xs))))
    if not stj:
        msgs.append("f' is not finite where the curve has mass")
    return ValidityReport(integrable, tail, stj, list(zip(grid.tolist(), prod.tolist())), msgs)


def truncation(p: Payoff, curve: CallCurve, cfg: QuadConfig) -> tuple[float, float]:
    """Smallest a = a0 2^m with Q(X_T >= a) < 1e-9 and |f(a)| Q(X_T >= a) < tail_tol.

    Returns (a_max, tail_bound) with tail_bound = D |f(a_max)| Q(X_T >= a_max).
    """
    a0 = _anchor(p, curve)
    for m in range(80):
        a = a0 * 2.0 ** m
        dg = float(curve.digital_ge(np.array([a]))[0])
        with np.errstate(over="ignore", invalid="ignore"):
            fa = abs(float(p.eval(a)))
        prod = 0.0 if dg == 0.0 else fa * dg
        if dg < DIGITAL_CUTOFF and prod < cfg.tail_tol:
            return a, curve.discount * prod
    raise TailConditionFailed(f"{TAIL_CONDITION}: no truncation point found up to {a:.3g}")


def _nodes(p: Payoff, lo: float, hi: float, cfg: QuadConfig, extra=None) -> np.ndarray:
    parts = [np.linspace(lo, hi, cfg.initial_cells + 1)]
    k = p.boundaries
    parts.append(k[(k > lo) & (k < hi)])
    if extra is not None and len(extra):
        e = np.asarray(extra, dtype=float)
        parts.append(e[(e > lo) & (e < hi)])
    return np.unique(np.concatenate(parts))


def _prepare(p: Payoff, curve: CallCurve, cfg: QuadConfig | None):
    cfg = (cfg or QuadConfig()).resolve(curve.forward)
    validate_class(p, curve, cfg).raise_if_invalid()
    a_max, tail = truncation(p, curve, cfg)
    return cfg, a_max, tail


def _jump_terms(p: Payoff, curve: CallCurve) -> tuple[float, float]:
    jl, jr = [], []
    for j in p.jumps():
        s = np.array([j.strike])
        if j.left:
            jl.append(j.left * float(curve.digital_ge(s)[0]))
        if j.right:
            jr.append(j.right * float(curve.digital_gt(s)[0]))
    return curve.discount * math.fsum(jl), curve.discount * math.fsum(jr)


def _cash(f0: float, curve: CallCurve) -> float:
    return curve.discount * f0 * curve.mass


def price_theorem1(p: Payoff, curve: CallCurve, cfg: QuadConfig | None = None, form: str = "theorem1") -> PriceReport:
    """Price via call-curve increments: the Stieltjes integral of f' against lam."""
    cfg, a_max, tail = _prepare(p, curve, cfg)
    q = stieltjes(p.deriv, curve.lam, _nodes(p, 0.0, a_max, cfg), cfg.tol, cfg.max_nodes)
    jl, jr = _jump_terms(p, curve)
    return _report(form, _cash(p.eval(0.0), curve), -q.value, jl, jr,
                   truncation=a_max, tail_bound=tail, n_quadrature=q.n_nodes, quad_error=q.error)


def price_lebesgue(p: Payoff, curve: CallCurve, cfg: QuadConfig | None = None) -> PriceReport:
    """Same as the primary form with the integral taken as int f'(a) D Q(X_T > a) da."""
    cfg, a_max, tail = _prepare(p, curve, cfg)
    d = curve.discount

    def integrand(a):
        return p.deriv(a) * d * curve.digital_gt(a)

    nodes = _nodes(p, 0.0, a_max, cfg, extra=curve.breakpoints())
    q = stieltjes(integrand, None, nodes, cfg.tol, max(cfg.max_nodes, nodes.size))
    jl, jr = _jump_terms(p, curve)
    return _report("lebesgue", _cash(p.eval(0.0), curve), q.value, jl, jr,
                   truncation=a_max, tail_bound=tail, n_quadrature=q.n_nodes, quad_error=q.error)


def price_bick(p: Payoff, curve: CallCurve, cfg: QuadConfig | None = None) -> PriceReport:
    """int f''(a) lam(a) da plus slope-change terms (f'(s+) - f'(s-)) lam(s), with f'(0-) = 0."""
    if not p.has_second_derivative():
        raise SecondDerivativeUnavailable(f"{p.label or 'payoff'} does not carry f''")
    cfg, a_max, tail = _prepare(p, curve, cfg)

    def integrand(a):
        return p.second(a) * curve.lam(a)

    q = stieltjes(integrand, None, _nodes(p, 0.0, a_max, cfg), cfg.tol, cfg.max_nodes)
    changes = p.slope_changes()
    lam_s = curve.lam(np.array([s for s, _ in changes]))
    kink = math.fsum(dm * float(ls) for (_, dm), ls in zip(changes, lam_s))
    jl, jr = _jump_terms(p, curve)
    return _report("bick", _cash(p.eval(0.0), curve), q.value, jl, jr, kink,
                   truncation=a_max, tail_bound=tail, n_quadrature=q.n_nodes, quad_error=q.error)


def price_bl(p: Payoff, curve: CallCurve, cfg: QuadConfig | None = None) -> PriceReport:
    """int f(a) lam''(a) da against the curve's closed-form density."""
    if not curve.has_density:
        raise DensityUnavailable(f"{type(curve).__name__} exposes no second strike derivative")
    cfg, a_max, tail = _prepare(p, curve, cfg)

    def integrand(a):
        return p.eval(a) * curve.density(a)

    q = stieltjes(integrand, None, _nodes(p, 0.0, a_max, cfg), cfg.tol, cfg.max_nodes)
    return _report("bl", 0.0, q.value, 0.0, 0.0,
                   truncation=a_max, tail_bound=tail, n_quadrature=q.n_nodes, quad_error=q.error)


def price_convex(d: ConvexDecomposition, curve: CallCurve, cfg: QuadConfig | None = None) -> PriceReport:
    """D f(0) + f'(0+) lam(0) + sum m_i lam(a_i) + int lam(a) density(a) da."""
    cfg = (cfg or QuadConfig()).resolve(curve.forward)
    kink = d.slope0 * curve.forward + math.fsum(
        m * float(curve.lam(np.array([a]))[0]) for a, m in d.atoms
    )
    integral, a_max, tail, n, err = 0.0, math.nan, 0.0, 0, 0.0
    if d.has_density:
        top = max([1.0, curve.forward / curve.discount] + list(d.breaks))
        for k in range(80):
            a_max = top * 2.0 ** k
            lam_a = float(curve.lam(np.array([a_max]))[0])
            dens = float(d.density(np.array([a_max]))[0])
            tail = lam_a * max(1.0, a_max * dens)
            if float(curve.digital_ge(np.array([a_max]))[0]) < DIGITAL_CUTOFF and tail < cfg.tail_tol:
                break
        else:
            raise TailConditionFailed("call curve times kink density does not vanish")
        b = np.asarray(d.breaks)
        nodes = np.unique(np.concatenate([np.linspace(0.0, a_max, cfg.initial_cells + 1), b[b < a_max]]))
        q = stieltjes(lambda a: curve.lam(a) * d.density(a), None, nodes, cfg.tol, cfg.max_nodes)
        integral, n, err = q.value, q.n_nodes, q.error
    return _report("convex", _cash(d.f0, curve), integral, 0.0, 0.0, kink,
                   truncation=a_max, tail_bound=tail, n_quadrature=n, quad_error=err)


def price_windowed(p: Payoff, alpha: float, beta: float, closed: tuple[bool, bool], curve: CallCurve,
                   cfg: QuadConfig | None = None) -> PriceReport:
    """Price f(X_T) 1{X_T in window} for a window [alpha, beta] with open/closed ends.

    f must be continuous on the closed window (one-sided limits are used at
    open ends) and may have kinks inside it.
    """
    alpha, beta = float(alpha), float(beta)
    if not (0.0 <= alpha < beta < math.inf):
        raise BadWindow(f"need 0 <= alpha < beta < inf, got ({alpha}, {beta})")
    cfg = (cfg or QuadConfig()).resolve(curve.forward)
    for j in p.jumps():
        s = j.strike
        if alpha < s < beta and (j.left or j.right):
            raise BadWindow(f"payoff jumps at {s} inside the window")
        if s == alpha and closed[0] and j.right:
            raise BadWindow(f"payoff is not right-continuous at the closed end {alpha}")
        if s == beta and closed[1] and j.left:
            raise BadWindow(f"payoff is not left-continuous at the closed end {beta}")
    d = curve.discount
    fa = p.limit_right(alpha)
    fb = p.limit_left(beta) if beta > 0 else p.eval(beta)
    a_arr, b_arr = np.array([alpha]), np.array([beta])
    left = d * fa * float((curve.digital_ge if closed[0] else curve.digital_gt)(a_arr)[0])
    right = -d * fb * float((curve.digital_gt if closed[1] else curve.digital_ge)(b_arr)[0])
    q = stieltjes(p.deriv, curve.lam, _nodes(p, alpha, beta, cfg), cfg.tol, cfg.max_nodes)
    return _report("windowed", 0.0, -q.value, left, right, truncation=beta,
                   n_quadrature=q.n_nodes, quad_error=q.error)


def price(p: Payoff, curve: CallCurve, form: str = "theorem1", cfg: QuadConfig | None = None) -> PriceReport:
    if form == "theorem1":
        return price_theorem1(p, curve, cfg)
    if form == "lebesgue":
        return price_lebesgue(p, curve, cfg)
    if form == "bick":
        return price_bick(p, curve, cfg)
    if form == "bl":
        return price_bl(p, curve, cfg)
    if form == "convex":
        return price_convex(convex_decompose(p), curve, cfg)
    raise ValueError(f"unknown form {form!r}; choose from {FORMS}")


def price_all(p: Payoff, curve: CallCurve, cfg: QuadConfig | None = None) -> dict[str, PriceReport | str]:
    """Every form, with the reason in place of a report where a form does not apply."""
    out: dict[str, PriceReport | str] = {}
    for form in FORMS:
        try:
            out[form] = price(p, curve, form, cfg)
        except (NotConvex, SecondDerivativeUnavailable, DensityUnavailable) as exc:
            out[form] = f"n/a: {exc}"
    return out
