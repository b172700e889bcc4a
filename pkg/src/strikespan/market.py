"""Call-price curves, barrier events and the Monte Carlo sample pools behind them.

Every curve exposes, as vectorised functions of strike ``a``:

* ``lam(a)``        discounted call value E[D (X_T - a)^+]
* ``digital_ge(a)`` Q(X_T >= a)   (undiscounted)
* ``digital_gt(a)`` Q(X_T > a)

Joint (barrier) curves carry the event indicator inside every expectation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import norm

from .errors import ArbitrageViolation, BadParams, DensityUnavailable
from .payoff import Payoff

GBM_STEPS = 256
BLOCK = 1 << 14


@dataclass(frozen=True)
class Bond:
    """Deterministic bond with B_0 = 1 and constant short rate."""

    rate: float = 0.0

    def __post_init__(self):
        if self.rate < 0:
            raise BadParams("bond must be nondecreasing: rate >= 0")

    def discount(self, t: float) -> float:
        """B_t^{-1}."""
        return math.exp(-self.rate * t)


class CallCurve:
    """Common interface of every call-price backend."""

    maturity: float
    discount: float

    def lam(self, a):
        raise NotImplementedError

    def digital_ge(self, a):
        raise NotImplementedError

    def digital_gt(self, a):
        raise NotImplementedError

    def density(self, a):
        raise DensityUnavailable(f"{type(self).__name__} has no second derivative in strike")

    def breakpoints(self) -> np.ndarray:
        """Strikes where lam is not smooth (empty for smooth backends)."""
        return np.empty(0)

    def upper_strike(self, tail: float = 1e-6) -> float:
        """A strike beyond which Q(X_T >= a) < tail."""
        raise NotImplementedError

    @property
    def forward(self) -> float:
        """lam(0) = E[D X_T] (times Q(Y in C) weighting for joint curves)."""
        return float(self.lam(np.array([0.0]))[0])

    @property
    def mass(self) -> float:
        """Q(X_T >= 0), i.e. 1 for plain curves and Q(Y in C) for joint ones."""
        return float(self.digital_ge(np.array([0.0]))[0])

    @property
    def has_density(self) -> bool:
        return False

    def is_lognormal(self) -> bool:
        return False


# -- analytic lognormal --------------------------------------------------------
@dataclass(frozen=True)
class BSCurve(CallCurve):
    spot: float
    vol: float
    rate: float
    maturity: float

    def __post_init__(self):
        for name in ("spot", "vol", "maturity"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise BadParams(f"{name} must be positive, got {v}")
        if not math.isfinite(self.rate):
            raise BadParams("rate must be finite")

    @property
    def discount(self) -> float:
        return math.exp(-self.rate * self.maturity)

    @property
    def fwd_price(self) -> float:
        return self.spot * math.exp(self.rate * self.maturity)

    def _d2(self, a):
        a = np.asarray(a, dtype=float)
        sd = self.vol * math.sqrt(self.maturity)
        with np.errstate(divide="ignore"):
            return (np.log(self.fwd_price / a) - 0.5 * sd * sd) / sd

    def lam(self, a):
        a = np.asarray(a, dtype=float)
        sd = self.vol * math.sqrt(self.maturity)
        d2 = self._d2(a)
        with np.errstate(invalid="ignore"):
            v = self.discount * (self.fwd_price * norm.cdf(d2 + sd) - a * norm.cdf(d2))
        return np.where(a <= 0, self.spot - self.discount * np.minimum(a, 0.0), np.maximum(v, 0.0))

    def digital_ge(self, a):
        a = np.asarray(a, dtype=float)
        return np.where(a <= 0, 1.0, norm.cdf(self._d2(a)))

    digital_gt = digital_ge

    def density(self, a):
        """lam''(a) = D * lognormal pdf of X_T at a."""
        a = np.asarray(a, dtype=float)
        sd = self.vol * math.sqrt(self.maturity)
        with np.errstate(divide="ignore", invalid="ignore"):
            pdf = norm.pdf(self._d2(a)) / (a * sd)
        return np.where(a > 0, self.discount * pdf, 0.0)

    @property
    def has_density(self) -> bool:
        return True

    def is_lognormal(self) -> bool:
        return True

    def quantile(self, q: float) -> float:
        sd = self.vol * math.sqrt(self.maturity)
        return self.fwd_price * math.exp(-0.5 * sd * sd + sd * norm.ppf(q))

    def upper_strike(self, tail: float = 1e-6) -> float:
        return self.quantile(1.0 - tail)


def bs_curve(spot: float, vol: float, rate: float, maturity: float) -> BSCurve:
    return BSCurve(float(spot), float(vol), float(rate), float(maturity))


# -- quoted table, piecewise linear ---------------------------------------------
class TableCurve(CallCurve):
    """Piecewise-linear call curve through quotes.

    Below the first quote the first slope is continued down to strike 0;
    past the last quote the last slope runs to zero at ``a_star`` and the
    curve is zero beyond.  Digitals are minus the one-sided slopes over D:
    ``digital_ge`` uses the left slope, ``digital_gt`` the right slope.
    """

    def __init__(self, strikes, prices, discount: float, maturity: float = float("nan"), digital_override=None):
        k = np.asarray(strikes, dtype=float)
        c = np.asarray(prices, dtype=float)
        if k.ndim != 1 or k.size < 2 or k.size != c.size:
            raise BadParams("need at least two (strike, price) rows")
        if not 0 < discount <= 1:
            raise BadParams("discount must lie in (0, 1]")
        if k[0] < 0 or np.any(np.diff(k) <= 0):
            raise BadParams("strikes must be nonnegative and strictly increasing")
        if np.any(c <= 0):
            bad = int(np.argmax(c <= 0))
            raise ArbitrageViolation(f"call price must be positive at strike {k[bad]:g}")
        slopes = np.diff(c) / np.diff(k)
        for i, s in enumerate(slopes):
            if s > 0:
                raise ArbitrageViolation(f"call price increases between strikes {k[i]:g} and {k[i + 1]:g}")
            if s < -discount * (1 + 1e-12):
                raise ArbitrageViolation(
                    f"call spread {k[i]:g}/{k[i + 1]:g} worth more than a discounted digital"
                )
        for i in range(len(k) - 2):
            if slopes[i + 1] < slopes[i] - 1e-12 * max(1.0, abs(slopes[i])):
                raise ArbitrageViolation(
                    f"negative butterfly at strikes ({k[i]:g}, {k[i + 1]:g}, {k[i + 2]:g})"
                )
        if slopes[-1] >= 0:
            raise ArbitrageViolation(f"flat positive tail after strike {k[-1]:g}; call value never reaches 0")
        a_star = k[-1] + c[-1] / -slopes[-1]
        nodes = k
        values = c
        if k[0] > 0:
            nodes = np.concatenate([[0.0], k])
            values = np.concatenate([[c[0] - slopes[0] * k[0]], c])
        self.nodes = np.concatenate([nodes, [a_star]])
        self.values = np.concatenate([values, [0.0]])
        # reuse the quote slopes for the extensions so equal slopes stay bit-identical
        ext = np.concatenate([slopes[:1]] * int(k[0] > 0) + [slopes, slopes[-1:]])
        self.slopes = np.maximum.accumulate(ext)
        self.discount = float(discount)
        self.maturity = float(maturity)
        self.a_star = float(a_star)
        self.quote_strikes = k
        self._override = None
        if digital_override is not None:
            ov = np.asarray(digital_override, dtype=float)
            if ov.shape != k.shape or np.any((ov < 0) | (ov > 1)):
                raise BadParams("digital override must be one probability per quote")
            self._override = ov

    def lam(self, a):
        a = np.asarray(a, dtype=float)
        return np.interp(a, self.nodes, self.values, right=0.0)

    def _slope_left(self, a):
        # slope of the cell (node_{i-1}, node_i] containing a from the left
        i = np.searchsorted(self.nodes, a, side="left") - 1
        s = np.concatenate([self.slopes, [0.0]])
        return np.where(i < 0, -self.discount, s[np.clip(i, 0, len(s) - 1)])

    def _slope_right(self, a):
        i = np.searchsorted(self.nodes, a, side="right") - 1
        s = np.concatenate([self.slopes, [0.0]])
        return s[np.clip(i, 0, len(s) - 1)]

    def digital_ge(self, a):
        a = np.asarray(a, dtype=float)
        out = np.where(a <= 0, 1.0, -self._slope_left(a) / self.discount)
        if self._override is not None:
            pos = np.searchsorted(self.quote_strikes, a)
            pos = np.minimum(pos, len(self.quote_strikes) - 1)
            hit = self.quote_strikes[pos] == a
            out = np.where(hit, self._override[pos], out)
        return np.clip(out, 0.0, 1.0)

    def digital_gt(self, a):
        a = np.asarray(a, dtype=float)
        out = np.where(a < 0, 1.0, -self._slope_right(np.maximum(a, 0.0)) / self.discount)
        return np.clip(out, 0.0, 1.0)

    def breakpoints(self) -> np.ndarray:
        return self.nodes.copy()

    def upper_strike(self, tail: float = 1e-6) -> float:
        return self.a_star


def table_curve(rows: Sequence[tuple[float, float]], discount: float, **kw) -> TableCurve:
    rows = list(rows)
    return TableCurve([r[0] for r in rows], [r[1] for r in rows], discount, **kw)


def read_quotes_csv(path, discount: float, maturity: float = float("nan")) -> TableCurve:
    """Read ``strike,call_price[,digital_ge]`` quotes into a TableCurve."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or reader.fieldnames[:2] != ["strike", "call_price"]:
            raise BadParams(f"{path}: header must start with 'strike,call_price'")
        rows = list(reader)
    try:
        k = [float(r["strike"]) for r in rows]
        c = [float(r["call_price"]) for r in rows]
        dg = [float(r["digital_ge"]) for r in rows] if "digital_ge" in reader.fieldnames else None
    except (TypeError, ValueError) as exc:
        raise BadParams(f"{path}: {exc}") from None
    return TableCurve(k, c, discount, maturity, digital_override=dg)


# -- sample pools ---------------------------------------------------------------
BARRIER_KINDS = ("none", "running_max", "running_min", "average")


@dataclass(frozen=True, eq=False)
class SamplePool:
    seed: int
    terminal: np.ndarray
    barrier_stat: np.ndarray | None = None
    barrier_kind: str = "none"
    discount: float = 1.0
    params: Mapping[str, float] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.terminal.size)


def pool_from_values(terminal, barrier_stat=None, discount: float = 1.0, barrier_kind: str = "custom") -> SamplePool:
    x = np.asarray(terminal, dtype=float)
    if x.size == 0 or np.any(x < 0):
        raise BadParams("terminal samples must be nonempty and nonnegative")
    y = None if barrier_stat is None else np.asarray(barrier_stat, dtype=float)
    if y is not None and y.shape != x.shape:
        raise BadParams("barrier statistic must be coupled one-to-one with terminals")
    return SamplePool(0, x, y, barrier_kind if y is not None else "none", float(discount))


def _block_normals(seed: int, block: int, shape) -> np.ndarray:
    # one Philox stream per (seed, block): results do not depend on how blocks are scheduled
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    return gen.standard_normal(shape)


def gbm_pool(seed: int, n: int, spot: float, vol: float, rate: float, maturity: float,
             barrier_kind: str = "none", steps: int = GBM_STEPS) -> SamplePool:
    """Risk-neutral GBM draws of X_T, optionally with a coupled path statistic.

    Without a barrier statistic X_T is drawn exactly from one normal.  With one,
    log-prices are simulated on ``steps`` equal steps (exact in law at the grid
    points) and the running max / min / average is taken over the grid; the
    running max and min include the starting value.
    """
    if int(n) < 1:
        raise BadParams("n must be >= 1")
    if barrier_kind not in BARRIER_KINDS:
        raise BadParams(f"barrier_kind must be one of {BARRIER_KINDS}")
    if not (spot > 0 and vol >= 0 and maturity > 0):
        raise BadParams("need spot > 0, vol >= 0, maturity > 0")
    n, seed = int(n), int(seed)
    drift = (rate - 0.5 * vol * vol) * maturity
    terminal = np.empty(n)
    stat = None if barrier_kind == "none" else np.empty(n)
    dt = maturity / steps
    for b, start in enumerate(range(0, n, BLOCK)):
        m = min(BLOCK, n - start)
        if stat is None:
            z = _block_normals(seed, b, m)
            terminal[start:start + m] = spot * np.exp(drift + vol * math.sqrt(maturity) * z)
            continue
        z = _block_normals(seed, b, (m, steps))
        logp = np.cumsum((rate - 0.5 * vol * vol) * dt + vol * math.sqrt(dt) * z, axis=1)
        path = spot * np.exp(logp)
        terminal[start:start + m] = path[:, -1]
        if barrier_kind == "running_max":
            stat[start:start + m] = np.maximum(path.max(axis=1), spot)
        elif barrier_kind == "running_min":
            stat[start:start + m] = np.minimum(path.min(axis=1), spot)
        else:
            stat[start:start + m] = path.mean(axis=1)
    params = dict(n=n, spot=spot, vol=vol, rate=rate, maturity=maturity, steps=steps)
    return SamplePool(seed, terminal, stat, barrier_kind, math.exp(-rate * maturity), params)


# -- empirical curves -------------------------------------------------------------
class EmpiricalCurve(CallCurve):
    """Call curve of the empirical law of a sample, optionally restricted.

    ``samples`` are the terminal values that count (all of them, or those on
    the event); averages are always over ``n_total`` draws.  Values are exact
    at every strike: suffix sums over the sorted sample, accumulated from the
    top so that deep-strike values keep full relative precision.
    """

    def __init__(self, samples, discount: float, n_total: int | None = None, maturity: float = float("nan")):
        x = np.sort(np.asarray(samples, dtype=float))
        self.samples = x
        self.n_total = int(x.size if n_total is None else n_total)
        if self.n_total < 1:
            raise BadParams("empty sample pool")
        self.discount = float(discount)
        self.maturity = maturity
        # suffix[i] = sum(x[i:])
        self._suffix = np.concatenate([np.cumsum(x[::-1])[::-1], [0.0]])

    def _above(self, a, side):
        i = np.searchsorted(self.samples, np.asarray(a, dtype=float), side=side)
        return i, self.samples.size - i

    def lam(self, a):
        a = np.asarray(a, dtype=float)
        i, cnt = self._above(a, "right")
        return self.discount * (self._suffix[i] - a * cnt) / self.n_total

    def digital_ge(self, a):
        return self._above(a, "left")[1] / self.n_total

    def digital_gt(self, a):
        return self._above(a, "right")[1] / self.n_total

    def breakpoints(self) -> np.ndarray:
        return np.unique(self.samples)

    def upper_strike(self, tail: float = 1e-6) -> float:
        return float(self.samples[-1]) if self.samples.size else 0.0


def empirical_curve(pool: SamplePool, discount: float | None = None) -> EmpiricalCurve:
    d = pool.discount if discount is None else discount
    return EmpiricalCurve(pool.terminal, d, maturity=pool.params.get("maturity", float("nan")))


# -- barrier events ---------------------------------------------------------------
@dataclass(frozen=True)
class Interval:
    lo: float = -math.inf
    hi: float = math.inf
    lo_closed: bool = True
    hi_closed: bool = True

    def contains(self, y: np.ndarray) -> np.ndarray:
        left = y >= self.lo if self.lo_closed else y > self.lo
        right = y <= self.hi if self.hi_closed else y < self.hi
        return left & right

    def to_json(self) -> dict:
        enc = lambda v: "inf" if v == math.inf else "-inf" if v == -math.inf else v  # noqa: E731
        return {"kind": "interval", "lo": enc(self.lo), "hi": enc(self.hi),
                "lo_closed": self.lo_closed, "hi_closed": self.hi_closed}


STATS = ("running_max", "running_min", "average", "terminal")


@dataclass(frozen=True)
class BarrierEvent:
    """{Y in C} with C a finite union of intervals (a single one from JSON)."""

    stat: str
    parts: tuple[Interval, ...]

    def __post_init__(self):
        if self.stat not in STATS:
            raise BadParams(f"stat must be one of {STATS}")

    @classmethod
    def interval(cls, stat, lo=-math.inf, hi=math.inf, lo_closed=True, hi_closed=True) -> "BarrierEvent":
        return cls(stat, (Interval(float(lo), float(hi), lo_closed, hi_closed),))

    @classmethod
    def everything(cls, stat: str) -> "BarrierEvent":
        return cls.interval(stat)

    @classmethod
    def nothing(cls, stat: str) -> "BarrierEvent":
        return cls(stat, ())

    @classmethod
    def from_json(cls, doc: Mapping) -> "BarrierEvent":
        s = doc["set"]
        if s.get("kind") != "interval":
            raise BadParams("only interval sets are supported")
        conv = lambda v: {"inf": math.inf, "-inf": -math.inf}.get(v, v)  # noqa: E731
        return cls.interval(doc["stat"], float(conv(s["lo"])), float(conv(s["hi"])),
                            bool(s.get("lo_closed", True)), bool(s.get("hi_closed", False)))

    def to_json(self) -> dict:
        if len(self.parts) != 1:
            return {"stat": self.stat, "set": {"kind": "union", "parts": [p.to_json() for p in self.parts]}}
        return {"stat": self.stat, "set": self.parts[0].to_json()}

    def indicator(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape, dtype=bool)
        for p in self.parts:
            out |= p.contains(y)
        return out

    def complement(self) -> "BarrierEvent":
        # parts are assumed disjoint
        pieces: list[Interval] = []
        pos, incl = -math.inf, True
        for p in sorted(self.parts, key=lambda q: (q.lo, not q.lo_closed)):
            single_point = pos == p.lo and math.isfinite(pos) and incl and not p.lo_closed
            if pos < p.lo or single_point:
                pieces.append(Interval(pos, p.lo, incl, not p.lo_closed))
            pos, incl = p.hi, not p.hi_closed
        if pos < math.inf:
            pieces.append(Interval(pos, math.inf, incl, True))
        return BarrierEvent(self.stat, tuple(pieces))


def parse_event(text: str) -> BarrierEvent:
    """Shorthand ``maxlt:B=130`` ({max,min,avg,term}{lt,le,gt,ge}), JSON text or a JSON file."""
    text = text.strip()
    if text.startswith("{"):
        return BarrierEvent.from_json(json.loads(text))
    if text.endswith(".json") or Path(text).is_file():
        return BarrierEvent.from_json(json.loads(Path(text).read_text()))
    head, _, rest = text.partition(":")
    key, _, val = rest.partition("=")
    if key.strip() != "B" or not val:
        raise BadParams(f"bad event shorthand {text!r}; expected e.g. maxlt:B=130")
    stat = {"max": "running_max", "min": "running_min", "avg": "average", "term": "terminal"}.get(head[:-2])
    if stat is None or head[-2:] not in ("lt", "le", "gt", "ge"):
        raise BadParams(f"bad event shorthand {text!r}")
    b = float(val)
    op = head[-2:]
    if op in ("lt", "le"):
        return BarrierEvent.interval(stat, -math.inf, b, True, op == "le")
    return BarrierEvent.interval(stat, b, math.inf, op == "ge", True)


class JointCallCurve(EmpiricalCurve):
    """lam^{Y,C}(a) = E[D (X_T - a)^+ 1{Y in C}] on a sample pool."""

    def __init__(self, pool: SamplePool, event: BarrierEvent, discount: float):
        if event.stat == "terminal":
            y = pool.terminal
        else:
            if pool.barrier_stat is None:
                raise BadParams("pool has no coupled barrier statistic")
            if pool.barrier_kind != event.stat:
                raise BadParams(f"pool carries {pool.barrier_kind}, event needs {event.stat}")
            y = pool.barrier_stat
        inside = event.indicator(y)
        super().__init__(pool.terminal[inside], discount, n_total=pool.n,
                         maturity=pool.params.get("maturity", float("nan")))
        self.event = event
        self.count = int(inside.sum())

    @property
    def barrier_prob(self) -> float:
        return self.count / self.n_total

    @property
    def mass(self) -> float:
        return self.barrier_prob


def joint_curve(pool: SamplePool, event: BarrierEvent, discount: float | None = None) -> JointCallCurve:
    return JointCallCurve(pool, event, pool.discount if discount is None else discount)


# -- brute-force oracle -------------------------------------------------------------
def mc_price(pool: SamplePool, p: Payoff, discount: float | None = None, mask=None) -> tuple[float, float]:
    """Discounted sample mean of f(X_T) (optionally times a 0/1 mask) and its standard error."""
    d = pool.discount if discount is None else discount
    vals = np.asarray(p.eval(pool.terminal), dtype=float)
    if mask is not None:
        vals = np.where(mask, vals, 0.0)
    mean = d * np.mean(vals)
    se = d * np.std(vals, ddof=1) / math.sqrt(pool.n) if pool.n > 1 else 0.0
    return float(mean), float(se)
