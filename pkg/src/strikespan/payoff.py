"""Piecewise-C1 payoff functions on [0, inf).

A payoff is a list of smooth segments between boundary points
``0 = s_0 < s_1 < ... < s_N`` plus the values taken *at* those points, so
that ``f(s_k)`` can differ from both one-sided limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import integrate

from .errors import BadParams, NotConvex, SecondDerivativeUnavailable, UnknownPayoff

ArrayFn = Callable[[np.ndarray], np.ndarray]

MAX_BOUNDARIES = 10_000
CONVEX_GRID = 1024
JUMP_RTOL = 1e-12


@dataclass(frozen=True)
class Segment:
    """One smooth piece of a payoff on the open interval (lo, hi)."""

    lo: float
    hi: float
    value_fn: ArrayFn
    deriv_fn: ArrayFn
    second_fn: ArrayFn | None = None
    kind: str = "custom"
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.lo >= 0 and self.hi > self.lo):
            raise BadParams(f"segment needs 0 <= lo < hi, got ({self.lo}, {self.hi})")

    def interior_points(self, n: int, rng: np.random.Generator | None = None) -> np.ndarray:
        """Points strictly inside the segment (random if ``rng`` given)."""
        hi = self.hi if math.isfinite(self.hi) else self.lo + 10.0 * max(1.0, self.lo)
        if rng is None:
            u = (np.arange(n) + 0.5) / n
        else:
            u = rng.uniform(0.02, 0.98, size=n)
        return self.lo + u * (hi - self.lo)

    def check_derivative(self, n: int = 100, rtol: float = 1e-6, seed: int = 0) -> float:
        """Largest relative mismatch between deriv_fn and central differences."""
        x = self.interior_points(n, np.random.default_rng(seed))
        h = 1e-5 * np.maximum(1.0, x)
        fd = (self.value_fn(x + h) - self.value_fn(x - h)) / (2 * h)
        d = self.deriv_fn(x)
        scale = np.maximum(1.0, np.abs(d))
        return float(np.max(np.abs(fd - d) / scale))


def poly_segment(lo: float, hi: float, coeffs: Sequence[float]) -> Segment:
    """Segment whose value is ``sum(c_i x**i)`` (ascending coefficients)."""
    c = np.asarray(coeffs, dtype=float)
    d1 = P.polyder(c) if c.size > 1 else np.zeros(1)
    d2 = P.polyder(d1) if d1.size > 1 else np.zeros(1)
    return Segment(
        lo,
        hi,
        lambda x, c=c: P.polyval(np.asarray(x, dtype=float), c),
        lambda x, c=d1: P.polyval(np.asarray(x, dtype=float), c) + 0.0 * np.asarray(x, dtype=float),
        lambda x, c=d2: P.polyval(np.asarray(x, dtype=float), c) + 0.0 * np.asarray(x, dtype=float),
        kind="poly",
        coeffs=tuple(float(v) for v in c),
    )


def exp_segment(lo: float, hi: float, scale: float, rate: float) -> Segment:
    """Segment ``scale * exp(rate * x)``."""
    return Segment(
        lo,
        hi,
        lambda x: scale * np.exp(rate * np.asarray(x, dtype=float)),
        lambda x: scale * rate * np.exp(rate * np.asarray(x, dtype=float)),
        lambda x: scale * rate * rate * np.exp(rate * np.asarray(x, dtype=float)),
        kind="exp",
        coeffs=(float(scale), float(rate)),
    )


@dataclass(frozen=True)
class Jump:
    strike: float
    left: float
    right: float


@dataclass(frozen=True, eq=False)
class Payoff:
    """Payoff f: [0, inf) -> R built from consecutive segments.

    ``point_values`` maps each boundary to f(s_k). Boundaries missing from the
    map take the right limit.
    """

    segments: tuple[Segment, ...]
    point_values: Mapping[float, float] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise BadParams("payoff needs at least one segment")
        if segs[0].lo != 0.0:
            raise BadParams("first segment must start at 0")
        if math.isfinite(segs[-1].hi):
            raise BadParams("last segment must extend to +inf")
        for a, b in zip(segs, segs[1:]):
            if a.hi != b.lo:
                raise BadParams(f"segments do not meet: {a.hi} vs {b.lo}")
        if len(segs) > MAX_BOUNDARIES:
            raise BadParams(f"at most {MAX_BOUNDARIES} boundary points supported")
        object.__setattr__(self, "segments", segs)
        bounds = np.array([s.lo for s in segs])
        pv = {}
        for k, s in enumerate(bounds):
            given = _lookup(self.point_values, s)
            pv[float(s)] = float(segs[k].value_fn(np.array([s]))[0]) if given is None else float(given)
        object.__setattr__(self, "point_values", pv)
        object.__setattr__(self, "_bounds", bounds)

    # -- structure ---------------------------------------------------------
    @property
    def boundaries(self) -> np.ndarray:
        """All s_k, including s_0 = 0."""
        return self._bounds.copy()

    @property
    def kinks(self) -> np.ndarray:
        """Boundary points s_1..s_N (strictly positive)."""
        return self._bounds[1:].copy()

    def has_second_derivative(self) -> bool:
        return all(s.second_fn is not None for s in self.segments)

    def _segment_index(self, x: np.ndarray) -> np.ndarray:
        return np.searchsorted(self._bounds, x, side="right") - 1

    def _piecewise(self, x, attr: str) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        if np.any(flat < 0):
            raise BadParams("payoffs are defined on [0, inf) only")
        idx = self._segment_index(flat)
        out = np.empty_like(flat)
        for k, seg in enumerate(self.segments):
            m = idx == k
            if m.any():
                fn = getattr(seg, attr)
                if fn is None:
                    raise SecondDerivativeUnavailable(f"segment {k} of {self.label!r} has no second derivative")
                with np.errstate(over="ignore", invalid="ignore"):
                    out[m] = fn(flat[m])
        return out.reshape(x.shape) if x.ndim else out[0]

    # -- evaluation --------------------------------------------------------
    def eval(self, x):
        """f(x); at a boundary point this is the stored point value."""
        x_arr = np.asarray(x, dtype=float)
        out = np.atleast_1d(np.asarray(self._piecewise(x_arr, "value_fn"), dtype=float)).copy()
        flat = np.atleast_1d(x_arr).ravel()
        pos = np.searchsorted(self._bounds, flat)
        pos = np.minimum(pos, len(self._bounds) - 1)
        hit = self._bounds[pos] == flat
        if hit.any():
            vals = np.array([self.point_values[float(b)] for b in self._bounds])
            out.ravel()[hit] = vals[pos[hit]]
        return out.reshape(x_arr.shape) if x_arr.ndim else float(out[0])

    __call__ = eval

    def deriv(self, x):
        """f'(x) on segment interiors (right derivative at boundaries)."""
        return self._piecewise(x, "deriv_fn")

    def second(self, x):
        return self._piecewise(x, "second_fn")

    def _seg_at(self, s: float, side: str) -> Segment:
        k = int(np.searchsorted(self._bounds, s, side="right") - 1)
        if side == "left":
            if self._bounds[k] == s:
                k -= 1
            if k < 0:
                raise BadParams("no left limit at 0")
        return self.segments[k]

    def limit_right(self, s: float) -> float:
        return float(self._seg_at(s, "right").value_fn(np.array([s]))[0])

    def limit_left(self, s: float) -> float:
        return float(self._seg_at(s, "left").value_fn(np.array([s]))[0])

    def deriv_right(self, s: float) -> float:
        return float(self._seg_at(s, "right").deriv_fn(np.array([s]))[0])

    def deriv_left(self, s: float) -> float:
        if s == 0.0:
            return 0.0
        return float(self._seg_at(s, "left").deriv_fn(np.array([s]))[0])

    def jumps(self) -> list[Jump]:
        """Nonzero one-sided jumps; the left jump at 0 is 0 by convention."""
        out = []
        for s in self._bounds:
            s = float(s)
            fs = self.point_values[s]
            fl = fs if s == 0.0 else self.limit_left(s)
            fr = self.limit_right(s)
            # a rounded breakpoint shifts values by about s * |f'| * eps
            ds = s * max(abs(self.deriv_left(s)), abs(self.deriv_right(s)))
            left, right = _snap(fs - fl, fs, fl, ds), _snap(fr - fs, fs, fr, ds)
            if left != 0.0 or right != 0.0:
                out.append(Jump(s, left, right))
        return out

    def slope_changes(self) -> list[tuple[float, float]]:
        """(s_k, f'(s_k+) - f'(s_k-)) for every boundary, with f'(0-) = 0."""
        return [(float(s), self.deriv_right(float(s)) - self.deriv_left(float(s))) for s in self._bounds]

    def __repr__(self):
        return f"Payoff({self.label or 'custom'}, boundaries={self._bounds.tolist()})"


def _snap(diff: float, *vals: float) -> float:
    return 0.0 if abs(diff) <= JUMP_RTOL * max(1.0, *map(abs, vals)) else diff


def _lookup(mapping: Mapping[float, float], key: float):
    for k, v in mapping.items():
        if float(k) == key:
            return v
    return None


# -- convex representation --------------------------------------------------
@dataclass(frozen=True)
class ConvexDecomposition:
    """f(x) = f0 + slope0 x + sum m_i (x - a_i)^+ + int (x - a)^+ density(a) da."""

    f0: float
    slope0: float
    atoms: tuple[tuple[float, float], ...]
    density: ArrayFn
    breaks: tuple[float, ...]
    has_density: bool = True

    def reconstruct(self, x) -> np.ndarray:
        """Evaluate the representation, integrating the density numerically."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.f0 + self.slope0 * x
        for a, m in self.atoms:
            out = out + m * np.maximum(x - a, 0.0)
        if self.has_density:
            edges = list(self.breaks)
            extra = np.empty_like(x)
            for i, xi in enumerate(x):
                acc = 0.0
                for lo, hi in zip(edges, edges[1:] + [math.inf]):
                    if lo >= xi:
                        break
                    top = min(hi, xi)
                    val, _ = integrate.quad(
                        lambda a: (xi - a) * float(self.density(np.array([a]))[0]),
                        lo, top, epsabs=1e-13, epsrel=1e-12, limit=200,
                    )
                    acc += val
                extra[i] = acc
            out = out + extra
        return out


def convex_decompose(p: Payoff, *, atol: float = 1e-12) -> ConvexDecomposition:
    """Split a convex payoff into intercept, initial slope and kink measure.

    Raises NotConvex when a value jump, a negative slope change, or a
    decreasing derivative sample is found.
    """
    if p.jumps():
        raise NotConvex(f"{p.label or 'payoff'} has value jumps")
    if not p.has_second_derivative():
        raise SecondDerivativeUnavailable("convex decomposition needs second derivatives on every segment")
    for seg in p.segments:
        x = seg.interior_points(CONVEX_GRID)
        d = seg.deriv_fn(x)
        tol = atol * np.maximum(1.0, np.abs(d[:-1]))
        if np.any(np.diff(d) < -tol):
            raise NotConvex(f"derivative decreases on ({seg.lo}, {seg.hi})")
        if np.any(seg.second_fn(x) < -atol):
            raise NotConvex(f"negative second derivative on ({seg.lo}, {seg.hi})")
    atoms = []
    for s, dm in p.slope_changes()[1:]:
        if dm < -atol * max(1.0, abs(p.deriv_left(s))):
            raise NotConvex(f"slope drops by {-dm} at {s}")
        if dm > 0:
            atoms.append((s, dm))
    return ConvexDecomposition(
        f0=p.eval(0.0),
        slope0=p.deriv_right(0.0),
        atoms=tuple(atoms),
        density=lambda a: np.maximum(np.asarray(p.second(a), dtype=float), 0.0),
        breaks=tuple(float(b) for b in p.boundaries),
        has_density=any(
            np.any(seg.second_fn(seg.interior_points(16)) != 0) for seg in p.segments
        ),
    )


# -- combinations -------------------------------------------------------------
def linear_combination(terms: Sequence[tuple[float, Payoff]], label: str = "") -> Payoff:
    """Payoff sum(w_i f_i) on the union of the components' boundaries."""
    bounds = np.unique(np.concatenate([p.boundaries for _, p in terms]))
    edges = list(bounds) + [math.inf]
    segs = []
    for lo, hi in zip(edges, edges[1:]):
        probe = lo + 0.5 * (hi - lo) if math.isfinite(hi) else lo + 1.0
        parts = [(w, p.segments[int(p._segment_index(np.array([probe]))[0])]) for w, p in terms]

        def comb(attr, parts=parts):
            if any(getattr(s, attr) is None for _, s in parts):
                return None
            return lambda x: sum(w * getattr(s, attr)(x) for w, s in parts)

        segs.append(Segment(float(lo), float(hi), comb("value_fn"), comb("deriv_fn"), comb("second_fn")))
    pv = {float(s): sum(w * p.eval(float(s)) for w, p in terms) for s in bounds}
    return Payoff(tuple(segs), pv, label or "combination")


# -- catalog -----------------------------------------------------------------
INF = math.inf


def _positive(name, v):
    v = float(v)
    if not (v > 0 and math.isfinite(v)):
        raise BadParams(f"{name} must be positive and finite, got {v}")
    return v


def call(K):
    K = _positive("K", K)
    return Payoff((poly_segment(0, K, [0.0]), poly_segment(K, INF, [-K, 1.0])), {K: 0.0}, f"call(K={K:g})")


def put(K):
    K = _positive("K", K)
    return Payoff((poly_segment(0, K, [K, -1.0]), poly_segment(K, INF, [0.0])), {0.0: K, K: 0.0}, f"put(K={K:g})")


def digital_ge(K):
    K = _positive("K", K)
    return Payoff((poly_segment(0, K, [0.0]), poly_segment(K, INF, [1.0])), {K: 1.0}, f"digital_ge(K={K:g})")


def digital_gt(K):
    K = _positive("K", K)
    return Payoff((poly_segment(0, K, [0.0]), poly_segment(K, INF, [1.0])), {K: 0.0}, f"digital_gt(K={K:g})")


def straddle(K):
    K = _positive("K", K)
    return Payoff((poly_segment(0, K, [K, -1.0]), poly_segment(K, INF, [-K, 1.0])), {K: 0.0}, f"straddle(K={K:g})")


def butterfly(K1, K2, K3):
    K1, K2, K3 = (_positive("strike", k) for k in (K1, K2, K3))
    if not K1 < K2 < K3:
        raise BadParams("butterfly strikes must satisfy K1 < K2 < K3")
    peak = K2 - K1
    down = peak / (K3 - K2)
    segs = (
        poly_segment(0, K1, [0.0]),
        poly_segment(K1, K2, [-K1, 1.0]),
        poly_segment(K2, K3, [down * K3, -down]),
        poly_segment(K3, INF, [0.0]),
    )
    return Payoff(segs, {K1: 0.0, K2: peak, K3: 0.0}, f"butterfly({K1:g},{K2:g},{K3:g})")


def capped_call(K, cap):
    K, cap = _positive("K", K), _positive("cap", cap)
    segs = (poly_segment(0, K, [0.0]), poly_segment(K, K + cap, [-K, 1.0]), poly_segment(K + cap, INF, [cap]))
    return Payoff(segs, {K: 0.0, K + cap: cap}, f"capped_call(K={K:g},cap={cap:g})")


def power_call(n, K):
    """(x**n - K)^+ with its single kink at K**(1/n)."""
    if int(n) != n or n < 1:
        raise BadParams(f"n must be a positive integer, got {n}")
    n, K = int(n), _positive("K", K)
    k = K ** (1.0 / n)
    r = round(k)
    if r > 0 and r ** n == K:
        k = float(r)
    coeffs = [-K] + [0.0] * (n - 1) + [1.0]
    return Payoff((poly_segment(0, k, [0.0]), poly_segment(k, INF, coeffs)), {k: 0.0}, f"power_call(n={n},K={K:g})")


def power(n):
    """x**n."""
    if int(n) != n or n < 0:
        raise BadParams(f"n must be a nonnegative integer, got {n}")
    return Payoff((poly_segment(0, INF, [0.0] * int(n) + [1.0]),), {}, f"power(n={int(n)})")


def forward():
    return Payoff((poly_segment(0, INF, [0.0, 1.0]),), {}, "forward")


def constant(c):
    return Payoff((poly_segment(0, INF, [float(c)]),), {}, f"constant({float(c):g})")


def exponential(rate=1.0, scale=1.0):
    return Payoff((exp_segment(0, INF, float(scale), float(rate)),), {}, f"exponential(rate={float(rate):g})")


def piecewise_linear(nodes):
    """Linear interpolation through (x, y) nodes, held flat outside them."""
    pts = np.asarray(nodes, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise BadParams("nodes must be a list of at least two (x, y) pairs")
    xs, ys = pts[:, 0], pts[:, 1]
    if xs[0] < 0 or np.any(np.diff(xs) <= 0):
        raise BadParams("node abscissae must be nonnegative and strictly increasing")
    segs = []
    if xs[0] > 0:
        segs.append(poly_segment(0, xs[0], [ys[0]]))
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        c = (y1 - y0) / (x1 - x0)
        segs.append(poly_segment(x0, x1, [y0 - c * x0, c]))
    segs.append(poly_segment(xs[-1], INF, [ys[-1]]))
    return Payoff(tuple(segs), {float(x): float(y) for x, y in pts}, f"piecewise_linear({len(pts)} nodes)")


def polynomial(coeffs, lo, hi):
    """sum(c_i x**i) on the closed window [lo, hi], zero elsewhere."""
    lo, hi = float(lo), float(hi)
    if not (0 <= lo < hi < INF):
        raise BadParams("polynomial window needs 0 <= lo < hi < inf")
    c = np.asarray(coeffs, dtype=float)
    inner = poly_segment(lo, hi, c)
    segs = ([poly_segment(0, lo, [0.0])] if lo > 0 else []) + [inner, poly_segment(hi, INF, [0.0])]
    pv = {lo: float(P.polyval(lo, c)), hi: float(P.polyval(hi, c))}
    return Payoff(tuple(segs), pv, f"polynomial(deg={len(c) - 1},[{lo:g},{hi:g}])")


CATALOG: dict[str, Callable[..., Payoff]] = {
    "call": call,
    "put": put,
    "digital_ge": digital_ge,
    "digital_gt": digital_gt,
    "straddle": straddle,
    "butterfly": butterfly,
    "capped_call": capped_call,
    "power_call": power_call,
    "power": power,
    "forward": forward,
    "constant": constant,
    "exponential": exponential,
    "piecewise_linear": piecewise_linear,
    "polynomial": polynomial,
}


def builtin_catalog(name: str, **params) -> Payoff:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise UnknownPayoff(f"unknown payoff family {name!r}; known: {sorted(CATALOG)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise BadParams(f"bad parameters for {name}: {exc}") from None


def _bound(v) -> float:
    if v is None or v == "inf":
        return INF
    if v == "-inf":
        return -INF
    return float(v)


def from_spec(doc: Mapping) -> Payoff:
    """Build a payoff from its JSON document.

    Either ``{"family": ..., "params": {...}}`` or
    ``{"segments": [{"lo", "hi", "kind", "coeffs"}], "point_values": [[s, v]]}``
    with kind ``poly`` (ascending coefficients) or ``exp`` (``[scale, rate]``).
    """
    if "family" in doc:
        return builtin_catalog(doc["family"], **dict(doc.get("params", {})))
    if "segments" not in doc:
        raise BadParams("payoff spec needs 'family' or 'segments'")
    segs = []
    for s in doc["segments"]:
        lo, hi, kind = _bound(s["lo"]), _bound(s["hi"]), s.get("kind", "poly")
        if kind == "poly":
            segs.append(poly_segment(lo, hi, s["coeffs"]))
        elif kind == "exp":
            scale, rate = s["coeffs"]
            segs.append(exp_segment(lo, hi, scale, rate))
        else:
            raise BadParams(f"unknown segment kind {kind!r}")
    pv = {float(k): float(v) for k, v in doc.get("point_values", [])}
    return Payoff(tuple(segs), pv, doc.get("label", "custom"))


def parse_inline(text: str) -> Payoff:
    """``family:key=val,key=val`` shorthand, e.g. ``call:K=100``."""
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise BadParams(f"expected key=value, got {item!r}")
        params[key.strip()] = _number(val.strip())
    return builtin_catalog(name.strip(), **params)


def _number(s: str):
    try:
        v = float(s)
    except ValueError:
        raise BadParams(f"not a number: {s!r}") from None
    return int(v) if v.is_integer() and "." not in s and "e" not in s.lower() else v
