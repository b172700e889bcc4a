"""Command-line front end.

    strikespan price    --payoff call:K=100 --bs spot=100,vol=0.2,rate=0,T=1 --form all
    strikespan hedge    --payoff straddle:K=100 --bs ... --kind digital --nodes 257 --out hedge.csv
    strikespan american --payoff put:K=100 --bs ... --oracle-steps 1000
    strikespan barrier  --payoff call:K=100 --event maxlt:B=130 --mc seed=7,n=1000000

Exit codes: 0 success, 2 payoff outside the admissible class, 3 bad input data.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .american import american_bound, with_oracle
from .barrier import price_barrier
from .errors import StrikespanError, TailConditionFailed
from .hedge import (
    build_call_spread_hedge,
    build_digital_hedge,
    grid_errors,
    price_portfolio,
    replication_report,
    to_csv,
)
from .market import (
    bs_curve,
    empirical_curve,
    gbm_pool,
    joint_curve,
    parse_event,
    read_quotes_csv,
)
from .payoff import Payoff, convex_decompose, from_spec, parse_inline
from .pricer import FORMS, PriceReport, price, price_all, price_theorem1, price_windowed, truncation
from .quadrature import QuadConfig

SCHEMA = 1
SEED_ENV = "STRIKESPAN_SEED"


class DataError(StrikespanError):
    pass


# -- serialisation ---------------------------------------------------------------
def _encode(obj) -> str:
    """JSON with floats at 17 significant digits and sorted keys."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _envelope(command: str, config: dict, result: dict) -> dict:
    return {"schema": SCHEMA, "tool": "strikespan", "version": __version__,
            "command": command, "config": config, "result": result}


# -- argument plumbing --------------------------------------------------------------
def _kv(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise DataError(f"expected key=value, got {item!r}")
        out[k.strip()] = v.strip()
    return out


def load_payoff(spec: str | None) -> Payoff:
    if not spec:
        raise DataError("missing payoff spec (--payoff)")
    s = spec.strip()
    if s.startswith("{"):
        return from_spec(json.loads(s))
    path = Path(s)
    if s.endswith(".json") or path.is_file():
        if not path.is_file():
            raise DataError(f"payoff spec file not found: {s}")
        return from_spec(json.loads(path.read_text()))
    return parse_inline(s)


def _float(params: dict, key: str, default=None) -> float:
    if key not in params:
        if default is None:
            raise DataError(f"missing backend parameter {key!r}")
        return default
    try:
        return float(params[key])
    except ValueError:
        raise DataError(f"{key} must be a number, got {params[key]!r}") from None


def _bs_params(text: str) -> dict:
    p = _kv(text)
    return dict(spot=_float(p, "spot"), vol=_float(p, "vol"), rate=_float(p, "rate", 0.0),
                T=_float(p, "T", 1.0))


def _mc_params(text: str, barrier_kind: str = "none") -> dict:
    p = _kv(text)
    seed = p.get("seed", os.environ.get(SEED_ENV))
    if seed is None:
        raise DataError(f"mc backend needs seed=... or {SEED_ENV}")
    return dict(seed=int(seed), n=int(_float(p, "n", 100_000)), spot=_float(p, "spot", 100.0),
                vol=_float(p, "vol", 0.2), rate=_float(p, "rate", 0.0), T=_float(p, "T", 1.0),
                barrier=p.get("barrier", barrier_kind))


def build_backend(args, barrier_kind: str = "none"):
    """(curve, pool-or-None, echo) for the single selected backend."""
    chosen = [name for name in ("bs", "table", "mc") if getattr(args, name, None)]
    if len(chosen) != 1:
        raise DataError("select exactly one backend: --bs, --table or --mc")
    if args.bs:
        b = _bs_params(args.bs)
        return bs_curve(b["spot"], b["vol"], b["rate"], b["T"]), None, {"bs": b}
    if args.table:
        if args.discount is not None:
            disc = args.discount
        else:
            disc = math.exp(-(args.rate or 0.0) * (args.maturity or 0.0))
        if not Path(args.table).is_file():
            raise DataError(f"quotes file not found: {args.table}")
        return read_quotes_csv(args.table, disc), None, {"table": args.table, "discount": disc}
    m = _mc_params(args.mc, barrier_kind)
    pool = gbm_pool(m["seed"], m["n"], m["spot"], m["vol"], m["rate"], m["T"], m["barrier"])
    return empirical_curve(pool), pool, {"mc": m}


def _cfg(args) -> QuadConfig:
    return QuadConfig(tol=args.tol, tail_tol=args.tail_tol, max_nodes=args.max_nodes)


def _echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, doc: dict, table_lines: list[str], csv_text: str | None = None):
    fmt = getattr(args, "format", "json")
    if fmt == "json":
        sys.stdout.write(_encode(doc) + "\n")
    elif fmt == "csv" and csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write("\n".join(table_lines) + "\n")


# -- commands ---------------------------------------------------------------------
def cmd_price(args) -> int:
    p = load_payoff(args.payoff)
    curve, _, backend = build_backend(args)
    cfg = _cfg(args)
    if args.form == "all":
        reports = price_all(p, curve, cfg)
    else:
        reports = {args.form: price(p, curve, args.form, cfg)}
    result = {k: (v.as_dict() if isinstance(v, PriceReport) else {"error": v}) for k, v in reports.items()}
    values = {k: v.value for k, v in reports.items() if isinstance(v, PriceReport)}
    if len(values) > 1:
        spread = max(values.values()) - min(values.values())
        result["agreement"] = {"max_abs_spread": spread, "forms": sorted(values)}
    lines = [f"{p.label}  [{', '.join(f'{k}={v}' for k, v in backend.items())}]"]
    for k, v in reports.items():
        lines.append(f"  {k:<9} " + (f"{v.value:.10f}" if isinstance(v, PriceReport) else v))
    if "agreement" in result:
        lines.append(f"  max |difference| between forms: {result['agreement']['max_abs_spread']:.3e}")
    csv_text = "form,value,cash_term,integral_term,jump_left_term,jump_right_term,kink_term\n" + "".join(
        f"{k},{v.value!r},{v.cash_term!r},{v.integral_term!r},{v.jump_left_term!r},{v.jump_right_term!r},{v.kink_term!r}\n"
        for k, v in reports.items() if isinstance(v, PriceReport)
    )
    _emit(args, _envelope("price", _echo(args), {"payoff": p.label, "backend": backend, "forms": result}),
          lines, csv_text)
    return 0


def cmd_hedge(args) -> int:
    p = load_payoff(args.payoff)
    curve, pool, backend = build_backend(args)
    cfg = _cfg(args).resolve(curve.forward)
    if args.kind == "digital":
        hi = args.hi if args.hi is not None else truncation(p, curve, cfg)[0]
        grid = np.linspace(0.0, hi, args.nodes)
        k = p.kinks
        grid = np.unique(np.concatenate([grid, k[k <= hi]]))
        h = build_digital_hedge(p, grid)
        lo = 0.0
        target = price_theorem1(p, curve, cfg).value
    else:
        lo = args.alpha if args.alpha is not None else 0.0
        hi = args.beta if args.beta is not None else truncation(p, curve, cfg)[0]
        h = build_call_spread_hedge(p, lo, hi, n=args.nodes - 1)
        target = price_windowed(p, lo, hi, (True, True), curve, cfg).value
    hedge_value = price_portfolio(h, curve)
    sup, mean = grid_errors(h, p, lo, hi)
    report = {"kind": h.kind, "rows": len(to_csv(h).splitlines()) - 1, "domain": [lo, hi],
              "grid_sup_error": sup, "grid_mean_abs_error": mean,
              "hedge_value": hedge_value, "pricer_value": target, "value_gap": hedge_value - target}
    if pool is not None and args.kind == "digital":
        r = replication_report(h, p, pool)
        report.update(pool_sup_error=r.sup_error, pool_mean_abs_error=r.mean_abs_error, pool_value_gap=r.value_gap)
    if args.out:
        Path(args.out).write_text(to_csv(h))
        report["portfolio_csv"] = args.out
    lines = [f"{p.label} {h.kind} hedge on [{lo:g}, {hi:g}]: {report['rows']} rows"]
    lines += [f"  {k} = {report[k]}" for k in ("grid_sup_error", "grid_mean_abs_error", "hedge_value",
                                                "pricer_value", "value_gap")]
    _emit(args, _envelope("hedge", _echo(args), {"payoff": p.label, "backend": backend, "report": report}),
          lines, to_csv(h))
    return 0


def cmd_american(args) -> int:
    p = load_payoff(args.payoff)
    if not args.bs:
        raise DataError("american needs the --bs backend (the lattice oracle is lognormal)")
    b = _bs_params(args.bs)
    curve = bs_curve(b["spot"], b["vol"], b["rate"], b["T"])
    d = convex_decompose(p)
    rep = american_bound(d, curve, b["spot"], 1.0, martingale=not args.strict_submartingale, cfg=_cfg(args))
    if args.oracle_steps:
        rep = with_oracle(rep, p, b["spot"], b["vol"], b["rate"], b["T"], args.oracle_steps)
    result = rep.as_dict()
    result["reasons"] = list(rep.reasons)
    lines = [f"{p.label}: european {rep.european_value:.8f}  bound {rep.bound:.8f}",
             f"  cash gap {rep.cash_gap:.8f}  slope gap {rep.slope_gap:.8f}  certified equal: {rep.equality_certified}"]
    if rep.oracle_value is not None:
        lines.append(f"  lattice american {rep.oracle_value:.8f} (error est. {rep.lattice_error:.2e})")
    _emit(args, _envelope("american", _echo(args), {"payoff": p.label, "bs": b, "report": result}), lines)
    return 0


def cmd_barrier(args) -> int:
    p = load_payoff(args.payoff)
    if not args.event:
        raise DataError("barrier needs --event")
    event = parse_event(args.event)
    if not args.mc:
        raise DataError("barrier pricing needs the --mc backend")
    kind = "none" if event.stat == "terminal" else event.stat
    m = _mc_params(args.mc, kind)
    if event.stat != "terminal" and m["barrier"] != event.stat:
        raise DataError(f"pool statistic {m['barrier']} does not match event statistic {event.stat}")
    pool = gbm_pool(m["seed"], m["n"], m["spot"], m["vol"], m["rate"], m["T"], m["barrier"])
    cfg = _cfg(args)
    inside = price_barrier(p, joint_curve(pool, event), cfg)
    outside = price_barrier(p, joint_curve(pool, event.complement()), cfg)
    vanilla = price_theorem1(p, empirical_curve(pool), cfg)
    parity = {"in": inside.value, "out": outside.value, "vanilla": vanilla.value,
              "residual": inside.value + outside.value - vanilla.value}
    lines = [f"{p.label} on {event.to_json()}: {inside.value:.10f} (Q(Y in C) = {inside.barrier_prob:.6f})",
             f"  parity: in {inside.value:.10f} + out {outside.value:.10f} - vanilla {vanilla.value:.10f}"
             f" = {parity['residual']:.3e}"]
    _emit(args, _envelope("barrier", _echo(args), {"payoff": p.label, "mc": m, "event": event.to_json(),
                                                  "report": inside.as_dict(), "parity": parity}), lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strikespan", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"strikespan {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, backends=True):
        sp.add_argument("--payoff", help="family:key=val,... | JSON text | path to JSON spec")
        if backends:
            sp.add_argument("--bs", help="spot=..,vol=..,rate=..,T=..")
            sp.add_argument("--table", help="quotes CSV (strike,call_price[,digital_ge])")
            sp.add_argument("--mc", help="seed=..,n=..,spot=..,vol=..,rate=..,T=..[,barrier=..]")
            sp.add_argument("--discount", type=float, help="B_T^{-1} for --table")
            sp.add_argument("--rate", type=float, help="rate for --table discounting")
            sp.add_argument("--maturity", type=float, help="maturity for --table discounting")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--tail-tol", type=float)
        sp.add_argument("--max-nodes", type=int, default=200_000)
        sp.add_argument("--format", choices=("json", "table", "csv"), default="json")

    sp = sub.add_parser("price", help="price a European payoff")
    common(sp)
    sp.add_argument("--form", choices=FORMS + ("all",), default="theorem1")
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("hedge", help="build a static hedge")
    common(sp)
    sp.add_argument("--kind", choices=("digital", "callspread"), default="digital")
    sp.add_argument("--nodes", type=int, default=257)
    sp.add_argument("--hi", type=float, help="upper end of the digital strip")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--out", help="write the portfolio CSV here")
    sp.set_defaults(func=cmd_hedge)

    sp = sub.add_parser("american", help="American upper bound for a convex payoff")
    common(sp)
    sp.add_argument("--oracle-steps", type=int, default=0)
    sp.add_argument("--strict-submartingale", action="store_true",
                    help="do not assume the discounted underlying is a martingale")
    sp.set_defaults(func=cmd_american)

    sp = sub.add_parser("barrier", help="price f(X_T) 1{Y in C} on Monte Carlo joint curves")
    common(sp)
    sp.add_argument("--event", help="e.g. maxlt:B=130, or a BarrierEvent JSON text/file")
    sp.set_defaults(func=cmd_barrier)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TailConditionFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (StrikespanError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
