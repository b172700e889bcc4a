"""Print every pricing form side by side for the catalog payoffs.

    python3 scripts/cross_form_table.py --spot 100 --vol 0.2 --rate 0.05 --maturity 1
"""

from __future__ import annotations

import argparse

from strikespan import bs_curve, price_all
from strikespan import payoff as po
from strikespan.pricer import FORMS, PriceReport


def catalog():
    return [po.call(100), po.put(100), po.straddle(100), po.butterfly(90, 100, 110),
            po.capped_call(100, 20), po.power_call(2, 10000), po.digital_ge(105),
            po.polynomial([1.0, 0.5, 0.01], 80, 120), po.power(2)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spot", type=float, default=100.0)
    ap.add_argument("--vol", type=float, default=0.2)
    ap.add_argument("--rate", type=float, default=0.05)
    ap.add_argument("--maturity", type=float, default=1.0)
    args = ap.parse_args()
    curve = bs_curve(args.spot, args.vol, args.rate, args.maturity)
    print(f"{'payoff':<34}" + "".join(f"{f:>16}" for f in FORMS) + f"{'spread':>12}")
    for p in catalog():
        reps = price_all(p, curve)
        vals = [r.value for r in reps.values() if isinstance(r, PriceReport)]
        cells = "".join(f"{r.value:>16.8f}" if isinstance(r, PriceReport) else f"{'n/a':>16}" for r in reps.values())
        print(f"{p.label:<34}{cells}{max(vals) - min(vals):>12.2e}")


if __name__ == "__main__":
    main()
