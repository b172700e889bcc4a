"""American put: European value, upper bound and CRR lattice value on a rate/vol grid.

    python3 scripts/american_bound_grid.py --strike 100 --steps 1000
"""

from __future__ import annotations

import argparse
import itertools

from strikespan import american_bound, bs_curve, convex_decompose
from strikespan import payoff as po
from strikespan.american import with_oracle


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--strike", type=float, default=100.0)
    ap.add_argument("--spot", type=float, default=100.0)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--rates", type=float, nargs="+", default=[0.0, 0.02, 0.05, 0.1])
    ap.add_argument("--vols", type=float, nargs="+", default=[0.1, 0.2, 0.3])
    args = ap.parse_args()
    p = po.put(args.strike)
    d = convex_decompose(p)
    print(f"{'rate':>6}{'vol':>6}{'european':>12}{'lattice':>12}{'bound':>12}{'gap/eur':>10}{'lat.err':>10}")
    for rate, vol in itertools.product(args.rates, args.vols):
        rep = american_bound(d, bs_curve(args.spot, vol, rate, 1.0), args.spot)
        rep = with_oracle(rep, p, args.spot, vol, rate, 1.0, args.steps)
        print(f"{rate:>6.2f}{vol:>6.2f}{rep.european_value:>12.6f}{rep.oracle_value:>12.6f}"
              f"{rep.bound:>12.6f}{rep.gap_ratio:>10.4f}{rep.lattice_error:>10.1e}")


if __name__ == "__main__":
    main()
