"""Replication error and price gap of static hedges as the partition is refined.

Writes CSV to stdout (for external plotting):
    python3 scripts/hedge_convergence.py > convergence.csv
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from strikespan import build_call_spread_hedge, build_digital_hedge, bs_curve, price_portfolio
from strikespan import payoff as po
from strikespan.hedge import grid_errors
from strikespan.pricer import price_theorem1, price_windowed
from strikespan.quadrature import QuadConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[9, 17, 33, 65, 129, 257, 513, 1025, 2049])
    args = ap.parse_args()
    curve = bs_curve(100.0, 0.2, 0.05, 1.0)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["payoff", "kind", "nodes", "sup_error", "mean_abs_error", "price_gap"])

    sq = po.power(2)
    ref = price_windowed(sq, 0, 200, (True, True), curve, QuadConfig(tol=1e-6)).value
    for n in args.nodes:
        h = build_call_spread_hedge(sq, 0, 200, n - 1)
        sup, mean = grid_errors(h, sq, 0, 200)
        out.writerow(["x^2 on [0,200]", "callspread", n, sup, mean, price_portfolio(h, curve) - ref])

    st = po.straddle(100)
    ref = price_theorem1(st, curve).value
    for n in args.nodes:
        grid = np.unique(np.concatenate([np.linspace(0, 400, n), [100.0]]))
        h = build_digital_hedge(st, grid)
        sup, mean = grid_errors(h, st, 0, 400)
        out.writerow(["straddle K=100", "digital", n, sup, mean, price_portfolio(h, curve) - ref])


if __name__ == "__main__":
    main()
