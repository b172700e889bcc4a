"""Adaptive midpoint Riemann-Stieltjes quadrature.

``integral g(a) dG(a)`` is approximated on a partition by
``sum g(midpoint) * (G(right) - G(left))``.  Each cell is compared against
its own bisection and the cells carrying most of the discrepancy are split
until the total absolute discrepancy drops below ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import QuadratureNoConvergence


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature settings; ``None`` tolerances scale with the curve's forward."""

    tol: float | None = None
    tail_tol: float | None = None
    max_nodes: int = 200_000
    initial_cells: int = 256

    def resolve(self, scale: float) -> "QuadConfig":
        s = max(1.0, abs(scale))
        return replace(
            self,
            tol=1e-6 * s if self.tol is None else self.tol,
            tail_tol=1e-9 * s if self.tail_tol is None else self.tail_tol,
        )


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    n_nodes: int


def _identity(x):
    return x


def stieltjes(g: Callable, G: Callable | None, nodes, tol: float, max_nodes: int = 200_000) -> QuadResult:
    """Adaptive approximation of the integral of ``g`` against ``dG`` over [nodes[0], nodes[-1]].

    ``nodes`` must contain every point where ``g`` is discontinuous; those
    stay partition nodes so no cell straddles a jump of the integrand.
    ``G=None`` means Lebesgue measure.
    """
    G = _identity if G is None else G
    x = np.unique(np.asarray(nodes, dtype=float))
    if x.size < 2:
        return QuadResult(0.0, 0.0, int(x.size))
    Gx = np.asarray(G(x), dtype=float)
    while True:
        a, b = x[:-1], x[1:]
        m = 0.5 * (a + b)
        Gm = np.asarray(G(m), dtype=float)
        Ga, Gb = Gx[:-1], Gx[1:]
        coarse = g(m) * (Gb - Ga)
        fine = g(0.5 * (a + m)) * (Gm - Ga) + g(0.5 * (m + b)) * (Gb - Gm)
        diff = np.abs(fine - coarse)
        err = float(diff.sum())
        if not math.isfinite(err):
            raise QuadratureNoConvergence("integrand is not finite on the truncated domain")
        if err <= tol:
            return QuadResult(math.fsum(fine), err, int(x.size))
        room = max_nodes - x.size
        if room <= 0:
            raise QuadratureNoConvergence(
                f"refinement budget of {max_nodes} nodes exhausted (error estimate {err:.3g} > tol {tol:.3g})"
            )
        order = np.argsort(-diff, kind="stable")
        # split the fewest cells that leave less than half the tolerance behind
        cum = np.cumsum(diff[order])
        k = int(np.searchsorted(cum, err - 0.5 * tol)) + 1
        k = max(1, min(k, room, order.size))
        sel = np.sort(order[:k])
        x = np.insert(x, sel + 1, m[sel])
        Gx = np.insert(Gx, sel + 1, Gm[sel])
