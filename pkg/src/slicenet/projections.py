"""Exact Euclidean projections used by the per-link solvers.

Every routine here is closed-form (sorting or breakpoint walks, no
iterative optimization), so projections are exact to floating-point
roundoff.  That matters: the distributed solver's convergence proofs
assume its subproblems are solved exactly, and the test suite holds
these functions to brute-force grids.
"""

from __future__ import annotations

import math

import numpy as np


def _simplex_eq_uncapped(y: np.ndarray, total: float) -> np.ndarray:
    """Project onto {x >= 0, sum x = total} by water-filling."""
    if total <= 0.0:
        return np.zeros_like(y)
    u = np.sort(y)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, y.size + 1)
    cond = u - (css - total) / ks > 0
    k = int(np.nonzero(cond)[0][-1]) + 1
    tau = (css[k - 1] - total) / k
    return np.maximum(y - tau, 0.0)


def project_capped_simplex_eq(y, total: float, cap: float = 1.0) -> np.ndarray:
    """Project y onto {x: sum x = total, 0 <= x_i <= cap}.

    The feasible set is empty unless 0 <= total <= n*cap; that is a
    caller error.  The projection is x_i = clip(y_i - tau, 0, cap)
    where tau solves the piecewise-linear equation sum x(tau) = total;
    the breakpoint walk below solves it exactly.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if total < -1e-12:
        raise ValueError(f"negative simplex total {total}")
    total = max(0.0, float(total))
    if n == 0:
        if total > 1e-12:
            raise ValueError("cannot distribute a positive total over nothing")
        return np.zeros(0)
    if not math.isfinite(cap):
        return _simplex_eq_uncapped(y, total)
    if total > n * cap + 1e-9:
        raise ValueError(f"total {total} exceeds capacity {n * cap}")
    total = min(total, n * cap)

    # The walk runs on plain floats: inputs here are a handful of
    # slices per link, where interpreter arithmetic beats array calls.
    ys = y.tolist()

    def mass(tau: float) -> float:
        acc = 0.0
        for v in ys:
            d = v - tau
            if d >= cap:
                acc += cap
            elif d > 0.0:
                acc += d
        return acc

    points = sorted({v - cap for v in ys} | set(ys))
    tau = points[-1]
    if mass(points[0]) <= total:
        tau = points[0]
    else:
        for a, b in zip(points, points[1:]):
            ma, mb = mass(a), mass(b)
            if mb <= total <= ma:
                tau = a if ma == mb else a + (ma - total) * (b - a) / (ma - mb)
                break
    return np.clip(y - tau, 0.0, cap)


def project_budget_box(y, budget: float, cap: float = math.inf) -> np.ndarray:
    """Project y onto {x: sum x <= budget, 0 <= x_i <= cap}.

    When the box projection already fits the budget it is the answer;
    otherwise the budget binds and the equality projection applies.
    """
    y = np.asarray(y, dtype=float)
    if budget < 0:
        raise ValueError(f"negative budget {budget}")
    inside = np.clip(y, 0.0, cap if math.isfinite(cap) else None)
    if inside.sum() <= budget:
        return inside
    return project_capped_simplex_eq(y, budget, cap=cap)


def project_halfspace(u: float, a: float, beta: float, bound: float) -> tuple[float, float]:
    """Project the point (u, a) onto {(x, y): x + beta*y >= bound}."""
    slack = bound - (u + beta * a)
    if slack <= 0.0:
        return u, a
    scale = slack / (1.0 + beta * beta)
    return u + scale, a + scale * beta
