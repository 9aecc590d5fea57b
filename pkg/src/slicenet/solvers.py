"""Distributed solvers for the slice allocation LP.

The operator-consensus method splits the variables in two copies: the
X side carries the per-link feasibility sets (airtime simplex and
licensed budget box), the Z side carries the QoS halfspaces, and a
scaled dual ties them together.  Each X update touches one link's own
prices, rates, and entitlements only; the consensus side works purely
on (Z, dual) blocks plus the per-pair QoS bounds.  That boundary is
what lets operators run the per-link updates locally without shipping
their tariffs to the coordinator, and the test suite enforces it
structurally.

A projected dual subgradient method on the same split serves as the
baseline; both report per-iteration traces of their own iterates'
revenue and constraint residuals, and both return an allocation
repaired to exact feasibility at the end.

All internal math runs in normalized units: bandwidth in multiples of
the largest pool and revenue gains scaled to a unit maximum.  A unit
penalty parameter then works across instances whose raw data spans
megahertz and micro-currency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .problem import SlicingProblem, SlicingSolution, solution_from_arrays, _zero_solution
from .projections import project_budget_box, project_capped_simplex_eq

REPAIR_TOL = 1e-9
REPAIR_MAX_ROUNDS = 500


# ---------------------------------------------------------------------------
# subproblems (exact, closed form)


def alpha_subproblem(z_block, dual_block, gamma: float, xi_budget: float, gains) -> np.ndarray:
    """One link's airtime split against the current consensus point.

    Minimizes ``-gains . a + (gamma/2) ||a - z + dual||^2`` over the
    capped simplex ``{sum a = xi_budget, 0 <= a <= 1}``; the linear
    term folds into the projection target, so the minimizer is exact.
    """
    z = np.asarray(z_block, dtype=float)
    lam = np.asarray(dual_block, dtype=float)
    g = np.asarray(gains, dtype=float)
    return project_capped_simplex_eq(z - lam + g / gamma, xi_budget, cap=1.0)


def w_subproblem(z_block, dual_block, gamma: float, budget: float, gains) -> np.ndarray:
    """One link's licensed draw against the current consensus point.

    Same quadratic form as :func:`alpha_subproblem`, minimized over
    ``{sum u <= budget, u >= 0}``.
    """
    z = np.asarray(z_block, dtype=float)
    lam = np.asarray(dual_block, dtype=float)
    g = np.asarray(gains, dtype=float)
    return project_budget_box(z - lam + g / gamma, budget)


def z_projection(u_block, alpha_block, dual_u, dual_alpha, band_ratio: float, qos_bound):
    """Consensus update: project (X + dual) onto the QoS halfspaces.

    Every (link, slice) pair is independent, so this is a batch of 2-d
    halfspace projections onto ``z_u + band_ratio * z_a >= bound``.
    Pairs with a nonpositive bound pass through unchanged.
    """
    p = np.asarray(u_block, dtype=float) + np.asarray(dual_u, dtype=float)
    q = np.asarray(alpha_block, dtype=float) + np.asarray(dual_alpha, dtype=float)
    bound = np.asarray(qos_bound, dtype=float)
    slack = np.maximum(bound - (p + band_ratio * q), 0.0)
    scale = slack / (1.0 + band_ratio * band_ratio)
    return p + scale, q + scale * band_ratio


def dual_update(dual, x, z) -> np.ndarray:
    """Scaled ascent step: accumulate the consensus gap."""
    return np.asarray(dual, dtype=float) + np.asarray(x, dtype=float) - np.asarray(z, dtype=float)


# ---------------------------------------------------------------------------
# normalized view of a problem


class _Scaled:
    """Dense normalized arrays for one problem.

    Inactive (link, slice) pairs are simply dropped from each link's
    column list; every array here is ragged-by-link via ``cols``.
    """

    def __init__(self, problem: SlicingProblem):
        p = problem
        n, m = p.n_links, p.n_services
        self.problem = p
        self.cols = [
            np.array([l for l in range(m) if p.offered[k][l]], dtype=int)
            for k in range(n)
        ]
        self.active = np.array(p.offered, dtype=bool).reshape(n, m)
        self.width = max(
            p.unlicensed_hz,
            max(p.budget_hz, default=0.0),
            max(p.mno_budget_hz, default=0.0),
            1.0,
        )
        self.band_ratio = p.unlicensed_hz / self.width
        gain = np.zeros((n, m))
        qos = np.zeros((n, m))
        for k in range(n):
            for l in self.cols[k]:
                gain[k, l] = p.price_per_bit[k][l] * p.rate_bps_hz[k] * self.width
                qos[k, l] = p.min_rate_bps[k][l] / (p.rate_bps_hz[k] * self.width)
        self.gain_scale = gain.max() if gain.size and gain.max() > 0 else 1.0
        self.gain_u = gain / self.gain_scale
        self.gain_a = self.gain_u * self.band_ratio
        self.qos = qos
        self.budget = np.array(p.budget_hz, dtype=float) / self.width
        self.xi = np.array(p.access, dtype=float)
        self.dim = 2 * sum(len(c) for c in self.cols)

    def objective(self, u: np.ndarray, a: np.ndarray) -> float:
        """True revenue of a normalized allocation, in original units."""
        total = 0.0
        for k, cols in enumerate(self.cols):
            total += float(self.gain_u[k, cols] @ u[k, cols])
            total += float(self.gain_a[k, cols] @ a[k, cols])
        return total * self.gain_scale

    def project_local(self, u: np.ndarray, a: np.ndarray):
        """Exact projection onto every link's own feasibility sets."""
        pu, pa = np.zeros_like(u), np.zeros_like(a)
        for k, cols in enumerate(self.cols):
            if len(cols) == 0:
                continue
            pa[k, cols] = project_capped_simplex_eq(a[k, cols], self.xi[k], cap=1.0)
            pu[k, cols] = project_budget_box(u[k, cols], self.budget[k])
        return pu, pa

    def qos_shortfall(self, u: np.ndarray, a: np.ndarray) -> float:
        gap = (self.qos - (u + self.band_ratio * a)) * self.active
        return float(np.maximum(gap, 0.0).max(initial=0.0))

    def repair(self, u: np.ndarray, a: np.ndarray, tol: float = REPAIR_TOL,
               max_rounds: int = REPAIR_MAX_ROUNDS):
        """Round an iterate to a feasible allocation.

        Alternates exact projections between the per-link sets and the
        QoS halfspaces, finishing on the per-link side so budgets and
        airtime sums hold exactly; the residual QoS slack falls below
        ``tol`` for any feasible problem.
        """
        u, a = self.project_local(u, a)
        denom = 1.0 + self.band_ratio * self.band_ratio
        for _ in range(max_rounds):
            if self.qos_shortfall(u, a) <= tol:
                break
            slack = np.maximum((self.qos - (u + self.band_ratio * a)) * self.active, 0.0)
            scale = slack / denom
            u, a = self.project_local(u + scale, a + scale * self.band_ratio)
        return u, a

    def to_solution(self, u, a, method, flags=()) -> SlicingSolution:
        return solution_from_arrays(
            self.problem, u * self.width, a, method, flags=flags
        )


# ---------------------------------------------------------------------------
# traces


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    primal_residual: float
    dual_residual: float


@dataclass
class ConvergenceTrace:
    """Per-iteration record of a solver run.

    ``objective`` is the revenue of the method's own current iterate,
    not of a post-processed point: mid-run iterates may violate some
    constraints, and the residual columns say by how much.  Judging
    convergence on cleaned-up iterates would credit the cleanup, not
    the method.  The solution a solver *returns* is always repaired to
    feasibility separately.
    """

    method: str
    rows: list[TraceRow] = field(default_factory=list)
    converged: bool = False
    gamma_final: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.rows)

    def iterations_to_gap(self, reference: float, rel: float = 1e-2) -> int | None:
        """First iteration within ``rel`` of ``reference``, feasibly so.

        Both gates matter: the objective must sit within ``rel``
        relative of the reference and the iterate's primal residual
        (dimensionless, in normalized resource units) must be below
        ``rel`` as well.  An iterate whose revenue happens to match
        the optimum while its constraints are still violated has not
        converged to anything.
        """
        bar = rel * max(abs(reference), 1e-300)
        for row in self.rows:
            if abs(row.objective - reference) <= bar and row.primal_residual <= rel:
                return row.iteration
        return None

    def to_text(self) -> str:
        lines = [f"# method\t{self.method}", "iteration\tobjective\tprimal\tdual"]
        for r in self.rows:
            lines.append(
                f"{r.iteration}\t{r.objective:.10e}\t{r.primal_residual:.6e}\t{r.dual_residual:.6e}"
            )
        lines.append(f"# converged\t{self.converged}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# operator-consensus solver


def solve_admm(
    problem: SlicingProblem,
    gamma: float = 1.0,
    max_iter: int = 2000,
    tol: float = 1e-6,
    adapt: bool = True,
) -> tuple[SlicingSolution, ConvergenceTrace]:
    """Solve the allocation LP by per-link splitting.

    Stops when both consensus residuals fall below ``tol * sqrt(dim)``
    where dim counts the split variables.  With ``adapt`` the penalty
    doubles or halves whenever one residual outruns the other tenfold;
    the scaled dual is rescaled in step so the underlying multipliers
    are preserved.
    """
    if problem.aggregate_cap_hz is not None:
        raise ValueError(
            "the distributed solver handles per-link budgets only;"
            " solve aggregate-capped problems with the exact oracle"
        )
    s = _Scaled(problem)
    trace = ConvergenceTrace(method="admm", gamma_final=gamma)
    n, m = problem.n_links, problem.n_services
    if s.dim == 0:
        trace.converged = True
        return _zero_solution(problem, "admm"), trace

    xu, xa = np.zeros((n, m)), np.zeros((n, m))
    for k, cols in enumerate(s.cols):
        if len(cols):
            xa[k, cols] = s.xi[k] / len(cols)
    zu, za = xu.copy(), xa.copy()
    lu, la = np.zeros((n, m)), np.zeros((n, m))
    eps = tol * math.sqrt(s.dim)

    for it in range(1, max_iter + 1):
        for k, cols in enumerate(s.cols):
            if len(cols) == 0:
                continue
            xa[k, cols] = alpha_subproblem(
                za[k, cols], la[k, cols], gamma, s.xi[k], s.gain_a[k, cols]
            )
            xu[k, cols] = w_subproblem(
                zu[k, cols], lu[k, cols], gamma, s.budget[k], s.gain_u[k, cols]
            )
        zu_prev, za_prev = zu, za
        zu, za = z_projection(xu, xa, lu, la, s.band_ratio, s.qos)
        zu *= s.active
        za *= s.active
        lu = dual_update(lu, xu, zu)
        la = dual_update(la, xa, za)

        primal = math.hypot(
            float(np.linalg.norm(xu - zu)), float(np.linalg.norm(xa - za))
        )
        dual = gamma * math.hypot(
            float(np.linalg.norm(zu - zu_prev)), float(np.linalg.norm(za - za_prev))
        )
        trace.rows.append(TraceRow(it, s.objective(zu, za), primal, dual))
        if primal <= eps and dual <= eps:
            trace.converged = True
            break
        if adapt:
            if primal > 10.0 * dual and dual > 0:
                gamma *= 2.0
                lu /= 2.0
                la /= 2.0
            elif dual > 10.0 * primal and primal > 0:
                gamma /= 2.0
                lu *= 2.0
                la *= 2.0

    trace.gamma_final = gamma
    ru, ra = s.repair(zu.copy(), za.copy())
    flags = () if trace.converged else ("max-iterations",)
    return s.to_solution(ru, ra, "admm", flags), trace


# ---------------------------------------------------------------------------
# dual subgradient baseline


def solve_subgradient(
    problem: SlicingProblem,
    max_iter: int = 500,
    step_scale: float = 1.0,
) -> tuple[SlicingSolution, ConvergenceTrace]:
    """Projected dual subgradient on the QoS floors.

    The QoS constraints are priced into the objective; the priced
    problem separates per link, where the maximizer is a greedy fill of
    the airtime simplex and an all-in licensed draw on the best-paying
    slice.  Steps shrink as ``1/sqrt(t)`` and the reported allocation
    is the repaired running average of the primal iterates.  A zero
    ``step_scale`` freezes the multipliers, so the trace objective
    stays constant; that degenerate case anchors the tests.
    """
    if problem.aggregate_cap_hz is not None:
        raise ValueError(
            "the subgradient baseline handles per-link budgets only;"
            " solve aggregate-capped problems with the exact oracle"
        )
    s = _Scaled(problem)
    trace = ConvergenceTrace(method="subgradient")
    n, m = problem.n_links, problem.n_services
    if s.dim == 0:
        trace.converged = True
        return _zero_solution(problem, "subgradient"), trace

    lam = np.zeros((n, m))
    avg_u, avg_a = np.zeros((n, m)), np.zeros((n, m))
    for it in range(1, max_iter + 1):
        xu, xa = np.zeros((n, m)), np.zeros((n, m))
        for k, cols in enumerate(s.cols):
            coef_a = s.gain_a[k, cols] + lam[k, cols] * s.band_ratio
            xa[k, cols] = _greedy_simplex_max(coef_a, s.xi[k])
            coef_u = s.gain_u[k, cols] + lam[k, cols]
            best = int(np.argmax(coef_u))
            if coef_u[best] > 0:
                xu[k, cols[best]] = s.budget[k]
        avg_u += (xu - avg_u) / it
        avg_a += (xa - avg_a) / it

        slack = (xu + s.band_ratio * xa) - s.qos
        step = step_scale / math.sqrt(it)
        lam = np.maximum(0.0, lam - step * slack) * s.active

        shortfall = float(
            (np.maximum(s.qos - (avg_u + s.band_ratio * avg_a), 0.0) * s.active).max()
        )
        trace.rows.append(
            TraceRow(it, s.objective(avg_u, avg_a), shortfall, step * float(np.abs(slack).max()))
        )

    ru, ra = s.repair(avg_u.copy(), avg_a.copy())
    trace.converged = True
    return s.to_solution(ru, ra, "subgradient", ("ergodic-average",)), trace


def _greedy_simplex_max(coef: np.ndarray, total: float) -> np.ndarray:
    """Maximize a linear form over {sum x = total, 0 <= x <= 1}."""
    x = np.zeros_like(coef)
    left = total
    for j in np.argsort(-coef):
        take = min(1.0, left)
        x[j] = take
        left -= take
        if left <= 0:
            break
    return x
