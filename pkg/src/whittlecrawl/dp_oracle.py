"""
Dynamic-programming solvers for the single-source subsidy problem.

A source receives a subsidy ``C * lam`` for every period it is left passive and
the state ``x`` as reward when crawled. These solvers work from the Bellman
equations directly and never call the closed-form index in :mod:`.whittle`, so
they can be used to check it.

Two routes are provided:

* :func:`solve_discounted` solves the discounted equation
  ``V(x) = max(C lam + delta V(alpha x + u), x + delta V(u))`` on a uniform grid
  over ``[u, u_star]`` with linear interpolation.
* :func:`solve_average_lattice` evaluates the long-run average reward of every
  periodic crawl schedule exactly; after the first crawl the state only visits
  ``x_n = (1 - alpha**n) * u_star`` so the average-reward problem reduces to a
  choice of period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .model import InvalidParameterError, SourceParams


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class IndexabilityError(RuntimeError):
    """The active/passive comparison did not change sign where indexability requires it."""


class StructureViolationError(RuntimeError):
    """A passive set was not a single interval starting at ``u``."""


@dataclass(frozen=True)
class SubsidyProblem:
    params: SourceParams
    lambda_subsidy: float

    @property
    def subsidy(self) -> float:
        """Per-period passive reward ``C * lam``."""
        return self.params.cost * self.lambda_subsidy

    def reward(self, x, v):
        return x * v + self.subsidy * (1 - v)


@dataclass
class ValueFunction:
    grid: np.ndarray
    values: np.ndarray
    active: np.ndarray
    delta: float | None = None
    beta: float | None = None
    residual: float = 0.0
    iterations: int = 0

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)


@dataclass(frozen=True)
class ActivePassivePartition:
    """Threshold ``a`` with passive set ``[u, a)`` and active set ``[a, u_star]``.

    ``threshold_a`` is ``inf`` when every state is passive.
    """

    lambda_subsidy: float
    threshold_a: float
    n_switches: int = 1
    passive_mask: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def is_threshold(self) -> bool:
        return self.n_switches <= 1 and (self.passive_mask is None or _is_prefix(self.passive_mask))

    @property
    def all_active(self) -> bool:
        return self.passive_mask is not None and not self.passive_mask.any()

    @property
    def all_passive(self) -> bool:
        return math.isinf(self.threshold_a)


def _is_prefix(mask: np.ndarray) -> bool:
    # True...True False...False
    return not np.any(~mask[:-1] & mask[1:])


def state_grid(p: SourceParams, grid_n: int) -> np.ndarray:
    if grid_n < 2:
        raise InvalidParameterError("grid_n must be >= 2")
    grid = np.linspace(p.u, p.u_star, grid_n)
    grid[-1] = p.u_star
    return grid


def _interp_weights(grid: np.ndarray, pts: np.ndarray):
    pts = np.clip(pts, grid[0], grid[-1])
    j = np.clip(np.searchsorted(grid, pts, side="right") - 1, 0, len(grid) - 2)
    w = (pts - grid[j]) / (grid[j + 1] - grid[j])
    return j, w


def _q_values(grid, nxt_j, nxt_w, values, subsidy, delta):
    v_next = (1.0 - nxt_w) * values[nxt_j] + nxt_w * values[nxt_j + 1]
    q_passive = subsidy + delta * v_next
    q_active = grid + delta * values[0]
    return q_passive, q_active


def solve_discounted(prob: SubsidyProblem, delta: float, grid_n: int = 4001, tol: float = 1e-9,
                     method: str = "policy", v0=None, max_iter: int | None = None,
                     active0=None) -> ValueFunction:
    """Solve the discounted Bellman equation on a uniform state grid.

    Parameters
    ----------
    prob : SubsidyProblem
    delta : float
        Discount factor in ``[0, 1)``.
    grid_n : int
        Number of grid points spanning ``[u, u_star]``.
    tol : float
        Bound on the sup-norm Bellman residual, relative to ``max(1, |V|_inf)``.
    method : {"policy", "value"}
        Howard policy iteration (exact linear solves; suited to ``delta`` near 1)
        or plain value iteration from ``v0``.
    v0 : array_like, optional
        Initial values for value iteration (defaults to zeros).
    active0 : array_like of bool, optional
        Initial policy for policy iteration (defaults to all active).

    Raises
    ------
    ConvergenceError
        If the iteration cap is reached before the residual drops below ``tol``.
    """
    if not 0.0 <= delta < 1.0:
        raise InvalidParameterError(f"delta must lie in [0, 1), got {delta}")
    if not tol > 0.0:
        raise InvalidParameterError("tol must be > 0; the Bellman residual is never exactly zero in floating point")
    p = prob.params
    grid = state_grid(p, grid_n)
    nxt_j, nxt_w = _interp_weights(grid, p.alpha * grid + p.u)
    subsidy = prob.subsidy

    if method == "value":
        values = np.zeros(grid_n) if v0 is None else np.array(v0, dtype=float)
        max_iter = max_iter or 1_000_000
        for it in range(1, max_iter + 1):
            qp, qa = _q_values(grid, nxt_j, nxt_w, values, subsidy, delta)
            new = np.maximum(qp, qa)
            residual = float(np.max(np.abs(new - values)))
            values = new
            if residual <= tol * max(1.0, float(np.max(np.abs(values)))):
                break
        else:
            raise ConvergenceError(f"value iteration hit {max_iter} iterations, residual {residual:.3e}",
                                   residual)
    elif method == "policy":
        values, it = _policy_iteration(grid, nxt_j, nxt_w, subsidy, delta, active0, max_iter or 500)
    else:
        raise ValueError(f"unknown method {method!r}")

    qp, qa = _q_values(grid, nxt_j, nxt_w, values, subsidy, delta)
    residual = float(np.max(np.abs(np.maximum(qp, qa) - values)))
    if residual > tol * max(1.0, float(np.max(np.abs(values)))):
        raise ConvergenceError(f"Bellman residual {residual:.3e} above tolerance {tol:.1e} "
                               f"(tolerance may be too tight for this grid)", residual)
    return ValueFunction(grid, values, qa >= qp, delta=delta, residual=residual, iterations=it)


def _policy_iteration(grid, nxt_j, nxt_w, subsidy, delta, active0, max_iter):
    n = len(grid)
    rows = np.arange(n)
    active = np.ones(n, dtype=bool) if active0 is None else np.array(active0, dtype=bool)
    for it in range(1, max_iter + 1):
        passive = ~active
        r = np.where(active, grid, subsidy)
        pr, pj, pw = rows[passive], nxt_j[passive], nxt_w[passive]
        P = sp.csr_matrix(
            (np.concatenate([1.0 - pw, pw, np.ones(active.sum())]),
             (np.concatenate([pr, pr, rows[active]]),
              np.concatenate([pj, pj + 1, np.zeros(active.sum(), dtype=int)]))),
            shape=(n, n))
        values = spsolve((sp.identity(n, format="csr") - delta * P).tocsc(), r)
        qp, qa = _q_values(grid, nxt_j, nxt_w, values, subsidy, delta)
        # switch only on a strict improvement so ties cannot cycle
        slack = 1e-12 * max(1.0, float(np.max(np.abs(values))))
        new_active = np.where(active, qa >= qp - slack, qa > qp + slack)
        if np.array_equal(new_active, active):
            return values, it
        active = new_active
    raise ConvergenceError(f"policy iteration did not stabilise in {max_iter} sweeps")


def average_reward_of_period(prob: SubsidyProblem, n):
    """Long-run average reward of crawling every ``n`` periods from ``u``.

    ``n - 1`` passive periods earn the subsidy, the crawl collects ``x_n``.
    """
    n = np.asarray(n, dtype=float)
    return (prob.subsidy * (n - 1) + prob.params.lattice(n)) / n


def solve_average_lattice(prob: SubsidyProblem, n_max: int = 5000):
    """Optimal long-run average reward over periodic schedules of period ``1..n_max``.

    Returns
    -------
    beta : float
        ``max(C lam, max_n average_reward_of_period(n))``.
    best_period : int or None
        Smallest maximising period, ``None`` when never crawling is optimal.
    """
    if n_max < 1:
        raise InvalidParameterError("n_max must be >= 1")
    periods = np.arange(1, n_max + 1)
    f = average_reward_of_period(prob, periods)
    j = int(np.argmax(f))
    if f[j] >= prob.subsidy:
        return float(f[j]), int(periods[j])
    return float(prob.subsidy), None


def _lattice_step(x: float, p: SourceParams):
    """Return ``k`` if ``x`` is (numerically) the lattice point ``x_k``, else ``None``."""
    r = math.log1p(-x / p.u_star) / math.log(p.alpha)
    k = max(1, round(r))
    if abs(p.lattice(k) - x) <= 1e-12 * p.u_star:
        return k
    return None


def _bisect(pred, lo, hi, tol, max_iter=200):
    """Largest ``lam`` with ``pred(lam)`` true, assuming ``pred`` flips once from True to False."""
    if not pred(lo) or pred(hi):
        raise IndexabilityError(f"no sign change of the active/passive comparison on [{lo}, {hi}]")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), hi - lo


def oracle_index(x: float, p: SourceParams, tol: float = 1e-9, *, delta: float = 0.9999,
                 grid_n: int = 4001, route: str = "auto") -> float:
    """Subsidy at which crawling and waiting are equally good in state ``x``, by bisection.

    On the reachable lattice ``x_k`` the comparison is exact: crawling at ``x_k``
    is optimal iff the best schedule crawls within ``k`` periods. Elsewhere the
    discounted problem with ``delta`` close to 1 is solved on a grid and the two
    actions are compared at ``x``.

    Parameters
    ----------
    route : {"auto", "lattice", "discounted"}

    Raises
    ------
    IndexabilityError
        If the comparison does not change sign on ``[0, 2 u_star / C]``.
    """
    if not p.u * (1 - 1e-12) <= x < p.u_star:
        raise InvalidParameterError(f"x must lie in [u, u_star) = [{p.u}, {p.u_star}), got {x}")
    if not tol > 0.0:
        raise InvalidParameterError("tol must be > 0")
    lo, hi = 0.0, 2.0 * p.u_star / p.cost
    k = _lattice_step(x, p) if route in ("auto", "lattice") else None
    if route == "lattice" and k is None:
        raise InvalidParameterError(f"x = {x} is not a lattice state")

    if k is not None:
        n_max = max(4 * k, 2000)
        periods = np.arange(1, n_max + 1)
        x_n = p.lattice(periods)

        def crawl_at_x(lam):
            f = (p.cost * lam * (periods - 1) + x_n) / periods
            return f[:k].max() >= max(f[k:].max(), p.cost * lam)

        lam, _ = _bisect(crawl_at_x, lo, hi, tol)
        return lam

    state = {"active": None}

    def crawl_at_x(lam):
        vf = solve_discounted(SubsidyProblem(p, lam), delta, grid_n, tol=1e-10, active0=state["active"])
        state["active"] = vf.active
        return x + delta * vf.values[0] >= p.cost * lam + delta * vf(p.alpha * x + p.u)

    lam, _ = _bisect(crawl_at_x, lo, hi, tol)
    return lam


def passive_mask(vf: ValueFunction, prob: SubsidyProblem) -> np.ndarray:
    """Grid states where waiting is strictly better than crawling."""
    qp, qa = _q_values(vf.grid, *_interp_weights(vf.grid, prob.params.alpha * vf.grid + prob.params.u),
                       vf.values, prob.subsidy, vf.delta)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(vf.values))))
    return qp > qa + slack


def partition(vf: ValueFunction, prob: SubsidyProblem) -> ActivePassivePartition:
    mask = passive_mask(vf, prob)
    switches = int(np.count_nonzero(mask[1:] != mask[:-1]))
    if mask.all():
        a = math.inf
    else:
        a = float(vf.grid[int(np.argmin(mask))])
    return ActivePassivePartition(prob.lambda_subsidy, a, switches, mask)


def passive_set_sweep(p: SourceParams, lambdas: Sequence[float], delta: float = 0.99,
                      grid_n: int = 4001, strict: bool = True) -> list[ActivePassivePartition]:
    """Passive/active partition for each subsidy in ascending ``lambdas``.

    With ``strict`` a partition that is not ``[u, a)``/``[a, u_star]`` raises
    :class:`StructureViolationError` and a decreasing threshold raises
    :class:`IndexabilityError`; otherwise the partitions are returned for the
    caller to inspect.
    """
    lambdas = [float(l) for l in lambdas]
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise InvalidParameterError("lambdas must be ascending")
    out = []
    active0 = None
    for lam in lambdas:
        prob = SubsidyProblem(p, lam)
        vf = solve_discounted(prob, delta, grid_n, tol=1e-10, active0=active0)
        active0 = vf.active
        part = partition(vf, prob)
        if strict and not part.is_threshold:
            raise StructureViolationError(f"passive set at lambda={lam} is not an interval [u, a)")
        if strict and out and part.threshold_a < out[-1].threshold_a:
            raise IndexabilityError(f"threshold decreased from {out[-1].threshold_a} to {part.threshold_a} "
                                    f"at lambda={lam}")
        out.append(part)
    return out


def estimate_boundary_subsidies(partitions: Sequence[ActivePassivePartition]):
    """Empirical ``(lam_all_active, lam_all_passive)`` from a sweep.

    The first is the largest swept subsidy at which every state is active, the
    second the smallest at which every state is passive (``None`` if not seen).
    """
    low = [q.lambda_subsidy for q in partitions if q.all_active]
    high = [q.lambda_subsidy for q in partitions if q.all_passive]
    return (max(low) if low else None, min(high) if high else None)


def check_value_function(vf: ValueFunction, p: SourceParams, convex_tol: float | None = None,
                         lipschitz_slack: float = 1e-6) -> dict:
    """Monotonicity, discrete convexity and Lipschitz bound of a solved value function.

    Returns a mapping ``name -> (passed, worst_value)``.
    """
    convex_tol = 1e-8 * p.u_star if convex_tol is None else convex_tol
    v, g = vf.values, vf.grid
    dv = np.diff(v)
    slopes = dv / np.diff(g)
    second = v[2:] - 2 * v[1:-1] + v[:-2] if len(v) > 2 else np.zeros(1)
    lip = 1.0 / (1.0 - p.alpha) * (1 + lipschitz_slack)
    return {
        "monotone": (bool(dv.min() >= -convex_tol), float(dv.min())),
        "convex": (bool(second.min() >= -convex_tol), float(second.min())),
        "lipschitz": (bool(np.abs(slopes).max() <= lip), float(np.abs(slopes).max())),
    }
