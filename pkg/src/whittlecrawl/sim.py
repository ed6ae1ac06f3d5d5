"""
Epoch-driven simulation of a crawled fleet.

Per epoch: observe states, compute indices, select actions, collect the
pre-crawl state of every crawled source as reward, then transition. In
deterministic mode a passive source grows to ``alpha x + u`` and a crawled one
restarts at ``u``; in stochastic mode the expected increment ``u`` is replaced by
a sampled net utility.
"""

from __future__ import annotations

import csv
import warnings
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import FleetParams, InvalidParameterError, SourceParams
from .policy import Policy, PolicySpec
from .whittle import fleet_indices

XI_DISTRIBUTIONS = ("constant", "exponential", "mean")
MODES = ("deterministic", "stochastic")

# samples drawn per vectorised batch in sample_net_utility
_CHUNK = 20_000


@dataclass(frozen=True)
class ArrivalModel:
    """Law of the base utility of each arriving item.

    ``"constant"`` gives every item ``xi_mean``; ``"exponential"`` draws it with
    mean ``xi_mean``. ``"mean"`` is a degenerate test hook that skips sampling
    and adds exactly the expected utility ``u`` every period, which makes the
    stochastic dynamics coincide with the deterministic ones.
    """

    distribution: str = "exponential"

    def __post_init__(self):
        if self.distribution not in XI_DISTRIBUTIONS:
            raise InvalidParameterError(f"unknown xi distribution {self.distribution!r}")


def sample_net_utility(p: SourceParams, model: ArrivalModel, rng: np.random.Generator, size=None):
    """Utility added to a source during one crawl period.

    Arrivals are Poisson with mean ``lambda_rate * period``; given the count,
    arrival times are i.i.d. uniform on the period. Each item contributes
    ``xi * exp(-mu * (period - arrival_time))``. The expectation is ``p.u``.
    """
    if model.distribution == "mean":
        return p.u if size is None else np.full(size, p.u)
    n = 1 if size is None else int(size)
    out = np.empty(n)
    for start in range(0, n, _CHUNK):
        m = min(_CHUNK, n - start)
        counts = rng.poisson(p.lambda_rate * p.period, size=m)
        total = int(counts.sum())
        age = rng.uniform(0.0, p.period, size=total)
        if model.distribution == "constant":
            xi = p.xi_mean
        else:
            xi = rng.exponential(p.xi_mean, size=total)
        contrib = xi * np.exp(-p.mu * age)
        owner = np.repeat(np.arange(m), counts)
        out[start:start + m] = np.bincount(owner, weights=contrib, minlength=m)
    return float(out[0]) if size is None else out


def step_deterministic(states, actions, fleet: FleetParams) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    return np.where(actions, fleet.us, fleet.alphas * states + fleet.us)


def step_stochastic(states, actions, fleet: FleetParams, model: ArrivalModel, rng) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    U = np.array([sample_net_utility(p, model, rng) for p in fleet.sources])
    return np.where(actions, U, fleet.alphas * states + U)


@dataclass
class Trace:
    """Per-epoch, per-source record arrays of shape ``(horizon, n_sources)``.

    ``cursor`` holds the round-robin position at the start of each epoch (zero
    for stateless policies).
    """

    states: np.ndarray
    index: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    cursor: np.ndarray

    @property
    def horizon(self) -> int:
        return self.states.shape[0]

    @property
    def total_reward(self) -> np.ndarray:
        return self.reward.sum(axis=1)

    def write_csv(self, path) -> None:
        h, n = self.states.shape
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "source", "state", "index", "action", "reward"])
            for t in range(h):
                for i in range(n):
                    w.writerow([t, i, repr(float(self.states[t, i])), repr(float(self.index[t, i])),
                                int(self.action[t, i]), repr(float(self.reward[t, i]))])


@dataclass
class Summary:
    horizon: int
    warmup: int
    average_reward: float
    average_reward_no_warmup: float
    average_cost: float
    crawl_count: list[int]
    crawl_fraction: list[float]
    interval_histogram: list[dict[int, int]]
    cycle_period: Optional[int] = None
    cycle_pattern: Optional[list[list[int]]] = None
    budget_clipped_epochs: int = 0
    max_epoch_cost: float = 0.0

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "warmup": self.warmup,
            "average_reward": self.average_reward,
            "average_reward_no_warmup": self.average_reward_no_warmup,
            "average_cost": self.average_cost,
            "max_epoch_cost": self.max_epoch_cost,
            "budget_clipped_epochs": self.budget_clipped_epochs,
            "per_source": {
                "crawl_count": self.crawl_count,
                "crawl_fraction": self.crawl_fraction,
                "interval_histogram": [{str(k): v for k, v in sorted(h.items())}
                                       for h in self.interval_histogram],
            },
            "cycle": {"period": self.cycle_period, "pattern": self.cycle_pattern},
        }


def detect_cycle(actions: np.ndarray, max_period: int):
    """Smallest ``p <= max_period`` with ``actions[t + p] == actions[t]`` for all ``t``."""
    actions = np.asarray(actions)
    L = actions.shape[0]
    for p in range(1, min(max_period, L - 1) + 1):
        if np.array_equal(actions[p:], actions[:-p]):
            return p, actions[:p].astype(int).tolist()
    return None, None


def crawl_intervals(action_column: np.ndarray) -> Counter:
    t = np.flatnonzero(action_column)
    return Counter(np.diff(t).tolist())


def _initial_states(fleet: FleetParams, x0):
    if x0 is None:
        return fleet.us.copy()
    x0 = np.array([fleet.sources[i].u if v is None else v for i, v in enumerate(x0)], dtype=float)
    if x0.shape != (fleet.n,) or np.any(x0 < 0):
        raise InvalidParameterError("x0 must give one nonnegative state per source")
    if np.any((x0 < fleet.us) | (x0 > fleet.u_stars)):
        warnings.warn("initial states outside [u, u_star] are transient; simulating them as given",
                      stacklevel=3)
    return x0


def run(fleet: FleetParams, policy: PolicySpec, mode: str = "deterministic", horizon: int = 1000,
        warmup: Optional[int] = None, seed: Optional[int] = None, arrival: Optional[ArrivalModel] = None,
        x0: Optional[Sequence[Optional[float]]] = None):
    """Simulate ``horizon`` epochs and summarise the run.

    Parameters
    ----------
    warmup : int, optional
        Epochs excluded from the averages and from cycle detection; defaults to
        10% of ``horizon``.
    seed : int, optional
        Required in stochastic mode.
    arrival : ArrivalModel, optional
        Stochastic mode only; defaults to exponential base utilities.
    x0 : sequence, optional
        Initial states; ``None`` entries (or ``x0=None``) start at ``u``.

    Returns
    -------
    (Trace, Summary)
    """
    if mode not in MODES:
        raise InvalidParameterError(f"mode must be one of {MODES}, got {mode!r}")
    warmup = horizon // 10 if warmup is None else int(warmup)
    if not horizon > warmup >= 0:
        raise InvalidParameterError(f"need horizon > warmup >= 0, got horizon={horizon}, warmup={warmup}")
    rng = None
    if mode == "stochastic":
        if seed is None:
            raise InvalidParameterError("stochastic mode needs a seed")
        rng = np.random.default_rng(seed)
        arrival = arrival or ArrivalModel()

    pol = Policy(policy, fleet)
    n = fleet.n
    S = np.empty((horizon, n))
    G = np.empty((horizon, n))
    A = np.zeros((horizon, n), dtype=bool)
    cursor = np.zeros(horizon, dtype=int)
    x = _initial_states(fleet, x0)
    for t in range(horizon):
        S[t] = x
        G[t] = fleet_indices(x, fleet)
        cursor[t] = pol.cursor
        A[t] = pol.select(t, x)
        if rng is None:
            x = step_deterministic(x, A[t], fleet)
        else:
            x = step_stochastic(x, A[t], fleet, arrival, rng)
    R = np.where(A, S, 0.0)
    trace = Trace(S, G, A, R, cursor)
    return trace, summarize(trace, fleet, warmup, pol.clipped_epochs)


def summarize(trace: Trace, fleet: FleetParams, warmup: int, clipped: int = 0) -> Summary:
    A = trace.action[warmup:]
    epoch_cost = trace.action.astype(float) @ fleet.costs
    total = trace.total_reward
    period, pattern = detect_cycle(A, trace.horizon // 4)
    return Summary(
        horizon=trace.horizon,
        warmup=warmup,
        average_reward=float(total[warmup:].mean()),
        average_reward_no_warmup=float(total.mean()),
        average_cost=float(epoch_cost[warmup:].mean()),
        crawl_count=A.sum(axis=0).astype(int).tolist(),
        crawl_fraction=A.mean(axis=0).tolist(),
        interval_histogram=[dict(crawl_intervals(A[:, i])) for i in range(fleet.n)],
        cycle_period=period,
        cycle_pattern=pattern,
        budget_clipped_epochs=int(clipped),
        max_epoch_cost=float(epoch_cost.max()),
    )


def alternating_steady_state_reward(p1: SourceParams, p2: SourceParams) -> float:
    """Average reward when two sources are crawled alternately, one per epoch.

    Each crawl collects the two-period lattice state ``u (1 + alpha)``.
    """
    return 0.5 * (p1.u * (1 + p1.alpha) + p2.u * (1 + p2.alpha))
