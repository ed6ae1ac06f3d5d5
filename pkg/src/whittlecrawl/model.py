"""
Source parameters, derived constants and the deterministic state dynamics.

Each content source publishes items as a Poisson process of rate ``lambda_rate``;
an item's utility starts at a random base value with mean ``xi_mean`` and decays
as ``exp(-mu * age)``. The crawler visits sources only at multiples of the crawl
period ``T``. The state of a source is the total expected utility of the content
waiting on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class InvalidParameterError(ValueError):
    """Raised when a source or fleet is built from non-physical parameters."""


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidParameterError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class SourceParams:
    """Primitive parameters of one source plus the shared crawl period.

    Derived constants ``alpha``, ``u`` and ``u_star`` are computed once at
    construction.
    """

    lambda_rate: float
    xi_mean: float
    mu: float
    cost: float = 1.0
    period: float = 1.0
    alpha: float = field(init=False, repr=False)
    u: float = field(init=False, repr=False)
    u_star: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("lambda_rate", "xi_mean", "mu", "cost", "period"):
            object.__setattr__(self, name, _check_positive(name, getattr(self, name)))
        alpha, u, u_star = _derive(self.lambda_rate, self.xi_mean, self.mu, self.period)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "u_star", u_star)

    def with_cost(self, cost: float) -> "SourceParams":
        return SourceParams(self.lambda_rate, self.xi_mean, self.mu, cost, self.period)

    def lattice(self, k) -> np.ndarray | float:
        """Post-crawl reachable state after ``k`` periods: ``(1 - alpha**k) * u_star``."""
        out = -np.expm1(np.asarray(k, dtype=float) * math.log(self.alpha)) * self.u_star
        return float(out) if out.ndim == 0 else out


def _derive(lambda_rate: float, xi_mean: float, mu: float, period: float):
    alpha = math.exp(-mu * period)
    u_star = lambda_rate * xi_mean / mu
    # expm1 keeps u accurate when mu * period is small
    u = -math.expm1(-mu * period) * u_star
    return alpha, u, u_star


def derive_constants(p: SourceParams) -> tuple[float, float, float]:
    """Return ``(alpha, u, u_star)`` for a source.

    ``alpha = exp(-mu T)`` is the one-period survival factor of content value,
    ``u`` the expected utility accumulated during one period and
    ``u_star = u / (1 - alpha)`` the saturation level of a never-crawled source.
    """
    return p.alpha, p.u, p.u_star


@dataclass(frozen=True)
class SourceState:
    x: float

    def __post_init__(self):
        if not self.x >= 0.0:
            raise InvalidParameterError(f"state must be nonnegative, got {self.x!r}")


def passive_step(x, p: SourceParams):
    """State after one period without a crawl: ``alpha * x + u``."""
    return p.alpha * x + p.u


def active_step(p: SourceParams) -> float:
    """State after a crawl. The source is emptied and refills for one period."""
    return p.u


def passive_orbit(x, p: SourceParams, n: int) -> float:
    """Closed form of ``n`` passive steps from ``x``."""
    an = p.alpha ** n
    return an * x + (1.0 - an) * p.u_star


@dataclass(frozen=True)
class FleetParams:
    """The set of sources competing for an average crawl budget ``budget``.

    Source ids are positions in ``sources``. All sources share one crawl period.
    """

    sources: tuple[SourceParams, ...]
    budget: float

    def __post_init__(self):
        sources = tuple(self.sources)
        object.__setattr__(self, "sources", sources)
        if not sources:
            raise InvalidParameterError("fleet needs at least one source")
        _check_positive("budget", self.budget)
        periods = {s.period for s in sources}
        if len(periods) != 1:
            raise InvalidParameterError(f"all sources must share one crawl period, got {sorted(periods)}")
        if self.budget > self.total_cost * (1 + 1e-12):
            raise InvalidParameterError(
                f"budget {self.budget} exceeds the total crawl cost {self.total_cost}"
            )

    @property
    def n(self) -> int:
        return len(self.sources)

    @property
    def period(self) -> float:
        return self.sources[0].period

    @property
    def costs(self) -> np.ndarray:
        return np.array([s.cost for s in self.sources])

    @property
    def total_cost(self) -> float:
        return float(sum(s.cost for s in self.sources))

    @property
    def alphas(self) -> np.ndarray:
        return np.array([s.alpha for s in self.sources])

    @property
    def us(self) -> np.ndarray:
        return np.array([s.u for s in self.sources])

    @property
    def u_stars(self) -> np.ndarray:
        return np.array([s.u_star for s in self.sources])

    @classmethod
    def from_arrays(cls, lambda_rate: Sequence[float], xi_mean: Sequence[float], mu: Sequence[float],
                    budget: float, cost: Sequence[float] | None = None, period: float = 1.0) -> "FleetParams":
        n = len(mu)
        cost = [1.0] * n if cost is None else cost
        if not (len(lambda_rate) == len(xi_mean) == len(cost) == n):
            raise InvalidParameterError("parameter arrays must have equal length")
        sources = [SourceParams(l, x, m, c, period) for l, x, m, c in zip(lambda_rate, xi_mean, mu, cost)]
        return cls(tuple(sources), budget)


# Four-source example fleet: xi_mean, mu per source, common arrival rate 250, T = 1.
TABLE1_XI = (1.0, 0.7, 0.2, 0.08)
TABLE1_MU = (0.7, 0.35, 0.7, 0.21)
TABLE1_LAMBDA = (250.0, 250.0, 250.0, 250.0)


def table1_fleet(budget: float = 1.0, cost: Sequence[float] | None = None) -> FleetParams:
    return FleetParams.from_arrays(TABLE1_LAMBDA, TABLE1_XI, TABLE1_MU, budget, cost=cost)
