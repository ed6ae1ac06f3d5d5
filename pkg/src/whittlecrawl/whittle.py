"""
Closed-form Whittle index of a source with exponentially decaying content.

For a state ``x`` the index is the passivity subsidy at which crawling now and
waiting are equally attractive. With a threshold policy the optimally controlled
source, restarted at ``u`` after a crawl, needs ``eta(x)`` periods to reach the
crawl boundary ``x``; the index follows from the per-cycle average reward of that
periodic schedule.

States at or above the saturation level ``u_star`` take the continuation value
``x / C`` (the limit of the formula at ``u_star``, extended monotonically).
"""

from __future__ import annotations

import math

import numpy as np

from .model import FleetParams, InvalidParameterError, SourceParams

# Slack when snapping log-ratios to an integer; lattice states built by
# repeated passive steps differ from the closed form by a few ulps.
_SNAP = 1e-9
_ULPS = 64 * np.finfo(float).eps


def eta_cap(p: SourceParams) -> int:
    """Largest hitting time we report: beyond it ``alpha**eta`` is below machine epsilon."""
    return max(1, math.ceil(math.log(np.finfo(float).eps) / math.log(p.alpha)))


def eta(x: float, p: SourceParams) -> int:
    """Number of passive periods from ``u`` needed to reach ``x``.

    Equals ``k`` exactly on lattice points ``(1 - alpha**k) * u_star`` and is
    capped (see :func:`eta_cap`) for ``x >= u_star`` where it would diverge.
    Pre-crawl transients ``0 <= x < u`` give 1.
    """
    if not isinstance(p, SourceParams):
        raise InvalidParameterError("p must be SourceParams")
    cap = eta_cap(p)
    arg = (p.u - (1.0 - p.alpha) * x) / p.u
    if arg <= 0.0:
        return cap
    if arg >= 1.0:
        return 1
    r = math.log(arg) / math.log(p.alpha)
    nearest = round(r)
    # an error of a few ulps in x is relative error ~ eps / arg in arg
    slack = min(0.5, max(_SNAP * max(1.0, r), _ULPS / (arg * -math.log(p.alpha))))
    if abs(r - nearest) <= slack:
        r = nearest
    return int(min(max(1, math.ceil(r)), cap))


def whittle_index(x: float, p: SourceParams) -> float:
    """Whittle index of a source in state ``x``.

    Parameters
    ----------
    x : float
        Current expected utility waiting on the source (nonnegative).
    p : SourceParams

    Returns
    -------
    float
        ``(eta*((1-alpha)*x - u) + (1 - alpha**eta) * u_star) / C`` for
        ``x < u_star`` and ``x / C`` otherwise.
    """
    if x < 0:
        raise InvalidParameterError(f"state must be nonnegative, got {x!r}")
    if p.u - (1.0 - p.alpha) * x <= 0.0:
        return x / p.cost
    n = eta(x, p)
    return (n * ((1.0 - p.alpha) * x - p.u) - math.expm1(n * math.log(p.alpha)) * p.u_star) / p.cost


def lattice_index(k: int, p: SourceParams) -> float:
    """Index at the ``k``-th reachable post-crawl state, via the simplified formula.

    On ``x_k = (1 - alpha**k) * u_star`` the hitting time is ``k`` and the index
    reduces to ``(k*((1-alpha)*x_k - u) + x_k) / C``.
    """
    if int(k) != k or k < 1:
        raise InvalidParameterError(f"lattice step must be a positive integer, got {k!r}")
    x_k = p.lattice(k)
    return (k * ((1.0 - p.alpha) * x_k - p.u) + x_k) / p.cost


def fleet_indices(states, fleet: FleetParams) -> np.ndarray:
    """Index of every source in the fleet for the given state vector."""
    return np.array([whittle_index(float(x), s) for x, s in zip(states, fleet.sources)])
