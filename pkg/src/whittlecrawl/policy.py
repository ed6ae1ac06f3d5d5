"""
Crawl-selection policies.

Every policy turns the current states into a boolean activation vector whose
total crawl cost stays within the fleet budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import FleetParams, InvalidParameterError
from .whittle import fleet_indices

POLICY_KINDS = ("whittle", "greedy-state", "round-robin", "static")

_BUDGET_EPS = 1e-12


@dataclass(frozen=True)
class StaticSchedule:
    """Per-source crawl period and offset; a period of ``None`` means never crawl."""

    periods: tuple[Optional[int], ...]
    offsets: tuple[int, ...] = ()

    def __post_init__(self):
        periods = tuple(None if q is None else int(q) for q in self.periods)
        offsets = tuple(int(o) for o in self.offsets) or (0,) * len(periods)
        if len(offsets) != len(periods):
            raise InvalidParameterError("static schedule needs one offset per period")
        for q in periods:
            if q is not None and q < 1:
                raise InvalidParameterError(f"static crawl periods must be >= 1, got {q}")
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "offsets", offsets)


@dataclass(frozen=True)
class PolicySpec:
    kind: str = "whittle"
    static_schedule: Optional[StaticSchedule] = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidParameterError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if (self.kind == "static") != (self.static_schedule is not None):
            raise InvalidParameterError("static_schedule is required for, and only for, kind='static'")


def fill_budget(priority: Sequence[float], fleet: FleetParams) -> np.ndarray:
    """Activate sources by decreasing priority while their cost fits the budget.

    Ties go to the lower source id. A source that does not fit is skipped and
    cheaper lower-priority sources may still be taken.
    """
    priority = np.asarray(priority, dtype=float)
    # lexsort: last key is primary
    order = np.lexsort((np.arange(fleet.n), -priority))
    active = np.zeros(fleet.n, dtype=bool)
    spent = 0.0
    for i in order:
        c = fleet.sources[i].cost
        if spent + c <= fleet.budget + _BUDGET_EPS:
            active[i] = True
            spent += c
    return active


def select_whittle(states, fleet: FleetParams) -> np.ndarray:
    return fill_budget(fleet_indices(states, fleet), fleet)


def select_greedy_state(states, fleet: FleetParams) -> np.ndarray:
    return fill_budget(states, fleet)


def select_static(epoch: int, fleet: FleetParams, schedule: StaticSchedule):
    """Scheduled crawls for ``epoch`` clipped to the budget by source id.

    Returns ``(active, clipped)`` where ``clipped`` says whether the schedule
    asked for more than the budget allows.
    """
    if len(schedule.periods) != fleet.n:
        raise InvalidParameterError("static schedule length does not match the fleet")
    wanted = [q is not None and (epoch - o) % q == 0 for q, o in zip(schedule.periods, schedule.offsets)]
    active = np.zeros(fleet.n, dtype=bool)
    spent = 0.0
    for i, w in enumerate(wanted):
        if w and spent + fleet.sources[i].cost <= fleet.budget + _BUDGET_EPS:
            active[i] = True
            spent += fleet.sources[i].cost
    return active, bool(sum(wanted) != active.sum())


def select_round_robin(epoch: int, fleet: FleetParams, cursor: int = 0):
    """Activate consecutive sources from ``cursor`` (in id order, wrapping) while they fit.

    Returns ``(active, next_cursor)``. ``epoch`` is unused; the cursor carries
    the position between epochs.
    """
    active = np.zeros(fleet.n, dtype=bool)
    spent = 0.0
    i = cursor % fleet.n
    for _ in range(fleet.n):
        c = fleet.sources[i].cost
        if spent + c > fleet.budget + _BUDGET_EPS:
            break
        active[i] = True
        spent += c
        i = (i + 1) % fleet.n
    return active, i


@dataclass
class Policy:
    """A policy bound to a fleet. Only round-robin keeps state (its cursor)."""

    spec: PolicySpec
    fleet: FleetParams
    cursor: int = 0
    clipped_epochs: int = field(default=0)

    def select(self, epoch: int, states) -> np.ndarray:
        kind = self.spec.kind
        if kind == "whittle":
            return select_whittle(states, self.fleet)
        if kind == "greedy-state":
            return select_greedy_state(states, self.fleet)
        if kind == "round-robin":
            active, self.cursor = select_round_robin(epoch, self.fleet, self.cursor)
            return active
        active, clipped = select_static(epoch, self.fleet, self.spec.static_schedule)
        self.clipped_epochs += clipped
        return active
