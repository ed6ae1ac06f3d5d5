"""Strict JSON experiment configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .model import FleetParams, InvalidParameterError, SourceParams
from .policy import PolicySpec, StaticSchedule
from .sim import MODES, ArrivalModel


class ConfigError(ValueError):
    pass


_TOP_KEYS = {"name", "period", "budget", "sources", "policy", "mode", "horizon", "warmup", "seed",
             "arrival", "output"}
_SOURCE_KEYS = {"lambda_rate", "xi_mean", "mu", "cost", "x0"}
_POLICY_KEYS = {"kind", "static_schedule"}
_SCHEDULE_KEYS = {"periods", "offsets"}
_ARRIVAL_KEYS = {"distribution"}
_OUTPUT_KEYS = {"dir"}


def _strict(obj: Any, allowed: set, required: set, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing field(s) {sorted(missing)}")
    return obj


@dataclass
class ExperimentConfig:
    fleet: FleetParams
    policy: PolicySpec
    mode: str = "deterministic"
    horizon: int = 1000
    warmup: Optional[int] = None
    seed: Optional[int] = None
    arrival: ArrivalModel = field(default_factory=ArrivalModel)
    x0: Optional[list] = None
    out_dir: Optional[str] = None
    name: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _strict(d, _TOP_KEYS, {"budget", "sources", "policy"}, "config")
        try:
            period = float(d.get("period", 1.0))
            srcs = d["sources"]
            if not isinstance(srcs, list) or not srcs:
                raise ConfigError("config.sources: expected a non-empty list")
            sources, x0 = [], []
            for i, s in enumerate(srcs):
                _strict(s, _SOURCE_KEYS, {"lambda_rate", "xi_mean", "mu"}, f"config.sources[{i}]")
                sources.append(SourceParams(s["lambda_rate"], s["xi_mean"], s["mu"], s.get("cost", 1.0), period))
                x0.append(s.get("x0"))
            fleet = FleetParams(tuple(sources), d["budget"])

            pol = _strict(d["policy"], _POLICY_KEYS, {"kind"}, "config.policy")
            sched = None
            if pol.get("static_schedule") is not None:
                sd = _strict(pol["static_schedule"], _SCHEDULE_KEYS, {"periods"}, "config.policy.static_schedule")
                sched = StaticSchedule(tuple(sd["periods"]), tuple(sd.get("offsets", ())))
                if len(sched.periods) != fleet.n:
                    raise ConfigError("config.policy.static_schedule: one period per source required")
            policy = PolicySpec(pol["kind"], sched)

            mode = d.get("mode", "deterministic")
            if mode not in MODES:
                raise ConfigError(f"config.mode must be one of {MODES}, got {mode!r}")
            horizon = int(d.get("horizon", 1000))
            warmup = d.get("warmup")
            warmup = None if warmup is None else int(warmup)
            if horizon < 1 or (warmup is not None and not horizon > warmup >= 0):
                raise ConfigError("config: need horizon > warmup >= 0")
            seed = d.get("seed")
            if mode == "stochastic" and seed is None:
                raise ConfigError("config: stochastic mode needs a seed")
            arrival = ArrivalModel(**_strict(d.get("arrival", {}), _ARRIVAL_KEYS, set(), "config.arrival"))
            out = _strict(d.get("output", {}), _OUTPUT_KEYS, set(), "config.output")
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from exc
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls(fleet, policy, mode, horizon, warmup, None if seed is None else int(seed), arrival,
                   x0 if any(v is not None for v in x0) else None, out.get("dir"), d.get("name"))

    def to_dict(self) -> dict:
        sources = []
        for i, s in enumerate(self.fleet.sources):
            entry = {"lambda_rate": s.lambda_rate, "xi_mean": s.xi_mean, "mu": s.mu, "cost": s.cost}
            if self.x0 is not None and self.x0[i] is not None:
                entry["x0"] = self.x0[i]
            sources.append(entry)
        policy: dict = {"kind": self.policy.kind}
        if self.policy.static_schedule is not None:
            policy["static_schedule"] = {"periods": list(self.policy.static_schedule.periods),
                                         "offsets": list(self.policy.static_schedule.offsets)}
        d = {
            "period": self.fleet.period,
            "budget": self.fleet.budget,
            "sources": sources,
            "policy": policy,
            "mode": self.mode,
            "horizon": self.horizon,
            "warmup": self.warmup,
            "seed": self.seed,
            "arrival": {"distribution": self.arrival.distribution},
        }
        if self.name is not None:
            d["name"] = self.name
        if self.out_dir is not None:
            d["output"] = {"dir": self.out_dir}
        return d


def bundled_configs() -> list[str]:
    return sorted(p.name for p in resources.files("whittlecrawl.configs").iterdir() if p.name.endswith(".json"))


def resolve_config_path(path) -> Path:
    """Return ``path`` if it exists, else the bundled config of that name."""
    p = Path(path)
    if p.exists():
        return p
    bundled = resources.files("whittlecrawl.configs") / p.name
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config not found: {path} (bundled: {', '.join(bundled_configs())})")


def load_config(path) -> ExperimentConfig:
    p = resolve_config_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(data)
