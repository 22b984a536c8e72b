"""Distributed dynamic spectrum access under jamming.

``A`` agents pick among ``K`` channels every round, each with its own
memory-constrained bandit policy and no communication. A jammer leaves one
channel free per round, cycling through the channels every ``P`` rounds.
Agents on the free channel split the pool value (10 by default); an agent alone
on a jammed channel gets the solo value (1); two or more agents on a jammed
channel collide and get nothing.

Policies see rewards divided by the pool value so they stay in [0, 1];
reported averages are in the original units.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import BudgetViolation, Policy, RngStream
from .harness.oracles import default_checkpoints
from .harness.runner import ConfigError, PolicyConfig, audit, build_policy


@dataclass(frozen=True)
class JammerSchedule:
    K: int
    P: int

    def unjammed_channel(self, t: int) -> int:
        return ((t - 1) // self.P) % self.K


def payoff_round(choices, t: int, schedule: JammerSchedule, pool: float = 10.0,
                 solo: float = 1.0) -> np.ndarray:
    """Per-agent payoff for one round given every agent's channel."""
    choices = np.asarray(choices, dtype=np.int64)
    occupancy = np.bincount(choices, minlength=schedule.K)
    free = schedule.unjammed_channel(t)
    n = occupancy[choices]
    return np.where(choices == free, pool / n, np.where(n == 1, solo, 0.0))


@dataclass
class SpectrumConfig:
    agents: int = 100
    channels: int = 20
    memory: int = 10
    T: int = 10_000
    phase_length: int | None = None  # default T // (2K)
    pool: float = 10.0
    solo: float = 1.0
    policies: list = field(default_factory=lambda: [
        {"name": "HLMC", "kind": "hlmc", "params": {"variant": "budget"}},
        {"name": "UCB-M", "kind": "ucbm", "params": {"shuffle": "none"}},
        {"name": "UCB-M-shuffle", "kind": "ucbm", "params": {"shuffle": "once"}},
    ])
    replications: int = 5
    seed: int = 0
    out: str | None = None
    checkpoints: dict = field(default_factory=lambda: {"linear": 200, "powers_of_two": True})

    def __post_init__(self):
        if self.agents < 1 or self.channels < 2 or self.T < 1 or self.replications < 1:
            raise ConfigError("need agents >= 1, channels >= 2, T >= 1, replications >= 1")
        if self.phase_length is not None and self.phase_length < 1:
            raise ConfigError("phase_length must be >= 1")
        if self.pool <= 0 or self.solo < 0 or self.solo > self.pool:
            raise ConfigError("need pool > 0 and 0 <= solo <= pool")

    @property
    def P(self) -> int:
        if self.phase_length is not None:
            return self.phase_length
        return max(1, self.T // (2 * self.channels))

    def policy_configs(self) -> list[PolicyConfig]:
        out = []
        for d in self.policies:
            d = dict(d)
            d.setdefault("M", self.memory)
            out.append(PolicyConfig.from_dict(d))
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumConfig":
        allowed = set(cls.__dataclass_fields__)
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unknown field(s) in spectrum config: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "SpectrumConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)


def run_agents(agents: list[Policy], rngs: list, T: int, schedule: JammerSchedule,
               pool: float = 10.0, solo: float = 1.0) -> np.ndarray:
    """Play all agents simultaneously for ``T`` rounds; returns payoffs, shape ``(T, A)``."""
    A = len(agents)
    payoffs = np.empty((T, A))
    choices = np.empty(A, dtype=np.int64)
    for t in range(1, T + 1):
        for k, (agent, rng) in enumerate(zip(agents, rngs)):
            choices[k] = agent.select(t, rng)
        pay = payoff_round(choices, t, schedule, pool, solo)
        scaled = (pay / pool).tolist()
        for k, agent in enumerate(agents):
            agent.observe(int(choices[k]), scaled[k], t)
        payoffs[t - 1] = pay
    return payoffs


def run_spectrum(cfg: SpectrumConfig) -> dict[str, dict]:
    """Mean-over-agents cumulative average reward at checkpoints, per policy.

    Returns ``{name: {"t": steps, "per_rep": (R, C) array}}``.
    """
    schedule = JammerSchedule(cfg.channels, cfg.P)
    c = cfg.checkpoints
    cp = default_checkpoints(cfg.T, int(c.get("linear", 200)), bool(c.get("powers_of_two", True)))
    results = {}
    for pc in cfg.policy_configs():
        per_rep = np.empty((cfg.replications, len(cp)))
        for r in range(cfg.replications):
            agents = []
            for a in range(cfg.agents):
                try:
                    agents.append(build_policy(pc, cfg.channels, cfg.T))
                except BudgetViolation as exc:
                    raise BudgetViolation(f"agent {a}: {exc}") from exc
            rngs = [RngStream(cfg.seed, r * cfg.agents + a).generator() for a in range(cfg.agents)]
            payoffs = run_agents(agents, rngs, cfg.T, schedule, cfg.pool, cfg.solo)
            for a, agent in enumerate(agents):
                audit(agent, f"{pc.name} agent {a}")
            avg = np.cumsum(payoffs, axis=0)[cp - 1] / cp[:, None]
            per_rep[r] = avg.mean(axis=1)
        results[pc.name] = {"t": cp, "per_rep": per_rep}
    return results


def spectrum_csv(results: dict[str, dict]) -> str:
    from .harness.runner import fmt

    lines = ["t,policy,mean_avg_reward,std_avg_reward"]
    for name, res in results.items():
        per_rep = res["per_rep"]
        mean = per_rep.mean(axis=0)
        std = per_rep.std(axis=0, ddof=1) if per_rep.shape[0] > 1 else np.zeros_like(mean)
        for t, m, s in zip(res["t"], mean, std):
            lines.append(f"{int(t)},{name},{fmt(m)},{fmt(s)}")
    return "\n".join(lines) + "\n"
