"""Experiment configuration, Monte Carlo runner and CSV output."""

from __future__ import annotations

import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import hlmc
from ..adversaries import AdversarySpec
from ..baselines import Exp3M, UcbM
from ..core import BudgetViolation, MemoryLedger, Policy, RewardModel, RngStream, play
from ..flat import FlatPolicy, default_params
from .doubling import DoublingPolicy
from .oracles import default_checkpoints, policy_totals, shifting_benchmark, weak_benchmark

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """The experiment configuration is malformed or inconsistent."""


class AuditError(AssertionError):
    """A run's ledger peak disagrees with the policy's claimed footprint."""


FLAT_KINDS = ("exp3", "exp3p", "exp3s")
SWEEP_KINDS = {"ucbm": UcbM, "exp3m": Exp3M}
HLMC_VARIANTS = ("weak_expected", "weak_highprob", "shifting", "shifting_unknownV",
                 "threelevel", "multilevel", "adaptive", "budget", "single")
POLICY_KINDS = FLAT_KINDS + tuple(SWEEP_KINDS) + ("hlmc",)


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown field(s) in {where}: {sorted(extra)}")


@dataclass
class PolicyConfig:
    name: str
    kind: str
    params: dict = field(default_factory=dict)
    M: int | None = None
    doubling: bool = False

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"policy {self.name!r}: unknown kind {self.kind!r}")
        if self.kind in SWEEP_KINDS and self.M is None:
            raise ConfigError(f"policy {self.name!r}: {self.kind} needs a memory budget M")
        if self.kind == "hlmc":
            variant = self.params.get("variant", "weak_expected")
            if variant not in HLMC_VARIANTS:
                raise ConfigError(f"policy {self.name!r}: unknown HLMC variant {variant!r}")
            if variant in ("adaptive", "budget") and self.M is None:
                raise ConfigError(f"policy {self.name!r}: HLMC variant {variant} needs M")

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        _reject_unknown(d, {"name", "kind", "params", "M", "doubling"}, "policy")
        try:
            return cls(d.get("name", d["kind"]), d["kind"], dict(d.get("params", {})),
                       d.get("M"), bool(d.get("doubling", False)))
        except KeyError as exc:
            raise ConfigError(f"policy is missing {exc}") from None

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "params": self.params, "M": self.M,
                "doubling": self.doubling}


@dataclass
class RegretSpec:
    kind: str = "weak"
    V: int | None = None

    def __post_init__(self):
        if self.kind not in ("weak", "shifting"):
            raise ConfigError(f"regret kind must be 'weak' or 'shifting', got {self.kind!r}")
        if self.kind == "shifting" and (self.V is None or self.V < 1):
            raise ConfigError("shifting regret needs a hardness V >= 1")


@dataclass
class ExperimentConfig:
    adversary: AdversarySpec
    policies: list[PolicyConfig]
    T: int
    replications: int = 10
    seed: int = 0
    regret: RegretSpec = field(default_factory=RegretSpec)
    out: str | None = None
    checkpoints: dict = field(default_factory=lambda: {"linear": 200, "powers_of_two": True})

    FIELDS = {"adversary", "policies", "T", "replications", "seed", "regret", "out", "checkpoints"}

    def __post_init__(self):
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        names = [p.name for p in self.policies]
        if len(set(names)) != len(names):
            raise ConfigError(f"policy names must be unique, got {names}")
        _reject_unknown(self.checkpoints, {"linear", "powers_of_two"}, "checkpoints")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        _reject_unknown(d, cls.FIELDS, "experiment config")
        try:
            adv = AdversarySpec.from_dict(d["adversary"])
            pols = [PolicyConfig.from_dict(p) for p in d["policies"]]
            reg = d.get("regret", {"kind": "weak"})
            _reject_unknown(reg, {"kind", "V"}, "regret")
            return cls(
                adversary=adv,
                policies=pols,
                T=int(d["T"]),
                replications=int(d.get("replications", 10)),
                seed=int(d.get("seed", 0)),
                regret=RegretSpec(reg.get("kind", "weak"), reg.get("V")),
                out=d.get("out"),
                checkpoints=dict(d.get("checkpoints", {"linear": 200, "powers_of_two": True})),
            )
        except KeyError as exc:
            raise ConfigError(f"experiment config is missing {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "adversary": self.adversary.to_dict(),
            "policies": [p.to_dict() for p in self.policies],
            "T": self.T,
            "replications": self.replications,
            "seed": self.seed,
            "regret": {"kind": self.regret.kind, "V": self.regret.V},
            "out": self.out,
            "checkpoints": self.checkpoints,
        }

    def checkpoint_steps(self) -> np.ndarray:
        c = self.checkpoints
        return default_checkpoints(self.T, int(c.get("linear", 200)), bool(c.get("powers_of_two", True)))


def _build_once(pc: PolicyConfig, K: int, T: int, ledger: MemoryLedger, V_default) -> Policy:
    p = dict(pc.params)
    if pc.kind in FLAT_KINDS:
        tuning = {k: p.pop(k) for k in ("delta", "V") if k in p}
        if pc.kind == "exp3s" and "V" not in tuning and V_default is not None:
            tuning["V"] = V_default
        params = default_params(pc.kind, K, T, **tuning)
        params.update(p)
        return FlatPolicy(pc.kind, K, params, ledger)
    if pc.kind in SWEEP_KINDS:
        return SWEEP_KINDS[pc.kind](K, pc.M, T, p.get("shuffle", "none"), ledger)
    variant = p.get("variant", "weak_expected")
    V = p.get("V", V_default)
    if variant == "weak_expected":
        return hlmc.hlmc_weak_expected(T, K, ledger)
    if variant == "weak_highprob":
        return hlmc.hlmc_weak_highprob(T, K, p.get("delta", 0.05), ledger)
    if variant == "shifting":
        if V is None:
            raise ConfigError("HLMC shifting variant needs V")
        return hlmc.hlmc_shifting(T, K, V, ledger)
    if variant == "shifting_unknownV":
        return hlmc.hlmc_shifting_unknownV(T, K, ledger)
    if variant == "threelevel":
        return hlmc.hlmc_threelevel(T, K, ledger)
    if variant == "multilevel":
        return hlmc.hlmc_multilevel(T, K, p["level_sizes"], ledger)
    if variant == "adaptive":
        return hlmc.hlmc_adaptive(T, K, pc.M, ledger)
    if variant == "budget":
        return hlmc.hlmc_for_budget(T, K, pc.M, ledger)
    return hlmc.hlmc_single_level(T, K, ledger=ledger)


def build_policy(pc: PolicyConfig, K: int, T: int, V_default=None) -> Policy:
    """Fresh policy with its own ledger (budget ``pc.M``, or unconstrained)."""
    ledger = MemoryLedger(pc.M)
    try:
        if pc.doubling:
            policy = DoublingPolicy(lambda h, lg: _build_once(pc, K, h, lg, V_default), T, ledger)
        else:
            policy = _build_once(pc, K, T, ledger, V_default)
    except KeyError as exc:
        raise ConfigError(f"policy {pc.name!r} is missing parameter {exc}") from None
    if pc.M is not None and policy.footprint > pc.M:
        raise BudgetViolation(
            f"policy {pc.name!r} needs {policy.footprint} words but its budget is M={pc.M}"
        )
    return policy


def audit(policy: Policy, name: str = "") -> None:
    peak = policy.ledger.peak_words
    if peak != policy.footprint:
        raise AuditError(f"{name}: ledger peak {peak} != claimed footprint {policy.footprint}")
    if not policy.ledger.compliant:
        raise BudgetViolation(f"{name}: peak {peak} exceeds budget {policy.ledger.budget_words}")


@dataclass
class RegretCurve:
    policy: str
    t: np.ndarray
    per_rep: np.ndarray  # (R, C) regret per replication and checkpoint

    @property
    def mean(self) -> np.ndarray:
        return self.per_rep.mean(axis=0)

    @property
    def std(self) -> np.ndarray:
        if self.per_rep.shape[0] < 2:
            return np.zeros(self.per_rep.shape[1])
        return self.per_rep.std(axis=0, ddof=1)

    @property
    def final(self) -> np.ndarray:
        return self.per_rep[:, -1]


def _run_one(cfg: ExperimentConfig, model: RewardModel, rep: int, cp: np.ndarray,
             bench: np.ndarray) -> dict[str, np.ndarray]:
    out = {}
    K = model.K
    for pc in cfg.policies:
        try:
            policy = build_policy(pc, K, cfg.T, cfg.regret.V)
            rng = RngStream(cfg.seed, rep).generator()
            trace = play(policy, model, rng, cfg.T, name=pc.name)
            audit(policy, pc.name)
        except BudgetViolation as exc:
            raise BudgetViolation(f"policy {pc.name!r}, replication {rep}: {exc}") from exc
        out[pc.name] = bench - policy_totals(trace, cp)
    return out


def _worker(args):
    cfg_dict, rep = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    model = cfg.adversary.build(cfg.T)
    cp = cfg.checkpoint_steps()
    return rep, _run_one(cfg, model, rep, cp, _benchmark(cfg, model, cp))


def _benchmark(cfg: ExperimentConfig, model: RewardModel, cp: np.ndarray) -> np.ndarray:
    if cfg.regret.kind == "weak":
        return weak_benchmark(model, cp)
    return shifting_benchmark(model, cfg.regret.V, cp)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> dict[str, RegretCurve]:
    """Run every policy for every replication; curves are keyed by policy name.

    Replication ``r`` uses stream ``(seed, r)`` for every policy, so results do
    not depend on execution order or on ``workers``.
    """
    model = cfg.adversary.build(cfg.T)
    cp = cfg.checkpoint_steps()
    bench = _benchmark(cfg, model, cp)
    reps = range(cfg.replications)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            done = dict(ex.map(_worker, [(cfg.to_dict(), r) for r in reps]))
    else:
        done = {}
        for r in reps:
            done[r] = _run_one(cfg, model, r, cp, bench)
            log.debug("replication %d done", r)
    return {
        pc.name: RegretCurve(pc.name, cp, np.stack([done[r][pc.name] for r in reps]))
        for pc in cfg.policies
    }


def fmt(x: float) -> str:
    return format(float(x), ".9g")


def curves_csv(curves: dict[str, RegretCurve], value: str = "regret") -> str:
    buf = io.StringIO()
    buf.write(f"t,policy,mean_{value},std_{value}\n")
    for name, c in curves.items():
        for t, m, s in zip(c.t, c.mean, c.std):
            buf.write(f"{int(t)},{name},{fmt(m)},{fmt(s)}\n")
    return buf.getvalue()


def write_csv(text: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
