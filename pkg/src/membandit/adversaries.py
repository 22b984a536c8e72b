"""Oblivious reward generators for the experiments, plus a Bernoulli sanity adversary.

Structured generators keep one small per-step array (the paying arm or the
blink bit) and build reward rows on demand; nothing of size T x K is stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import ucbm_schedule
from .core import RewardModel, RngStream


class _PayingArm(RewardModel):
    """Exactly one arm pays 1 at each step; the rest pay 0."""

    def __init__(self, K: int, pay: np.ndarray):
        self.K = K
        self.T = len(pay)
        pay = np.asarray(pay, dtype=np.int64)
        pay.setflags(write=False)
        self.pay = pay
        self._pay = pay.tolist()

    def reward(self, arm: int, t: int) -> float:
        return 1.0 if arm == self._pay[t - 1] else 0.0

    def rows(self, t0: int, t1: int) -> np.ndarray:
        out = np.zeros((t1 - t0 + 1, self.K))
        out[np.arange(t1 - t0 + 1), self.pay[t0 - 1 : t1]] = 1.0
        return out


class SubphaseCycler(_PayingArm):
    """During subphase ``u`` of every phase, arm ``M(u+1) mod K`` pays 1."""

    def __init__(self, K: int, M: int, T: int):
        u = ucbm_schedule(K, M, T).subphase_index_array(T)
        super().__init__(K, (M * (u + 1)) % K)
        self.M = M


class ShiftingPhases(_PayingArm):
    """``V`` equal phases (remainder in the last); in phase ``v`` arm ``vN mod K`` pays 1."""

    def __init__(self, K: int, N: int, V: int, T: int):
        if V < 1 or V > T:
            raise ValueError("need 1 <= V <= T phases")
        length = T // V
        v = np.minimum(np.arange(T) // length, V - 1)
        super().__init__(K, (v * N) % K)
        self.N, self.V = N, V
        self.phase_length = length


class BlinkingArm(RewardModel):
    """Arm 0 pays ``u mod 2`` during subphase ``u``; every other arm pays ``eps``."""

    def __init__(self, K: int, M: int, T: int, eps: float = 1e-4):
        if not 0.0 <= eps < 1.0:
            raise ValueError("eps must lie in [0, 1)")
        self.K, self.M, self.T = K, M, T
        self.eps = float(eps)
        u = ucbm_schedule(K, M, T).subphase_index_array(T)
        blink = (u % 2).astype(float)
        blink.setflags(write=False)
        self.blink = blink
        self._blink = blink.tolist()

    def reward(self, arm: int, t: int) -> float:
        return self._blink[t - 1] if arm == 0 else self.eps

    def rows(self, t0: int, t1: int) -> np.ndarray:
        out = np.full((t1 - t0 + 1, self.K), self.eps)
        out[:, 0] = self.blink[t0 - 1 : t1]
        return out


class Bernoulli(RewardModel):
    """I.i.d. Bernoulli rewards, realized up front so the adversary stays oblivious."""

    def __init__(self, means, T: int, seed: int = 0):
        means = np.asarray(means, dtype=float)
        if means.ndim != 1 or len(means) < 1:
            raise ValueError("means must be a non-empty vector")
        if means.min() < 0.0 or means.max() > 1.0:
            raise ValueError("means must lie in [0, 1]")
        self.means = means
        self.K, self.T = len(means), T
        rng = RngStream(seed, 0).generator()
        draws = (rng.random((T, self.K)) < means).astype(np.uint8)
        draws.setflags(write=False)
        self._draws = draws

    def reward(self, arm: int, t: int) -> float:
        return float(self._draws[t - 1, arm])

    def rows(self, t0: int, t1: int) -> np.ndarray:
        return self._draws[t0 - 1 : t1].astype(float)


def gen_subphase_cycler(K: int, M: int, T: int) -> SubphaseCycler:
    return SubphaseCycler(K, M, T)


def gen_blinking_arm(K: int, M: int, T: int, eps: float = 1e-4) -> BlinkingArm:
    return BlinkingArm(K, M, T, eps)


def gen_shifting_phases(K: int, N: int, V: int, T: int) -> ShiftingPhases:
    return ShiftingPhases(K, N, V, T)


def gen_bernoulli(means, T: int, seed: int = 0) -> Bernoulli:
    return Bernoulli(means, T, seed)


ADVERSARY_KINDS = {
    "subphase_cycler": ("K", "M"),
    "blinking_arm": ("K", "M", "eps"),
    "shifting_phases": ("K", "N", "V"),
    "bernoulli": ("means", "seed"),
}


@dataclass
class AdversarySpec:
    """Serializable description of a reward generator; ``T`` comes from the experiment."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        allowed = set(ADVERSARY_KINDS[self.kind])
        extra = set(self.params) - allowed
        if extra:
            raise ValueError(f"unknown {self.kind} parameters: {sorted(extra)}")

    @property
    def K(self) -> int:
        if self.kind == "bernoulli":
            return len(self.params["means"])
        return int(self.params["K"])

    def build(self, T: int) -> RewardModel:
        p = self.params
        try:
            if self.kind == "subphase_cycler":
                return SubphaseCycler(int(p["K"]), int(p["M"]), T)
            if self.kind == "blinking_arm":
                return BlinkingArm(int(p["K"]), int(p["M"]), T, float(p.get("eps", 1e-4)))
            if self.kind == "shifting_phases":
                return ShiftingPhases(int(p["K"]), int(p["N"]), int(p["V"]), T)
            return Bernoulli(p["means"], T, int(p.get("seed", 0)))
        except KeyError as exc:
            raise ValueError(f"{self.kind} adversary is missing parameter {exc}") from None

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "AdversarySpec":
        d = dict(d)
        kind = d.pop("kind", None)
        if kind is None:
            raise ValueError("adversary needs a 'kind'")
        return cls(kind, d)
