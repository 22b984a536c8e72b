"""Shared contracts: reward models, memory ledgers, policies, traces and RNG streams.

Arms are 0-indexed throughout; time steps run from 1 to T inclusive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class BudgetViolation(RuntimeError):
    """A policy tried to store more words than its memory budget allows."""


class ContractViolation(RuntimeError):
    """A policy was driven out of protocol (e.g. time steps out of order)."""


def hardness(seq: Sequence[int]) -> int:
    """Number of constant runs in ``seq``: 1 + the number of arm switches."""
    if len(seq) == 0:
        raise ValueError("hardness of an empty benchmark sequence is undefined")
    a = np.asarray(seq)
    return 1 + int(np.count_nonzero(a[1:] != a[:-1]))


class MemoryLedger:
    """Word-level accounting of everything a policy keeps in memory.

    One stored per-arm or per-group statistic costs one word. O(1) scalar
    bookkeeping (counters, running averages, parameters) is not charged.
    ``budget_words=None`` means unconstrained.
    """

    def __init__(self, budget_words: int | None = None):
        if budget_words is not None and budget_words < 0:
            raise ValueError("budget must be non-negative")
        self.budget_words = budget_words
        self.live_words = 0
        self.peak_words = 0

    def charge(self, words: int) -> "MemoryLedger":
        if words < 0:
            raise ValueError("cannot charge a negative number of words")
        live = self.live_words + words
        if self.budget_words is not None and live > self.budget_words:
            raise BudgetViolation(
                f"storing {words} more words would hold {live} > budget {self.budget_words}"
            )
        self.live_words = live
        if live > self.peak_words:
            self.peak_words = live
        return self

    def release(self, words: int) -> "MemoryLedger":
        if words < 0:
            raise ValueError("cannot release a negative number of words")
        if words > self.live_words:
            raise ValueError(f"releasing {words} words but only {self.live_words} are live")
        self.live_words -= words
        return self

    @property
    def compliant(self) -> bool:
        return self.budget_words is None or self.peak_words <= self.budget_words

    def __repr__(self) -> str:
        return (
            f"MemoryLedger(budget_words={self.budget_words}, "
            f"live_words={self.live_words}, peak_words={self.peak_words})"
        )


class RewardModel:
    """An oblivious adversary: a fixed mapping (arm, t) -> reward in [0, 1].

    Subclasses implement :meth:`reward` and :meth:`rows`; ``rows`` returns the
    block of reward vectors for times ``t0..t1`` (inclusive) as a float array of
    shape ``(t1 - t0 + 1, K)`` and is what the regret oracles scan.
    """

    K: int
    T: int

    def reward(self, arm: int, t: int) -> float:
        raise NotImplementedError

    def rows(self, t0: int, t1: int) -> np.ndarray:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        """Full ``(T, K)`` reward matrix. Only for small instances and oracle checks."""
        return self.rows(1, self.T)

    def iter_blocks(self, block: int = 8192):
        """Yield ``(t0, rows)`` blocks covering ``[1, T]`` in order."""
        t0 = 1
        while t0 <= self.T:
            t1 = min(self.T, t0 + block - 1)
            yield t0, self.rows(t0, t1)
            t0 = t1 + 1


class MatrixRewardModel(RewardModel):
    """Reward model backed by an explicit ``(T, K)`` matrix."""

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError("reward matrix must be a non-empty 2-D array (T, K)")
        if not np.all(np.isfinite(m)) or m.min() < 0.0 or m.max() > 1.0:
            raise ValueError("rewards must lie in [0, 1]")
        m.setflags(write=False)
        self._m = m
        self.T, self.K = m.shape

    def reward(self, arm: int, t: int) -> float:
        return float(self._m[t - 1, arm])

    def rows(self, t0: int, t1: int) -> np.ndarray:
        return self._m[t0 - 1 : t1]


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream identified by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


class Policy:
    """Sequential decision contract.

    ``select(t, rng)`` proposes an arm for step ``t``; ``observe(arm, reward, t)``
    feeds back the reward of that arm only. Every stored statistic is charged to
    ``ledger`` and released when forgotten; :meth:`release` frees everything.
    """

    ledger: MemoryLedger

    def select(self, t: int, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def observe(self, arm: int, reward: float, t: int) -> None:
        raise NotImplementedError

    def release(self) -> None:
        raise NotImplementedError

    @property
    def footprint(self) -> int:
        """Closed-form peak word count this policy claims."""
        raise NotImplementedError


@dataclass
class RunTrace:
    arms: np.ndarray
    rewards: np.ndarray
    peak_words: int
    policy: str = ""

    @property
    def T(self) -> int:
        return len(self.arms)

    @property
    def plays(self):
        return [(t + 1, int(a), float(r)) for t, (a, r) in enumerate(zip(self.arms, self.rewards))]


def play(policy: Policy, model: RewardModel, rng: np.random.Generator, T: int | None = None,
         name: str = "") -> RunTrace:
    """Run ``policy`` against ``model`` for ``T`` steps (default ``model.T``)."""
    T = model.T if T is None else T
    if T > model.T:
        raise ValueError(f"horizon {T} exceeds the reward model's {model.T}")
    arms = np.empty(T, dtype=np.int64)
    rewards = np.empty(T, dtype=float)
    select, observe, reward = policy.select, policy.observe, model.reward
    for t in range(1, T + 1):
        a = select(t, rng)
        r = reward(a, t)
        observe(a, r, t)
        arms[t - 1] = a
        rewards[t - 1] = r
    return RunTrace(arms=arms, rewards=rewards, peak_words=policy.ledger.peak_words, policy=name)
