"""Memory-constrained baselines UCB-M and EXP3-M.

Reconstruction of the round-robin elimination scheme: time is cut into phases
of length ``2^i h0 b0``, each split into ``h0 = ceil((K-1)/(M-1))`` subphases of
length ``2^i b0`` with ``b0 = M(M+2)``. During a subphase a bandit subroutine
(UCB1 or EXP3) runs on the current champion plus the next ``M-1`` arms of the
sweep order. When the subphase ends only the arm with the highest empirical
mean survives as champion; all other statistics are forgotten.

The very first subphase has no champion and takes ``M`` fresh arms. Within a
phase every non-champion arm enters the active set exactly once; once the sweep
is exhausted, leftover subphases run on the champion alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ContractViolation, MemoryLedger, Policy
from .flat import Exp3State, exp3_default_gamma

SHUFFLE_MODES = ("none", "once", "per_phase")


@dataclass(frozen=True)
class Subphase:
    start: int  # first step, inclusive
    end: int  # last step, inclusive (truncated at T)
    phase: int
    index: int  # u within the phase


@dataclass(frozen=True)
class UcbmSchedule:
    K: int
    M: int
    h0: int
    b0: int
    subphases: tuple[Subphase, ...]

    def phase_length(self, i: int) -> int:
        return 2**i * self.h0 * self.b0

    def subphase_length(self, i: int) -> int:
        return 2**i * self.b0

    def subphase_index_array(self, T: int) -> np.ndarray:
        """``u`` for every step ``1..T`` as an int array of length ``T``."""
        out = np.empty(T, dtype=np.int64)
        for sp in self.subphases:
            if sp.start > T:
                break
            out[sp.start - 1 : min(sp.end, T)] = sp.index
        return out


def ucbm_schedule(K: int, M: int, T: int) -> UcbmSchedule:
    """Phase/subphase grid covering ``[1, T]``."""
    if M < 2:
        raise ValueError("UCB-M needs a budget of at least 2 words")
    if M >= K:
        raise ValueError("UCB-M is meant for M < K")
    if T < 1:
        raise ValueError("horizon must be >= 1")
    h0 = -(-(K - 1) // (M - 1))
    b0 = M * (M + 2)
    subs = []
    t, i = 1, 0
    while t <= T:
        length = 2**i * b0
        for u in range(h0):
            if t > T:
                break
            subs.append(Subphase(t, min(t + length - 1, T), i, u))
            t += length
        i += 1
    return UcbmSchedule(K, M, h0, b0, tuple(subs))


class _MemoryBoundedSweep(Policy):
    """Shared schedule, sweep and champion logic; subclasses supply the subroutine."""

    name = ""

    def __init__(self, K: int, M: int, T: int, shuffle: str = "none",
                 ledger: MemoryLedger | None = None):
        if shuffle not in SHUFFLE_MODES:
            raise ValueError(f"shuffle must be one of {SHUFFLE_MODES}, got {shuffle!r}")
        self.K, self.M, self.T = K, M, T
        self.shuffle = shuffle
        self.schedule = ucbm_schedule(K, M, T)
        self.ledger = MemoryLedger(M) if ledger is None else ledger
        self.order = np.arange(K)
        self.champion: int | None = None
        self.active: list[int] = []
        self.entered: list[list[int]] = []  # fresh arms per phase, for audits
        self._sub = -1
        self._sweep: list[int] = []
        self._t = 0
        self._pending = False

    @property
    def footprint(self) -> int:
        return min(self.M, self.K)

    # subroutine hooks
    def _start(self, rng: np.random.Generator, length: int) -> None:
        raise NotImplementedError

    def _choose(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def _learn(self, j: int, reward: float) -> None:
        raise NotImplementedError

    def _begin_subphase(self, sp: Subphase, rng: np.random.Generator) -> None:
        if sp.index == 0:
            if self.shuffle == "per_phase" or (self.shuffle == "once" and sp.phase == 0):
                self.order = rng.permutation(self.K)
            self._sweep = [int(a) for a in self.order if a != self.champion]
            self.entered.append([])
        take = self.M - 1 if self.champion is not None else self.M
        fresh, self._sweep = self._sweep[:take], self._sweep[take:]
        self.entered[-1].extend(fresh)
        self.ledger.charge(len(fresh))
        arms = fresh if self.champion is None else fresh + [self.champion]
        self.active = sorted(arms)
        n = len(self.active)
        self.counts = np.zeros(n)
        self.sums = np.zeros(n)
        self._start(rng, sp.end - sp.start + 1)

    def _end_subphase(self) -> None:
        played = self.counts > 0
        means = np.where(played, self.sums / np.maximum(self.counts, 1), -np.inf)
        j = int(np.argmax(means))  # first maximum: lowest arm index
        keep = self.active[j]
        self.ledger.release(len(self.active) - 1)
        self.champion = keep
        self.active = [keep]

    def select(self, t: int, rng: np.random.Generator) -> int:
        if t != self._t + 1 or self._pending or t > self.T:
            raise ContractViolation(f"select({t}) out of order (last step {self._t})")
        subs = self.schedule.subphases
        if self._sub < 0 or t > subs[self._sub].end:
            self._sub += 1
            self._begin_subphase(subs[self._sub], rng)
        self._j = self._choose(rng)
        self._pending = True
        return self.active[self._j]

    def observe(self, arm: int, reward: float, t: int) -> None:
        if t != self._t + 1 or not self._pending:
            raise ContractViolation(f"observe({t}) without a matching select")
        j = self._j
        self.counts[j] += 1
        self.sums[j] += reward
        self._learn(j, reward)
        self._t = t
        self._pending = False
        if t == self.schedule.subphases[self._sub].end:
            self._end_subphase()

    def release(self) -> None:
        self.ledger.release(self.ledger.live_words)
        self.active = []
        self.champion = None


class UcbM(_MemoryBoundedSweep):
    """UCB1 inside each subphase: mean + sqrt(2 ln tau / count)."""

    name = "ucbm"

    def _start(self, rng, length):
        self._tau = 0

    def _choose(self, rng):
        c = self.counts
        if self._tau < len(c):
            unplayed = np.flatnonzero(c == 0)
            if len(unplayed):
                return int(unplayed[0])
        index = self.sums / c + np.sqrt(2.0 * math.log(self._tau) / c)
        return int(np.argmax(index))

    def _learn(self, j, reward):
        self._tau += 1


class Exp3M(_MemoryBoundedSweep):
    """EXP3 inside each subphase, tuned to the subphase length and active-set size."""

    name = "exp3m"

    def _start(self, rng, length):
        n = len(self.active)
        gamma = exp3_default_gamma(n, length) if n >= 2 else 1.0
        self._exp3 = Exp3State(n, gamma)

    def _choose(self, rng):
        if len(self.active) == 1:
            return 0
        return self._exp3.select(rng)

    def _learn(self, j, reward):
        if len(self.active) > 1:
            self._exp3.update(j, reward)
