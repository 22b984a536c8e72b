"""Doubling trick for policies that need the horizon up front."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..core import MemoryLedger, Policy

PolicyFactory = Callable[[int, MemoryLedger], Policy]


def doubling_stages(T: int) -> list[tuple[int, int, int]]:
    """``(start, end, horizon)`` for stages of length 1, 2, 4, ... truncated at ``T``."""
    stages = []
    start, length = 1, 1
    while start <= T:
        stages.append((start, min(start + length - 1, T), length))
        start += length
        length *= 2
    return stages


class DoublingPolicy(Policy):
    """Restart a fresh policy at each stage, tuned to that stage's nominal length.

    Everything the previous stage stored is released at the boundary.
    """

    def __init__(self, factory: PolicyFactory, T: int, ledger: MemoryLedger | None = None):
        self.factory = factory
        self.T = T
        self.stages = doubling_stages(T)
        probe = factory(self.stages[-1][2], MemoryLedger())
        self._footprint = probe.footprint
        probe.release()
        self.ledger = MemoryLedger(self._footprint) if ledger is None else ledger
        self._stage = -1
        self._inner: Policy | None = None
        self._offset = 0

    @property
    def footprint(self) -> int:
        return self._footprint

    def select(self, t: int, rng: np.random.Generator) -> int:
        if self._inner is None or t > self.stages[self._stage][1]:
            if self._inner is not None:
                self._inner.release()
            self._stage += 1
            start, _, horizon = self.stages[self._stage]
            self._inner = self.factory(horizon, self.ledger)
            self._offset = start - 1
        return self._inner.select(t - self._offset, rng)

    def observe(self, arm: int, reward: float, t: int) -> None:
        self._inner.observe(arm, reward, t - self._offset)

    def release(self) -> None:
        if self._inner is not None:
            self._inner.release()
            self._inner = None


def doubling_wrap(factory: PolicyFactory, T: int, ledger: MemoryLedger | None = None) -> DoublingPolicy:
    return DoublingPolicy(factory, T, ledger)
