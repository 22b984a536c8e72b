"""Hierarchical learning with memory constraints (HLMC).

Arms are grouped into a D-level tree of contiguous index ranges and time into
nested epochs. At the start of every level-d interval the level-d routine picks
one of its units; a fresh level-(d+1) routine is then created over that unit's
children and lives until the interval ends. The level-d routine is updated once
per interval with the average reward per play collected during it. The arm
level is updated every step with the raw reward.

Level numbering follows ``level_sizes = (N_1, ..., N_D)``: ``N_1`` is the number
of top-level groups and ``N_D`` the number of arms per leaf group. A two-level
hierarchy with ``L`` groups of ``N`` arms is ``(L, N)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .core import BudgetViolation, ContractViolation, MemoryLedger, Policy
from .flat import make_state


class RegimeWarning(UserWarning):
    """Parameters requested outside the regime where the regret bound is proven."""


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _ceil(x: float) -> int:
    # absorb float noise such as 100.00000000000001 from fractional powers
    return math.ceil(round(x, 9))


def iroot_ceil(K: int, D: int) -> int:
    """Smallest integer ``x`` with ``x**D >= K``."""
    if K < 1 or D < 1:
        raise ValueError("K and D must be positive")
    x = max(1, int(round(K ** (1.0 / D))))
    while x**D < K:
        x += 1
    while x > 1 and (x - 1) ** D >= K:
        x -= 1
    return x


def max_depth(K: int) -> int:
    """Deepest legal hierarchy: every group must hold at least two subunits."""
    return max(1, math.ceil(math.log2(K))) if K > 1 else 1


def partition_arms(K: int, group_size: int) -> list[range]:
    """Contiguous groups of ``group_size`` arms; the last one may be short."""
    if group_size < 1:
        raise ValueError("group size must be >= 1")
    if group_size > K:
        raise ValueError("group size cannot exceed the number of arms")
    return [range(lo, min(lo + group_size, K)) for lo in range(0, K, group_size)]


def partition_time(T: int, epoch_length: int) -> list[tuple[int, int]]:
    """Epochs ``[1 + D(s-1), min(D s, T)]`` tiling ``[1, T]`` (inclusive bounds)."""
    if epoch_length < 1:
        raise ValueError("epoch length must be >= 1")
    if epoch_length > T:
        raise ValueError("epoch length cannot exceed the horizon")
    return [(lo, min(lo + epoch_length - 1, T)) for lo in range(1, T + 1, epoch_length)]


@dataclass
class Hierarchy:
    """Nested contiguous partition of ``K`` arms with per-level sizes.

    ``bounds[d]`` holds the arm-index boundaries of the level-(d+1) units
    (0-based ``d``); ``bounds[D-1]`` is ``0..K`` (single arms).
    """

    K: int
    level_sizes: tuple[int, ...]
    counts: tuple[int, ...] = field(init=False)
    bounds: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.level_sizes)
        K = self.K
        if K < 1:
            raise ValueError("need at least one arm")
        if not sizes:
            raise ValueError("a hierarchy needs at least one level")
        if any(n < 1 for n in sizes):
            raise ValueError(f"level sizes must be positive, got {sizes}")
        D = len(sizes)
        if D > 1 and any(n < 2 for n in sizes):
            raise ValueError(f"every group must hold at least two subunits, got {sizes}")
        if D > max_depth(K):
            raise ValueError(f"depth {D} exceeds ceil(log2 K) = {max_depth(K)}")
        counts = [0] * D
        bounds = [None] * D
        counts[D - 1] = K
        bounds[D - 1] = np.arange(K + 1)
        for d in range(D - 2, -1, -1):
            per = sizes[d + 1]
            counts[d] = _ceil_div(counts[d + 1], per)
            child = bounds[d + 1]
            idx = np.minimum(np.arange(counts[d] + 1) * per, counts[d + 1])
            bounds[d] = child[idx]
        if counts[0] > sizes[0]:
            raise ValueError(
                f"level sizes {sizes} cover only {math.prod(sizes)} < {K} arms"
            )
        # the top level holds exactly as many units as the partition produces
        sizes = (counts[0],) + sizes[1:]
        self.level_sizes = sizes
        self.counts = tuple(counts)
        self.bounds = tuple(bounds)

    @property
    def D(self) -> int:
        return len(self.level_sizes)

    @classmethod
    def uniform(cls, K: int, D: int) -> "Hierarchy":
        n = iroot_ceil(K, D)
        return cls(K, (n,) * D)

    @classmethod
    def two_level(cls, K: int, N: int) -> "Hierarchy":
        """``ceil(K/N)`` groups of ``N`` arms."""
        return cls(K, (_ceil_div(K, N), N))

    def children(self, d: int, unit: int) -> tuple[int, int]:
        """Index range of level-(d+2) units inside level-(d+1) unit ``unit`` (0-based d)."""
        per = self.level_sizes[d + 1]
        return unit * per, min((unit + 1) * per, self.counts[d + 1])

    def arms_of(self, d: int, unit: int) -> range:
        b = self.bounds[d]
        return range(int(b[unit]), int(b[unit + 1]))

    def groups(self, d: int) -> list[range]:
        return [self.arms_of(d, u) for u in range(self.counts[d])]

    def to_dict(self) -> dict:
        return {"K": self.K, "level_sizes": list(self.level_sizes)}


def memory_footprint(hierarchy: Hierarchy) -> int:
    """Words held by HLMC on ``hierarchy``: one live weight vector per level."""
    return sum(hierarchy.level_sizes)


@dataclass
class EpochSchedule:
    """Nested epochs: ``level_lengths[0]`` top-level rounds, each split into
    ``level_lengths[1]`` sub-rounds, and so on; the innermost length counts steps."""

    T: int
    level_lengths: tuple[int, ...]
    periods: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        self.level_lengths = tuple(int(s) for s in self.level_lengths)
        if self.T < 1:
            raise ValueError("horizon must be >= 1")
        if any(s < 1 for s in self.level_lengths):
            raise ValueError("level lengths must be positive")
        if math.prod(self.level_lengths) < self.T:
            raise ValueError(f"level lengths {self.level_lengths} do not cover T={self.T}")
        D = len(self.level_lengths)
        periods = [1] * D
        for d in range(D - 2, -1, -1):
            periods[d] = periods[d + 1] * self.level_lengths[d + 1]
        self.periods = tuple(periods)

    @property
    def D(self) -> int:
        return len(self.level_lengths)

    @classmethod
    def two_level(cls, T: int, epoch_length: int) -> "EpochSchedule":
        return cls(T, (_ceil_div(T, epoch_length), epoch_length))

    def intervals(self, d: int) -> list[tuple[int, int]]:
        """Level-(d+1) intervals (0-based ``d``), inclusive, tiling ``[1, T]``."""
        return partition_time(self.T, min(self.periods[d], self.T))

    def to_dict(self) -> dict:
        return {"T": self.T, "level_lengths": list(self.level_lengths)}


@dataclass(frozen=True)
class LevelSpec:
    """Routine kind and its parameters for one hierarchy level."""

    kind: str
    params: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}


class HlmcPolicy(Policy):
    """D-level HLMC. ``levels[d]`` configures the routine choosing level-(d+1) units."""

    def __init__(self, hierarchy: Hierarchy, schedule: EpochSchedule,
                 levels: Sequence[LevelSpec], ledger: MemoryLedger | None = None):
        if hierarchy.D != schedule.D or len(levels) != hierarchy.D:
            raise ValueError("hierarchy, schedule and level strategies must share a depth")
        self.hierarchy = hierarchy
        self.schedule = schedule
        self.levels = list(levels)
        self.T = schedule.T
        self.ledger = MemoryLedger(self.footprint) if ledger is None else ledger
        budget = self.ledger.budget_words
        if budget is not None and self.ledger.live_words + self.footprint > budget:
            raise BudgetViolation(f"HLMC needs {self.footprint} words but the budget is {budget}")
        D = hierarchy.D
        self._D = D
        self._period = schedule.periods
        self._sizes = hierarchy.level_sizes
        self._states = [None] * D
        self._offset = [0] * D
        self._chosen = [0] * D
        self._y = [0.0] * D
        self._tau = [0] * D
        self._t = 0
        self._pending = False
        self._open(0, 0, hierarchy.counts[0])

    @property
    def footprint(self) -> int:
        return memory_footprint(self.hierarchy)

    def _open(self, d: int, lo: int, hi: int) -> None:
        # each level reserves its full slot N_d, even over a short trailing group
        self.ledger.charge(self._sizes[d])
        spec = self.levels[d]
        self._states[d] = make_state(spec.kind, hi - lo, **spec.params)
        self._offset[d] = lo

    def _close(self, d: int) -> None:
        self._states[d] = None
        self.ledger.release(self._sizes[d])

    def select(self, t: int, rng: np.random.Generator) -> int:
        if t != self._t + 1 or self._pending or t > self.T:
            raise ContractViolation(f"select({t}) out of order (last step {self._t})")
        t0 = t - 1
        last = self._D - 1
        for d in range(last):
            if t0 % self._period[d] == 0:
                u = self._states[d].select(rng)
                self._chosen[d] = u
                lo, hi = self.hierarchy.children(d, self._offset[d] + u)
                self._open(d + 1, lo, hi)
                self._y[d] = 0.0
                self._tau[d] = 0
        self._pending = True
        return self._offset[last] + self._states[last].select(rng)

    def observe(self, arm: int, reward: float, t: int) -> None:
        if t != self._t + 1 or not self._pending:
            raise ContractViolation(f"observe({t}) without a matching select")
        last = self._D - 1
        self._states[last].update(arm - self._offset[last], reward)
        final = t == self.T
        for d in range(last - 1, -1, -1):
            tau = self._tau[d]
            y = (self._y[d] * tau + reward) / (tau + 1)
            self._y[d] = y
            self._tau[d] = tau + 1
            if final or t % self._period[d] == 0:
                self._states[d].update(self._chosen[d], y)
                self._close(d + 1)
        self._t = t
        self._pending = False

    def release(self) -> None:
        for d in range(self._D - 1, -1, -1):
            if self._states[d] is not None:
                self._close(d)

    def describe(self) -> dict:
        return {
            "hierarchy": self.hierarchy.to_dict(),
            "schedule": self.schedule.to_dict(),
            "levels": [lv.to_dict() for lv in self.levels],
        }


# ---------------------------------------------------------------------------
# parameter choices


class WeakExpectedParams(NamedTuple):
    N: int
    L: int
    delta: int
    gamma1: float
    gamma2: float
    S: int


class WeakHighProbParams(NamedTuple):
    N: int
    L: int
    delta: int
    group: tuple[float, float, float]  # (beta, eta, gamma)
    arm: tuple[float, float, float]
    S: int


class ShiftingParams(NamedTuple):
    N: int
    L: int
    delta: int
    gamma1: float
    alpha: float
    gamma2: float
    S: int


class MultiLevelParams(NamedTuple):
    level_sizes: tuple[int, ...]
    level_lengths: tuple[int, ...]
    gammas: tuple[float, ...]


def _clamp(g: float) -> float:
    return min(1.0, g)


def _nlogn(n: int) -> float:
    return n * math.log(n)


def _sqrt_groups(K: int) -> tuple[int, int]:
    if K < 4:
        raise ValueError(f"two-level parameter formulas need K >= 4, got {K}")
    N = math.isqrt(K - 1) + 1
    return N, _ceil_div(K, N)


def _epoch(T: int, x: float) -> int:
    return min(T, max(1, _ceil(x)))


def two_level_params(T: int, N: int, L: int) -> WeakExpectedParams:
    """EXP3/EXP3 tuning for an arbitrary two-level partition (``N, L >= 2``)."""
    if N < 2 or L < 2:
        raise ValueError("both levels need at least two units")
    if T < 1:
        raise ValueError("horizon must be >= 1")
    delta = _epoch(T, math.sqrt(T * _nlogn(N) / _nlogn(L)))
    S = _ceil_div(T, delta)
    g1 = _clamp(math.sqrt(_nlogn(L) / (2 * S)))
    g2 = _clamp(math.sqrt(_nlogn(N) / (2 * delta)))
    return WeakExpectedParams(N, L, delta, g1, g2, S)


def params_weak_expected(T: int, K: int) -> WeakExpectedParams:
    N, L = _sqrt_groups(K)
    return two_level_params(T, N, L)


def params_weak_highprob(T: int, K: int, delta: float) -> WeakHighProbParams:
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    N, L = _sqrt_groups(K)
    D = _epoch(T, math.sqrt(T * N * math.log(2 * K * T / delta) / (L * math.log(2 * L / delta))))
    S = _ceil_div(T, D)
    group = (
        math.sqrt(math.log(2 * L / delta) / (L * S)),
        0.95 * math.sqrt(math.log(L) / (L * S)),
        _clamp(1.05 * math.sqrt(_nlogn(L) / S)),
    )
    arm = (
        math.sqrt(math.log(2 * K * S / delta) / (N * D)),
        0.95 * math.sqrt(math.log(N) / (N * D)),
        _clamp(1.05 * math.sqrt(_nlogn(N) / D)),
    )
    return WeakHighProbParams(N, L, D, group, arm, S)


def params_shifting(T: int, K: int, V: float) -> ShiftingParams:
    if V < 1:
        raise ValueError("hardness V must be >= 1")
    if T < V * K:
        warnings.warn(f"T={T} < V*K={V * K}: shifting-regret bound not guaranteed", RegimeWarning,
                      stacklevel=2)
    return _shifting(T, K, V)


def params_shifting_unknownV(T: int, K: int) -> ShiftingParams:
    return _shifting(T, K, 1.0)


def _shifting(T: int, K: int, V: float) -> ShiftingParams:
    N, L = _sqrt_groups(K)
    D = _epoch(T, math.sqrt(T * _nlogn(N) / (V * L * math.log(T * L))))
    S = _ceil_div(T, D)
    g1 = _clamp(math.sqrt(V * L * math.log(L * S) / S))
    g2 = _clamp(math.sqrt(_nlogn(N) / (2 * D)))
    return ShiftingParams(N, L, D, g1, 1.0 / S, g2, S)


def params_multilevel(T: int, level_sizes: Sequence[int]) -> MultiLevelParams:
    """Level lengths ``S_i = ceil(T^(1/D) c_i / (prod_j c_j)^(1/D))`` with ``c = N ln N``.

    For D = 3 this is the three-level EXP3 tuning. If the rounded lengths do
    not cover T, the innermost one is increased until they do.
    """
    sizes = tuple(int(n) for n in level_sizes)
    D = len(sizes)
    if D < 2 or any(n < 2 for n in sizes):
        raise ValueError(f"need at least two levels of size >= 2, got {sizes}")
    c = [_nlogn(n) for n in sizes]
    log_geo = sum(math.log(x) for x in c) / D
    lengths = [max(1, _ceil(math.exp(math.log(T) / D + math.log(ci) - log_geo))) for ci in c]
    while math.prod(lengths) < T:
        lengths[-1] += 1
    gammas = tuple(_clamp(math.sqrt(ci / (2 * s))) for ci, s in zip(c, lengths))
    return MultiLevelParams(sizes, tuple(lengths), gammas)


def params_threelevel(T: int, K: int) -> MultiLevelParams:
    if K < 8:
        raise ValueError(f"three-level parameter formulas need K >= 8, got {K}")
    n = iroot_ceil(K, 3)
    n3 = _ceil_div(K, n * n)
    if n3 < 2:
        raise ValueError(f"K={K} leaves a single arm per subgroup; use two levels")
    return params_multilevel(T, (n, n, n3))


def min_depth(M: int, K: int) -> int:
    """Smallest D with ``D * ceil(K^(1/D)) <= M``."""
    for D in range(1, max_depth(K) + 1):
        if D * iroot_ceil(K, D) <= M:
            return D
    raise ValueError(f"budget M={M} admits no legitimate hierarchy over K={K} arms")


def adaptive_two_level(M: int, K: int) -> tuple[int, int]:
    """Group size ``N`` and group count ``L`` using as much of ``M`` as helps."""
    if M * M < 4 * K:
        raise ValueError(f"budget M={M} < 2 sqrt(K) for K={K}: no two-level partition fits")
    N = max(1, _ceil((M - math.sqrt(M * M - 4 * K)) / 2))
    L = _ceil_div(K, N)
    assert N + L <= M, (N, L, M)
    return N, L


# ---------------------------------------------------------------------------
# ready-made policies


def _two_level_policy(T, K, N, levels, delta, ledger):
    h = Hierarchy.two_level(K, N)
    s = EpochSchedule.two_level(T, delta)
    return HlmcPolicy(h, s, levels, ledger)


def hlmc_weak_expected(T: int, K: int, ledger: MemoryLedger | None = None) -> HlmcPolicy:
    p = params_weak_expected(T, K)
    levels = [LevelSpec("exp3", {"gamma": p.gamma1}), LevelSpec("exp3", {"gamma": p.gamma2})]
    return _two_level_policy(T, K, p.N, levels, p.delta, ledger)


def hlmc_weak_highprob(T: int, K: int, delta: float = 0.05,
                       ledger: MemoryLedger | None = None) -> HlmcPolicy:
    p = params_weak_highprob(T, K, delta)
    levels = [LevelSpec("exp3p", dict(zip(("beta", "eta", "gamma"), x))) for x in (p.group, p.arm)]
    return _two_level_policy(T, K, p.N, levels, p.delta, ledger)


def _shifting_policy(p: ShiftingParams, T, K, ledger):
    levels = [LevelSpec("exp3s", {"gamma": p.gamma1, "alpha": p.alpha}),
              LevelSpec("exp3", {"gamma": p.gamma2})]
    return _two_level_policy(T, K, p.N, levels, p.delta, ledger)


def hlmc_shifting(T: int, K: int, V: float, ledger: MemoryLedger | None = None) -> HlmcPolicy:
    return _shifting_policy(params_shifting(T, K, V), T, K, ledger)


def hlmc_shifting_unknownV(T: int, K: int, ledger: MemoryLedger | None = None) -> HlmcPolicy:
    return _shifting_policy(params_shifting_unknownV(T, K), T, K, ledger)


def hlmc_multilevel(T: int, K: int, level_sizes: Sequence[int],
                    ledger: MemoryLedger | None = None) -> HlmcPolicy:
    """EXP3 at every level of an explicit hierarchy, e.g. ``(5, 5, 4)`` for K=100."""
    h = Hierarchy(K, tuple(level_sizes))
    p = params_multilevel(T, h.level_sizes)
    s = EpochSchedule(T, p.level_lengths)
    levels = [LevelSpec("exp3", {"gamma": g}) for g in p.gammas]
    return HlmcPolicy(h, s, levels, ledger)


def hlmc_threelevel(T: int, K: int, ledger: MemoryLedger | None = None) -> HlmcPolicy:
    p = params_threelevel(T, K)
    return hlmc_multilevel(T, K, p.level_sizes, ledger)


def hlmc_adaptive(T: int, K: int, M: int, ledger: MemoryLedger | None = None) -> HlmcPolicy:
    """Two-level HLMC with the partition sized to the budget ``M``."""
    N, L = adaptive_two_level(M, K)
    if L < 2 or N < 2:
        raise ValueError(f"budget M={M} gives a degenerate partition N={N}, L={L}")
    p = two_level_params(T, N, L)
    levels = [LevelSpec("exp3", {"gamma": p.gamma1}), LevelSpec("exp3", {"gamma": p.gamma2})]
    return _two_level_policy(T, K, N, levels, p.delta, ledger)


def hlmc_single_level(T: int, K: int, kind: str = "exp3", params: dict | None = None,
                      ledger: MemoryLedger | None = None) -> HlmcPolicy:
    """The degenerate depth-1 hierarchy: one routine over all ``K`` arms."""
    from .flat import default_params

    params = default_params(kind, K, T) if params is None else params
    return HlmcPolicy(Hierarchy(K, (K,)), EpochSchedule(T, (T,)), [LevelSpec(kind, params)], ledger)


def hlmc_for_budget(T: int, K: int, M: int, ledger: MemoryLedger | None = None) -> Policy:
    """Shallowest HLMC that fits ``M`` words: flat if ``M >= K``, else adaptive."""
    D = min_depth(M, K)
    if D == 1:
        return hlmc_single_level(T, K, ledger=ledger)
    if D == 2:
        return hlmc_adaptive(T, K, M, ledger)
    return hlmc_multilevel(T, K, Hierarchy.uniform(K, D).level_sizes, ledger)
