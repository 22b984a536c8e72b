"""Exact regret oracles computed by scanning the reward matrix."""

from __future__ import annotations

import numpy as np

from ..core import RewardModel, RunTrace


def default_checkpoints(T: int, linear: int = 200, powers_of_two: bool = True) -> np.ndarray:
    """``linear`` evenly spaced steps plus every power of two up to ``T``, always including ``T``."""
    if T < 1:
        raise ValueError("horizon must be >= 1")
    pts = set()
    if linear > 0:
        k = np.arange(1, linear + 1)
        pts.update(int(x) for x in np.ceil(k * T / linear))
    if powers_of_two:
        p = 1
        while p <= T:
            pts.add(p)
            p *= 2
    pts.add(T)
    return np.array(sorted(x for x in pts if 1 <= x <= T), dtype=np.int64)


def _as_checkpoints(model: RewardModel, checkpoints) -> np.ndarray:
    if checkpoints is None:
        return np.array([model.T], dtype=np.int64)
    cp = np.atleast_1d(np.asarray(checkpoints, dtype=np.int64))
    if len(cp) and (cp.min() < 1 or cp.max() > model.T or np.any(np.diff(cp) <= 0)):
        raise ValueError("checkpoints must be strictly increasing within [1, T]")
    return cp


def arm_totals(model: RewardModel, checkpoints=None) -> np.ndarray:
    """Cumulative reward of every arm at each checkpoint, shape ``(C, K)``."""
    cp = _as_checkpoints(model, checkpoints)
    out = np.empty((len(cp), model.K))
    running = np.zeros(model.K)
    j = 0
    for t0, rows in model.iter_blocks():
        if j == len(cp):
            break
        cum = np.cumsum(rows, axis=0)
        t1 = t0 + len(rows) - 1
        while j < len(cp) and cp[j] <= t1:
            out[j] = running + cum[cp[j] - t0]
            j += 1
        running = running + cum[-1]
    return out


def weak_benchmark(model: RewardModel, checkpoints=None) -> np.ndarray:
    """Best fixed arm's cumulative reward over ``[1, t]`` for each checkpoint ``t``."""
    return arm_totals(model, checkpoints).max(axis=1)


def best_arm_total(model: RewardModel) -> float:
    """Exact cumulative reward of the best fixed arm over the full horizon."""
    return float(weak_benchmark(model)[-1])


def policy_totals(trace: RunTrace, checkpoints) -> np.ndarray:
    cp = np.asarray(checkpoints, dtype=np.int64)
    if len(cp) and cp.max() > trace.T:
        raise ValueError("checkpoint beyond the end of the trace")
    return np.cumsum(trace.rewards)[cp - 1]


def weak_regret(trace: RunTrace, model: RewardModel, checkpoints=None) -> np.ndarray:
    """Prefix weak regret: at each ``t`` the benchmark is the best arm over ``[1, t]``."""
    cp = _as_checkpoints(model, checkpoints)
    return weak_benchmark(model, cp) - policy_totals(trace, cp)


def shifting_benchmark(model: RewardModel, V: int, checkpoints=None) -> np.ndarray:
    """Best cumulative reward over ``[1, t]`` of any arm sequence with hardness <= ``V``.

    Dynamic programme over (runs used, last arm): ``f_v(t, i) = r_{i,t} +
    max(f_v(t-1, i), max_j f_{v-1}(t-1, j))``. Cost ``O(T K V)``.
    """
    if V < 1:
        raise ValueError("hardness V must be >= 1")
    cp = _as_checkpoints(model, checkpoints)
    out = np.empty(len(cp))
    if len(cp) == 0:
        return out
    V = int(min(V, cp[-1]))
    F = None
    switch = np.full(V, -np.inf)
    j = 0
    for t0, rows in model.iter_blocks():
        for k, row in enumerate(rows):
            t = t0 + k
            if F is None:
                F = np.tile(row, (V, 1))
            else:
                switch[1:] = F[:-1].max(axis=1)
                F = np.maximum(F, switch[:, None])
                F += row
            if t == cp[j]:
                out[j] = F[-1].max()
                j += 1
                if j == len(cp):
                    return out
    return out


def shifting_regret(trace: RunTrace, model: RewardModel, V: int, checkpoints=None) -> np.ndarray:
    cp = _as_checkpoints(model, checkpoints)
    return shifting_benchmark(model, V, cp) - policy_totals(trace, cp)
