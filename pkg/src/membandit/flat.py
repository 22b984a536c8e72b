"""EXP3, EXP3.P and EXP3.S over ``n`` actions.

These are the memory-unconstrained routines. They run standalone on all K arms
(footprint K words) and as level strategies inside HLMC, where ``n`` is a group,
subgroup or arm count.

All three updates are degree-1 homogeneous in the weight vector, so weights are
divided by their maximum whenever it exceeds ``RENORMALIZE_ABOVE``; the
probabilities are unaffected.
"""

from __future__ import annotations

import math

import numpy as np

from .core import MemoryLedger, Policy

RENORMALIZE_ABOVE = 1e100


def draw_index(cdf: np.ndarray, u):
    """Inverse-CDF draw: the smallest index whose cumulative mass exceeds ``u``.

    Works for a scalar ``u`` or an array of uniforms.
    """
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def _check_n(n: int) -> None:
    if n < 2:
        raise ValueError(f"parameter formulas need at least 2 actions, got n={n}")


def exp3_default_gamma(n: int, horizon: int) -> float:
    """Exploration rate sqrt(n ln n / (2 horizon)), clamped to at most 1."""
    _check_n(n)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    return min(1.0, math.sqrt(n * math.log(n) / (2.0 * horizon)))


def exp3p_default_params(n: int, horizon: int, delta0: float) -> tuple[float, float, float]:
    """(beta, eta, gamma) giving EXP3.P its high-probability guarantee at level ``delta0``."""
    _check_n(n)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0.0 < delta0 < 1.0:
        raise ValueError("delta0 must lie in (0, 1)")
    beta = math.sqrt(math.log(n / delta0) / (n * horizon))
    eta = 0.95 * math.sqrt(math.log(n) / (n * horizon))
    gamma = min(1.0, 1.05 * math.sqrt(n * math.log(n) / horizon))
    return beta, eta, gamma


def exp3s_default_params(n: int, horizon: int, V: float) -> tuple[float, float]:
    """(gamma, alpha) for EXP3.S against benchmarks of hardness at most ``V``."""
    _check_n(n)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if V < 1:
        raise ValueError("hardness V must be >= 1")
    gamma = min(1.0, math.sqrt(n * V * math.log(n * horizon) / horizon))
    return gamma, 1.0 / horizon


class Exp3State:
    """Exponential weights with uniform exploration mixing.

    ``select`` caches the probability vector it drew from; ``update`` consumes it.
    """

    kind = "exp3"

    def __init__(self, n: int, gamma: float):
        if n < 1:
            raise ValueError("need at least one action")
        if not 0.0 < gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
        self.n = n
        self.gamma = float(gamma)
        self.weights = np.ones(n)
        self._p = None

    def probabilities(self) -> np.ndarray:
        w = self.weights
        return (1.0 - self.gamma) * (w / w.sum()) + self.gamma / self.n

    def select(self, rng: np.random.Generator) -> int:
        p = self.probabilities()
        self._p = p
        return int(draw_index(np.cumsum(p), rng.random()))

    def _current_p(self) -> np.ndarray:
        p = self._p
        if p is None:
            p = self.probabilities()
        self._p = None
        return p

    def _maybe_renormalize(self, wmax: float) -> None:
        if wmax > RENORMALIZE_ABOVE:
            self.weights /= self.weights.max()

    def update(self, played: int, reward: float) -> None:
        p = self._current_p()
        if reward == 0.0:
            return
        w = self.weights
        w[played] *= math.exp(self.gamma * (reward / p[played]) / self.n)
        self._maybe_renormalize(w[played])

    def renormalize(self) -> None:
        self.weights /= self.weights.max()


class Exp3PState(Exp3State):
    """EXP3.P: every weight moves by its reward estimate plus a ``beta / p_i`` bonus."""

    kind = "exp3p"

    def __init__(self, n: int, gamma: float, eta: float, beta: float):
        super().__init__(n, gamma)
        if eta <= 0:
            raise ValueError("eta must be positive")
        if beta < 0:
            raise ValueError("beta must be non-negative")
        self.eta = float(eta)
        self.beta = float(beta)

    def update(self, played: int, reward: float) -> None:
        p = self._current_p()
        est = np.full(self.n, self.beta)
        est[played] += reward
        w = self.weights
        w *= np.exp(self.eta * (est / p))
        self._maybe_renormalize(w.max())


class Exp3SState(Exp3State):
    """EXP3.S: EXP3's update plus a fixed share ``e * alpha / n`` of the total weight."""

    kind = "exp3s"

    def __init__(self, n: int, gamma: float, alpha: float):
        super().__init__(n, gamma)
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.alpha = float(alpha)

    def update(self, played: int, reward: float) -> None:
        p = self._current_p()
        w = self.weights
        share = (math.e * self.alpha / self.n) * w.sum()
        if reward != 0.0:
            w[played] *= math.exp(self.gamma * (reward / p[played]) / self.n)
        w += share
        self._maybe_renormalize(w.max())


def make_state(kind: str, n: int, **params) -> Exp3State:
    """Build a fresh state of the named kind over ``n`` actions."""
    if kind == "exp3":
        return Exp3State(n, params["gamma"])
    if kind == "exp3p":
        return Exp3PState(n, params["gamma"], params["eta"], params["beta"])
    if kind == "exp3s":
        return Exp3SState(n, params["gamma"], params["alpha"])
    raise ValueError(f"unknown exponential-weights kind {kind!r}")


def default_params(kind: str, n: int, horizon: int, *, delta: float = 0.05, V: float = 1.0) -> dict:
    """Horizon-tuned parameters for ``kind`` over ``n`` actions."""
    if n < 2:
        # a single action is played deterministically; any valid gamma will do
        return {"gamma": 1.0, "eta": 1.0, "beta": 0.0, "alpha": 0.0}
    if kind == "exp3":
        return {"gamma": exp3_default_gamma(n, horizon)}
    if kind == "exp3p":
        beta, eta, gamma = exp3p_default_params(n, horizon, delta)
        return {"gamma": gamma, "eta": eta, "beta": beta}
    if kind == "exp3s":
        gamma, alpha = exp3s_default_params(n, horizon, V)
        return {"gamma": gamma, "alpha": alpha}
    raise ValueError(f"unknown exponential-weights kind {kind!r}")


class FlatPolicy(Policy):
    """A single exponential-weights routine over all ``K`` arms (K words)."""

    def __init__(self, kind: str, K: int, params: dict, ledger: MemoryLedger | None = None):
        self.kind = kind
        self.K = K
        self.params = dict(params)
        self.ledger = MemoryLedger(K) if ledger is None else ledger
        self.ledger.charge(K)
        self.state = make_state(kind, K, **params)
        self._live = True

    @classmethod
    def tuned(cls, kind: str, K: int, horizon: int, ledger: MemoryLedger | None = None, **kw):
        return cls(kind, K, default_params(kind, K, horizon, **kw), ledger)

    @property
    def footprint(self) -> int:
        return self.K

    def select(self, t: int, rng: np.random.Generator) -> int:
        return self.state.select(rng)

    def observe(self, arm: int, reward: float, t: int) -> None:
        self.state.update(arm, reward)

    def release(self) -> None:
        if self._live:
            self.ledger.release(self.K)
            self._live = False
