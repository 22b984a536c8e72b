"""Memory-constrained adversarial bandits: HLMC, baselines, adversaries and regret oracles."""

from .core import (
    BudgetViolation,
    ContractViolation,
    MatrixRewardModel,
    MemoryLedger,
    Policy,
    RewardModel,
    RngStream,
    RunTrace,
    hardness,
    play,
)
from .flat import Exp3PState, Exp3SState, Exp3State, FlatPolicy
from .hlmc import EpochSchedule, Hierarchy, HlmcPolicy, LevelSpec, memory_footprint

__version__ = "0.1.0"
