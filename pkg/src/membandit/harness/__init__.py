"""Regret oracles, bounds, the doubling wrapper and the experiment runner."""

from .bounds import Bound, theoretical_bound
from .doubling import DoublingPolicy, doubling_stages, doubling_wrap
from .oracles import (
    arm_totals,
    best_arm_total,
    default_checkpoints,
    shifting_benchmark,
    shifting_regret,
    weak_benchmark,
    weak_regret,
)
from .runner import (
    AuditError,
    ConfigError,
    ExperimentConfig,
    PolicyConfig,
    RegretCurve,
    RegretSpec,
    build_policy,
    curves_csv,
    run_experiment,
)
