"""Pure exploration with oblivious samplers on low-rank bandit reward sequences."""

__version__ = "0.1.0"

from .algs import (Alg1State, Alg2State, EbaState, StrategySpec, alg1_recommend, alg2_recommend,
                   diagnostics, eba_recommend, estimate_seed, schedule_arm)
from .env import (RewardModel, make_block_instance, make_graded_gap_instance,
                  make_hypercube_hard_instance, sample_round, true_means, validate_model)
from .harness import (ExperimentConfig, RegretSummary, run_monte_carlo, run_trial,
                      scaling_sweep, simple_regret)
from .spanner import SpannerBasis, approx_spanner, coefficients, exact_spanner

__all__ = [
    "Alg1State", "Alg2State", "EbaState", "ExperimentConfig", "RegretSummary", "RewardModel",
    "SpannerBasis", "StrategySpec", "alg1_recommend", "alg2_recommend", "approx_spanner",
    "coefficients", "diagnostics", "eba_recommend", "estimate_seed", "exact_spanner",
    "make_block_instance", "make_graded_gap_instance", "make_hypercube_hard_instance",
    "run_monte_carlo", "run_trial", "sample_round", "scaling_sweep", "schedule_arm",
    "simple_regret", "true_means", "validate_model",
]
