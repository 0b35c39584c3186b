"""Monte Carlo runner for simple regret.

Every trial owns independent Philox streams keyed by ``(seed, trial_index,
purpose)``: one for the sampler, one for the reward environment and one for
the stopping signal.  Keeping the sampler stream separate from the reward
stream is what makes the arm sequence independent of reward realizations.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .algs import InsufficientDataError, Strategy, StrategySpec, build_strategy
from .env import (BlockSchedule, ExplicitSchedule, FixedHorizon, Geometric, RewardModel, StoppingRule,
                  observed_rewards, sample_rounds, true_means)

SAMPLER, ENVIRONMENT, STOPPING = 0, 1, 2
QUANTILES = (0.1, 0.5, 0.9)


class TrialError(RuntimeError):
    def __init__(self, trial_index: int, cause: Exception):
        super().__init__(f"trial {trial_index}: {cause}")
        self.trial_index = trial_index
        self.cause = cause


def stream(seed: int, trial_index: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(trial_index), int(purpose)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    source: RewardModel | BlockSchedule
    strategy: StrategySpec
    stopping: StoppingRule
    trials: int = 100
    seed: int = 0
    env_seed: int | None = None  # defaults to seed
    curve: bool = False
    stride: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if isinstance(self.source, BlockSchedule) and not isinstance(self.stopping, FixedHorizon):
            raise ValueError("block schedules run for their own fixed horizon")
        if self.curve and isinstance(self.stopping, Geometric):
            raise ValueError("regret curves need a deterministic horizon")

    @property
    def N(self) -> int:
        return self.source.N

    @property
    def d(self) -> int:
        return self.source.d


@dataclass
class TrialResult:
    trial_index: int
    n: int
    J: int
    regret: float
    arm_hash: str
    curve_t: np.ndarray | None = None
    curve_regret: np.ndarray | None = None


@dataclass
class RegretSummary:
    strategy: str
    n: int
    d: int
    N: int
    trials: int
    mean: float
    stderr: float
    min: float
    max: float
    q10: float
    q50: float
    q90: float
    seed: int
    curve: dict | None = field(default=None, repr=False)

    def row(self) -> list:
        return [self.strategy, self.n, self.d, self.N, self.trials, self.mean, self.stderr,
                self.q10, self.q50, self.q90, self.seed]


def simple_regret(mu, J: int) -> float:
    mu = np.asarray(mu, dtype=np.float64)
    if not 0 <= J < mu.shape[0]:
        raise IndexError(f"arm {J} is out of range for {mu.shape[0]} arms")
    return float(max(mu.max() - mu[J], 0.0))


def arm_hash(arms: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(arms, dtype="<i8").tobytes()).hexdigest()[:16]


def _kernel_support(source) -> tuple[np.ndarray, bool]:
    model = source.phases[0].model if isinstance(source, BlockSchedule) else source
    return model.kernel.support, model.is_fixed


def prepare_strategy(config: ExperimentConfig) -> Strategy:
    support, fixed = _kernel_support(config.source)
    return build_strategy(config.strategy, support, fixed)


def _checkpoints(n: int, curve: bool, stride: int | None) -> np.ndarray:
    if not curve:
        return np.array([n])
    step = stride or max(1, math.ceil(n / 100))
    ts = np.arange(step, n + 1, step)
    if ts.size == 0 or ts[-1] != n:
        ts = np.append(ts, n)
    return ts


def _observe(source, env_rng, arms: np.ndarray):
    """Kernel indices and observed rewards for the scheduled arms."""
    if isinstance(source, RewardModel):
        kidx, seeds = sample_rounds(source, env_rng, arms.size)
        return kidx, observed_rewards(source, kidx, seeds, arms)
    kidx = np.zeros(arms.size, dtype=np.intp)
    rewards = np.empty(arms.size)
    for ph in source.phases:
        lo, hi = ph.start - 1, min(ph.stop, arms.size)
        if hi <= lo:
            break
        _, seeds = sample_rounds(ph.model, env_rng, hi - lo)
        rewards[lo:hi] = observed_rewards(ph.model, kidx[lo:hi], seeds, arms[lo:hi])
    return kidx, rewards


def run_trial(config: ExperimentConfig, trial_index: int, n: int | None = None,
              strategy: Strategy | None = None) -> TrialResult:
    """One play of the protocol up to the stopping time."""
    try:
        strategy = strategy or prepare_strategy(config)
        source = config.source
        env_seed = config.seed if config.env_seed is None else config.env_seed
        if isinstance(source, BlockSchedule):
            n = source.n
        else:
            nominal = n if n is not None else config.stopping.horizons()[0]
            n = config.stopping.draw(stream(env_seed, trial_index, STOPPING), nominal)

        # the sampler sees only its stream and the round count
        arms = strategy.sampler.arms(n, stream(config.seed, trial_index, SAMPLER))
        kidx, rewards = _observe(source, stream(env_seed, trial_index, ENVIRONMENT), arms)

        block = isinstance(source, BlockSchedule)
        mu = None if block else true_means(source)
        state = strategy.new_state()
        ts = _checkpoints(n, config.curve, config.stride)
        regrets = np.full(ts.size, np.nan)
        J = -1
        prev = 0
        for c, t in enumerate(ts):
            state.observe_batch(arms[prev:t], rewards[prev:t], kidx[prev:t])
            prev = t
            try:
                J = state.recommend()
            except InsufficientDataError:
                if t == n:
                    raise
                continue
            regrets[c] = simple_regret(source.average_means(t) if block else mu, J)
    except TrialError:
        raise
    except Exception as exc:
        raise TrialError(trial_index, exc) from exc
    res = TrialResult(trial_index, int(n), J, float(regrets[-1]), arm_hash(arms))
    if config.curve:
        res.curve_t, res.curve_regret = ts, regrets
    return res


def summarize(strategy: str, n: int, d: int, N: int, seed: int,
              regrets: Sequence[float]) -> RegretSummary:
    r = np.asarray(regrets, dtype=np.float64)
    M = r.size
    stderr = float(r.std(ddof=1) / math.sqrt(M)) if M > 1 else 0.0
    q = np.quantile(r, QUANTILES)
    return RegretSummary(strategy, int(n), int(d), int(N), M, float(r.mean()), stderr,
                         float(r.min()), float(r.max()), float(q[0]), float(q[1]), float(q[2]),
                         int(seed))


def _curve_summary(results: list[TrialResult]) -> dict:
    ts = results[0].curve_t
    R = np.vstack([r.curve_regret for r in results])
    defined = np.isfinite(R).sum(axis=0)
    with np.errstate(invalid="ignore"):
        mean = np.where(defined > 0, np.nansum(R, axis=0) / np.maximum(defined, 1), np.nan)
        sq = np.nansum((R - mean) ** 2, axis=0)
        stderr = np.where(defined > 1, np.sqrt(sq / np.maximum(defined - 1, 1) / np.maximum(defined, 1)), 0.0)
    return {"t": ts, "mean": mean, "stderr": stderr, "defined": defined}


def run_trials(config: ExperimentConfig, n: int | None = None, threads: int = 1) -> list[TrialResult]:
    strategy = prepare_strategy(config)

    def one(i: int) -> TrialResult:
        return run_trial(config, i, n, strategy)

    if threads <= 1:
        return [one(i) for i in range(config.trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves trial order, so aggregation is order-fixed
        return list(pool.map(one, range(config.trials)))


def run_monte_carlo(config: ExperimentConfig, n: int | None = None, threads: int = 1) -> RegretSummary:
    if n is None:
        horizons = config.stopping.horizons()
        if isinstance(config.source, BlockSchedule):
            horizons = [config.source.n]
        elif len(horizons) != 1:
            raise ValueError("an explicit schedule needs one run per horizon; pass n")
        n = horizons[0]
    results = run_trials(config, n, threads)
    summary = summarize(config.strategy.display, n, config.d, config.N, config.seed,
                        [r.regret for r in results])
    if config.curve:
        summary.curve = _curve_summary(results)
    return summary


def run_experiment(config: ExperimentConfig, threads: int = 1) -> list[RegretSummary]:
    """One summary per horizon of the stopping rule."""
    if isinstance(config.source, BlockSchedule):
        return [run_monte_carlo(config, config.source.n, threads)]
    return [run_monte_carlo(config, n, threads) for n in config.stopping.horizons()]


def fit_loglog_slope(ns: Sequence[float], means: Sequence[float]) -> float | None:
    """OLS slope of ln(mean) on ln(n), skipping zero means; None if < 2 points remain."""
    ns = np.asarray(ns, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    keep = means > 0
    if np.unique(ns[keep]).size < 2:
        return None
    x, y = np.log(ns[keep]), np.log(means[keep])
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


@dataclass
class SweepResult:
    summaries: list[RegretSummary]
    slopes: dict[tuple[str, int, int], float | None]


def scaling_sweep(configs: Sequence[ExperimentConfig], threads: int = 1) -> SweepResult:
    if not configs:
        raise ValueError("sweep grid is empty")
    summaries: list[RegretSummary] = []
    for cfg in configs:
        summaries.extend(run_experiment(cfg, threads))
    groups: dict[tuple[str, int, int], list[RegretSummary]] = {}
    for s in summaries:
        groups.setdefault((s.strategy, s.d, s.N), []).append(s)
    slopes = {k: fit_loglog_slope([s.n for s in g], [s.mean for s in g]) for k, g in groups.items()}
    return SweepResult(summaries, slopes)


def sweep_over_n(config: ExperimentConfig, ns: Sequence[int],
                 strategies: Sequence[StrategySpec] | None = None) -> list[ExperimentConfig]:
    """Grid of configs sharing a model: one per (strategy, n)."""
    strategies = strategies or [config.strategy]
    return [replace(config, strategy=s, stopping=ExplicitSchedule(tuple(ns))) for s in strategies]
