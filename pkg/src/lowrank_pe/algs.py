"""Oblivious samplers and recommendation rules.

Samplers decide which arm to pull from the round number and their own random
stream only; none of their methods accept rewards.  Recommenders consume
``(arm, reward)`` observations (plus the revealed kernel for the stochastic
kernel rule) and output the recommended arm at the stopping time.

Arms are 0-based.  Every argmax breaks ties toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matcore import DEFAULT_REL_TOL, SingularMatrixError, as_matrix, inv, lambda_min_sym
from .spanner import SpannerBasis, approx_spanner, coefficients, exact_spanner


class InsufficientDataError(RuntimeError):
    """A recommendation was requested before the rule is defined."""


class EstimatorError(ArithmeticError):
    """The exploration Gram matrix A_t is singular."""


# ----------------------------------------------------------------- samplers


@dataclass(frozen=True)
class UniformRoundRobin:
    """Arm (t - 1) mod N on round t."""

    N: int
    kind = "uniform_rr"

    def arm(self, t: int, rng=None) -> int:
        return (t - 1) % self.N

    def arms(self, n: int, rng=None, start: int = 1) -> np.ndarray:
        return (np.arange(start, start + n) - 1) % self.N

    def distribution(self) -> np.ndarray:
        return np.full(self.N, 1.0 / self.N)


@dataclass(frozen=True, eq=False)
class RandomSampler:
    """Independent draws from a fixed distribution p (uniform by default)."""

    N: int
    p: np.ndarray | None = None
    kind = "uniform_random"

    def __post_init__(self):
        if self.p is not None:
            p = np.asarray(self.p, dtype=np.float64)
            if p.shape != (self.N,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("exploration distribution must be a probability vector of length N")
            object.__setattr__(self, "p", p)

    def arm(self, t: int, rng: np.random.Generator) -> int:
        if self.p is None:
            return int(rng.integers(0, self.N))
        return int(rng.choice(self.N, p=self.p))

    def arms(self, n: int, rng: np.random.Generator, start: int = 1) -> np.ndarray:
        if self.p is None:
            return rng.integers(0, self.N, size=n)
        return rng.choice(self.N, size=n, p=self.p)

    def distribution(self) -> np.ndarray:
        return np.full(self.N, 1.0 / self.N) if self.p is None else self.p.copy()


@dataclass(frozen=True)
class SpannerRoundRobin:
    """Spanner arm i_s with s = t mod d, using i_d when s = 0."""

    indices: tuple[int, ...]
    kind = "spanner_rr"

    def arm(self, t: int, rng=None) -> int:
        return self.indices[(t - 1) % len(self.indices)]

    def arms(self, n: int, rng=None, start: int = 1) -> np.ndarray:
        idx = np.asarray(self.indices, dtype=np.intp)
        return idx[(np.arange(start, start + n) - 1) % idx.size]


Sampler = UniformRoundRobin | RandomSampler | SpannerRoundRobin


def schedule_arm(sampler: Sampler, t: int, rng: np.random.Generator | None = None) -> int:
    if t < 1:
        raise ValueError("rounds are numbered from 1")
    return sampler.arm(t, rng)


# ------------------------------------------------------------ EBA baseline


@dataclass
class EbaState:
    N: int
    sums: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.sums = np.zeros(self.N)
        self.counts = np.zeros(self.N, dtype=np.int64)

    def observe(self, arm: int, reward: float) -> None:
        self.sums[arm] += reward
        self.counts[arm] += 1

    def observe_batch(self, arms: np.ndarray, rewards: np.ndarray, kidx=None) -> None:
        self.sums += np.bincount(arms, weights=rewards, minlength=self.N)
        self.counts += np.bincount(arms, minlength=self.N)

    def recommend(self) -> int:
        return eba_recommend(self)


def eba_recommend(state: EbaState) -> int:
    if np.any(state.counts == 0):
        missing = int(np.flatnonzero(state.counts == 0)[0])
        raise InsufficientDataError(f"arm {missing} has never been pulled")
    return int(np.argmax(state.sums / state.counts))


# ------------------------------------------------- stochastic-kernel rule


def gram_matrix(U_t, p) -> np.ndarray:
    """A_t = sum_i p(i) u_i^T u_i."""
    U_t = as_matrix(U_t, "kernel")
    return U_t.T @ (np.asarray(p, dtype=np.float64)[:, None] * U_t)


def _gram_inverse(U_t, p) -> np.ndarray:
    try:
        return inv(gram_matrix(U_t, p), DEFAULT_REL_TOL)
    except SingularMatrixError as exc:
        raise EstimatorError(
            "exploration Gram matrix is singular: kernel rows under p do not span R^d"
        ) from exc


def estimate_seed(U_t, p, arm: int, reward: float) -> np.ndarray:
    """Unbiased seed estimate A_t^{-1} u_{t,I}^T x_t(I)."""
    U_t = as_matrix(U_t, "kernel")
    return _gram_inverse(U_t, p) @ U_t[arm] * reward


@dataclass
class Alg1State:
    """Running sums for the stochastic-kernel rule.

    ``support`` holds the possible kernels (K, N, d); batched observations
    refer to them by index, and A_t^{-1} is cached per support kernel.
    """

    support: np.ndarray
    p: np.ndarray
    t: int = field(init=False, default=0)
    sum_vhat: np.ndarray = field(init=False)
    sum_U: np.ndarray = field(init=False)
    _ainv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=np.float64)
        if self.support.ndim == 2:
            self.support = self.support[None]
        self.p = np.asarray(self.p, dtype=np.float64)
        _, N, d = self.support.shape
        self.sum_vhat = np.zeros(d)
        self.sum_U = np.zeros((N, d))
        self._ainv = np.stack([_gram_inverse(U, self.p) for U in self.support])

    def observe(self, U_t, arm: int, reward: float) -> None:
        U_t = as_matrix(U_t, "kernel")
        self.sum_vhat += estimate_seed(U_t, self.p, arm, reward)
        self.sum_U += U_t
        self.t += 1

    def observe_batch(self, arms: np.ndarray, rewards: np.ndarray, kidx: np.ndarray) -> None:
        rows = self.support[kidx, arms]
        vhat = np.einsum("tij,tj->ti", self._ainv[kidx], rows) * rewards[:, None]
        self.sum_vhat += vhat.sum(axis=0)
        counts = np.bincount(kidx, minlength=self.support.shape[0])
        self.sum_U += np.tensordot(counts.astype(np.float64), self.support, axes=1)
        self.t += len(arms)

    def recommend(self) -> int:
        return alg1_recommend(self)


def alg1_recommend(state: Alg1State) -> int:
    if state.t == 0:
        raise InsufficientDataError("no rounds observed yet")
    scores = (state.sum_U / state.t) @ (state.sum_vhat / state.t)
    return int(np.argmax(scores))


# --------------------------------------------------------- fixed-kernel rule


@dataclass
class Alg2State:
    """Per-spanner-arm reward sums; spanner position j tracks arm indices[j]."""

    U: np.ndarray
    basis: SpannerBasis
    sums: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    _pos: np.ndarray = field(init=False, repr=False)
    _W: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.U = as_matrix(self.U, "kernel")
        d = self.basis.d
        self.sums = np.zeros(d)
        self.counts = np.zeros(d, dtype=np.int64)
        self._pos = np.full(self.U.shape[0], -1, dtype=np.intp)
        self._pos[list(self.basis.indices)] = np.arange(d)
        self._W = coefficients(self.U, self.basis)

    def _positions(self, arms) -> np.ndarray:
        pos = self._pos[arms]
        if np.any(pos < 0):
            raise ValueError("observation for an arm outside the spanner")
        return pos

    def observe(self, arm: int, reward: float) -> None:
        j = int(self._positions(np.array([arm]))[0])
        self.sums[j] += reward
        self.counts[j] += 1

    def observe_batch(self, arms: np.ndarray, rewards: np.ndarray, kidx=None) -> None:
        pos = self._positions(arms)
        d = self.basis.d
        self.sums += np.bincount(pos, weights=rewards, minlength=d)
        self.counts += np.bincount(pos, minlength=d)

    def shortcut_means(self) -> np.ndarray:
        if np.any(self.counts == 0):
            j = int(np.flatnonzero(self.counts == 0)[0])
            raise InsufficientDataError(f"spanner arm {self.basis.indices[j]} has never been pulled")
        return self.sums / self.counts

    def estimated_seed(self) -> np.ndarray:
        return self.basis.V_inv @ self.shortcut_means()

    def recommend(self) -> int:
        return alg2_recommend(self.U, self)


def alg2_recommend(U, state: Alg2State) -> int:
    # u_j . (V^-1 l) = w_j . l with u_j = w_j V; spanner rows have exact unit w,
    # so with d = N the scores are the empirical means themselves.
    lhat = state.shortcut_means()
    W = state._W if U is state.U else coefficients(U, state.basis)
    return int(np.argmax(W @ lhat))


# -------------------------------------------------------------- diagnostics


def diagnostics(U_t, p, domain_rows) -> tuple[float, float]:
    """(alpha, lambda_min) of A_t: alpha = max_{a,b} a^T A_t^{-1} b over domain rows."""
    A = gram_matrix(U_t, p)
    try:
        A_inv = inv(A)
    except SingularMatrixError as exc:
        raise EstimatorError("exploration Gram matrix is singular") from exc
    D = as_matrix(domain_rows, "domain rows")
    alpha = float((D @ A_inv @ D.T).max())
    return alpha, lambda_min_sym(A)


def beta_bound(kernel_support: np.ndarray, seed_points: np.ndarray) -> float:
    """max ||u_{t,i}||_2 * max ||v_t||_2 over the model support."""
    rows = np.asarray(kernel_support).reshape(-1, np.asarray(kernel_support).shape[-1])
    return float(np.linalg.norm(rows, axis=1).max() * np.linalg.norm(seed_points, axis=1).max())


# ---------------------------------------------------------------- strategies


STRATEGY_NAMES = ("uniform_eba", "alg1", "alg2")


@dataclass(frozen=True)
class StrategySpec:
    """Configuration of one sampler + recommender pair.

    ``uniform_eba``: round-robin over all arms, empirical best arm.
    ``alg1``: random arms from ``probs`` (uniform if None), seed estimator.
    ``alg2``: round-robin over a spanner (``spanner`` = exact | approx).
    """

    name: str
    spanner: str = "exact"
    C: float = 2.0
    probs: tuple[float, ...] | None = None
    label: str = ""

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise ValueError(f"unknown strategy {self.name!r}; expected one of {STRATEGY_NAMES}")
        if self.spanner not in ("exact", "approx"):
            raise ValueError(f"spanner mode must be 'exact' or 'approx', got {self.spanner!r}")

    @property
    def display(self) -> str:
        if self.label:
            return self.label
        if self.name == "alg2" and self.spanner == "approx":
            return f"alg2_approx_C{self.C:g}"
        return self.name


@dataclass(frozen=True, eq=False)
class Strategy:
    spec: StrategySpec
    sampler: Sampler
    support: np.ndarray
    basis: SpannerBasis | None = None

    def new_state(self):
        if self.spec.name == "uniform_eba":
            return EbaState(self.support.shape[1])
        if self.spec.name == "alg1":
            return Alg1State(self.support, self.sampler.distribution())
        return Alg2State(self.support[0], self.basis)


def build_strategy(spec: StrategySpec, kernel_support: np.ndarray, fixed: bool = True) -> Strategy:
    support = np.asarray(kernel_support, dtype=np.float64)
    if support.ndim == 2:
        support = support[None]
    N = support.shape[1]
    if spec.name == "uniform_eba":
        return Strategy(spec, UniformRoundRobin(N), support)
    if spec.name == "alg1":
        probs = None if spec.probs is None else np.asarray(spec.probs)
        strat = Strategy(spec, RandomSampler(N, probs), support)
        strat.new_state()  # fail early on singular A_t
        return strat
    if not fixed or support.shape[0] != 1:
        raise ValueError("alg2 needs a fixed kernel")
    U = support[0]
    basis = exact_spanner(U) if spec.spanner == "exact" else approx_spanner(U, spec.C)
    return Strategy(spec, SpannerRoundRobin(basis.indices), support, basis)
