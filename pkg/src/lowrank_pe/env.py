"""Generative low-rank reward models.

A round draws a kernel ``U_t`` (N x d) and, independently, a seed vector
``v_t`` (length d); the reward vector is ``x_t = U_t @ v_t`` and must lie in
``[-1, 1]^N``.  Seed and kernel laws are small frozen dataclasses exposing
``mean()``, ``sample(rng, size)`` and the finite set of extreme points used
for validation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .matcore import as_matrix, as_vector

BOUND_TOL = 1e-12
PROB_TOL = 1e-12


class ModelViolationError(ValueError):
    """A reward vector left [-1, 1]^N."""


class ParameterError(ValueError):
    """Instance-generator parameters outside their admissible range."""


def _check_probs(probs: np.ndarray, what: str) -> None:
    if probs.ndim != 1 or np.any(probs < 0) or abs(math.fsum(probs) - 1.0) > PROB_TOL:
        raise ValueError(f"{what} probabilities must be non-negative and sum to 1")


# ---------------------------------------------------------------- seed laws


@dataclass(frozen=True, eq=False)
class PointMass:
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", as_vector(self.v, "point mass"))

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    def mean(self) -> np.ndarray:
        return self.v.copy()

    def extreme_points(self) -> np.ndarray:
        return self.v[None, :]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.broadcast_to(self.v, (size, self.dim)).copy()


@dataclass(frozen=True, eq=False)
class UniformBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lo, "box lower corner")
        hi = as_vector(self.hi, "box upper corner")
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box corners must have equal length and lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def mean(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def extreme_points(self) -> np.ndarray:
        # |U v| is convex in v, so the corners bound it; enumerated from the upper corner.
        pairs = list(zip(self.hi, self.lo))
        return np.array(list(itertools.product(*pairs)), dtype=np.float64)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * rng.random((size, self.dim))


@dataclass(frozen=True, eq=False)
class FiniteSupport:
    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        pts = as_matrix(self.points, "support points")
        p = as_vector(self.probs, "support probabilities")
        if p.shape[0] != pts.shape[0]:
            raise ValueError("one probability per support point is required")
        _check_probs(p, "seed support")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", p)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean(self) -> np.ndarray:
        return self.probs @ self.points

    def extreme_points(self) -> np.ndarray:
        return self.points[self.probs > 0]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.points[rng.choice(self.points.shape[0], size=size, p=self.probs)]


@dataclass(frozen=True, eq=False)
class SignedBasis:
    """Law on {+e_i, -e_i}: P(+e_i) = (1 + b_i eps)/(2k), P(-e_i) = (1 - b_i eps)/(2k).

    ``b`` has length k.  With ``dim > k`` the basis vectors are embedded in
    coordinates ``offset .. offset + k - 1`` of a longer vector.
    """

    b: np.ndarray
    eps: float
    dim: int = 0
    offset: int = 0

    def __post_init__(self):
        b = np.array(self.b, dtype=np.float64)
        if b.ndim != 1 or b.size == 0 or not np.all(np.abs(b) == 1.0):
            raise ParameterError("b must be a non-empty vector of +1/-1 entries")
        if not 0.0 < self.eps < 0.5:
            raise ParameterError(f"eps must lie in (0, 1/2), got {self.eps}")
        dim = self.dim or b.size
        if self.offset < 0 or self.offset + b.size > dim:
            raise ParameterError("embedding does not fit in the requested dimension")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "dim", dim)

    @property
    def k(self) -> int:
        return self.b.size

    @property
    def points(self) -> np.ndarray:
        pts = np.zeros((2 * self.k, self.dim))
        for i in range(self.k):
            pts[2 * i, self.offset + i] = 1.0
            pts[2 * i + 1, self.offset + i] = -1.0
        return pts

    @property
    def probs(self) -> np.ndarray:
        p = np.empty(2 * self.k)
        p[0::2] = (1.0 + self.b * self.eps) / (2 * self.k)
        p[1::2] = (1.0 - self.b * self.eps) / (2 * self.k)
        return p

    def mean(self) -> np.ndarray:
        v = np.zeros(self.dim)
        v[self.offset:self.offset + self.k] = self.b * self.eps / self.k
        return v

    def extreme_points(self) -> np.ndarray:
        return self.points

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.points[rng.choice(2 * self.k, size=size, p=self.probs)]


SeedDistribution = PointMass | UniformBox | FiniteSupport | SignedBasis


# -------------------------------------------------------------- kernel laws


@dataclass(frozen=True, eq=False)
class FixedKernel:
    U: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "U", as_matrix(self.U, "kernel"))

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape

    @property
    def support(self) -> np.ndarray:
        return self.U[None]

    @property
    def probs(self) -> np.ndarray:
        return np.ones(1)

    def mean(self) -> np.ndarray:
        return self.U.copy()

    def sample_index(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.zeros(size, dtype=np.intp)


@dataclass(frozen=True, eq=False)
class FiniteKernel:
    matrices: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        mats = np.array(self.matrices, dtype=np.float64)
        if mats.ndim != 3 or mats.shape[0] == 0:
            raise ValueError("kernel support must be a non-empty (K, N, d) stack")
        if not np.all(np.isfinite(mats)):
            raise ValueError("kernel support has non-finite entries")
        p = as_vector(self.probs, "kernel probabilities")
        if p.shape[0] != mats.shape[0]:
            raise ValueError("one probability per kernel matrix is required")
        _check_probs(p, "kernel support")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "probs", p)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrices.shape[1:]

    @property
    def support(self) -> np.ndarray:
        return self.matrices

    def mean(self) -> np.ndarray:
        return np.tensordot(self.probs, self.matrices, axes=1)

    def sample_index(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.matrices.shape[0], size=size, p=self.probs)


KernelDistribution = FixedKernel | FiniteKernel


# ------------------------------------------------------------------ models


@dataclass(frozen=True, eq=False)
class RewardModel:
    kernel: KernelDistribution
    seed: SeedDistribution
    name: str = ""

    def __post_init__(self):
        if self.kernel.shape[1] != self.seed.dim:
            raise ValueError(
                f"kernel has {self.kernel.shape[1]} columns but the seed has dimension {self.seed.dim}"
            )

    @property
    def N(self) -> int:
        return self.kernel.shape[0]

    @property
    def d(self) -> int:
        return self.kernel.shape[1]

    @property
    def is_fixed(self) -> bool:
        return isinstance(self.kernel, FixedKernel)


@dataclass(frozen=True)
class Violation:
    kernel_index: int
    seed_point: tuple[float, ...]
    arm: int
    value: float

    def __str__(self) -> str:
        return (
            f"kernel {self.kernel_index}, seed point {self.seed_point}: "
            f"arm {self.arm} has reward {self.value:g} outside [-1, 1]"
        )


def validate_model(model: RewardModel) -> Violation | None:
    """Return the first reward-range violation, or None when the model is valid."""
    pts = model.seed.extreme_points()
    for k, U in enumerate(model.kernel.support):
        for v in pts:
            x = U @ v
            bad = np.flatnonzero(np.abs(x) > 1.0 + BOUND_TOL)
            if bad.size:
                i = int(bad[0])
                return Violation(k, tuple(float(c) for c in v), i, float(x[i]))
    return None


def true_means(model: RewardModel) -> np.ndarray:
    return model.kernel.mean() @ model.seed.mean()


def sample_round(model: RewardModel, rng: np.random.Generator):
    """One round: returns (U_t, v_t, x_t)."""
    k = int(model.kernel.sample_index(rng, 1)[0])
    U = model.kernel.support[k]
    v = model.seed.sample(rng, 1)[0]
    x = U @ v
    if np.any(np.abs(x) > 1.0 + BOUND_TOL):
        i = int(np.argmax(np.abs(x)))
        raise ModelViolationError(f"sampled reward {x[i]:g} for arm {i} is outside [-1, 1]")
    return U, v, x


def sample_rounds(model: RewardModel, rng: np.random.Generator, n: int):
    """Kernel support indices (n,) and seed vectors (n, d) for n rounds."""
    kidx = model.kernel.sample_index(rng, n)
    seeds = model.seed.sample(rng, n)
    return kidx, seeds


def observed_rewards(model: RewardModel, kidx: np.ndarray, seeds: np.ndarray,
                     arms: np.ndarray) -> np.ndarray:
    """x_t(I_t) for each round, for the pulled arms only."""
    rows = model.kernel.support[kidx, arms]
    x = np.einsum("ij,ij->i", rows, seeds)
    if np.any(np.abs(x) > 1.0 + BOUND_TOL):
        t = int(np.argmax(np.abs(x)))
        raise ModelViolationError(
            f"round {t + 1}: reward {x[t]:g} for arm {int(arms[t])} is outside [-1, 1]"
        )
    return x


# ---------------------------------------------------------- stopping rules


@dataclass(frozen=True)
class FixedHorizon:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("horizon must be >= 1")

    def horizons(self) -> list[int]:
        return [self.n]

    def draw(self, rng: np.random.Generator, nominal: int) -> int:
        return nominal


@dataclass(frozen=True)
class Geometric:
    """Stopping signal arriving each round with probability 1/mean_n."""

    mean_n: float

    def __post_init__(self):
        if self.mean_n < 1:
            raise ValueError("mean stopping time must be >= 1")

    def horizons(self) -> list[int]:
        return [int(round(self.mean_n))]

    def draw(self, rng: np.random.Generator, nominal: int) -> int:
        return int(rng.geometric(1.0 / self.mean_n))


@dataclass(frozen=True)
class ExplicitSchedule:
    ns: tuple[int, ...]

    def __post_init__(self):
        if not self.ns or min(self.ns) < 1:
            raise ValueError("schedule needs at least one horizon, all >= 1")
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))

    def horizons(self) -> list[int]:
        return list(self.ns)

    def draw(self, rng: np.random.Generator, nominal: int) -> int:
        return nominal


StoppingRule = FixedHorizon | Geometric | ExplicitSchedule


# ------------------------------------------------------- instance builders


def hypercube_rows(d: int) -> np.ndarray:
    """All of {-1,+1}^d in lexicographic order with -1 < +1."""
    return np.array(list(itertools.product((-1.0, 1.0), repeat=d)))


def hypercube_index(b: Sequence[float]) -> int:
    idx = 0
    for bit in b:
        idx = 2 * idx + (1 if bit > 0 else 0)
    return idx


def make_hypercube_hard_instance(d: int, eps: float, b: Sequence[float]) -> RewardModel:
    if not 1 <= d <= 16:
        raise ParameterError("hypercube instance supports 1 <= d <= 16")
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"eps must lie in (0, 1/2), got {eps}")
    if len(b) != d:
        raise ParameterError("b must have length d")
    return RewardModel(FixedKernel(hypercube_rows(d)), SignedBasis(b, eps),
                       name=f"hypercube(d={d},eps={eps})")


@dataclass(frozen=True, eq=False)
class Phase:
    start: int  # first round, 1-based
    stop: int  # last round, inclusive
    model: RewardModel


@dataclass(frozen=True, eq=False)
class BlockSchedule:
    """Piecewise-stationary models over rounds 1..n."""

    phases: tuple[Phase, ...]
    n: int
    name: str = ""

    @property
    def N(self) -> int:
        return self.phases[0].model.N

    @property
    def d(self) -> int:
        return self.phases[0].model.d

    def phase_index(self, t: int) -> int:
        for j, ph in enumerate(self.phases):
            if ph.start <= t <= ph.stop:
                return j
        raise IndexError(f"round {t} is outside the schedule 1..{self.n}")

    def average_means(self, t: int) -> np.ndarray:
        """Mean reward vector averaged over rounds 1..t."""
        acc = np.zeros(self.N)
        for ph in self.phases:
            length = min(ph.stop, t) - ph.start + 1
            if length > 0:
                acc += length * true_means(ph.model)
        return acc / t


def make_block_instance(d: int, k: int, eps: float, n: int,
                        bs: Sequence[Sequence[float]]) -> BlockSchedule:
    """Block-cyclic hard instance: beta = d/k phases of n/beta rounds each.

    Arms are the rows of {-1,+1}^d.  In phase j the seed is a k-dimensional
    signed-basis law with sign vector ``bs[j]``, embedded in block j of the
    coordinates, so the phase mean seed is zero outside block j.
    """
    if k < 1 or d % k:
        raise ParameterError(f"d/k must be a positive integer (d={d}, k={k})")
    beta = d // k
    if n % beta:
        raise ParameterError(f"n={n} is not divisible by beta={beta}")
    if len(bs) != beta:
        raise ParameterError(f"need {beta} sign vectors, got {len(bs)}")
    if any(len(b) != k for b in bs):
        raise ParameterError(f"every sign vector must have length {k}")
    kernel = FixedKernel(hypercube_rows(d))
    span = n // beta
    phases = []
    for j, b in enumerate(bs):
        seed = SignedBasis(b, eps, dim=d, offset=j * k)
        phases.append(Phase(j * span + 1, (j + 1) * span,
                            RewardModel(kernel, seed, name=f"block{j + 1}")))
    return BlockSchedule(tuple(phases), n, name=f"block(d={d},k={k},eps={eps})")


def max_box_halfwidth(kernels: np.ndarray, center: np.ndarray) -> float:
    """Largest c such that the box center +/- c keeps every reward in [-1, 1]."""
    base = np.abs(kernels @ center)
    l1 = np.abs(kernels).sum(axis=-1)
    return float(np.min((1.0 - base) / l1))


def make_graded_gap_instance(N: int = 64, d: int = 4, gap_max: float = 0.1,
                             level: float = 0.2, spread: float = 0.5,
                             jitter: float = 0.0) -> RewardModel:
    """Fixed (or two-point) kernel with mean gaps spaced evenly in [0, gap_max].

    Arm 0 is the best arm, ``(1, 0, ..., 0)``.  Arm i has first coordinate
    ``1 - gap_i / level`` and its remaining coordinates are ``+/- spread``,
    cycling through the sign patterns, so every suboptimal arm sits at the
    same distance from the best arm in the noise-carrying directions.  The
    seed is uniform on the widest box around ``(level, 0, ..., 0)`` that keeps
    rewards in [-1, 1].  ``jitter > 0`` turns the kernel into an equal-weight
    mixture of ``U + jitter*S`` and ``U - jitter*S`` for a fixed sign matrix S.
    """
    if N < 2 or d < 2:
        raise ParameterError("need N >= 2 and d >= 2")
    if not 0 < gap_max <= 2 * level:
        raise ParameterError("gap_max must lie in (0, 2*level]")
    gaps = np.linspace(0.0, gap_max, N)
    patterns = hypercube_rows(d - 1)
    U = np.empty((N, d))
    U[:, 0] = 1.0 - gaps / level
    U[:, 1:] = spread * patterns[np.arange(N) % len(patterns)]
    U[0, 1:] = 0.0
    center = np.zeros(d)
    center[0] = level
    if jitter > 0:
        S = hypercube_rows(d)[(np.arange(N) * 7 + 3) % (2 ** d)]
        mats = np.stack([U + jitter * S, U - jitter * S])
        kernel: KernelDistribution = FiniteKernel(mats, np.array([0.5, 0.5]))
    else:
        mats = U[None]
        kernel = FixedKernel(U)
    c = max_box_halfwidth(mats, center)
    if c <= 0:
        raise ParameterError("no admissible seed noise for these parameters")
    return RewardModel(kernel, UniformBox(center - c, center + c),
                       name=f"graded(N={N},d={d},gap_max={gap_max})")


# ------------------------------------------------------------------ kernel CSV


def load_kernel_csv(path: str | Path) -> np.ndarray:
    """Read a kernel: one row per arm, d comma-separated reals, optional '#' header."""
    path = Path(path)
    try:
        U = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: malformed kernel CSV ({exc})") from exc
    if U.size == 0:
        raise ValueError(f"{path}: kernel CSV has no rows")
    return as_matrix(U, "kernel")


def save_kernel_csv(path: str | Path, U: np.ndarray, header: bool = True) -> None:
    U = as_matrix(U, "kernel")
    with open(path, "w") as fh:
        if header:
            fh.write("# " + ",".join(f"c{j + 1}" for j in range(U.shape[1])) + "\n")
        for row in U:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
