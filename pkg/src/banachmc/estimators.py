"""Single-level and multilevel Monte Carlo estimators and error measurement.

Samples are handled in batches of coefficient vectors.  Randomness comes from
numpy generators seeded by ``SeedSequence([seed, *keys])``: replicate k and
level l own the stream ``stream(seed, k, l)`` and sample j is its j-th draw,
so smaller sample sizes reuse prefixes of the same stream and results do not
depend on how the work is split.
"""
from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass, field
from typing import Callable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .allocation import AllocationPlan
from .errors import EvaluationError, InvalidArgumentError
from .function_spaces import NodalTensorFn, Partition, PiecewiseConstantFn, PiecewiseLinearFn

__all__ = [
    "stream",
    "experiment_key",
    "LevelSampler",
    "ParametricLevelSampler",
    "EstimatorOutput",
    "ErrorMeasurement",
    "slmc_estimate",
    "mlmc_estimate",
    "second_moment_slmc",
    "second_moment_mlmc",
    "replicate_error",
    "fit_rate_loglog",
]

# samples per batch are chosen so that a batch holds about this many numbers
_BATCH_ENTRIES = 1 << 21


def experiment_key(name: str) -> int:
    """Stable integer key of an experiment identifier."""
    return zlib.crc32(name.encode("utf-8"))


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the tuple (seed, *keys)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))


class LevelSampler:
    """Level-indexed random functions X_l with coupled pairs (X_l, X_{l-1}).

    Subclasses implement ``level_space``, ``draw`` (random parameters) and
    ``values`` (coefficients of X_l for an array of parameters).  X_0 is the
    zero function.
    """

    basis = "nodal"

    def level_space(self, level: int) -> Partition:
        raise NotImplementedError

    def draw(self, rng: np.random.Generator, count: int):
        raise NotImplementedError

    def values(self, level: int, params) -> np.ndarray:
        raise NotImplementedError

    def make_function(self, partition: Partition, coeffs):
        if self.basis == "nodal":
            return PiecewiseLinearFn(partition, coeffs)
        return PiecewiseConstantFn(partition, coeffs)

    def sample(self, level: int, seed: int):
        """X_level for the parameter drawn from ``seed``."""
        params = self.draw(stream(seed), 1)
        return self.make_function(self.level_space(level), self.values(level, params)[0])

    def coupled_sample(self, level: int, seed: int):
        """(X_level, X_{level-1}) from one parameter; X_0 is zero (on the level-1 mesh)."""
        params = self.draw(stream(seed), 1)
        fine = self.make_function(self.level_space(level), self.values(level, params)[0])
        if level <= 1:
            return fine, fine * 0.0
        coarse = self.make_function(self.level_space(level - 1), self.values(level - 1, params)[0])
        return fine, coarse


class ParametricLevelSampler(LevelSampler):
    """Sampler whose randomness is one uniform parameter y in (0, 1) per sample.

    ``values_fn(y_array, partition)`` returns coefficients with one row per y.
    """

    def __init__(self, values_fn: Callable, level_map: Union[Mapping[int, Partition], Callable],
                 basis: str = "nodal"):
        if basis not in ("nodal", "cell"):
            raise InvalidArgumentError(f"unknown basis {basis!r}")
        self._values = values_fn
        self._map = level_map
        self.basis = basis

    def level_space(self, level: int) -> Partition:
        if callable(self._map):
            return self._map(level)
        try:
            return self._map[level]
        except KeyError:
            raise InvalidArgumentError(f"level {level} is not in the level map") from None

    def draw(self, rng, count):
        y = rng.random(count)
        # y = 0 has probability 2^-53; map it into the open interval
        return np.where(y == 0.0, 0.5 ** 54, y)

    def values(self, level, params):
        v = np.asarray(self._values(np.asarray(params), self.level_space(level)), dtype=float)
        bad = ~np.isfinite(v)
        if np.any(bad):
            j = int(np.argwhere(bad)[0][0])
            raise EvaluationError(f"non-finite sample at level {level}, sample {j}", index=(level, j))
        return v


@dataclass
class EstimatorOutput:
    estimate: object
    plan: Optional[AllocationPlan]
    samples_drawn: List[int]
    wall_cost: float
    wall_seconds: float = 0.0


@dataclass
class ErrorMeasurement:
    per_replicate_errors: np.ndarray
    q_outer: float
    aggregated: float = field(init=False)

    def __post_init__(self):
        e = np.asarray(self.per_replicate_errors, dtype=float)
        if e.ndim != 1 or e.size < 1 or np.any(e < 0):
            raise InvalidArgumentError("need a non-empty vector of non-negative errors")
        self.per_replicate_errors = e
        self.aggregated = aggregate(e, self.q_outer)


def aggregate(errors, q_outer: float) -> float:
    """(mean of errors^q)^(1/q), scaled to avoid overflow."""
    e = np.asarray(errors, dtype=float)
    m = e.max(initial=0.0)
    if m == 0.0:
        return 0.0
    return float(m * np.mean((e / m) ** q_outer) ** (1.0 / q_outer))


def _batches(count: int, width: int):
    size = max(1, _BATCH_ENTRIES // max(width, 1))
    for start in range(0, count, size):
        yield start, min(count, start + size)


def _level_sum(sampler: LevelSampler, level: int, coarse: Optional[int], M: int,
               rng: np.random.Generator, moment: int):
    """Sum over M coupled samples of X_l - X_coarse (or their tensor squares)."""
    fine_part = sampler.level_space(level)
    width = fine_part.n_cells + 1
    acc = None
    for a, b in _batches(M, width if moment == 1 else width * 8):
        params = sampler.draw(rng, b - a)
        F = sampler.values(level, params)
        if moment == 1:
            s = F.sum(axis=0)
        else:
            s = F.T @ F
        if coarse is not None:
            C = sampler.values(coarse, params)
            if moment == 1:
                s_c = C.sum(axis=0)
            else:
                s_c = C.T @ C
        else:
            s_c = None
        if acc is None:
            acc = [s, s_c]
        else:
            acc[0] = acc[0] + s
            if s_c is not None:
                acc[1] = acc[1] + s_c
    return acc


def _prolong(sampler, coeffs, part: Partition, finest: Partition, moment: int):
    if moment == 1:
        return sampler.make_function(part, coeffs).prolong(finest)
    return NodalTensorFn(part, coeffs, sampler.basis).prolong(finest)


def _zero_like(sampler, finest: Partition, moment: int):
    n = finest.n_cells + (1 if sampler.basis == "nodal" else 0)
    if moment == 1:
        return sampler.make_function(finest, np.zeros(n))
    return NodalTensorFn(finest, np.zeros((n, n)), sampler.basis)


def _single(sampler, level, M, seed, moment, key):
    if int(M) != M or M < 1:
        raise InvalidArgumentError(f"sample size must be a positive integer, got {M}")
    t0 = time.perf_counter()
    part = sampler.level_space(level)
    rng = stream(seed, *key, level)
    s, _ = _level_sum(sampler, level, None, int(M), rng, moment)
    if moment == 1:
        est = sampler.make_function(part, s / M)
    else:
        est = NodalTensorFn(part, s / M, sampler.basis)
    n = part.n_cells
    cost = float(M) * n ** moment
    return EstimatorOutput(est, None, [int(M)], cost, time.perf_counter() - t0)


def slmc_estimate(sampler: LevelSampler, level: int, M: int, seed: int,
                  key: Sequence[int] = ()) -> EstimatorOutput:
    """Average of M independent samples of X_level.

    ``key`` extends the seed (typically the replicate index); the samples
    are the first M draws of ``stream(seed, *key, level)``.
    """
    return _single(sampler, level, M, seed, 1, tuple(key))


def second_moment_slmc(sampler: LevelSampler, level: int, M: int, seed: int,
                       key: Sequence[int] = ()) -> EstimatorOutput:
    """Average of M tensor squares X (x) X; cost units M N^2."""
    return _single(sampler, level, M, seed, 2, tuple(key))


def _multi(sampler, plan: AllocationPlan, seed, moment, key):
    if not plan.regime.startswith("mlmc") and len(plan.M) != 1:
        raise InvalidArgumentError("a multilevel estimator needs a multilevel plan")
    t0 = time.perf_counter()
    levels = list(plan.levels)
    finest = sampler.level_space(levels[-1])
    total = _zero_like(sampler, finest, moment)
    cost = 0.0
    for i, (lev, M) in enumerate(zip(levels, plan.M)):
        coarse = levels[i - 1] if i > 0 else None
        part = sampler.level_space(lev)
        if coarse is not None and not part.refines(sampler.level_space(coarse)):
            raise InvalidArgumentError(f"level {lev} does not refine level {coarse}")
        rng = stream(seed, *key, lev)
        s, s_c = _level_sum(sampler, lev, coarse, int(M), rng, moment)
        term = _prolong(sampler, s / M, part, finest, moment)
        if s_c is not None:
            term = term - _prolong(sampler, s_c / M, sampler.level_space(coarse), finest, moment)
        total = total + term
        cost += float(M) * part.n_cells ** moment
    return EstimatorOutput(total, plan, [int(m) for m in plan.M], cost, time.perf_counter() - t0)


def mlmc_estimate(sampler: LevelSampler, plan: AllocationPlan, seed: int,
                  key: Sequence[int] = ()) -> EstimatorOutput:
    """Telescoping estimator sum_l mean(X_l - X_{l-1}), prolonged to the finest mesh.

    The coarsest level of the plan is paired with the zero function.
    Cost units are sum_l M_l N_l.
    """
    return _multi(sampler, plan, seed, 1, tuple(key))


def second_moment_mlmc(sampler: LevelSampler, plan: AllocationPlan, seed: int,
                       key: Sequence[int] = ()) -> EstimatorOutput:
    """Telescoping estimator of E[X (x) X]; cost units sum_l M_l N_l^2."""
    return _multi(sampler, plan, seed, 2, tuple(key))


def replicate_error(make_estimate: Callable[[int], object], exact, norm: Callable,
                    K: int, q_outer: float) -> ErrorMeasurement:
    """Errors norm(exact - estimate_k) for k = 0..K-1, aggregated with exponent q_outer.

    ``exact`` may be None, in which case ``norm`` receives the estimate alone
    (useful when the exact value is folded into the norm evaluation).
    """
    if int(K) != K or K < 1:
        raise InvalidArgumentError(f"K must be a positive integer, got {K}")
    if q_outer < 1:
        raise InvalidArgumentError("q_outer must be >= 1")
    errs = np.empty(int(K))
    for k in range(int(K)):
        est = make_estimate(k)
        try:
            errs[k] = norm(est) if exact is None else norm(exact - est)
        except (ArithmeticError, ValueError) as exc:
            raise type(exc)(f"replicate {k}: {exc}") from exc
    return ErrorMeasurement(errs, float(q_outer))


def fit_rate_loglog(xs, ys) -> Tuple[float, float]:
    """Least squares fit y ~ C x^(-rate); returns (C, rate)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise InvalidArgumentError("need at least two (x, y) pairs")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise InvalidArgumentError("log-log fit needs positive finite data")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise InvalidArgumentError("x values must not all coincide")
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(math.exp(intercept)), float(-slope)
