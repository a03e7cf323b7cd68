"""Sample-size and level planners for single- and multilevel Monte Carlo.

Two families of planners are provided.  The dimension-dependent planners use
the growth of type constants of the discretization spaces (exponents a0, a1
and constant C_tau of :class:`~banachmc.rademacher.SpaceSpec`).  The
Minkowski planners apply to L^p-valued variables with extra integrability
q_tilde and a strong rate of the form beta(r) = b0 + b1 / r.

Every planner returns an :class:`AllocationPlan`; the function
:func:`plan_error_bound` recomputes the analytic error bound that the plan
was designed to keep below the tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from .errors import InvalidArgumentError, UnsupportedRegimeError
from .rademacher import SpaceSpec, conjugate, kahane_K_q1, khintchine_B

__all__ = [
    "RateModel",
    "AllocationPlan",
    "ceil_int",
    "choose_finest_level",
    "slmc_samples",
    "slmc_plan",
    "choose_r_dim_dep",
    "cost_case_dim_dep",
    "mlmc_plan_dim_dep",
    "choose_r_minkowski",
    "mlmc_plan_minkowski",
    "predicted_cost_exponent",
    "plan_error_bound",
    "level_sum",
    "level_sum_asymptote",
]

_MAX_LEVEL = 200
_REL = 1e-12


def ceil_int(x: float) -> int:
    """Ceiling that ignores floating-point noise just above an integer.

    For example 32**0.6 evaluates to 8.000000000000002, whose ceiling is 8.
    """
    if not math.isfinite(x):
        raise InvalidArgumentError(f"cannot take the ceiling of {x}")
    r = round(x)
    if r != 0 and abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=_REL, abs_tol=_REL)


@dataclass(frozen=True)
class RateModel:
    """Bias rate alpha, strong rate beta (constant or b0 + b1/r), cost rate gamma.

    Levels run from ``level_min`` to L, with dimensions N_l = ceil(A^l) unless
    ``n_of_level`` is given.
    """

    alpha: float
    gamma: float
    C_alpha: float = 1.0
    C_gamma: float = 1.0
    beta: Optional[float] = None
    b0: Optional[float] = None
    b1: Optional[float] = None
    C_beta: float = 1.0
    A: float = 2.0
    level_min: int = 1
    n_of_level: Optional[Callable[[int], int]] = None

    def __post_init__(self):
        if self.alpha <= 0 or self.gamma <= 0 or self.C_alpha <= 0 or self.C_gamma <= 0:
            raise InvalidArgumentError("alpha, gamma, C_alpha and C_gamma must be positive")
        if self.C_beta <= 0:
            raise InvalidArgumentError("C_beta must be positive")
        if self.A <= 1:
            raise InvalidArgumentError("level growth factor A must exceed 1")
        if self.level_min < 1:
            raise InvalidArgumentError("level_min must be at least 1")
        affine = self.b0 is not None or self.b1 is not None
        if affine and self.beta is not None:
            raise InvalidArgumentError("give either a constant beta or (b0, b1), not both")
        if affine:
            if self.b0 is None or self.b1 is None:
                raise InvalidArgumentError("affine strong rate needs both b0 and b1")
            if self.b1 <= 0:
                raise InvalidArgumentError("b1 must be positive")
        elif self.beta is None:
            raise InvalidArgumentError("a strong rate (beta or b0, b1) is required")
        elif self.beta <= 0:
            raise InvalidArgumentError("beta must be positive")

    @property
    def beta_kind(self) -> str:
        return "constant" if self.beta is not None else "affine_in_inv_r"

    def beta_of(self, r: float) -> float:
        if self.beta is not None:
            return self.beta
        return self.b0 + self.b1 / r

    def N(self, level: int) -> int:
        if self.n_of_level is not None:
            return int(self.n_of_level(level))
        return ceil_int(self.A ** level)

    def levels(self, L: int) -> List[int]:
        return list(range(self.level_min, L + 1))


@dataclass
class AllocationPlan:
    """Output of a planner: exponent r, finest level L and samples per level."""

    regime: str
    r: float
    r_conj: float
    L: int
    M: List[int]
    predicted_cost: float
    cost_case: str
    levels: List[int] = field(default_factory=list)
    N: List[int] = field(default_factory=list)
    eps: float = float("nan")
    bundle: float = float("nan")
    sampling_constant: float = float("nan")
    family: str = "dim_dep"
    strong_rate: float = float("nan")
    a0: float = 0.0

    def __post_init__(self):
        if self.L < 1 or not self.M or any(m < 1 for m in self.M):
            raise InvalidArgumentError("a plan needs L >= 1 and positive sample sizes")
        if not self.levels:
            self.levels = list(range(self.L - len(self.M) + 1, self.L + 1))

    def as_record(self) -> dict:
        return {
            "regime": self.regime,
            "r": self.r,
            "L": self.L,
            "M_list": ";".join(str(m) for m in self.M),
            "predicted_cost": self.predicted_cost,
            "case_label": self.cost_case,
        }


def choose_finest_level(eps: float, rate: RateModel, constant_bundle: float) -> int:
    """Smallest L >= level_min with N_L^(-alpha) * constant_bundle < eps."""
    if not 0.0 < eps <= 0.5:
        raise InvalidArgumentError(f"tolerance must lie in (0, 1/2], got {eps}")
    if constant_bundle <= 0:
        raise InvalidArgumentError("constant bundle must be positive")
    for L in range(rate.level_min, _MAX_LEVEL + 1):
        if rate.N(L) ** (-rate.alpha) * constant_bundle < eps:
            return L
    raise InvalidArgumentError("no admissible finest level below the level cap")


def _slmc_exponent_conj(alpha: float, spec: SpaceSpec) -> float:
    if alpha >= spec.a1:
        return spec.q_bar_conj
    if spec.p <= 1.0:
        raise UnsupportedRegimeError("alpha < a1 requires a Rademacher type p > 1")
    return spec.p_conj


def slmc_samples(N: int, alpha: float, spec: SpaceSpec) -> int:
    """M = ceil(N^(a0 + r'(alpha - a1))) with r' = q_bar' if alpha >= a1, else p'."""
    rc = _slmc_exponent_conj(alpha, spec)
    return ceil_int(float(N) ** (spec.a0 + rc * (alpha - spec.a1)))


def slmc_plan(eps: float, rate: RateModel, spec: SpaceSpec, C_stab: float = 1.0,
              rates_only: bool = False) -> AllocationPlan:
    """Single-level plan: finest level L and sample size M_L."""
    sampling = 2.0 * kahane_K_q1(spec.q) * C_stab * math.sqrt(spec.C_tau)
    bundle = rate.C_alpha if rates_only else rate.C_alpha + sampling
    L = choose_finest_level(eps, rate, bundle)
    N_L = rate.N(L)
    M = slmc_samples(N_L, rate.alpha, spec)
    rc = _slmc_exponent_conj(rate.alpha, spec)
    _, _, label = predicted_cost_exponent("slmc", rate, spec=spec)
    return AllocationPlan(
        regime="slmc", r=_from_conj(rc), r_conj=rc, L=L, M=[M],
        predicted_cost=rate.C_gamma * N_L ** rate.gamma * M, cost_case=label,
        levels=[L], N=[N_L], eps=eps, bundle=bundle, sampling_constant=sampling,
        family="dim_dep", strong_rate=spec.a1, a0=spec.a0)


def _from_conj(rc: float) -> float:
    return conjugate(rc)


def _r_table(lo_conj: float, hi_conj: float, t: float, alpha: float, strong: float) -> float:
    """Shared five-row table: r' in [lo_conj, hi_conj]."""
    if t < lo_conj or _close(t, lo_conj):
        return lo_conj
    ge = alpha >= strong or _close(alpha, strong)
    if t < hi_conj or _close(t, hi_conj):
        return lo_conj if ge else t
    if ge:
        return lo_conj
    if math.isinf(hi_conj):
        raise UnsupportedRegimeError("branch requires a finite conjugate exponent")
    return hi_conj


def choose_r_dim_dep(p: float, q_bar: float, t: float, alpha: float, beta_plus_a1: float) -> float:
    """Optimal conjugate exponent r' in [q_bar', p'] for the dimension-dependent bound."""
    qc, pc = conjugate(q_bar), conjugate(p)
    if qc > pc:
        raise InvalidArgumentError("need q_bar' <= p', i.e. p <= q_bar")
    return _r_table(qc, pc, t, alpha, beta_plus_a1)


def choose_r_minkowski(q: float, q_hat: float, t: float, alpha: float, b0_plus_b1: float) -> float:
    """Optimal conjugate exponent r' in [q_hat', q'] for the Minkowski bound."""
    if not 1.0 < q < 2.0:
        raise InvalidArgumentError("optimizing r requires q in (1, 2)")
    if q_hat < q:
        raise InvalidArgumentError("need q_hat >= q")
    return _r_table(conjugate(q_hat), conjugate(q), t, alpha, b0_plus_b1)


def cost_case_dim_dep(lo_conj: float, hi_conj: float, t: float, alpha: float,
                      strong: float) -> Tuple[str, float, float]:
    """Six-case complexity table.  Returns (label, eps-exponent, log power).

    The exponent returned here is the second term only; callers take the
    maximum with gamma/alpha.  ``strong`` is beta + a1 (or b0 + b1) and the
    numerator gamma + a0 equals t * strong.
    """
    num = t * strong
    ge = alpha >= strong or _close(alpha, strong)
    if _close(t, lo_conj):
        return "t=lo", lo_conj, lo_conj + 1.0
    if t < lo_conj:
        return "t<lo", lo_conj, 0.0
    if t < hi_conj or _close(t, hi_conj):
        if ge:
            return "mid,alpha>=strong", lo_conj + (num - strong * lo_conj) / alpha, 0.0
        return "mid,alpha<strong", t, t + 1.0
    if ge:
        return "high,alpha>=strong", lo_conj + (num - strong * lo_conj) / alpha, 0.0
    return "high,alpha<strong", hi_conj + (num - strong * hi_conj) / alpha, 0.0


def _fixed_r_case(rc: float, t: float, alpha: float, strong: float) -> Tuple[str, float, float]:
    """Complexity for a fixed r': three cases comparing r' with t."""
    num = t * strong
    if _close(rc, t):
        return "fixed r'=t", rc, rc + 1.0
    if rc > t:
        return "fixed r'>t", rc, 0.0
    return "fixed r'<t", rc + (num - strong * rc) / alpha, 0.0


def _combine(gamma_over_alpha, case):
    label, x, logp = case
    if gamma_over_alpha > x and not _close(gamma_over_alpha, x):
        return gamma_over_alpha, 0.0, label
    return x, logp, label


def predicted_cost_exponent(regime: str, rate: RateModel, spec: Optional[SpaceSpec] = None,
                            q: Optional[float] = None, q_tilde: Optional[float] = None,
                            r_conj: Optional[float] = None) -> Tuple[float, float, str]:
    """Asymptotic cost exponent: cost ~ eps^(-exponent) |log eps|^(log_power).

    ``regime`` is one of ``slmc``, ``mlmc_dim_dep`` or ``mlmc_minkowski``.
    Passing ``r_conj`` evaluates the cost of a fixed (non-optimized) r'.
    """
    ga = rate.gamma / rate.alpha
    if regime == "slmc":
        if spec is None:
            raise InvalidArgumentError("slmc exponent needs a SpaceSpec")
        rc = _slmc_exponent_conj(rate.alpha, spec)
        label = "alpha>=a1" if rate.alpha >= spec.a1 else "alpha<a1"
        x = rc + (rate.gamma + spec.a0 - spec.a1 * rc) / rate.alpha
        return _combine(ga, (label, x, 0.0))
    if regime == "mlmc_dim_dep":
        if spec is None or rate.beta is None:
            raise InvalidArgumentError("dimension-dependent exponent needs a SpaceSpec and constant beta")
        strong = rate.beta + spec.a1
        t = (rate.gamma + spec.a0) / strong
        if r_conj is not None:
            return _combine(ga, _fixed_r_case(r_conj, t, rate.alpha, strong))
        return _combine(ga, cost_case_dim_dep(spec.q_bar_conj, spec.p_conj, t, rate.alpha, strong))
    if regime == "mlmc_minkowski":
        if q is None:
            raise InvalidArgumentError("Minkowski exponent needs q")
        qt = q if q_tilde is None else q_tilde
        if q >= 2.0:
            beta = rate.beta_of(2.0)
            if r_conj is not None and not _close(r_conj, 2.0):
                raise InvalidArgumentError("for q >= 2 the exponent r is fixed to 2")
            if _close(beta, rate.gamma / 2.0):
                case = ("beta=gamma/2", 2.0, 3.0)
            elif beta > rate.gamma / 2.0:
                case = ("beta>gamma/2", 2.0, 0.0)
            else:
                case = ("beta<gamma/2", 2.0 + (rate.gamma - 2.0 * beta) / rate.alpha, 0.0)
            return _combine(ga, case)
        b0, b1 = _affine(rate)
        strong = b0 + b1
        t = (rate.gamma + b1) / strong
        if r_conj is not None:
            return _combine(ga, _fixed_r_case(r_conj, t, rate.alpha, strong))
        q_hat = min(qt, 2.0)
        return _combine(ga, cost_case_dim_dep(conjugate(q_hat), conjugate(q), t, rate.alpha, strong))
    raise InvalidArgumentError(f"unknown regime {regime!r}")


def _affine(rate: RateModel) -> Tuple[float, float]:
    if rate.beta is not None:
        return rate.beta, 0.0
    return rate.b0, rate.b1


def level_sum(rate: RateModel, L: int, exponent: float) -> float:
    """S = sum over levels of N_l^exponent."""
    return math.fsum(float(rate.N(l)) ** exponent for l in rate.levels(L))


def level_sum_asymptote(rate: RateModel, L: int, exponent: float) -> float:
    """Leading behaviour of the level sum: 1, L or N_L^exponent."""
    if _close(exponent, 0.0):
        return float(len(rate.levels(L)))
    if exponent < 0.0:
        return 1.0
    return float(rate.N(L)) ** exponent


def _multilevel_samples(rate: RateModel, L: int, rc: float, strong_r: float, a0: float):
    """M_l = ceil(N_L^(alpha r') S^r' N_l^(-((strong + gamma) r' - a0)/(r' + 1))).

    ``strong_r`` is beta + a1 for the dimension-dependent bound (with a0 the
    growth exponent) or beta(r) with a0 = 0 for the Minkowski bound.
    """
    levels = rate.levels(L)
    N = [rate.N(l) for l in levels]
    e_S = (rate.gamma + a0 - strong_r * rc) / (rc + 1.0)
    S = level_sum(rate, L, e_S)
    e_M = -((strong_r + rate.gamma) * rc - a0) / (rc + 1.0)
    log_front = rate.alpha * rc * math.log(N[-1]) + rc * math.log(S)
    M = [ceil_int(math.exp(log_front + e_M * math.log(n))) for n in N]
    cost = math.fsum(rate.C_gamma * float(n) ** rate.gamma * m for n, m in zip(N, M))
    return levels, N, M, cost


def mlmc_plan_dim_dep(eps: float, rate: RateModel, spec: SpaceSpec, rates_only: bool = False,
                      r_conj: Optional[float] = None) -> AllocationPlan:
    """Multilevel plan with dimension-dependent type constants (constant beta)."""
    if rate.beta is None:
        raise InvalidArgumentError("dimension-dependent planner needs a constant beta")
    strong = rate.beta + spec.a1
    t = (rate.gamma + spec.a0) / strong
    if r_conj is None:
        rc = choose_r_dim_dep(spec.p, spec.q_bar, t, rate.alpha, strong)
    else:
        rc = float(r_conj)
        if rc < spec.q_bar_conj - 1e-12 or rc > spec.p_conj + 1e-12:
            raise InvalidArgumentError("r' must lie in [q_bar', p']")
    sampling = 2.0 * kahane_K_q1(spec.q) * rate.C_beta * math.sqrt(spec.C_tau)
    bundle = rate.C_alpha if rates_only else rate.C_alpha + sampling
    L = choose_finest_level(eps, rate, bundle)
    levels, N, M, cost = _multilevel_samples(rate, L, rc, strong, spec.a0)
    _, _, label = predicted_cost_exponent("mlmc_dim_dep", rate, spec=spec, r_conj=r_conj)
    return AllocationPlan(
        regime="mlmc", r=_from_conj(rc), r_conj=rc, L=L, M=M, predicted_cost=cost,
        cost_case=label, levels=levels, N=N, eps=eps, bundle=bundle,
        sampling_constant=sampling, family="dim_dep", strong_rate=strong, a0=spec.a0)


def mlmc_plan_minkowski(eps: float, rate: RateModel, q: float, q_tilde: Optional[float] = None,
                        rates_only: bool = False, r_conj: Optional[float] = None) -> AllocationPlan:
    """Multilevel plan for L^p-valued variables with extra integrability q_tilde.

    For q >= 2 the exponent r = 2 is fixed; for q in (1, 2) r' is optimized
    over [q_hat', q'] unless ``r_conj`` is given.
    """
    qt = q if q_tilde is None else q_tilde
    if qt < q:
        raise InvalidArgumentError("need q_tilde >= q")
    if not q > 1.0:
        raise InvalidArgumentError("q must exceed 1")
    if q >= 2.0:
        rc = 2.0
        if r_conj is not None and not _close(r_conj, 2.0):
            raise InvalidArgumentError("for q >= 2 the exponent r is fixed to 2")
        Bq = khintchine_B(q)
    else:
        q_hat = min(qt, 2.0)
        b0, b1 = _affine(rate)
        t = (rate.gamma + b1) / (b0 + b1)
        if r_conj is None:
            rc = choose_r_minkowski(q, q_hat, t, rate.alpha, b0 + b1)
        else:
            rc = float(r_conj)
            if rc < conjugate(q_hat) - 1e-12 or rc > conjugate(q) + 1e-12:
                raise InvalidArgumentError("r' must lie in [q_hat', q']")
        Bq = 1.0
    r = _from_conj(rc)
    beta_r = rate.beta_of(r)
    if beta_r <= 0:
        raise UnsupportedRegimeError(f"strong rate beta(r) = {beta_r} is not positive")
    sampling = 2.0 * Bq * rate.C_beta
    bundle = rate.C_alpha if rates_only else rate.C_alpha + sampling
    L = choose_finest_level(eps, rate, bundle)
    levels, N, M, cost = _multilevel_samples(rate, L, rc, beta_r, 0.0)
    _, _, label = predicted_cost_exponent("mlmc_minkowski", rate, q=q, q_tilde=qt,
                                          r_conj=r_conj if q < 2.0 else None)
    return AllocationPlan(
        regime="mlmc", r=r, r_conj=rc, L=L, M=M, predicted_cost=cost, cost_case=label,
        levels=levels, N=N, eps=eps, bundle=bundle, sampling_constant=sampling,
        family="minkowski", strong_rate=beta_r, a0=0.0)


def plan_error_bound(plan: AllocationPlan, C_alpha: float, alpha: float) -> float:
    """Analytic error bound of a plan.

    C_alpha N_L^-alpha + c * sum_l M_l^(-1/r') N_l^(a0/r' - s), with c the
    sampling constant of the plan and s its strong rate (beta + a1, beta(r),
    or a1 for a single-level plan).
    """
    rc = plan.r_conj
    bias = C_alpha * float(plan.N[-1]) ** (-alpha)
    terms = [float(m) ** (-1.0 / rc) * float(n) ** (plan.a0 / rc - plan.strong_rate)
             for m, n in zip(plan.M, plan.N)]
    return bias + plan.sampling_constant * math.fsum(terms)
