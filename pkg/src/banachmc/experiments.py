"""Desk-scale numerical experiments for the two test problems.

Rate studies estimate the Monte Carlo rate in M at a fixed (or continuous)
discretization; sweeps run single- or multilevel estimators over a list of
tolerances.  Every replicate k draws from ``stream(seed, key, k)`` with a key
derived from the experiment name, so results are reproducible and do not
depend on the thread count.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._kernel_sum import odd_power_sum, shifted_power_prefix_sums
from .allocation import (
    AllocationPlan,
    RateModel,
    mlmc_plan_minkowski,
    plan_error_bound,
    predicted_cost_exponent,
    slmc_samples,
)
from .errors import InvalidArgumentError
from .estimators import (
    aggregate,
    experiment_key,
    fit_rate_loglog,
    mlmc_estimate,
    second_moment_mlmc,
    second_moment_slmc,
    slmc_estimate,
    stream,
)
from .function_spaces import (
    PiecewiseLinearFn,
    gauss_legendre,
    make_partition,
    singular_rule,
    w1p_seminorm,
)
from .models import (
    BvpModel,
    FaModel,
    bvp_exact_mean,
    bvp_exact_mean_derivative,
    bvp_reference_second_moment,
    fa_exact_mean,
    fa_exact_second_moment,
    fa_second_moment_q_hat,
    make_level_sampler,
)
from .rademacher import SpaceSpec, conjugate, kahane_K_q1
from .tensor_norms import assemble_dual, injective_norm_multistart, weighted_norm

__all__ = [
    "RateStudy",
    "SweepRow",
    "SweepResult",
    "Moment2Fit",
    "bvp_rates",
    "fa_rates",
    "fa_moment2_rates",
    "bvp_bias_fit",
    "fa_bias_fit",
    "fa_moment2_fit",
    "slmc_sample_size",
    "slmc_bvp_sweep",
    "slmc_fa_sweep",
    "mlmc_fa_sweep",
    "mlmc_cost_sweep",
    "moment2_bvp_sweep",
    "moment2_fa_sweep",
    "injective_norm_check",
    "fit_cost_slope",
    "TABLE1",
    "TABLE2",
    "TABLE3",
    "TABLE4",
    "SCHEDULES",
]

# parameter sets of the four rate tables
TABLE1 = (1.1, 1.5, 1.9, 2.0)
TABLE2 = ((1.0, 1.5), (1.5, 1.5), (2.0, 2.0), (1.0, 2.0))
TABLE3 = tuple((p, q) for p in (1.0, 1.5, 2.0) for q in (1.1, 1.5))
TABLE4 = ((1.0, 1.5), (1.3, 2.0), (1.5, 1.1))
TABLE_M = (10, 100, 1000, 10000)
TABLE4_M = tuple(np.unique(np.round(np.logspace(2, 4, 6)).astype(int)).tolist())
SCHEDULES = ("hilbert", "type_p", "dim_dep", "minkowski")


@dataclass
class RateStudy:
    """Aggregated error versus sample size and the fitted rate."""

    label: str
    p: float
    q: float
    eta: float
    M: np.ndarray
    errors: np.ndarray
    fitted_rate: float
    fitted_C: float
    theory_rate: float
    K: int
    q_outer: float


@dataclass
class SweepRow:
    eps: float
    level_L: int
    M_list: Tuple[int, ...]
    err_measured: float
    err_bound: float
    cost_units: float
    wall_seconds: float
    r_used: float
    case_label: str


@dataclass
class SweepResult:
    label: str
    rows: List[SweepRow]
    C_alpha: float
    alpha: float
    cost_exponent: Optional[float] = None
    info: Dict[str, float] = field(default_factory=dict)


def _map_replicates(fn: Callable[[int], object], K: int, threads: int = 1) -> list:
    """[fn(0), ..., fn(K-1)] in order, optionally on a thread pool."""
    if threads <= 1 or K <= 1:
        return [fn(k) for k in range(K)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(K)))


def _uniforms(rng: np.random.Generator, n: int) -> np.ndarray:
    y = rng.random(n)
    return np.where(y == 0.0, 0.5 ** 54, y)


def _study(label, p, q, eta, Ms, E, theory, q_outer) -> RateStudy:
    Ms = np.asarray(Ms, dtype=float)
    errs = np.array([aggregate(E[:, j], q_outer) for j in range(E.shape[1])])
    C, rate = fit_rate_loglog(Ms, errs)
    return RateStudy(label, p, q, eta, Ms.astype(int), errs, rate, C, theory, E.shape[0], q_outer)


def _check_sizes(Ms):
    Ms = np.asarray(Ms)
    if Ms.ndim != 1 or Ms.size < 2 or np.any(Ms < 1) or np.any(np.diff(Ms) <= 0):
        raise InvalidArgumentError("sample sizes must be an increasing list of positive integers")
    return Ms.astype(np.int64)


# ------------------------------------------------------------ rate tables

def bvp_mc_error(y, p: float, eta: float, cells: int = 6, nodes: int = 4) -> float:
    """W^{1,p} seminorm of E[u] minus the average of the exact samples u_y.

    The derivative of the sample average is a sum of odd power kernels
    centred at the samples; the quadrature is split at every sample and
    graded toward it with a Gauss-Jacobi innermost cell.
    """
    y = np.sort(np.asarray(y, dtype=float))
    th = eta - 1.0
    x, w = singular_rule(y, -p * th, cells, nodes)
    g = bvp_exact_mean_derivative(x, eta) - (2.0 - eta) / y.size * odd_power_sum(x, y, th)
    return float(np.sum(w * np.abs(g) ** p) ** (1.0 / p))


def bvp_rates(p: float, Ms: Sequence[int] = TABLE_M, K: int = 50, seed: int = 0,
              eta: Optional[float] = None, threads: int = 1) -> RateStudy:
    """MC rate for the BVP mean at the continuous level, error in L^2(Omega; W^{1,p})."""
    model = BvpModel(p, eta)
    Ms = _check_sizes(Ms)
    key = experiment_key("rates_table1")

    def one(k):
        y = _uniforms(stream(seed, key, k), int(Ms[-1]))
        return [bvp_mc_error(y[:m], p, model.eta) for m in Ms]

    E = np.array(_map_replicates(one, K, threads))
    return _study("table1", p, 2.0, model.eta, Ms, E, 1.0 - 1.0 / p, 2.0)


def fa_mean_rule(p: float, eta: float, layers: int = 56, nodes: int = 8):
    """Quadrature on [0, 1] graded geometrically toward the singularity of E[u] at 0."""
    a = -p * (eta - 1.0) if eta > 1.0 else 0.0
    return singular_rule([0.0], a, layers, nodes, sigma=0.5)


def fa_rates(p: float, q: float, eta: Optional[float] = None, Ms: Sequence[int] = TABLE_M,
             K: int = 1000, seed: int = 0, threads: int = 1, label: str = "rates_table2") -> RateStudy:
    """MC rate for the FA mean at the continuous level, error in L^q(Omega; L^p).

    The theory rate is 1 - 1/q for the default (sharp) eta and 1 - 1/q_hat
    when eta is given.
    """
    model = FaModel(p, q, eta)
    Ms = _check_sizes(Ms)
    x, w = fa_mean_rule(p, model.eta)
    Eu = fa_exact_mean(x, model.eta)
    key = experiment_key(label)

    def one(k):
        y = _uniforms(stream(seed, key, k), int(Ms[-1]))
        avg = shifted_power_prefix_sums(x, y, model.eta, Ms) / Ms
        return (w @ np.abs(Eu[:, None] - avg) ** p) ** (1.0 / p)

    E = np.array(_map_replicates(one, K, threads))
    theory = 1.0 - 1.0 / (q if eta is None else model.q_hat)
    return _study(label.replace("rates_", ""), p, q, model.eta, Ms, E, theory, q)


def moment2_rule(n_h: int = 64, nodes: int = 4):
    """Composite Gauss-Legendre rule on the graded partition (k/n_h)^2."""
    P = make_partition(n_h, "graded")
    gx, gw = gauss_legendre(nodes)
    x = (P.nodes[:-1, None] + P.widths[:, None] * gx).ravel()
    w = (P.widths[:, None] * gw).ravel()
    return x, w


def fa_moment2_rates(p: float, q: float, Ms: Sequence[int] = TABLE4_M, K: int = 1000,
                     seed: int = 0, n_h: int = 64, nodes: int = 4, threads: int = 1) -> RateStudy:
    """MC rate for the FA second moment (eta = 1), error in L^q(Omega; L^p(I x I)).

    Samples u_y (x) u_y are evaluated exactly at the nodes of a tensor
    Gauss-Legendre rule on the graded product mesh.
    """
    model = FaModel.second_moment(p, q)
    Ms = _check_sizes(Ms)
    x, w = moment2_rule(n_h, nodes)
    W = np.outer(w, w)
    M2 = fa_exact_second_moment(x[:, None], x[None, :])
    key = experiment_key("rates_table4")

    def one(k):
        y = _uniforms(stream(seed, key, k), int(Ms[-1]))
        A = 1.0 / (x[:, None] + y[None, :])
        G = np.zeros((x.size, x.size))
        out, prev = [], 0
        for m in Ms:
            B = A[:, prev:m]
            G += B @ B.T
            prev = m
            out.append(float(np.sum(W * np.abs(M2 - G / m) ** p) ** (1.0 / p)))
        return out

    E = np.array(_map_replicates(one, K, threads))
    theory = 1.0 - 1.0 / fa_second_moment_q_hat(p, q)
    return _study("table4", p, q, model.eta, Ms, E, theory, q)


# ------------------------------------------------------------ bias fits

def _bvp_derivative_error(slopes, N: int, p: float, eta: float, nodes: int = 8) -> float:
    gx, gw = gauss_legendre(nodes)
    x = (np.arange(N)[:, None] + gx) / N
    d = bvp_exact_mean_derivative(x, eta) - np.asarray(slopes)[:, None]
    return float(np.sum(gw / N * np.abs(d) ** p) ** (1.0 / p))


def bvp_bias_fit(p: float, eta: Optional[float] = None, levels: Sequence[int] = range(3, 13)):
    """(C_alpha, alpha) with ||E[u]' - (I_h E[u])'||_{L^p} ~ C_alpha h^alpha on uniform meshes."""
    model = BvpModel(p, eta)
    b = []
    for l in levels:
        N = 2 ** l
        v = bvp_exact_mean(np.arange(N + 1) / N, model.eta)
        b.append(_bvp_derivative_error(np.diff(v) * N, N, p, model.eta))
    return fit_rate_loglog(2.0 ** np.asarray(levels), b)


def _fa_mean_antiderivative(x, eta):
    """int_0^x E[u], with E[u] the FA mean."""
    x = np.asarray(x, dtype=float)
    if eta == 1.0:
        return (x + 1.0) * np.log1p(x) - np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    c = (1.0 - eta) * (2.0 - eta)
    return ((x + 1.0) ** (2.0 - eta) - x ** (2.0 - eta) - 1.0) / c


def _fa_crossings(lo, hi, values, eta, iters: int = 60):
    """Points in [lo, hi] where the decreasing E[u] meets ``values`` (clipped to the ends)."""
    a, b = lo.copy(), hi.copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        above = fa_exact_mean(m, eta) > values
        a = np.where(above, m, a)
        b = np.where(above, b, m)
    return 0.5 * (a + b)


def _fa_piecewise_error(cell_values, partition, p: float, eta: float,
                        layers: int = 40, nodes: int = 8) -> float:
    """||E[u] - v||_{L^p} for a piecewise constant v on a uniform partition.

    Each cell is split where E[u] crosses the cell value, so the rule never
    straddles the kink of |E[u] - v|; the first cell is graded toward 0.
    """
    h = partition.h
    N = partition.n_cells
    v = np.asarray(cell_values, dtype=float)
    a = -p * (eta - 1.0) if eta > 1.0 else 0.0
    x0c = _fa_crossings(np.array([h * 1e-12]), np.array([h]), v[:1], eta)[0] / h
    x0, w0 = singular_rule([0.0], a, layers, nodes, sigma=0.5,
                           breaks=[x0c] if 0.0 < x0c < 1.0 else None)
    s0 = np.sum(w0 * h * np.abs(fa_exact_mean(x0 * h, eta) - v[0]) ** p)
    if N == 1:
        return float(s0 ** (1.0 / p))
    gx, gw = gauss_legendre(nodes)
    lo = partition.nodes[1:-1]
    hi = partition.nodes[2:]
    c = _fa_crossings(lo, hi, v[1:], eta)
    s1 = 0.0
    for A, B in ((lo, c), (c, hi)):
        d = (B - A)[:, None]
        x = A[:, None] + d * gx
        s1 += np.sum(d * gw * np.abs(fa_exact_mean(x, eta) - v[1:, None]) ** p)
    return float((s0 + s1) ** (1.0 / p))


def fa_bias_fit(p: float, q: float, eta: Optional[float] = None, levels: Sequence[int] = range(5, 15),
                alpha: Optional[float] = None):
    """(C_alpha, alpha) for the cell-average projection of the FA mean on uniform meshes.

    With ``alpha`` given only the constant is fitted (least squares with the
    slope held fixed).
    """
    model = FaModel(p, q, eta)
    b = []
    for l in levels:
        P = make_partition(2 ** l)
        F = _fa_mean_antiderivative(P.nodes, model.eta)
        b.append(_fa_piecewise_error(np.diff(F) / P.widths, P, p, model.eta))
    N = 2.0 ** np.asarray(levels)
    if alpha is None:
        return fit_rate_loglog(N, b)
    return float(np.exp(np.mean(np.log(b) + alpha * np.log(N)))), float(alpha)


@dataclass
class Moment2Fit:
    """Fitted bias and strong-rate parameters for the FA second moment."""

    C_alpha: float
    alpha: float
    b0: float
    b1: float
    C_beta: float
    r_values: np.ndarray
    beta_values: np.ndarray


def _moment2_mesh_rule(P, sub: int = 2, nodes: int = 6):
    gx, gw = gauss_legendre(nodes)
    loc = (np.arange(sub)[:, None] + gx[None, :]).ravel() / sub
    x = (P.nodes[:-1, None] + P.widths[:, None] * loc[None, :]).ravel()
    w = np.repeat(P.widths, loc.size) * np.tile(np.tile(gw, sub) / sub, P.n_cells)
    cell = np.repeat(np.arange(P.n_cells), loc.size)
    return x, w, cell


def fa_moment2_fit(p: float = 1.0, q: float = 1.5, bias_levels: Sequence[int] = range(3, 9),
                   strong_levels: Sequence[int] = range(4, 11), r_count: int = 6,
                   y_layers: int = 60, y_nodes: int = 6) -> Moment2Fit:
    """Least-squares fit of (C_alpha, alpha) and beta(r) = b0 + b1/r for the
    midpoint tensor interpolant of u (x) u (eta = 1) on nested graded meshes.

    beta(r) is fitted for r between min(q, 2) and q_hat from the L^r(Omega)
    norms of the level differences.  These moments are integrals over the
    parameter y and are computed with a rule graded toward y = 0, where the
    rare large differences live; plain sampling misses them and biases the
    fitted rates.
    """
    FaModel.second_moment(p, q)
    b = []
    for l in bias_levels:
        P = make_partition(2 ** l, "graded")
        x, w, cell = _moment2_mesh_rule(P)
        m = P.midpoints[cell]
        D = fa_exact_second_moment(x[:, None], x[None, :]) - fa_exact_second_moment(m[:, None], m[None, :])
        b.append(float(np.sum(np.outer(w, w) * np.abs(D) ** p) ** (1.0 / p)))
    C_alpha, alpha = fit_rate_loglog(2.0 ** np.asarray(bias_levels), b)
    q_hat = fa_second_moment_q_hat(p, q)
    rs = np.linspace(min(q, 2.0), q_hat, r_count)
    yq, yw = singular_rule([0.0], 0.0, y_layers, y_nodes, sigma=0.5)
    S = []
    for l in strong_levels:
        Pf = make_partition(2 ** l, "graded")
        Pc = make_partition(2 ** (l - 1), "graded")
        W = np.outer(Pf.widths, Pf.widths)
        a = 1.0 / (Pf.midpoints[None, :] + yq[:, None])
        c = np.repeat(1.0 / (Pc.midpoints[None, :] + yq[:, None]), 2, axis=1)
        nrm = np.array([np.sum(W * np.abs(np.outer(a[i], a[i]) - np.outer(c[i], c[i])) ** p) ** (1.0 / p)
                        for i in range(yq.size)])
        S.append([np.sum(yw * nrm ** r) ** (1.0 / r) for r in rs])
    S = np.array(S)
    Ns = 2.0 ** np.asarray(strong_levels)
    fits = [fit_rate_loglog(Ns, S[:, j]) for j in range(rs.size)]
    betas = np.array([f[1] for f in fits])
    b1, b0 = np.polyfit(1.0 / rs, betas, 1)
    C_beta = max(f[0] for f in fits)
    return Moment2Fit(C_alpha, alpha, float(b0), float(b1), float(C_beta), rs, betas)


# ------------------------------------------------------------ sweeps

def _level_for(eps: float, C_alpha: float, alpha: float, level_min: int = 1) -> int:
    """ceil(|log2(eps / C_alpha)| / alpha), at least level_min."""
    return max(level_min, math.ceil(abs(math.log2(eps / C_alpha) / alpha)))


def slmc_sample_size(schedule: str, eps: float, p: float, alpha: float,
                     q_hat: Optional[float] = None) -> int:
    """Sample size of a single-level schedule.

    hilbert: ceil(eps^-2); type_p: ceil(eps^-p'); dim_dep: the dimension-
    dependent choice for W^{1,p} on N ~ eps^(-1/alpha) cells, which equals
    ceil(eps^(-2 - (p' - 2)/(p' alpha))); minkowski: ceil(eps^(-q_hat')).
    """
    if schedule == "hilbert":
        return math.ceil(eps ** -2.0)
    if schedule == "type_p":
        return math.ceil(eps ** -conjugate(p))
    if schedule == "dim_dep":
        # type-2 constants of l^p_N grow like N^(1/p - 1/2): a0 = 1, a1 = 1/p'
        spec = SpaceSpec(p, 2.0, a0=1.0, a1=1.0 / conjugate(p))
        return slmc_samples(eps ** (-1.0 / alpha), alpha, spec)
    if schedule == "minkowski":
        if q_hat is None:
            raise InvalidArgumentError("the minkowski schedule needs q_hat")
        return math.ceil(eps ** -conjugate(q_hat))
    raise InvalidArgumentError(f"unknown schedule {schedule!r}; expected one of {SCHEDULES}")


def _check_eps(eps_list):
    e = np.asarray(eps_list, dtype=float)
    if e.ndim != 1 or e.size < 1 or np.any(e <= 0) or np.any(e > 0.5) or np.any(np.diff(e) >= 0):
        raise InvalidArgumentError("tolerances must be a decreasing list in (0, 1/2]")
    return [float(v) for v in e]


def slmc_bvp_sweep(p: float, schedule: str, eps_list: Sequence[float], K: int = 30, seed: int = 0,
                   eta: Optional[float] = None, fit: Optional[Tuple[float, float]] = None,
                   threads: int = 1, timing: bool = False) -> SweepResult:
    """Single-level estimator of the BVP mean, error in L^2(Omega; W^{1,p}).

    The level is the smallest one with fitted bias C_alpha h^alpha <= eps.
    """
    model = BvpModel(p, eta)
    eps_list = _check_eps(eps_list)
    C_alpha, alpha = fit if fit is not None else bvp_bias_fit(p, model.eta)
    sampler = make_level_sampler(model, lambda l: make_partition(2 ** l))
    key = experiment_key("slmc_bvp")
    r_used = {"hilbert": 2.0, "type_p": p, "dim_dep": 2.0}.get(schedule)
    if r_used is None:
        raise InvalidArgumentError(f"schedule {schedule!r} is not available for the BVP")
    rows = []
    for e in eps_list:
        l = _level_for(e, C_alpha, alpha)
        N = 2 ** l
        M = slmc_sample_size(schedule, e, p, alpha)
        t0 = time.perf_counter()

        def one(k):
            est = slmc_estimate(sampler, l, M, seed, key=(key, k)).estimate
            return _bvp_derivative_error(est.slopes, N, p, model.eta)

        err = aggregate(_map_replicates(one, K, threads), 2.0)
        wall = time.perf_counter() - t0 if timing else 0.0
        bound = C_alpha * N ** (-alpha) + 2.0 * kahane_K_q1(2.0) * M ** (-1.0 / conjugate(p))
        rows.append(SweepRow(e, l, (M,), err, bound, float(M) * N, wall, r_used, schedule))
    return SweepResult(f"slmc_bvp_{schedule}", rows, C_alpha, alpha)


def slmc_fa_sweep(p: float, q: float, eps_list: Sequence[float], eta: Optional[float] = None,
                  schedule: str = "minkowski", K: int = 30, seed: int = 0,
                  fit: Optional[Tuple[float, float]] = None, threads: int = 1,
                  timing: bool = False) -> SweepResult:
    """Single-level estimator of the FA mean (cell averages), error in L^q(Omega; L^p)."""
    model = FaModel(p, q, eta)
    eps_list = _check_eps(eps_list)
    C_alpha, alpha = fit if fit is not None else fa_bias_fit(p, q, model.eta)
    sampler = make_level_sampler(model, lambda l: make_partition(2 ** l))
    key = experiment_key("slmc_fa")
    q_hat = model.q_hat
    rows = []
    for e in eps_list:
        l = _level_for(e, C_alpha, alpha)
        P = make_partition(2 ** l)
        if schedule == "minkowski":
            M = slmc_sample_size(schedule, e, p, alpha, q_hat)
            r = q_hat
        elif schedule == "hilbert":
            M, r = slmc_sample_size(schedule, e, p, alpha), 2.0
        else:
            raise InvalidArgumentError(f"schedule {schedule!r} is not available for FA")
        t0 = time.perf_counter()

        def one(k):
            est = slmc_estimate(sampler, l, M, seed, key=(key, k)).estimate
            return _fa_piecewise_error(est.cell_values, P, p, model.eta)

        err = aggregate(_map_replicates(one, K, threads), q)
        wall = time.perf_counter() - t0 if timing else 0.0
        bound = C_alpha * P.n_cells ** (-alpha) + 2.0 * M ** (-1.0 / conjugate(r))
        rows.append(SweepRow(e, l, (M,), err, bound, float(M) * P.n_cells, wall, r, schedule))
    return SweepResult(f"slmc_fa_{schedule}", rows, C_alpha, alpha)


def fa_rate_model(model: FaModel, C_alpha: float, level_min: int = 4) -> RateModel:
    """alpha = min(1, 1 - eta + 1/p), beta(r) = 1/p - eta + 1/r, gamma = 1."""
    return RateModel(alpha=model.alpha, gamma=1.0, C_alpha=C_alpha, b0=1.0 / model.p - model.eta,
                     b1=1.0, level_min=level_min)


def mlmc_cost_sweep(rate: RateModel, q: float, q_tilde: Optional[float], levels: Sequence[int],
                    r_conj: Optional[float] = None) -> List[AllocationPlan]:
    """Plans (rates only) for tolerances just above C_alpha 2^(-alpha L), L in ``levels``.

    Each tolerance is placed so that its finest level is exactly L, which
    removes the staircase of the level ceiling from cost-slope fits.
    """
    plans = []
    for L in levels:
        eps = rate.C_alpha * float(rate.N(L)) ** (-rate.alpha) * (1.0 + 1e-6)
        plans.append(mlmc_plan_minkowski(eps, rate, q, q_tilde, rates_only=True, r_conj=r_conj))
    return plans


def fit_cost_slope(eps, cost) -> float:
    """Slope s of the least-squares fit cost ~ eps^(-s)."""
    return fit_rate_loglog(eps, cost)[1]


def mlmc_fa_sweep(p: float, q: float, eps_list: Sequence[float], eta: float = 1.1,
                  r_conj: Optional[float] = None, q_tilde: Optional[float] = None, K: int = 20, seed: int = 0,
                  level_min: int = 4, C_alpha: Optional[float] = None, plan_only: bool = False,
                  threads: int = 1, timing: bool = False) -> SweepResult:
    """Multilevel estimator of the FA mean on nested uniform meshes.

    Plans come from the Minkowski planner with the analytic rates and a
    fitted C_alpha; ``r_conj`` fixes r' instead of optimizing it.  The extra
    integrability ``q_tilde`` defaults to the model's q_hat.  With
    ``plan_only`` no samples are drawn and err_measured is NaN.
    """
    model = FaModel(p, q, eta)
    eps_list = _check_eps(eps_list)
    if C_alpha is None:
        C_alpha = fa_bias_fit(p, q, model.eta, alpha=model.alpha)[0]
    rate = fa_rate_model(model, C_alpha, level_min)
    qt = model.q_hat if q_tilde is None else q_tilde
    exponent = predicted_cost_exponent("mlmc_minkowski", rate, q=q, q_tilde=qt, r_conj=r_conj)[0]
    sampler = make_level_sampler(model, lambda l: make_partition(2 ** l))
    key = experiment_key("mlmc_fa")
    rows = []
    for e in eps_list:
        plan = mlmc_plan_minkowski(e, rate, q, qt, rates_only=True, r_conj=r_conj)
        P = make_partition(2 ** plan.L)
        err = float("nan")
        t0 = time.perf_counter()
        if not plan_only:
            def one(k):
                est = mlmc_estimate(sampler, plan, seed, key=(key, k)).estimate
                return _fa_piecewise_error(est.cell_values, P, p, model.eta)

            err = aggregate(_map_replicates(one, K, threads), q)
        wall = time.perf_counter() - t0 if timing and not plan_only else 0.0
        bound = plan_error_bound(plan, C_alpha, model.alpha)
        rows.append(SweepRow(e, plan.L, tuple(plan.M), err, bound, plan.predicted_cost, wall,
                             plan.r, plan.cost_case))
    return SweepResult("mlmc_fa", rows, C_alpha, model.alpha, exponent)


def moment2_fa_sweep(p: float, q: float, eps_list: Sequence[float], fit: Moment2Fit,
                     r_conj: Optional[float] = None, K: int = 10, seed: int = 0, level_min: int = 4,
                     plan_only: bool = False, quad_nodes: int = 2, threads: int = 1,
                     timing: bool = False) -> SweepResult:
    """Multilevel estimator of the FA second moment (eta = 1) on nested graded meshes.

    Samples are midpoint tensor interpolants; cost units are sum M_l N_l^2.
    The error is measured in L^q(Omega; L^p(I x I)) with a tensor Gauss-
    Legendre rule on the finest mesh.
    """
    model = FaModel.second_moment(p, q)
    eps_list = _check_eps(eps_list)
    rate = RateModel(alpha=fit.alpha, gamma=2.0, C_alpha=fit.C_alpha, b0=fit.b0, b1=fit.b1,
                     C_beta=fit.C_beta, level_min=level_min)
    q_hat = fa_second_moment_q_hat(p, q)
    exponent = predicted_cost_exponent("mlmc_minkowski", rate, q=q, q_tilde=q_hat, r_conj=r_conj)[0]
    sampler = make_level_sampler(model, lambda l: make_partition(2 ** l, "graded"), "midpoint")
    key = experiment_key("moment2_fa")
    rows = []
    for e in eps_list:
        plan = mlmc_plan_minkowski(e, rate, q, q_hat, rates_only=True, r_conj=r_conj)
        err = float("nan")
        t0 = time.perf_counter()
        if not plan_only:
            P = make_partition(2 ** plan.L, "graded")
            gx, gw = gauss_legendre(quad_nodes)
            x = (P.nodes[:-1, None] + P.widths[:, None] * gx).ravel()
            w = (P.widths[:, None] * gw).ravel()
            cell = np.repeat(np.arange(P.n_cells), quad_nodes)
            W = np.outer(w, w)
            M2 = fa_exact_second_moment(x[:, None], x[None, :])

            def one(k):
                est = second_moment_mlmc(sampler, plan, seed, key=(key, k)).estimate
                V = est.values[np.ix_(cell, cell)]
                return float(np.sum(W * np.abs(M2 - V) ** p) ** (1.0 / p))

            err = aggregate(_map_replicates(one, K, threads), q)
        wall = time.perf_counter() - t0 if timing and not plan_only else 0.0
        bound = plan_error_bound(plan, fit.C_alpha, fit.alpha)
        rows.append(SweepRow(e, plan.L, tuple(plan.M), err, bound, plan.predicted_cost, wall,
                             plan.r, plan.cost_case))
    return SweepResult("moment2_fa", rows, fit.C_alpha, fit.alpha, exponent)


def moment2_bvp_sweep(p: float, schedule: str, eps_list: Sequence[float], K: int = 10, seed: int = 0,
                      eta: Optional[float] = None, ref_level: int = 8, bias_levels: Sequence[int] = range(2, 7),
                      restarts: int = 8, threads: int = 1, timing: bool = False) -> SweepResult:
    """Single-level estimator of E[u (x) u] for the BVP, error in the injective norm.

    The reference is the nodal second moment on 2^ref_level cells.  The
    bias fit uses the injective norm of the reference minus the nodal
    second moment of coarser levels (prolonged).
    """
    model = BvpModel(p, eta)
    eps_list = _check_eps(eps_list)
    Pref = make_partition(2 ** ref_level)
    ref = bvp_reference_second_moment(Pref, model.eta)
    dual = assemble_dual(Pref, p)

    def inj(T):
        return injective_norm_multistart(T, dual, restarts=restarts, seed=seed).value

    b = []
    levels = [l for l in bias_levels if l < ref_level]
    for l in levels:
        coarse = bvp_reference_second_moment(make_partition(2 ** l), model.eta)
        b.append(inj(ref.values - coarse.prolong(Pref).values))
    C_alpha, alpha = fit_rate_loglog(2.0 ** np.asarray(levels), b)
    sampler = make_level_sampler(model, lambda l: make_partition(2 ** l))
    key = experiment_key("moment2_bvp")
    r_used = {"hilbert": 2.0, "type_p": p, "dim_dep": 2.0}.get(schedule)
    if r_used is None:
        raise InvalidArgumentError(f"schedule {schedule!r} is not available for the BVP")
    rows = []
    for e in eps_list:
        l = min(_level_for(e, C_alpha, alpha), ref_level)
        M = slmc_sample_size(schedule, e, p, alpha)
        t0 = time.perf_counter()

        def one(k):
            est = second_moment_slmc(sampler, l, M, seed, key=(key, k)).estimate
            return inj(ref.values - est.prolong(Pref).values)

        err = aggregate(_map_replicates(one, K, threads), 2.0)
        wall = time.perf_counter() - t0 if timing else 0.0
        N = 2 ** l
        bound = C_alpha * N ** (-alpha) + 2.0 * kahane_K_q1(2.0) * M ** (-1.0 / conjugate(p))
        rows.append(SweepRow(e, l, (M,), err, bound, float(M) * N ** 2, wall, r_used, schedule))
    return SweepResult(f"moment2_bvp_{schedule}", rows, C_alpha, alpha)


def injective_norm_check(p: float, n_cells: int, count: int = 50, restarts: int = 8,
                         seed: int = 0) -> List[Dict[str, float]]:
    """Injective norm of random rank-one tensors u (x) v on a uniform mesh.

    Each row holds the computed norm, the product of the discrete dual
    values ||H u / D||_p ||H v / D||_p (which the discrete norm equals
    exactly), the product of the W^{1,p} seminorms, and the relative gaps.
    """
    P = make_partition(n_cells)
    dual = assemble_dual(P, p)
    rng = stream(seed, experiment_key("injective_norm"))
    out = []
    for i in range(count):
        u = np.concatenate(([0.0], rng.standard_normal(n_cells)))
        v = np.concatenate(([0.0], rng.standard_normal(n_cells)))
        res = injective_norm_multistart(np.outer(u, v), dual, restarts=restarts, seed=seed + i)
        disc = weighted_norm(dual.H @ u, 1.0 / dual.D, p) * weighted_norm(dual.H @ v, 1.0 / dual.D, p)
        cont = w1p_seminorm(PiecewiseLinearFn(P, u), p) * w1p_seminorm(PiecewiseLinearFn(P, v), p)
        out.append({
            "index": i,
            "norm": res.value,
            "discrete_product": disc,
            "seminorm_product": cont,
            "rel_gap_discrete": abs(res.value - disc) / disc,
            "rel_gap_seminorm": abs(res.value - cont) / cont,
            "iterations": res.iterations,
            "converged": bool(res.converged),
        })
    return out
