"""Injective tensor norm of order-two tensors in W^{1,p}_0 by alternating maximization.

Dual functionals are represented by continuous piecewise linear functions l
acting as l(u) = int u' l.  For nodal coefficient vectors this reads
l(u) = l^T H u with H_ij = int phi_i phi_j', and the L^{p'} norm of l is
approximated by the trapezoidal rule, ||D l||_{l^{p'}}.  The norm of a tensor
with nodal matrix U is then approximated by

    max |l1^T H U H^T l2|  subject to  ||D l1||_{p'} <= 1, ||D l2||_{p'} <= 1,

which is solved by exact maximization in one block at a time.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import InvalidArgumentError, SizeError
from .function_spaces import Partition

__all__ = [
    "DualDiscretization",
    "InjectiveNormResult",
    "assemble_dual",
    "dual_from_matrices",
    "weighted_norm",
    "linear_max_on_ball",
    "injective_norm_alternating",
    "injective_norm_multistart",
    "injective_norm_bruteforce",
]


@dataclass(frozen=True, eq=False)
class DualDiscretization:
    """Matrices H (hat-function pairing) and D (trapezoidal weights) for exponent p."""

    H: np.ndarray
    D: np.ndarray
    p: float
    partition: Optional[Partition] = None

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def size(self) -> int:
        return self.D.size


def _check_p(p):
    if not (1.0 < p < math.inf):
        raise InvalidArgumentError(f"p must lie in (1, inf), got {p}")


def assemble_dual(partition: Partition, p: float) -> DualDiscretization:
    """Exact H for the nodal P1 basis and trapezoidal weights D.

    Row i of H holds int phi_i phi_j': -1/2 and +1/2 on the off-diagonals,
    -1/2 at (0, 0) and +1/2 at (N, N), zero elsewhere.  The entries do not
    depend on the mesh size.
    """
    _check_p(p)
    if partition.kind != "uniform":
        raise InvalidArgumentError("the dual discretization needs a uniform partition")
    n = partition.n_cells + 1
    H = 0.5 * (np.eye(n, k=1) - np.eye(n, k=-1))
    H[0, 0] = -0.5
    H[-1, -1] = 0.5
    pc = p / (p - 1.0)
    w = np.full(n, partition.h)
    w[0] *= 0.5
    w[-1] *= 0.5
    return DualDiscretization(H, w ** (1.0 / pc), float(p), partition)


def dual_from_matrices(H, D, p: float) -> DualDiscretization:
    """Dual discretization from explicit matrices (testing and small examples)."""
    _check_p(p)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    D = np.asarray(D, dtype=float).ravel()
    if H.shape != (D.size, D.size):
        raise InvalidArgumentError("H must be square with the size of D")
    if np.any(D <= 0):
        raise InvalidArgumentError("D must be strictly positive")
    return DualDiscretization(H, D, float(p))


def weighted_norm(v, d, s: float) -> float:
    """(sum |d_i v_i|^s)^(1/s)."""
    a = np.abs(np.asarray(v, dtype=float) * d)
    m = a.max(initial=0.0)
    if m == 0.0:
        return 0.0
    return float(m * np.sum((a / m) ** s) ** (1.0 / s))


def linear_max_on_ball(c, D, p: float) -> Tuple[np.ndarray, float, bool]:
    """Maximize l^T c over ||D l||_{p'} <= 1.

    Returns (l_star, value, degenerate); the value is ||c / D||_{l^p}.  For
    c = 0 the zero vector is returned with the degenerate flag set.
    """
    _check_p(p)
    c = np.asarray(c, dtype=float)
    D = np.asarray(D, dtype=float)
    pc = p / (p - 1.0)
    a = np.abs(c) / D
    m = a.max(initial=0.0)
    if m == 0.0:
        return np.zeros_like(c), 0.0, True
    # l_i proportional to sign(c_i) |c_i|^{p-1} d_i^{-p}; scale by m to avoid overflow
    r = a / m
    l = np.sign(c) * r ** (p - 1.0) / D
    l /= weighted_norm(l, D, pc)
    value = float(m * np.sum(r ** p) ** (1.0 / p))
    return l, value, False


@dataclass
class InjectiveNormResult:
    value: float
    iterations: int
    maximizer_pair: Tuple[np.ndarray, np.ndarray]
    converged: bool
    restarts_used: int = 0
    degenerate: bool = False
    history: Optional[np.ndarray] = None


def _check_dims(U, dual):
    U = np.asarray(U, dtype=float)
    n = dual.size
    if U.shape != (n, n):
        raise InvalidArgumentError(f"tensor must be {n}x{n}, got {U.shape}")
    return U


def injective_norm_alternating(U_M, dual: DualDiscretization, l1_0, l2_0,
                               max_it: int = 200, tol: float = 1e-10,
                               callback: Optional[Callable] = None,
                               _G: Optional[np.ndarray] = None) -> InjectiveNormResult:
    """Alternating block maximization of |l1^T G l2| with G = H U H^T.

    The first block uses c = G l2 and the second c = G^T l1, so each half-step
    is an exact maximization and the objective never decreases.  Iteration
    stops when the increase is at most ``tol`` both in absolute terms and
    relative to max(f, 1).  ``callback(k, l1, l2, f)`` is called on every
    iterate, including the normalized initial pair (k = 0).
    """
    if max_it < 1 or tol <= 0:
        raise InvalidArgumentError("need max_it >= 1 and tol > 0")
    G = _G if _G is not None else dual.H @ _check_dims(U_M, dual) @ dual.H.T
    D, p = dual.D, dual.p
    pc = dual.p_conj
    l1 = np.asarray(l1_0, dtype=float).copy()
    l2 = np.asarray(l2_0, dtype=float).copy()
    if l1.shape != (dual.size,) or l2.shape != (dual.size,):
        raise InvalidArgumentError("initial guesses must match the dual dimension")
    n1, n2 = weighted_norm(l1, D, pc), weighted_norm(l2, D, pc)
    if n1 == 0.0 or n2 == 0.0:
        raise InvalidArgumentError("initial guesses must be non-zero")
    l1 /= n1
    l2 /= n2
    f_prev = abs(float(l1 @ G @ l2))
    history = [f_prev]
    if callback is not None:
        callback(0, l1, l2, f_prev)
    converged = False
    k = 0
    for k in range(1, max_it + 1):
        l1_new, _, deg1 = linear_max_on_ball(G @ l2, D, p)
        if deg1:
            return InjectiveNormResult(0.0, k, (l1, l2), True, degenerate=True,
                                       history=np.array(history + [0.0]))
        l2_new, _, deg2 = linear_max_on_ball(G.T @ l1_new, D, p)
        if deg2:
            return InjectiveNormResult(0.0, k, (l1_new, l2), True, degenerate=True,
                                       history=np.array(history + [0.0]))
        l1, l2 = l1_new, l2_new
        f = abs(float(l1 @ G @ l2))
        history.append(f)
        if callback is not None:
            callback(k, l1, l2, f)
        delta = abs(f - f_prev)
        f_prev = f
        if delta <= tol and delta <= tol * max(f, 1.0):
            converged = True
            break
    return InjectiveNormResult(f_prev, k, (l1, l2), converged, history=np.array(history))


def _random_feasible(rng, D, pc):
    v = rng.standard_normal(D.size)
    return v / weighted_norm(v, D, pc)


def injective_norm_multistart(U_M, dual: DualDiscretization, restarts: int = 8,
                              max_it: int = 200, tol: float = 1e-10,
                              seed: int = 0, callback: Optional[Callable] = None) -> InjectiveNormResult:
    """Best of the canonical start and ``restarts`` seeded random starts.

    The canonical start takes l1 and l2 along the row and column of the
    largest entry of |H U H^T|.  Ties are broken by the lowest start index
    (the canonical start has index 0).
    """
    U = _check_dims(U_M, dual)
    G = dual.H @ U @ dual.H.T
    n = dual.size
    if not np.any(G):
        z = np.zeros(n)
        return InjectiveNormResult(0.0, 1, (z, z.copy()), True, restarts_used=0,
                                   degenerate=True, history=np.array([0.0]))
    i, j = np.unravel_index(np.argmax(np.abs(G)), G.shape)
    starts = [(np.eye(n)[i], np.eye(n)[j])]
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), n]))
    pc = dual.p_conj
    for _ in range(int(restarts)):
        starts.append((_random_feasible(rng, dual.D, pc), _random_feasible(rng, dual.D, pc)))
    best = None
    for l1, l2 in starts:
        res = injective_norm_alternating(U, dual, l1, l2, max_it, tol, callback=callback, _G=G)
        if best is None or res.value > best.value:
            best = res
    best.restarts_used = int(restarts)
    return best


def injective_norm_bruteforce(U_M, dual: DualDiscretization, angular_resolution: int = 2000,
                              seed: int = 12345, refine_steps: int = 50) -> float:
    """Exhaustive-sampling oracle for small problems (dimension at most 6).

    For fixed l2 the best l1 is given in closed form, so the problem reduces
    to maximizing ||G l2 / D||_{l^p} over the weighted p'-sphere in l2.  The
    sphere is sampled by coordinate directions, sign patterns and
    ``angular_resolution`` random directions (plus their images under the
    alternating map); the best samples are then polished by alternating steps.
    """
    n = dual.size
    if n > 6:
        raise SizeError(f"brute force is limited to dimension 6, got {n}")
    U = _check_dims(U_M, dual)
    G = dual.H @ U @ dual.H.T
    if not np.any(G):
        return 0.0
    D, p, pc = dual.D, dual.p, dual.p_conj
    rng = np.random.default_rng(seed)
    cand = [np.eye(n)]
    cand.append(np.array(list(itertools.product([-1.0, 0.0, 1.0], repeat=n)))[1:])
    cand.append(rng.standard_normal((angular_resolution, n)))
    Y = np.concatenate(cand, axis=0)
    Y = Y[np.any(Y != 0, axis=1)]
    Y = Y / np.array([weighted_norm(y, D, pc) for y in Y])[:, None]

    def score(L2):
        C = L2 @ G.T / D
        m = np.abs(C).max(axis=1, keepdims=True)
        m[m == 0] = 1.0
        return m[:, 0] * np.sum((np.abs(C) / m) ** p, axis=1) ** (1.0 / p)

    vals = score(Y)
    best = float(vals.max())
    top = Y[np.argsort(vals)[-min(20, len(Y)):]]
    for l2 in top:
        l1 = linear_max_on_ball(G @ l2, D, p)[0]
        res = injective_norm_alternating(U, dual, l1, l2, max_it=refine_steps, tol=1e-14, _G=G)
        best = max(best, res.value)
    return best
