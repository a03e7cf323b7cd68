"""Khintchine, Kahane and type constants used by the sample allocators.

Only upper bounds are provided, since the planners need an upper bound on
the Monte Carlo error.  For q > 2 the Khintchine constant B_q is replaced by
the q-th Gaussian moment, (E|Z|^q)^(1/q) for a standard normal Z, which is
an explicit upper bound and only enters multiplicative constants.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError

__all__ = [
    "SpaceSpec",
    "conjugate",
    "khintchine_B",
    "kahane_K_q1",
    "type_constant_lp_seq",
    "f_alpha_ell",
]


def conjugate(r: float) -> float:
    """Hoelder conjugate r' = r / (r - 1); infinite for r = 1."""
    if r < 1.0:
        raise InvalidArgumentError(f"conjugate exponent needs r >= 1, got {r}")
    if r == 1.0:
        return math.inf
    if math.isinf(r):
        return 1.0
    return r / (r - 1.0)


@dataclass(frozen=True)
class SpaceSpec:
    """Rademacher type p, integrability q <= q_tilde and type-constant growth.

    The growth assumption reads tau_r(E_l)^{r'} <= C_tau * N_l^{a0 - a1 r'}.
    """

    p: float
    q: float
    q_tilde: float | None = None
    a0: float = 0.0
    a1: float = 0.0
    C_tau: float = 1.0

    def __post_init__(self):
        if self.q_tilde is None:
            object.__setattr__(self, "q_tilde", self.q)
        if not 1.0 <= self.p <= 2.0:
            raise InvalidArgumentError(f"type p must lie in [1, 2], got {self.p}")
        if not self.q > 1.0:
            raise InvalidArgumentError(f"integrability q must exceed 1, got {self.q}")
        if self.p > self.q:
            raise InvalidArgumentError("need p <= q")
        if self.q_tilde < self.q:
            raise InvalidArgumentError("need q_tilde >= q")
        if self.a0 < 0.0 or self.a1 < 0.0:
            raise InvalidArgumentError("growth exponents a0, a1 must be non-negative")
        if self.C_tau < 1.0:
            raise InvalidArgumentError("C_tau must be at least 1")

    @property
    def q_bar(self) -> float:
        return min(self.q, 2.0)

    @property
    def q_hat(self) -> float:
        return min(self.q_tilde, 2.0)

    @property
    def p_conj(self) -> float:
        return conjugate(self.p)

    @property
    def q_bar_conj(self) -> float:
        return conjugate(self.q_bar)


def khintchine_B(q: float) -> float:
    """Upper Khintchine constant: 1 for q <= 2, Gaussian q-th moment otherwise."""
    if q < 1.0:
        raise InvalidArgumentError(f"q must be >= 1, got {q}")
    if q <= 2.0:
        return 1.0
    log_moment = math.lgamma(0.5 * (q + 1.0)) - 0.5 * math.log(math.pi)
    return math.sqrt(2.0) * math.exp(log_moment / q)


def kahane_K_q1(q: float) -> float:
    """Bound on the Kahane-Khintchine constant K_{q,1}."""
    if q < 1.0:
        raise InvalidArgumentError(f"q must be >= 1, got {q}")
    if q <= 2.0:
        return math.sqrt(2.0)
    return math.sqrt(2.0 * (q - 1.0))


def type_constant_lp_seq(s: float, N: int, r: float) -> float:
    """Type-r constant of the N-dimensional sequence space l^s_N (upper bound)."""
    if not 1.0 <= r <= 2.0:
        raise InvalidArgumentError(f"type exponent r must lie in [1, 2], got {r}")
    if not s >= 1.0:
        raise InvalidArgumentError(f"s must be >= 1, got {s}")
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"dimension N must be a positive integer, got {N}")
    if math.isinf(s):
        rc = conjugate(r)
        if math.isinf(rc):
            return 1.0
        return max(2.0 * math.e * math.log(N), 2.0) ** (1.0 / rc)
    pbar = min(s, 2.0)
    if r <= pbar:
        return khintchine_B(s)
    return float(N) ** (1.0 / pbar - 1.0 / r)


def f_alpha_ell(r: float, N: int, alpha: float, spec: SpaceSpec) -> float:
    """Upper bound C_tau * N^(a0 + (alpha - a1) r') of (tau_r N^alpha)^{r'}."""
    if not 1.0 < r <= 2.0:
        raise InvalidArgumentError(f"r must lie in (1, 2], got {r}")
    if alpha <= 0.0:
        raise InvalidArgumentError("alpha must be positive")
    rc = conjugate(r)
    return spec.C_tau * float(N) ** (spec.a0 + (alpha - spec.a1) * rc)
