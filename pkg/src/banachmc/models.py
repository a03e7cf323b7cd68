"""The two random test problems with closed-form moments.

BVP: u_y(x) = |x - y|^(2 - eta) - y^(2 - eta), y ~ U(0, 1), the solution of
-u'' = C |x - y|^(-eta) with u(0) = 0 and a matching Neumann condition at 1.
Its realizations lie in W^{1,p}_0 for p < 1/(eta - 1).

FA: u_y(x) = (x + y)^(-eta), y ~ U(0, 1), which lies in
L^q(Omega; L^p) for eta < 1/p + 1/q.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .errors import InvalidArgumentError, NumericalError
from .estimators import ParametricLevelSampler
from .function_spaces import (
    Partition,
    PiecewiseConstantFn,
    PiecewiseLinearFn,
    NodalTensorFn,
    singular_rule,
)

__all__ = [
    "BvpModel",
    "FaModel",
    "bvp_solution",
    "bvp_solution_derivative",
    "bvp_sample",
    "bvp_exact_mean",
    "bvp_exact_mean_derivative",
    "bvp_reference_second_moment",
    "fa_solution",
    "fa_sample",
    "fa_sample_values",
    "fa_exact_mean",
    "fa_exact_second_moment",
    "fa_second_moment_admissible",
    "fa_second_moment_q_hat",
    "make_level_sampler",
]


# ---------------------------------------------------------------- BVP

@dataclass(frozen=True)
class BvpModel:
    """Singular random BVP; eta defaults to 1 + 1/p - 0.01."""

    p: float
    eta: Optional[float] = None

    def __post_init__(self):
        if not 1.0 < self.p <= 2.0:
            raise InvalidArgumentError(f"BVP exponent p must lie in (1, 2], got {self.p}")
        if self.eta is None:
            object.__setattr__(self, "eta", 1.0 + 1.0 / self.p - 1e-2)
        eta = float(self.eta)
        if not 1.0 < eta < 2.0:
            raise InvalidArgumentError(f"eta must lie in (1, 2), got {eta}")
        if self.p * (eta - 1.0) >= 1.0:
            raise InvalidArgumentError(f"need p < 1/(eta - 1); got p={self.p}, eta={eta}")
        object.__setattr__(self, "eta", eta)

    @property
    def kappa(self) -> float:
        """Hoelder exponent 2 - eta of the realizations."""
        return 2.0 - self.eta


def _check_y(y):
    y = np.asarray(y, dtype=float)
    if np.any((y <= 0.0) | (y >= 1.0)):
        raise InvalidArgumentError("the random parameter y must lie in (0, 1)")
    return y


def bvp_solution(x, y, eta: float):
    """u_y(x) = |x - y|^(2 - eta) - y^(2 - eta)."""
    k = 2.0 - eta
    return np.abs(np.asarray(x, float) - y) ** k - np.asarray(y, float) ** k


def bvp_solution_derivative(x, y, eta: float):
    """u_y'(x) = (2 - eta) sign(x - y) |x - y|^(1 - eta), for x != y."""
    d = np.asarray(x, float) - y
    with np.errstate(divide="ignore"):
        return (2.0 - eta) * np.sign(d) * np.abs(d) ** (1.0 - eta)


def bvp_sample(model: BvpModel, y: float, partition: Partition) -> PiecewiseLinearFn:
    """Nodal interpolant of u_y; vanishes at x = 0."""
    y = float(_check_y(y))
    vals = bvp_solution(partition.nodes, y, model.eta)
    vals[0] = 0.0
    return PiecewiseLinearFn(partition, vals)


def bvp_exact_mean(x, eta: float):
    """E[u](x) = ((1 - x)^(3 - eta) + x^(3 - eta) - 1) / (3 - eta)."""
    x = np.asarray(x, dtype=float)
    c = 3.0 - eta
    return ((1.0 - x) ** c + x ** c - 1.0) / c


def bvp_exact_mean_derivative(x, eta: float):
    """E[u]'(x) = x^(2 - eta) - (1 - x)^(2 - eta)."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise InvalidArgumentError("x must lie in [0, 1]")
    k = 2.0 - eta
    return x ** k - (1.0 - x) ** k


def bvp_reference_second_moment(partition_ref: Partition, eta: float,
                                cells_per_piece: int = 10, nodes_per_cell: int = 10,
                                rtol: float = 1e-8) -> NodalTensorFn:
    """Entries int_0^1 u_y(x_i) u_y(x_j) dy of E[I(u) (x) I(u)] on the nodes.

    The y-integral is split at every node (the kinks of all integrands) and
    each piece is graded toward its ends, so one composite rule serves all
    pairs and the matrix is U^T W U.  The computation is repeated with twice
    the nodes per cell; disagreement above ``rtol`` raises NumericalError.
    """
    if not 1.0 < eta < 2.0:
        raise InvalidArgumentError(f"eta must lie in (1, 2), got {eta}")
    x = partition_ref.nodes

    def assemble(n):
        y, w = singular_rule(x, 0.0, cells_per_piece, n)
        keep = (y > 0.0) & (y < 1.0)
        y, w = y[keep], w[keep]
        U = bvp_solution(x[:, None], y[None, :], eta)
        U[0, :] = 0.0
        return (U * w[None, :]) @ U.T

    A = assemble(nodes_per_cell)
    B = assemble(2 * nodes_per_cell)
    scale = np.maximum(np.abs(B), np.max(np.abs(B)) * 1e-12)
    rel = np.abs(A - B) / scale
    if np.max(rel) > rtol:
        i, j = np.unravel_index(np.argmax(rel), rel.shape)
        raise NumericalError(f"reference second moment not converged at entry ({i}, {j})")
    B = 0.5 * (B + B.T)
    return NodalTensorFn(partition_ref, B, "nodal")


# ---------------------------------------------------------------- FA

def fa_second_moment_admissible(p: float, q: float) -> bool:
    """u (x) u in L^q(Omega; L^p) for eta = 1 iff 1/(2q) + 1/p > 1."""
    return 1.0 / (2.0 * q) + 1.0 / p > 1.0


def fa_second_moment_q_hat(p: float, q: float) -> float:
    """sup{r in [q, 2] : 1/(2r) + 1/p > 1} for the eta = 1 second moment."""
    if not fa_second_moment_admissible(p, q):
        raise InvalidArgumentError(f"(p, q) = ({p}, {q}) violates 1/(2q) + 1/p > 1")
    if p <= 1.0:
        return 2.0
    return min(2.0, 0.5 / (1.0 - 1.0 / p))


@dataclass(frozen=True)
class FaModel:
    """Function approximation model; eta defaults to 1/p + 1/q - 0.01."""

    p: float
    q: float
    eta: Optional[float] = None

    def __post_init__(self):
        if not 1.0 <= self.p <= 2.0:
            raise InvalidArgumentError(f"FA exponent p must lie in [1, 2], got {self.p}")
        if not 1.0 < self.q <= 2.0:
            raise InvalidArgumentError(f"FA exponent q must lie in (1, 2], got {self.q}")
        if self.eta is None:
            object.__setattr__(self, "eta", 1.0 / self.p + 1.0 / self.q - 1e-2)
        eta = float(self.eta)
        if not 0.0 < eta < 2.0:
            raise InvalidArgumentError(f"eta must lie in (0, 2), got {eta}")
        if eta >= 1.0 / self.p + 1.0 / self.q:
            raise InvalidArgumentError(
                f"need eta < 1/p + 1/q for u in L^q(L^p); got eta={eta}, p={self.p}, q={self.q}")
        object.__setattr__(self, "eta", eta)

    @classmethod
    def second_moment(cls, p: float, q: float) -> "FaModel":
        """eta = 1 model for the second moment; requires 1/(2q) + 1/p > 1."""
        if not fa_second_moment_admissible(p, q):
            raise InvalidArgumentError(
                f"(p, q) = ({p}, {q}) violates 1/(2q) + 1/p > 1 for the second moment")
        return cls(p, q, 1.0)

    @property
    def q_hat(self) -> float:
        """sup{s in [q, 2] : 1/s > eta - 1/p}, the effective integrability."""
        d = self.eta - 1.0 / self.p
        if d <= 0.5:
            return 2.0
        return max(self.q, min(2.0, 1.0 / d))

    @property
    def alpha(self) -> float:
        """Bias rate min(1, 1 - eta + 1/p) of the cell-average projection."""
        return min(1.0, 1.0 - self.eta + 1.0 / self.p)


def fa_solution(x, y, eta: float):
    return (np.asarray(x, float) + y) ** (-eta)


def _antiderivative_increment(a, h, eta):
    """F(a + h) - F(a) for F' = x^(-eta), computed without cancellation."""
    if eta == 1.0:
        return np.log1p(h / a)
    c = 1.0 - eta
    return a ** c * np.expm1(c * np.log1p(h / a)) / c


def fa_sample_values(y, partition: Partition, eta: float, representation: str = "cell_average"):
    """Cell values of the projection for an array of parameters y, shape (len(y), N)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    x = partition.nodes
    if representation == "cell_average":
        a = x[None, :-1] + y[:, None]
        h = partition.widths[None, :]
        return _antiderivative_increment(a, h, eta) / h
    if representation == "midpoint":
        return (partition.midpoints[None, :] + y[:, None]) ** (-eta)
    raise InvalidArgumentError(f"unknown representation {representation!r}")


def fa_sample(model: FaModel, y: float, partition: Partition,
              representation: str = "cell_average") -> PiecewiseConstantFn:
    """Cell averages (exact via the antiderivative) or midpoint values of u_y."""
    y = float(_check_y(y))
    vals = fa_sample_values([y], partition, model.eta, representation)[0]
    return PiecewiseConstantFn(partition, vals)


def fa_exact_mean(x, eta: float):
    """E[u](x) = ((x + 1)^(1 - eta) - x^(1 - eta)) / (1 - eta); log((x + 1)/x) at eta = 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise InvalidArgumentError("x must be positive")
    return _antiderivative_increment(x, 1.0, eta)


def fa_exact_second_moment(x, x_prime):
    """E[u(x) u(x')] for eta = 1.

    Off the diagonal log((x + 1) x' / ((x' + 1) x)) / (x' - x), on it
    1/x - 1/(x + 1).  The off-diagonal branch is evaluated as
    (log1p(d/x) - log1p(d/(x + 1))) / d with d = x' - x, which is accurate
    close to the diagonal.
    """
    x, xp = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(x_prime, dtype=float))
    if np.any(x <= 0.0) or np.any(xp <= 0.0):
        raise InvalidArgumentError("x and x' must be positive")
    # evaluate from the smaller argument so the result is exactly symmetric
    x, xp = np.minimum(x, xp), np.maximum(x, xp)
    d = xp - x
    diag = d == 0.0
    dd = np.where(diag, 1.0, d)
    off = (np.log1p(dd / x) - np.log1p(dd / (x + 1.0))) / dd
    out = np.where(diag, 1.0 / x - 1.0 / (x + 1.0), off)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------- samplers

def make_level_sampler(model: Union[BvpModel, FaModel],
                       level_map: Union[Mapping[int, Partition], Callable[[int], Partition]],
                       representation: Optional[str] = None) -> ParametricLevelSampler:
    """Level sampler driven by one uniform y per sample.

    BVP samples are nodal interpolants (representation "nodal"); FA samples
    are cell averages ("cell_average", default) or midpoint values
    ("midpoint").  Both members of a coupled pair use the same y.
    """
    if isinstance(model, BvpModel):
        eta = model.eta

        def values(y, part):
            v = bvp_solution(part.nodes[None, :], np.asarray(y)[:, None], eta)
            v[:, 0] = 0.0
            return v

        return ParametricLevelSampler(values, level_map, "nodal")
    if isinstance(model, FaModel):
        rep = representation or "cell_average"
        eta = model.eta

        def values(y, part):
            return fa_sample_values(y, part, eta, rep)

        return ParametricLevelSampler(values, level_map, "cell")
    raise InvalidArgumentError(f"unsupported model {type(model).__name__}")
