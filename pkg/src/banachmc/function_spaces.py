"""Partitions of the unit interval, discrete function types and norms.

The discrete spaces are continuous piecewise affine functions vanishing at
the left end point (nodal representation), piecewise constants (cell
representation) and their tensor products on the product mesh.  Norms of
discrete objects are integrated exactly; norms of general integrands with
algebraic point singularities use a composite rule that splits the interval
at every singular point, grades cells geometrically toward it and uses a
Gauss-Jacobi rule on the cell that touches it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import EvaluationError, InvalidArgumentError, NumericalError

__all__ = [
    "Partition",
    "PiecewiseLinearFn",
    "PiecewiseConstantFn",
    "NodalTensorFn",
    "SingularitySpec",
    "make_partition",
    "nodal_interpolate",
    "cell_average_project",
    "midpoint_interpolate",
    "tensor_interpolate",
    "w1p_seminorm",
    "lp_norm_piecewise",
    "lp_norm_quadrature",
    "singular_rule",
    "gauss_legendre",
    "gauss_jacobi",
]


@dataclass(frozen=True, eq=False)
class Partition:
    """Mesh of [0, 1] given by strictly increasing nodes x_0 = 0 < ... < x_N = 1."""

    nodes: np.ndarray
    kind: str = "uniform"

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise InvalidArgumentError("a partition needs at least two nodes")
        if x[0] != 0.0 or x[-1] != 1.0:
            raise InvalidArgumentError("partition must start at 0 and end at 1")
        if np.any(np.diff(x) <= 0.0):
            raise InvalidArgumentError("partition nodes must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def h(self) -> float:
        """Mesh size of a uniform partition."""
        if self.kind != "uniform":
            raise InvalidArgumentError("mesh size h is only defined for uniform partitions")
        return 1.0 / self.n_cells

    def refines(self, coarse: "Partition") -> bool:
        """True if every node of ``coarse`` is a node of this partition."""
        return bool(np.all(np.isin(coarse.nodes, self.nodes)))

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.nodes, other.nodes)

    def __hash__(self):
        return hash((self.kind, self.n_cells))

    def __repr__(self):
        return f"Partition(n_cells={self.n_cells}, kind={self.kind!r})"


def make_partition(n_cells: int, kind: str = "uniform") -> Partition:
    """Uniform nodes j/N or graded nodes (k/N)^2 on [0, 1]."""
    if int(n_cells) != n_cells or n_cells < 1:
        raise InvalidArgumentError(f"n_cells must be a positive integer, got {n_cells!r}")
    n = int(n_cells)
    k = np.arange(n + 1, dtype=float)
    if kind == "uniform":
        x = k / n
    elif kind == "graded":
        x = (k / n) ** 2
    else:
        raise InvalidArgumentError(f"unknown partition kind {kind!r}")
    x[-1] = 1.0
    return Partition(x, kind)


def _check_finite(values, what):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        idx = tuple(int(i) for i in idx) if idx.size > 1 else int(idx[0])
        raise EvaluationError(f"non-finite {what} at index {idx}", index=idx)


def _evaluate(f, x):
    """Evaluate a scalar callable on an array, vectorized if possible."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        try:
            y = np.asarray(f(x), dtype=float)
            if y.shape != x.shape:
                y = np.broadcast_to(y, x.shape).astype(float)
        except (TypeError, ValueError):
            y = np.array([float(f(float(t))) for t in x.ravel()]).reshape(x.shape)
    return y


@dataclass(frozen=True, eq=False)
class PiecewiseLinearFn:
    """Continuous piecewise affine function given by its nodal values."""

    partition: Partition
    nodal_values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.nodal_values, dtype=float)
        if v.shape != (self.partition.n_cells + 1,):
            raise InvalidArgumentError("need one nodal value per partition node")
        object.__setattr__(self, "nodal_values", v)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.nodal_values) / self.partition.widths

    def __call__(self, x):
        return np.interp(x, self.partition.nodes, self.nodal_values)

    def prolong(self, fine: Partition) -> "PiecewiseLinearFn":
        """Exact representation on a refinement of the partition."""
        if not fine.refines(self.partition):
            raise InvalidArgumentError("target partition does not refine the source")
        return PiecewiseLinearFn(fine, np.interp(fine.nodes, self.partition.nodes, self.nodal_values))

    def _combine(self, other, op):
        if isinstance(other, PiecewiseLinearFn):
            if other.partition != self.partition:
                raise InvalidArgumentError("functions live on different partitions")
            return PiecewiseLinearFn(self.partition, op(self.nodal_values, other.nodal_values))
        return PiecewiseLinearFn(self.partition, op(self.nodal_values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return PiecewiseLinearFn(self.partition, self.nodal_values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class PiecewiseConstantFn:
    """Piecewise constant function given by one value per cell."""

    partition: Partition
    cell_values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.cell_values, dtype=float)
        if v.shape != (self.partition.n_cells,):
            raise InvalidArgumentError("need one value per partition cell")
        object.__setattr__(self, "cell_values", v)

    def __call__(self, x):
        j = np.searchsorted(self.partition.nodes, x, side="right") - 1
        j = np.clip(j, 0, self.partition.n_cells - 1)
        return self.cell_values[j]

    def prolong(self, fine: Partition) -> "PiecewiseConstantFn":
        """Value replication on the cells of a refinement."""
        if not fine.refines(self.partition):
            raise InvalidArgumentError("target partition does not refine the source")
        return PiecewiseConstantFn(fine, self(fine.midpoints))

    def _combine(self, other, op):
        if isinstance(other, PiecewiseConstantFn):
            if other.partition != self.partition:
                raise InvalidArgumentError("functions live on different partitions")
            return PiecewiseConstantFn(self.partition, op(self.cell_values, other.cell_values))
        return PiecewiseConstantFn(self.partition, op(self.cell_values, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return PiecewiseConstantFn(self.partition, self.cell_values * float(c))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class NodalTensorFn:
    """Function on the product mesh: nodal ((N+1)x(N+1)) or cell (NxN) values."""

    partition: Partition
    values: np.ndarray
    basis_kind: str = "nodal"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if self.basis_kind == "nodal":
            n = self.partition.n_cells + 1
        elif self.basis_kind == "cell":
            n = self.partition.n_cells
        else:
            raise InvalidArgumentError(f"unknown basis kind {self.basis_kind!r}")
        if v.shape != (n, n):
            raise InvalidArgumentError(f"{self.basis_kind} tensor must be {n}x{n}, got {v.shape}")
        object.__setattr__(self, "values", v)

    def prolong(self, fine: Partition) -> "NodalTensorFn":
        if not fine.refines(self.partition):
            raise InvalidArgumentError("target partition does not refine the source")
        if self.basis_kind == "nodal":
            P = _linear_prolongation(self.partition, fine)
        else:
            P = _constant_prolongation(self.partition, fine)
        return NodalTensorFn(fine, P @ self.values @ P.T, self.basis_kind)

    def _combine(self, other, op):
        if isinstance(other, NodalTensorFn):
            if other.partition != self.partition or other.basis_kind != self.basis_kind:
                raise InvalidArgumentError("tensors live on different grids")
            return NodalTensorFn(self.partition, op(self.values, other.values), self.basis_kind)
        return NodalTensorFn(self.partition, op(self.values, other), self.basis_kind)

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        return NodalTensorFn(self.partition, self.values * float(c), self.basis_kind)

    __rmul__ = __mul__


def _linear_prolongation(coarse: Partition, fine: Partition) -> np.ndarray:
    eye = np.eye(coarse.n_cells + 1)
    return np.stack([np.interp(fine.nodes, coarse.nodes, e) for e in eye], axis=1)


def _constant_prolongation(coarse: Partition, fine: Partition) -> np.ndarray:
    j = np.searchsorted(coarse.nodes, fine.midpoints, side="right") - 1
    P = np.zeros((fine.n_cells, coarse.n_cells))
    P[np.arange(fine.n_cells), j] = 1.0
    return P


@dataclass(frozen=True)
class SingularitySpec:
    """Point singularities of strength |x - s|^(-exponent) at the given locations."""

    locations: tuple = ()
    exponent: float = 0.0

    def __post_init__(self):
        loc = np.unique(np.asarray(self.locations, dtype=float).ravel())
        if loc.size and (loc[0] < 0.0 or loc[-1] > 1.0):
            raise InvalidArgumentError("singularity locations must lie in [0, 1]")
        object.__setattr__(self, "locations", tuple(loc.tolist()))
        object.__setattr__(self, "exponent", float(self.exponent))

    def jacobi_exponent(self, p: float) -> float:
        """Exponent of the Jacobi weight |x - s|^a for |f|^p, clipped to (-1, 0]."""
        a = -p * self.exponent
        if a <= -1.0:
            raise InvalidArgumentError(
                f"|f|^p with singular exponent {self.exponent} and p={p} is not integrable")
        return min(a, 0.0)


def nodal_interpolate(f: Callable, partition: Partition, zero_left: bool = True) -> PiecewiseLinearFn:
    """Nodal interpolant; with ``zero_left`` the value at x = 0 is set to 0."""
    x = partition.nodes
    vals = np.empty_like(x)
    if zero_left:
        vals[0] = 0.0
        vals[1:] = _evaluate(f, x[1:])
        _check_finite(np.concatenate(([0.0], vals[1:])), "function value at node")
    else:
        vals[:] = _evaluate(f, x)
        _check_finite(vals, "function value at node")
    return PiecewiseLinearFn(partition, vals)


def cell_average_project(antiderivative: Callable, partition: Partition) -> PiecewiseConstantFn:
    """Cell means (F(x_{j+1}) - F(x_j)) / (x_{j+1} - x_j) from an antiderivative F."""
    F = _evaluate(antiderivative, partition.nodes)
    _check_finite(F, "antiderivative value at node")
    return PiecewiseConstantFn(partition, np.diff(F) / partition.widths)


def midpoint_interpolate(f: Callable, partition: Partition) -> PiecewiseConstantFn:
    vals = _evaluate(f, partition.midpoints)
    _check_finite(vals, "function value at cell midpoint")
    return PiecewiseConstantFn(partition, vals)


def tensor_interpolate(f2: Callable, partition: Partition, basis_kind: str = "nodal") -> NodalTensorFn:
    """Tensor-product interpolant of f2 at (node, node) or (midpoint, midpoint) pairs."""
    if basis_kind == "nodal":
        pts = partition.nodes
    elif basis_kind == "cell":
        pts = partition.midpoints
    else:
        raise InvalidArgumentError(f"unknown basis kind {basis_kind!r}")
    X, Y = np.meshgrid(pts, pts, indexing="ij")
    with np.errstate(all="ignore"):
        vals = np.asarray(f2(X, Y), dtype=float)
    vals = np.broadcast_to(vals, X.shape).copy()
    if basis_kind == "nodal":
        vals[0, :] = 0.0
        vals[:, 0] = 0.0
    _check_finite(vals, "tensor sample")
    return NodalTensorFn(partition, vals, basis_kind)


def _check_p(p):
    if not p >= 1.0:
        raise InvalidArgumentError(f"norm exponent must satisfy p >= 1, got {p}")


def w1p_seminorm(v: PiecewiseLinearFn, p: float) -> float:
    """||v'||_{L^p(0,1)}, exact for piecewise affine v.

    On a uniform mesh this is h^(1/p - 1) * ||(v(x_i) - v(x_{i-1}))_i||_{l^p}.
    """
    _check_p(p)
    dv = np.abs(np.diff(v.nodal_values))
    hw = v.partition.widths
    if not np.any(dv):
        return 0.0
    if v.partition.kind == "uniform":
        h = 1.0 / v.partition.n_cells
        return h ** (1.0 / p - 1.0) * _lp_vector(dv, p)
    # (sum h_j^{1-p} |dv_j|^p)^{1/p}, scaled to avoid overflow
    slopes = dv / hw
    return _weighted_lp(slopes, hw, p)


def _lp_vector(a, p):
    m = np.max(np.abs(a))
    if m == 0.0:
        return 0.0
    return float(m * np.sum((np.abs(a) / m) ** p) ** (1.0 / p))


def _weighted_lp(values, weights, p):
    m = np.max(np.abs(values))
    if m == 0.0:
        return 0.0
    return float(m * np.sum(weights * (np.abs(values) / m) ** p) ** (1.0 / p))


def lp_norm_piecewise(v, p: float) -> float:
    """Exact L^p norm of a piecewise constant function (1-D) or cell tensor (2-D)."""
    _check_p(p)
    if isinstance(v, PiecewiseConstantFn):
        return _weighted_lp(v.cell_values, v.partition.widths, p)
    if isinstance(v, NodalTensorFn):
        if v.basis_kind != "cell":
            raise InvalidArgumentError("lp_norm_piecewise needs a cell-based tensor")
        w = v.partition.widths
        return _weighted_lp(v.values, np.outer(w, w), p)
    raise InvalidArgumentError(f"unsupported type {type(v).__name__}")


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    t, w = roots_legendre(n)
    return 0.5 * (t + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_jacobi(n: int, a: float):
    """Nodes and weights on [0, 1] for the weight z^a (singular at z = 0)."""
    if a == 0.0:
        return gauss_legendre(n)
    t, w = roots_jacobi(n, 0.0, a)
    return 0.5 * (t + 1.0), w * 0.5 ** (a + 1.0)


def _graded_cells(length, n_layers, sigma):
    """Cell boundaries 0 < length*sigma^(n-1) < ... < length*sigma < length."""
    k = np.arange(n_layers - 1, -1, -1, dtype=float)
    return np.concatenate(([0.0], length * sigma ** k))


def singular_rule(singular_points: Sequence[float], a: float, cells_per_piece: int = 16,
                  nodes_per_cell: int = 8, sigma: float = 0.25,
                  breaks: Optional[Sequence[float]] = None):
    """Composite rule on [0, 1] for integrands behaving like |x - s|^a near each s.

    Returns nodes and effective weights.  The interval is split at every
    singular point (and at the extra ``breaks``).  A piece with a singular end
    is halved if both ends are singular; each half is cut into
    ``cells_per_piece`` geometrically graded cells toward the singular end.
    The innermost cell uses the Gauss-Jacobi rule for the weight |x - s|^a,
    the weight being folded back into the returned weights so the rule is
    applied to the integrand itself.  Cells away from singular points use
    Gauss-Legendre.

    Nodes are absolute positions, so grading so deep that the innermost
    cell approaches the spacing of doubles near s loses accuracy in x - s.
    """
    sing = np.unique(np.asarray(singular_points, dtype=float))
    pts = np.unique(np.concatenate(([0.0, 1.0], sing, np.asarray(breaks if breaks is not None else [], float))))
    pts = pts[(pts >= 0.0) & (pts <= 1.0)]
    is_sing = np.isin(pts, sing)
    gl_x, gl_w = gauss_legendre(nodes_per_cell)
    gj_x, gj_w = gauss_jacobi(nodes_per_cell, float(a))
    # weight z^a folded back: integral of g ~ sum w_i z_i^{-a} g(z_i)
    gj_weff = gj_w * gj_x ** (-a)
    grade = _graded_cells(1.0, cells_per_piece, sigma)
    inner = grade[1]
    g_left = grade[1:-1]
    g_right = grade[2:]

    lo = pts[:-1]
    hi = pts[1:]
    sl = is_sing[:-1]
    sr = is_sing[1:]
    xs, ws = [], []

    def smooth(a_, b_, ncell):
        e = a_[:, None] + (b_ - a_)[:, None] * np.linspace(0.0, 1.0, ncell + 1)[None, :]
        c0, c1 = e[:, :-1].ravel(), e[:, 1:].ravel()
        d = (c1 - c0)[:, None]
        xs.append((c0[:, None] + d * gl_x[None, :]).ravel())
        ws.append((d * gl_w[None, :]).ravel())

    def graded(s, length, direction):
        # direction +1: singularity at left end s, cells extend to the right
        L = length[:, None]
        # Jacobi cell [0, inner*L]
        xs.append((s[:, None] + direction * inner * L * gj_x[None, :]).ravel())
        ws.append((inner * L * gj_weff[None, :]).ravel())
        if cells_per_piece > 1:
            c0 = (L * g_left[None, :]).ravel()
            c1 = (L * g_right[None, :]).ravel()
            d = (c1 - c0)[:, None]
            loc = c0[:, None] + d * gl_x[None, :]
            srep = np.repeat(s, g_left.size)[:, None]
            xs.append((srep + direction * loc).ravel())
            ws.append((d * gl_w[None, :]).ravel())

    both = sl & sr
    only_l = sl & ~sr
    only_r = sr & ~sl
    none = ~sl & ~sr
    if np.any(none):
        smooth(lo[none], hi[none], cells_per_piece)
    if np.any(only_l):
        graded(lo[only_l], hi[only_l] - lo[only_l], 1.0)
    if np.any(only_r):
        graded(hi[only_r], hi[only_r] - lo[only_r], -1.0)
    if np.any(both):
        half = 0.5 * (hi[both] - lo[both])
        graded(lo[both], half, 1.0)
        graded(hi[both], half, -1.0)
    x = np.concatenate(xs) if xs else np.empty(0)
    w = np.concatenate(ws) if ws else np.empty(0)
    return x, w


def lp_norm_quadrature(f: Callable, p: float, singularities: Optional[SingularitySpec] = None,
                       cells_per_piece: int = 16, nodes_per_cell: int = 8,
                       adaptive: bool = True, rtol: float = 1e-9, max_doublings: int = 4) -> float:
    """L^p(0,1) norm of ``f`` by composite Gauss-Jacobi / Gauss-Legendre quadrature.

    With ``adaptive`` the number of nodes per cell is doubled until two
    successive values agree to relative ``rtol`` (at most ``max_doublings``
    doublings).
    """
    _check_p(p)
    spec = singularities if singularities is not None else SingularitySpec()
    a = spec.jacobi_exponent(p) if spec.locations else 0.0

    def integral(n):
        x, w = singular_rule(spec.locations, a, cells_per_piece, n)
        fx = _evaluate(f, x)
        if not np.all(np.isfinite(fx)):
            raise NumericalError("non-finite integrand value in quadrature")
        s = float(np.sum(w * np.abs(fx) ** p))
        if not np.isfinite(s):
            raise NumericalError("non-finite partial sum in quadrature")
        return s

    n = int(nodes_per_cell)
    val = integral(n)
    if adaptive:
        for _ in range(max_doublings):
            n *= 2
            new = integral(n)
            done = abs(new - val) <= rtol * abs(new)
            val = new
            if done:
                break
    return val ** (1.0 / p)
