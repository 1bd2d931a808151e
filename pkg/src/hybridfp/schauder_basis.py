"""Faber-Schauder projections on ``[0, rho]`` and ``[0, rho]^2``.

The partial sums of the Faber-Schauder system interpolate a function at the
first ``n`` nodes of the dyadic sequence ``0, 1, 1/2, 1/4, 3/4, 1/8, ...``.
Projections are therefore represented directly by their piecewise-linear
(1-D) or bilinear (2-D) interpolants, which also admit exact integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from hybridfp.errors import InvalidArgumentError

ArrayLike = Union[float, np.ndarray]


def _unit_dyadic_nodes(n: int) -> list[float]:
    nodes = [0.0, 1.0]
    level = 1
    while len(nodes) < n:
        denom = 2 ** level
        for j in range(1, denom, 2):
            nodes.append(j / denom)
            if len(nodes) == n:
                break
        level += 1
    return nodes[:n]


@dataclass(frozen=True)
class DyadicNodeOrder:
    """First ``count`` dyadic nodes of ``[0, rho]`` in natural order."""

    rho: float
    count: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise InvalidArgumentError(f"rho must be positive, got {self.rho}")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidArgumentError(f"node count must be an integer >= 2, got {self.count}")

    @property
    def nodes(self) -> np.ndarray:
        """Nodes in natural order, as a fresh array."""
        return self.rho * np.array(_unit_dyadic_nodes(int(self.count)))

    def sorted(self) -> np.ndarray:
        """Nodes in increasing order."""
        return np.sort(self.nodes)

    def __len__(self) -> int:
        return int(self.count)


def node_sequence(rho: float, n: int) -> DyadicNodeOrder:
    """Return the first ``n`` naturally ordered dyadic nodes of ``[0, rho]``."""
    return DyadicNodeOrder(float(rho), n)


def _as_domain_array(t: ArrayLike, rho: float, name: str = "t") -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > rho):
        raise InvalidArgumentError(f"{name} must lie in [0, {rho}]")
    return arr


def _cell_index(nodes: np.ndarray, t: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(nodes, t, side="right") - 1
    return np.clip(idx, 0, len(nodes) - 2)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PiecewiseLinear1D:
    """Continuous piecewise-linear function on ``[0, rho]``.

    Parameters
    ----------
    nodes : ndarray
        Strictly increasing break points, first 0 and last ``rho``.
    values : ndarray
        Function values at ``nodes``.
    """

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        nodes = _frozen(self.nodes)
        values = _frozen(self.values)
        if nodes.ndim != 1 or nodes.shape != values.shape or len(nodes) < 2:
            raise InvalidArgumentError("nodes and values must be 1-D arrays of equal length >= 2")
        if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
            raise InvalidArgumentError("nodes must start at 0 and be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("values must be finite")
        widths = np.diff(nodes)
        cumulative = np.concatenate(([0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * widths)))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_cumulative", _frozen(cumulative))

    @property
    def rho(self) -> float:
        return float(self.nodes[-1])

    def __call__(self, t: ArrayLike) -> ArrayLike:
        arr = _as_domain_array(t, self.rho)
        out = np.interp(arr, self.nodes, self.values)
        return float(out) if np.ndim(t) == 0 else out

    def integral(self, t: ArrayLike) -> ArrayLike:
        """Exact integral from 0 to ``t``."""
        return integrate_prefix(self, t)


@dataclass(frozen=True, eq=False)
class Bilinear2D:
    """Tensor piecewise-linear interpolant on ``[0, rho]^2``.

    ``values[i, j]`` is the value at ``(nodes_t[i], nodes_s[j])``.
    """

    nodes_t: np.ndarray
    nodes_s: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        nt, ns, vals = _frozen(self.nodes_t), _frozen(self.nodes_s), _frozen(self.values)
        for nodes in (nt, ns):
            if nodes.ndim != 1 or len(nodes) < 2 or nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
                raise InvalidArgumentError("grid nodes must start at 0 and be strictly increasing")
        if nt[-1] != ns[-1]:
            raise InvalidArgumentError("both axes must cover the same interval")
        if vals.shape != (len(nt), len(ns)) or not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("values must be a finite array of shape (len(nodes_t), len(nodes_s))")
        object.__setattr__(self, "nodes_t", nt)
        object.__setattr__(self, "nodes_s", ns)
        object.__setattr__(self, "values", vals)

    @property
    def rho(self) -> float:
        return float(self.nodes_t[-1])

    def rows(self, t: ArrayLike) -> np.ndarray:
        """Values on the ``s`` grid of the slices at ``t``; shape ``(len(t), ns)``."""
        arr = np.atleast_1d(_as_domain_array(t, self.rho))
        i = _cell_index(self.nodes_t, arr)
        lam = (arr - self.nodes_t[i]) / (self.nodes_t[i + 1] - self.nodes_t[i])
        lo, hi = self.values[i], self.values[i + 1]
        # an exact convex blend keeps grid values bit-exact at lam == 0
        return lo + lam[:, None] * (hi - lo)

    def slice_at(self, t: float) -> PiecewiseLinear1D:
        """Restriction to a fixed ``t`` as a function of ``s``."""
        return PiecewiseLinear1D(self.nodes_s, self.rows(t)[0])

    def __call__(self, t: ArrayLike, s: ArrayLike) -> ArrayLike:
        tb, sb = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
        rows = self.rows(tb.ravel())
        sv = _as_domain_array(sb.ravel(), self.rho, "s")
        j = _cell_index(self.nodes_s, sv)
        mu = (sv - self.nodes_s[j]) / (self.nodes_s[j + 1] - self.nodes_s[j])
        k = np.arange(len(sv))
        lo, hi = rows[k, j], rows[k, j + 1]
        out = (lo + mu * (hi - lo)).reshape(tb.shape)
        return float(out) if out.ndim == 0 else out


def _sample(func: Callable, *grids: np.ndarray) -> np.ndarray:
    out = np.asarray(func(*grids), dtype=float)
    return np.broadcast_to(out, np.broadcast(*grids).shape).copy()


def project_1d(samples_of: Callable, n: int, rho: float = 1.0) -> PiecewiseLinear1D:
    """Project a function onto the span of the first ``n`` Faber-Schauder functions.

    ``samples_of`` is called once with the array of sorted nodes and may
    return a scalar for constant functions.
    """
    nodes = node_sequence(rho, n).sorted()
    return PiecewiseLinear1D(nodes, _sample(samples_of, nodes))


def project_2d(samples_of: Callable, n_per_dim: int, rho: float = 1.0) -> Bilinear2D:
    """Project a function of ``(t, s)`` onto the ``n_per_dim x n_per_dim`` tensor grid."""
    nodes = node_sequence(rho, n_per_dim).sorted()
    tt, ss = np.meshgrid(nodes, nodes, indexing="ij")
    return Bilinear2D(nodes, nodes, _sample(samples_of, tt, ss))


def integrate_prefix(pl: PiecewiseLinear1D, t: ArrayLike) -> ArrayLike:
    """Exact integral of ``pl`` over ``[0, t]``."""
    arr = _as_domain_array(t, pl.rho)
    i = _cell_index(pl.nodes, arr)
    dt = arr - pl.nodes[i]
    slope = (pl.values[i + 1] - pl.values[i]) / (pl.nodes[i + 1] - pl.nodes[i])
    out = pl._cumulative[i] + pl.values[i] * dt + 0.5 * slope * dt * dt
    return float(out) if np.ndim(t) == 0 else out


def integrate_rows(nodes: np.ndarray, rows: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Integrate each piecewise-linear row of ``rows`` from 0 to ``upper[k]``."""
    widths = np.diff(nodes)
    cumulative = np.concatenate(
        (np.zeros((rows.shape[0], 1)), np.cumsum(0.5 * (rows[:, 1:] + rows[:, :-1]) * widths, axis=1)),
        axis=1,
    )
    j = _cell_index(nodes, upper)
    k = np.arange(rows.shape[0])
    ds = upper - nodes[j]
    slope = (rows[k, j + 1] - rows[k, j]) / widths[j]
    return cumulative[k, j] + rows[k, j] * ds + 0.5 * slope * ds * ds


def integrate_partial_2d(b: Bilinear2D, t: ArrayLike, s_upper: ArrayLike) -> ArrayLike:
    """Exact integral over ``s`` in ``[0, s_upper]`` of ``b(t, s)``."""
    tb, ub = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s_upper, dtype=float))
    upper = _as_domain_array(ub.ravel(), b.rho, "s_upper")
    out = integrate_rows(b.nodes_s, b.rows(tb.ravel()), upper).reshape(tb.shape)
    return float(out) if out.ndim == 0 else out
