"""Hybrid Volterra-type integral equation.

Solves ``x(t) = f(t, x(sigma(t))) * [q(t) + int_0^eta(t) K(t, s, x(tau(s))) ds]``
on ``[0, rho]`` as the fixed point of ``F(x) * G(x)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from hybridfp.errors import InvalidArgumentError, InvalidProblemError
from hybridfp.hybrid_core import (
    ContractionCertificate,
    DFunction,
    FunctionExpr,
    as_expr,
    check_certificate,
    run_chain,
    sup_norm,
    uniform_grid,
)
from hybridfp.ivp_solver import LAYOUTS, SolveReport, normalize_n_list
from hybridfp.schauder_basis import Bilinear2D, integrate_partial_2d, node_sequence


def _zero(*args):
    return np.zeros(np.broadcast(*[np.asarray(a, dtype=float) for a in args]).shape)


def _arr(value, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(value, dtype=float), shape).astype(float, copy=True)


@dataclass(frozen=True)
class HybridIntegralEq:
    """Data of the integral equation and its Lipschitz bounds.

    ``f(t, x)``, ``q(t)``, ``K(t, s, x)`` and the deviation maps must accept
    numpy arrays. ``sigma``, ``tau`` and ``eta`` default to the identity.
    """

    f: Callable
    q: Callable
    K: Callable
    rho: float = 1.0
    sigma: Optional[Callable] = None
    tau: Optional[Callable] = None
    eta: Optional[Callable] = None
    r: float = 1.0
    alpha: Callable = _zero
    phi: DFunction = field(default_factory=DFunction.zero)
    gamma: Callable = _zero
    psi: DFunction = field(default_factory=DFunction.zero)
    exact: Optional[Callable] = None
    sup_level: int = 12
    name: str = "P2"

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise InvalidProblemError("rho must be positive")
        if not self.r > 0:
            raise InvalidProblemError("r must be positive")

    def map_sigma(self, t: np.ndarray) -> np.ndarray:
        return t if self.sigma is None else _arr(self.sigma(t), t.shape)

    def map_tau(self, t: np.ndarray) -> np.ndarray:
        return t if self.tau is None else _arr(self.tau(t), t.shape)

    def map_eta(self, t: np.ndarray) -> np.ndarray:
        if self.eta is None:
            return t
        u = _arr(self.eta(t), t.shape)
        if np.any(~np.isfinite(u)) or np.any(u < 0) or np.any(u > self.rho):
            raise InvalidProblemError("eta maps outside [0, rho]")
        return u

    def validate(self, samples: int = 1000) -> None:
        """Check that the deviation maps send ``[0, rho]`` into itself."""
        t = np.linspace(0.0, self.rho, samples)
        for name in ("sigma", "tau", "eta"):
            fn = getattr(self, name)
            if fn is None:
                continue
            u = _arr(fn(t), t.shape)
            if np.any(~np.isfinite(u)) or np.any(u < 0) or np.any(u > self.rho):
                raise InvalidProblemError(f"{name} maps outside [0, rho]")


def apply_F_int(p: HybridIntegralEq, x: FunctionExpr, quad_panels: Optional[int] = None) -> FunctionExpr:
    """``t -> f(t, x(sigma(t)))``."""
    x = as_expr(x, p.rho)
    return FunctionExpr(lambda t: p.f(t, x(p.map_sigma(t))), f"f(t, {x.tag})", p.rho)


def apply_G_int(p: HybridIntegralEq, x: FunctionExpr, quad_panels: int = 4096,
                chunk: int = 256) -> FunctionExpr:
    """``G(x)`` with the inner integral by composite trapezoid.

    The panels partition ``[0, rho]`` uniformly; the partial panel ending at
    ``eta(t)`` uses the trapezoid rule too.
    """
    if quad_panels < 1:
        raise InvalidArgumentError("quad_panels must be >= 1")
    x = as_expr(x, p.rho)
    h = p.rho / quad_panels
    s = p.rho * (np.arange(quad_panels + 1) / quad_panels)
    xs = x(p.map_tau(s))

    def evaluate(t: np.ndarray) -> np.ndarray:
        u = p.map_eta(t)
        xu = x(p.map_tau(u))
        k = np.clip(np.floor(u / h).astype(int), 0, quad_panels - 1)
        out = np.empty_like(t)
        for lo in range(0, len(t), chunk):
            sl = slice(lo, lo + chunk)
            tt = t[sl, None]
            rows = _arr(p.K(tt, s[None, :], xs[None, :]), (len(tt), len(s)))
            cumulative = np.concatenate(
                (np.zeros((len(tt), 1)), np.cumsum(0.5 * h * (rows[:, 1:] + rows[:, :-1]), axis=1)), axis=1)
            kk = k[sl]
            idx = np.arange(len(kk))
            end = _arr(p.K(t[sl], u[sl], xu[sl]), kk.shape)
            out[sl] = cumulative[idx, kk] + 0.5 * (u[sl] - s[kk]) * (rows[idx, kk] + end)
        return _arr(p.q(t), t.shape) + out

    return FunctionExpr(evaluate, f"G({x.tag})", p.rho)


def _lagged_grid(values: np.ndarray) -> np.ndarray:
    """Shift the ``s`` samples one node to the right and clear the second node.

    Node ``j >= 2`` receives the sample taken at node ``j - 1``; the sample at
    the last node is dropped.
    """
    out = values.copy()
    out[:, 1] = 0.0
    out[:, 2:] = values[:, 1:-1]
    return out


def step_T_int(p: HybridIntegralEq, n_per_dim: int, x: FunctionExpr, layout: str = "standard") -> FunctionExpr:
    """One projected step on the ``n_per_dim x n_per_dim`` grid.

    ``(t, s) -> K(t, s, x(tau(s)))`` is interpolated bilinearly and integrated
    exactly in ``s`` up to ``eta(t)``.
    """
    if layout not in LAYOUTS:
        raise InvalidArgumentError(f"layout must be one of {LAYOUTS}")
    x = as_expr(x, p.rho)
    nodes = node_sequence(p.rho, n_per_dim).sorted()
    xs = x(p.map_tau(nodes))
    values = _arr(p.K(nodes[:, None], nodes[None, :], xs[None, :]), (len(nodes), len(nodes)))
    if layout == "lagged":
        values = _lagged_grid(values)
    grid = Bilinear2D(nodes, nodes, values)

    def evaluate(t: np.ndarray) -> np.ndarray:
        inner = integrate_partial_2d(grid, t, p.map_eta(t))
        return _arr(p.f(t, x(p.map_sigma(t))), t.shape) * (_arr(p.q(t), t.shape) + inner)

    return FunctionExpr(evaluate, f"T{n_per_dim}({x.tag})", p.rho)


def oracle_operators(p: HybridIntegralEq) -> tuple[Callable, Callable]:
    """``(F, G)`` in the calling convention of :func:`picard_iterate`."""
    return (lambda x, quad_panels=4096: apply_F_int(p, x),
            lambda x, quad_panels=4096: apply_G_int(p, x, quad_panels))


def certificate(p: HybridIntegralEq, samples: int = 1000, level: int = 8) -> ContractionCertificate:
    """Bounds and contraction estimate::

        M_F = |alpha| phi(r) + |f(., 0)|
        M_G = |q| + rho (|gamma| psi(r) + |K(., ., 0)|)
        Theta(t) = rho |gamma| M_F psi(t) + |alpha| M_G phi(t)

    One-dimensional sups use ``2**12 + 1`` samples, two-dimensional ones a
    ``(2**level + 1)^2`` grid.
    """
    rho, r = p.rho, p.r
    t = uniform_grid(12, rho)
    g2 = uniform_grid(level, rho)
    tt, ss = np.meshgrid(g2, g2, indexing="ij")
    alpha_sup = float(np.max(np.abs(_arr(p.alpha(t), t.shape))))
    f0 = float(np.max(np.abs(_arr(p.f(t, np.zeros_like(t)), t.shape))))
    q_sup = float(np.max(np.abs(_arr(p.q(t), t.shape))))
    gamma_sup = float(np.max(np.abs(_arr(p.gamma(tt, ss), tt.shape))))
    k0 = float(np.max(np.abs(_arr(p.K(tt, ss, np.zeros_like(tt)), tt.shape))))

    M_F = alpha_sup * float(p.phi(r)) + f0
    M_G = q_sup + rho * (gamma_sup * float(p.psi(r)) + k0)
    c_psi = rho * gamma_sup * M_F
    c_phi = alpha_sup * M_G
    phi, psi = p.phi, p.psi
    theta = DFunction(lambda u: c_psi * psi(u) + c_phi * phi(u),
                      f"{c_psi:.6g}*psi(t) + {c_phi:.6g}*phi(t)")
    return check_certificate(M_F, M_G, theta, r, samples)


def solve_integral(p: HybridIntegralEq, x0: Union[FunctionExpr, Callable, float], m: int,
                   n_list: Union[int, Sequence[int]], layout: str = "standard",
                   quad_panels: int = 4096) -> SolveReport:
    """Run ``m`` projected steps and collect residual, error and certificate."""
    start = time.perf_counter()
    ns = normalize_n_list(m, n_list)
    p.validate()
    steps = [lambda x, n=n: step_T_int(p, n, x, layout) for n in ns]
    iterates = run_chain(steps, as_expr(x0, p.rho))
    xt = iterates[-1]
    residual = sup_norm(xt - apply_F_int(p, xt) * apply_G_int(p, xt, quad_panels), p.sup_level, p.rho)
    error = None
    if p.exact is not None:
        error = sup_norm(xt - as_expr(p.exact, p.rho), p.sup_level, p.rho)
    cert = certificate(p)
    return SolveReport(iterates, ns, cert, residual, error, 1e3 * (time.perf_counter() - start), layout)
