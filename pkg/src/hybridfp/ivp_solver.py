"""Nonlocal hybrid differential problem.

Solves ``d/dt (x / f(t, x)) = g(t, x)`` on ``[0, rho]`` with ``x(0) = Gamma(x)``
through the equivalent fixed-point form ``x = F(x) * G(x)`` where::

    F(x)(t) = f(t, x(t))
    G(x)(t) = Gamma(x) / f(0, x(0)) + int_0^t g(s, x(s)) ds
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from hybridfp.errors import InvalidArgumentError, InvalidProblemError, SingularOperatorError
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
from hybridfp.schauder_basis import PiecewiseLinear1D, integrate_prefix, node_sequence

LAYOUTS = ("standard", "lagged")

# sup handle passed to Gamma: FunctionExpr -> float
SupHandle = Callable[[FunctionExpr], float]


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class NonlocalIVP:
    """Data of the nonlocal problem and its Lipschitz bounds.

    ``f(t, x)`` and ``g(t, x)`` must accept numpy arrays. ``Gamma(x, sup)``
    receives the iterate and a sup-norm handle. ``alpha``/``phi`` and
    ``gamma``/``psi`` are the D-Lipschitz data of ``f`` and ``g`` on the
    ball of radius ``r``.
    """

    f: Callable
    g: Callable
    Gamma: Callable[[FunctionExpr, SupHandle], float]
    rho: float = 1.0
    r: float = 1.0
    delta: float = 1.0
    L_Gamma: float = 0.0
    alpha: Callable = _zero
    phi: DFunction = field(default_factory=DFunction.zero)
    gamma: Callable = _zero
    psi: DFunction = field(default_factory=DFunction.zero)
    exact: Optional[Callable] = None
    guard: float = 1e-12
    sup_level: int = 12
    name: str = "P1"

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise InvalidProblemError("rho must be positive")
        if not self.r > 0:
            raise InvalidProblemError("r must be positive")
        if not self.delta > 0:
            raise InvalidProblemError("delta must be positive")
        if not self.L_Gamma >= 0:
            raise InvalidProblemError("L_Gamma must be nonnegative")

    def sup(self, x: FunctionExpr) -> float:
        return sup_norm(x, self.sup_level, self.rho)

    def gamma_value(self, x: FunctionExpr) -> float:
        return float(self.Gamma(x, self.sup))

    def validate(self, samples: int = 1000) -> None:
        """Check ``|f(0, x)| >= 1/delta`` for sampled ``|x| <= r``."""
        xs = np.linspace(-self.r, self.r, samples)
        f0 = np.abs(np.broadcast_to(np.asarray(self.f(np.zeros_like(xs), xs), dtype=float), xs.shape))
        # relative slack absorbs the rounding of 1/delta
        if np.any(f0 * self.delta < 1.0 - 1e-12):
            raise InvalidProblemError("|f(0, x)| < 1/delta for some |x| <= r")


def _initial_factor(p: NonlocalIVP, x: FunctionExpr) -> float:
    """``Gamma(x) / f(0, x(0))`` with the singularity guard."""
    x0 = x(np.zeros(1))
    denom = float(np.asarray(p.f(np.zeros(1), x0), dtype=float).ravel()[0])
    if not abs(denom) > p.guard:
        raise SingularOperatorError(f"|f(0, x(0))| = {abs(denom):.3g} is below {p.guard:g}")
    return p.gamma_value(x) / denom


def apply_F(p: NonlocalIVP, x: FunctionExpr, quad_panels: Optional[int] = None) -> FunctionExpr:
    """``t -> f(t, x(t))``; ``quad_panels`` is accepted for operator symmetry."""
    x = as_expr(x, p.rho)
    return FunctionExpr(lambda t: p.f(t, x(t)), f"f(t, {x.tag})", p.rho)


def apply_G(p: NonlocalIVP, x: FunctionExpr, quad_panels: int = 4096) -> FunctionExpr:
    """``G(x)`` with the integral evaluated by composite trapezoid.

    The panels are a uniform partition of ``[0, rho]``; the last, partial
    panel up to ``t`` uses the trapezoid rule as well.
    """
    if quad_panels < 1:
        raise InvalidArgumentError("quad_panels must be >= 1")
    x = as_expr(x, p.rho)
    c = _initial_factor(p, x)
    h = p.rho / quad_panels
    s = p.rho * (np.arange(quad_panels + 1) / quad_panels)
    gs = np.asarray(p.g(s, x(s)), dtype=float) * np.ones_like(s)
    cumulative = np.concatenate(([0.0], np.cumsum(0.5 * h * (gs[1:] + gs[:-1]))))

    def evaluate(t: np.ndarray) -> np.ndarray:
        k = np.clip(np.floor(t / h).astype(int), 0, quad_panels - 1)
        gt = np.asarray(p.g(t, x(t)), dtype=float) * np.ones_like(t)
        return c + cumulative[k] + 0.5 * (t - s[k]) * (gs[k] + gt)

    return FunctionExpr(evaluate, f"G({x.tag})", p.rho)


def _lagged_values(nodes: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, float]:
    """Node values and constant offset of the lagged layout.

    The sample at the second node is discarded and the first sample is
    carried by a full hat centred at the origin. The right half of that
    hat doubles the first node value; the left half adds a constant.
    """
    out = values.copy()
    h = nodes[1] - nodes[0]
    out[0] = 2.0 * values[0]
    out[1] = 0.0
    return out, 0.5 * h * values[0]


def step_T(p: NonlocalIVP, n_p: int, x: FunctionExpr, layout: str = "standard") -> FunctionExpr:
    """One projected step ``T_p(x)``.

    ``s -> g(s, x(s))`` is replaced by its interpolant at the first ``n_p``
    dyadic nodes and integrated exactly. ``layout="lagged"`` selects the
    shifted node layout described in :func:`_lagged_values`.
    """
    if layout not in LAYOUTS:
        raise InvalidArgumentError(f"layout must be one of {LAYOUTS}")
    x = as_expr(x, p.rho)
    nodes = node_sequence(p.rho, n_p).sorted()
    values = np.asarray(p.g(nodes, x(nodes)), dtype=float) * np.ones_like(nodes)
    offset = 0.0
    if layout == "lagged":
        values, offset = _lagged_values(nodes, values)
    pl = PiecewiseLinear1D(nodes, values)
    c = _initial_factor(p, x) + offset

    def evaluate(t: np.ndarray) -> np.ndarray:
        return np.asarray(p.f(t, x(t)), dtype=float) * (c + integrate_prefix(pl, t))

    return FunctionExpr(evaluate, f"T{n_p}({x.tag})", p.rho)


def oracle_operators(p: NonlocalIVP) -> tuple[Callable, Callable]:
    """``(F, G)`` in the calling convention of :func:`picard_iterate`."""
    return (lambda x, quad_panels=4096: apply_F(p, x),
            lambda x, quad_panels=4096: apply_G(p, x, quad_panels))


def _grid_sup(fn: Callable, rho: float, level: int = 12) -> float:
    t = uniform_grid(level, rho)
    return float(np.max(np.abs(np.asarray(fn(t), dtype=float) * np.ones_like(t))))


def certificate(p: NonlocalIVP, samples: int = 1000) -> ContractionCertificate:
    """Bounds ``M_F``, ``M_G`` and the contraction estimate ``Theta``.

    Uses::

        M_F = |alpha| phi(r) + |f(., 0)|
        M_G = delta (L r + |Gamma(0)|) + |gamma| rho psi(r) + rho |g(., 0)|
        Theta(t) = M_F delta L t
                   + (M_F delta^2 alpha(0) (L r + |Gamma(0)|) + M_G |alpha|) phi(t)
                   + M_F |gamma|_L1 psi(t)

    Sup norms of the data are sampled on ``2**12 + 1`` points.
    """
    rho, r = p.rho, p.r
    t = uniform_grid(12, rho)
    alpha_sup = _grid_sup(p.alpha, rho)
    gamma_sup = _grid_sup(p.gamma, rho)
    gamma_vals = np.abs(np.asarray(p.gamma(t), dtype=float) * np.ones_like(t))
    gamma_l1 = float(np.sum(0.5 * (gamma_vals[1:] + gamma_vals[:-1]) * np.diff(t)))
    f0 = _grid_sup(lambda s: p.f(s, np.zeros_like(s)), rho)
    g0 = _grid_sup(lambda s: p.g(s, np.zeros_like(s)), rho)
    alpha0 = abs(float(np.asarray(p.alpha(np.zeros(1)), dtype=float).ravel()[0]))
    gamma_at_zero = abs(p.gamma_value(FunctionExpr.constant(0.0, rho)))
    L = p.L_Gamma

    M_F = alpha_sup * float(p.phi(r)) + f0
    M_G = p.delta * (L * r + gamma_at_zero) + gamma_sup * rho * float(p.psi(r)) + rho * g0
    c_lin = M_F * p.delta * L
    c_phi = M_F * p.delta ** 2 * alpha0 * (L * r + gamma_at_zero) + M_G * alpha_sup
    c_psi = M_F * gamma_l1
    phi, psi = p.phi, p.psi
    theta = DFunction(
        lambda s: c_lin * s + c_phi * phi(s) + c_psi * psi(s),
        f"{c_lin:.6g}*t + {c_phi:.6g}*phi(t) + {c_psi:.6g}*psi(t)",
    )
    return check_certificate(M_F, M_G, theta, r, samples)


@dataclass
class SolveReport:
    """Outcome of a chain run."""

    iterates: list[FunctionExpr]
    n_list: list[int]
    certificate: ContractionCertificate
    residual: float
    error: Optional[float]
    runtime_ms: float
    layout: str = "standard"

    @property
    def solution(self) -> FunctionExpr:
        return self.iterates[-1]

    @property
    def m(self) -> int:
        return len(self.iterates)


def normalize_n_list(m: int, n_list: Union[int, Sequence[int]]) -> list[int]:
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    if np.ndim(n_list) == 0:
        return [int(n_list)] * m
    out = [int(n) for n in n_list]
    if len(out) != m:
        raise InvalidArgumentError(f"n_list has {len(out)} entries, expected {m}")
    return out


def solve_ivp(p: NonlocalIVP, x0: Union[FunctionExpr, Callable, float], m: int,
              n_list: Union[int, Sequence[int]], layout: str = "standard",
              quad_panels: int = 4096) -> SolveReport:
    """Run ``m`` projected steps and collect residual, error and certificate."""
    start = time.perf_counter()
    ns = normalize_n_list(m, n_list)
    p.validate()
    steps = [lambda x, n=n: step_T(p, n, x, layout) for n in ns]
    iterates = run_chain(steps, as_expr(x0, p.rho))
    xt = iterates[-1]
    F, G = oracle_operators(p)
    residual = sup_norm(xt - F(xt) * G(xt, quad_panels=quad_panels), p.sup_level, p.rho)
    error = None
    if p.exact is not None:
        error = sup_norm(xt - as_expr(p.exact, p.rho), p.sup_level, p.rho)
    cert = certificate(p)
    return SolveReport(iterates, ns, cert, residual, error, 1e3 * (time.perf_counter() - start), layout)
