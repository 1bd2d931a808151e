"""Generic machinery for the product fixed-point problem ``x = A(x) * B(x)``.

Iterates are kept as lazy :class:`FunctionExpr` trees evaluated on demand;
a memo table per node makes repeated evaluation at the same points cheap.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

from hybridfp.errors import InvalidArgumentError, InvalidCertificateError

ArrayLike = Union[float, np.ndarray]

_TAG_LIMIT = 80

_MEMO_ENABLED: contextvars.ContextVar[bool] = contextvars.ContextVar("hybridfp_memo", default=True)


@contextlib.contextmanager
def memoization(enabled: bool) -> Iterator[None]:
    """Temporarily switch memo lookups on or off for every :class:`FunctionExpr`."""
    token = _MEMO_ENABLED.set(bool(enabled))
    try:
        yield
    finally:
        _MEMO_ENABLED.reset(token)


class FunctionExpr:
    """Lazily evaluated real function on ``[0, rho]``.

    Parameters
    ----------
    fn : callable
        Vectorised kernel mapping a 1-D float array of points to values.
    tag : str
        Human-readable description used in reprs.
    rho : float
        Right end of the domain.
    memo : bool
        Cache values keyed by evaluation point.
    """

    __slots__ = ("_fn", "tag", "rho", "_memo", "_lock")

    def __init__(self, fn: Callable[[np.ndarray], ArrayLike], tag: str = "expr", rho: float = 1.0,
                 memo: bool = True) -> None:
        self._fn = fn
        # nested tags would otherwise grow geometrically with the depth of the tree
        self.tag = tag if len(tag) <= _TAG_LIMIT else tag[:_TAG_LIMIT - 3] + "..."
        self.rho = float(rho)
        self._memo: Optional[dict[float, float]] = {} if memo else None
        self._lock = threading.Lock()

    @classmethod
    def constant(cls, c: float, rho: float = 1.0) -> "FunctionExpr":
        c = float(c)
        return cls(lambda t: np.full(t.shape, c), tag=repr(c), rho=rho, memo=False)

    @classmethod
    def lift(cls, fn: Callable[[np.ndarray], ArrayLike], tag: str = "fn", rho: float = 1.0) -> "FunctionExpr":
        """Wrap a numpy-vectorised callable."""
        return cls(fn, tag=tag, rho=rho)

    def _raw(self, arr: np.ndarray) -> np.ndarray:
        out = np.asarray(self._fn(arr), dtype=float)
        return np.broadcast_to(out, arr.shape).astype(float, copy=True)

    def __call__(self, t: ArrayLike) -> ArrayLike:
        arr = np.asarray(t, dtype=float)
        flat = arr.ravel()
        memo = self._memo
        if memo is None or not _MEMO_ENABLED.get():
            out = self._raw(flat)
        else:
            keys = flat.tolist()
            got = [memo.get(k) for k in keys]
            missing = [i for i, v in enumerate(got) if v is None]
            if missing:
                fresh = self._raw(flat[missing])
                with self._lock:
                    for i, v in zip(missing, fresh.tolist()):
                        got[i] = memo.setdefault(keys[i], v)
            out = np.array(got, dtype=float)
        out = out.reshape(arr.shape)
        return float(out) if out.ndim == 0 else out

    def _combine(self, other: Union["FunctionExpr", float], op: Callable, sym: str) -> "FunctionExpr":
        if isinstance(other, FunctionExpr):
            return FunctionExpr(lambda t: op(self(t), other(t)), f"({self.tag} {sym} {other.tag})", self.rho)
        c = float(other)
        return FunctionExpr(lambda t: op(self(t), c), f"({self.tag} {sym} {c!r})", self.rho)

    def __add__(self, other):
        return self._combine(other, np.add, "+")

    def __sub__(self, other):
        return self._combine(other, np.subtract, "-")

    def __mul__(self, other):
        return self._combine(other, np.multiply, "*")

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> "FunctionExpr":
        return FunctionExpr(lambda t: -self(t), f"-{self.tag}", self.rho)

    def compose(self, inner: Callable[[np.ndarray], np.ndarray], tag: str = "map") -> "FunctionExpr":
        """Return ``t -> self(inner(t))``."""
        return FunctionExpr(lambda t: self(np.asarray(inner(t), dtype=float)), f"{self.tag}∘{tag}", self.rho)

    def __repr__(self) -> str:
        return f"FunctionExpr({self.tag})"


def as_expr(x: Union[FunctionExpr, Callable, float], rho: float = 1.0) -> FunctionExpr:
    """Coerce a constant or vectorised callable into a :class:`FunctionExpr`."""
    if isinstance(x, FunctionExpr):
        return x
    if callable(x):
        return FunctionExpr.lift(x, getattr(x, "__name__", "fn"), rho)
    return FunctionExpr.constant(float(x), rho)


@dataclass(frozen=True)
class DFunction:
    """Nondecreasing continuous map ``phi`` of ``[0, inf)`` with ``phi(0) = 0``."""

    fn: Callable[[ArrayLike], ArrayLike]
    formula: str = "phi"

    def __call__(self, t: ArrayLike) -> ArrayLike:
        out = np.asarray(self.fn(np.asarray(t, dtype=float)), dtype=float)
        out = np.broadcast_to(out, np.shape(t))
        return float(out) if out.ndim == 0 else out.copy()

    @classmethod
    def zero(cls) -> "DFunction":
        return cls(lambda t: np.zeros_like(t, dtype=float), "0")

    @classmethod
    def identity(cls) -> "DFunction":
        return cls(lambda t: np.asarray(t, dtype=float), "t")

    @classmethod
    def linear(cls, k: float) -> "DFunction":
        k = float(k)
        return cls(lambda t: k * np.asarray(t, dtype=float), f"{k!r}*t")

    def is_valid(self, r_max: float, samples: int = 1000) -> bool:
        """Check ``phi(0) == 0`` and monotonicity on a uniform grid of ``[0, r_max]``."""
        grid = np.linspace(0.0, r_max, samples)
        vals = self(grid)
        return bool(np.all(np.isfinite(vals)) and vals[0] == 0.0 and np.all(np.diff(vals) >= 0))

    def power(self, m: int) -> "DFunction":
        """Literal ``m``-fold composition."""
        if m < 0:
            raise InvalidArgumentError("composition power must be >= 0")

        def composed(t):
            out = np.asarray(t, dtype=float)
            for _ in range(m):
                out = self(out)
            return out

        return DFunction(composed, f"({self.formula})^{m}")


@dataclass(frozen=True)
class ContractionCertificate:
    """Sampled check of the ball and contraction hypotheses."""

    M_F: float
    M_G: float
    theta: DFunction
    r: float
    scan: tuple[tuple[float, float], ...] = field(repr=False)
    ball_condition: bool
    contraction_condition: bool

    @property
    def holds(self) -> bool:
        return self.ball_condition and self.contraction_condition

    def recompute(self) -> tuple[bool, bool]:
        """Recompute both booleans from the stored fields."""
        return (self.M_F * self.M_G <= self.r,
                all(th < ri for ri, th in self.scan))

    def worst_ratio(self) -> float:
        """Largest sampled ``Theta(r_i) / r_i``."""
        return max(th / ri for ri, th in self.scan)

    def to_dict(self) -> dict:
        return {
            "M_F": self.M_F,
            "M_G": self.M_G,
            "r": self.r,
            "theta": self.theta.formula,
            "max_theta_ratio": self.worst_ratio(),
            "ball_condition": self.ball_condition,
            "contraction_condition": self.contraction_condition,
        }


def check_certificate(M_F: float, M_G: float, theta: DFunction, r: float,
                      samples: int = 1000, decades: float = 9.0) -> ContractionCertificate:
    """Evaluate ``M_F * M_G <= r`` and ``Theta(t) < t`` on log-spaced ``t`` in ``(0, r]``.

    A failed condition is reported in the result, never raised.
    """
    if not (r > 0 and math.isfinite(r)):
        raise InvalidArgumentError(f"radius must be positive, got {r}")
    if not (M_F >= 0 and M_G >= 0):
        raise InvalidArgumentError("M_F and M_G must be nonnegative")
    if samples < 1000:
        raise InvalidArgumentError("at least 1000 scan samples are required")
    grid = np.geomspace(r * 10.0 ** (-decades), r, samples)
    values = theta(grid)
    if not (np.all(np.isfinite(values)) and math.isfinite(M_F) and math.isfinite(M_G)):
        raise InvalidCertificateError("certificate data are not finite")
    scan = tuple(zip(grid.tolist(), np.asarray(values).tolist()))
    return ContractionCertificate(
        M_F=float(M_F), M_G=float(M_G), theta=theta, r=float(r), scan=scan,
        ball_condition=bool(M_F * M_G <= r),
        contraction_condition=bool(np.all(values < grid)),
    )


def uniform_grid(level: int, rho: float = 1.0) -> np.ndarray:
    """``2**level + 1`` equispaced points of ``[0, rho]``."""
    if level < 1:
        raise InvalidArgumentError("grid level must be >= 1")
    return rho * (np.arange(2 ** level + 1) / 2.0 ** level)


def sup_norm(f: Union[FunctionExpr, Callable], grid_level: int = 12, rho: Optional[float] = None) -> float:
    """Maximum of ``|f|`` over ``2**grid_level + 1`` equispaced points.

    This is a lower bound of the true supremum.
    """
    expr = as_expr(f)
    grid = uniform_grid(grid_level, expr.rho if rho is None else rho)
    return float(np.max(np.abs(expr(grid))))


Operator = Callable[..., FunctionExpr]


def picard_iterate(A: Operator, B: Operator, x0: FunctionExpr, m: int, quad_panels: int = 4096) -> FunctionExpr:
    """Return ``(A.B)^m x0`` with operators evaluated by trapezoid quadrature.

    ``A`` and ``B`` are called as ``A(x, quad_panels=...)``.
    """
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    if quad_panels < 16:
        raise InvalidArgumentError("quad_panels must be >= 16")
    x = as_expr(x0)
    for _ in range(m):
        x = A(x, quad_panels=quad_panels) * B(x, quad_panels=quad_panels)
    return x


def run_chain(T_builders: Sequence[Callable[[FunctionExpr], FunctionExpr]], x0: FunctionExpr) -> list[FunctionExpr]:
    """Return ``[T_1 x0, T_2 T_1 x0, ...]``."""
    if not T_builders:
        raise InvalidArgumentError("the chain needs at least one step")
    out = []
    x = as_expr(x0)
    for step in T_builders:
        x = step(x)
        out.append(x)
    return out


def residual_norm(x: FunctionExpr, A: Operator, B: Operator, quad_panels: int = 4096, grid_level: int = 12) -> float:
    """``sup |x - A(x) B(x)|`` on the sup grid."""
    image = A(x, quad_panels=quad_panels) * B(x, quad_panels=quad_panels)
    return sup_norm(x - image, grid_level)
