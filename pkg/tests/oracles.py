"""Independent reference computations used by the tests.

None of these call into the interpolation code of the package: the
Faber-Schauder partial sums are built hat by hat, integrals are dense
midpoint sums, and the Picard oracle is iterated step by step.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def dyadic_nodes(n: int) -> list[Fraction]:
    """First ``n`` naturally ordered dyadic nodes of [0, 1] as exact fractions."""
    out = [Fraction(0), Fraction(1)]
    level = 1
    while len(out) < n:
        for j in range(1, 2 ** level, 2):
            out.append(Fraction(j, 2 ** level))
        level += 1
    return out[:n]


def _hat(left: float, centre: float, right: float):
    def h(t):
        t = np.asarray(t, dtype=float)
        up = (t - left) / (centre - left)
        down = (right - t) / (right - centre)
        return np.clip(np.minimum(up, down), 0.0, None)
    return h


def schauder_partial_sum(f, n: int, rho: float = 1.0):
    """``P_n f`` as the explicit sum of Faber-Schauder coefficients times basis functions.

    ``tau_1 = 1``, ``tau_2(t) = t / rho`` and ``tau_k`` (k >= 3) is the hat at
    node ``k`` supported between its nearest earlier neighbours. The
    coefficient is ``f(t_k) - P_{k-1} f(t_k)``.
    """
    nodes = [float(rho * q) for q in dyadic_nodes(n)]
    basis = [lambda t: np.ones_like(np.asarray(t, dtype=float)),
             lambda t: np.asarray(t, dtype=float) / rho]
    for k in range(2, n):
        c = nodes[k]
        earlier = nodes[:k]
        left = max(p for p in earlier if p < c)
        right = min(p for p in earlier if p > c)
        basis.append(_hat(left, c, right))
    coeffs: list[float] = []
    for k in range(n):
        tk = np.array([nodes[k]])
        partial = sum(a * b(tk) for a, b in zip(coeffs, basis[:k])) if coeffs else np.zeros(1)
        coeffs.append(float(np.asarray(f(tk), dtype=float).ravel()[0] - np.asarray(partial).ravel()[0]))

    def evaluate(t):
        t = np.asarray(t, dtype=float)
        return sum(a * b(t) for a, b in zip(coeffs, basis))
    return evaluate


def tensor_partial_sum(f, n_per_dim: int, rho: float = 1.0):
    """Square-ordered tensor Faber-Schauder partial sum with ``n_per_dim**2`` terms."""
    nodes = [float(rho * q) for q in dyadic_nodes(n_per_dim)]
    one_d = []
    for k in range(n_per_dim):
        if k == 0:
            one_d.append(lambda t: np.ones_like(np.asarray(t, dtype=float)))
        elif k == 1:
            one_d.append(lambda t: np.asarray(t, dtype=float) / rho)
        else:
            c = nodes[k]
            left = max(p for p in nodes[:k] if p < c)
            right = min(p for p in nodes[:k] if p > c)
            one_d.append(_hat(left, c, right))
    # coefficients by successive correction in square order
    order = []
    for m in range(n_per_dim):
        order += [(i, m) for i in range(m)] + [(m, j) for j in range(m + 1)]
    coeffs: dict = {}

    def partial(t, s):
        return sum(a * one_d[i](t) * one_d[j](s) for (i, j), a in coeffs.items()) if coeffs else 0.0

    for i, j in order:
        t, s = np.array([nodes[i]]), np.array([nodes[j]])
        coeffs[(i, j)] = float(np.asarray(f(t, s)).ravel()[0] - np.asarray(partial(t, s)).ravel()[0])
    return lambda t, s: partial(np.asarray(t, dtype=float), np.asarray(s, dtype=float))


def midpoint_integral(fn, lower: float, upper: float, panels: int = 1_000_000) -> float:
    """Composite midpoint rule with ``panels`` panels."""
    h = (upper - lower) / panels
    mids = lower + h * (np.arange(panels) + 0.5)
    return float(np.sum(fn(mids)) * h)


def picard_iterates(F, G, x0, m: int, quad_panels: int = 4096) -> list:
    """``[x_1, ..., x_m]`` of the trapezoid Picard oracle, each built from the previous."""
    out = []
    x = x0
    for _ in range(m):
        x = F(x, quad_panels=quad_panels) * G(x, quad_panels=quad_panels)
        out.append(x)
    return out
