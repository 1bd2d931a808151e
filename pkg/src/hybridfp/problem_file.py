"""Declarative problem files for the ``solve`` and ``certify`` commands.

A problem file is a sequence of lines::

    # comment
    kind = integral            # or: nonlocal
    a = 0.1                    # constant, may use earlier constants
    f(t, x) = a*(t + 1)        # function definition
    q(t) = b/a - b^2/3*((t + 1)^3 - 1)
    K(t, s, x) = x^2
    x0(t) = t^2

Expressions use ``+ - * / ^`` (``**`` also accepted), parentheses, numbers,
``pi``, ``e``, the functions ``exp log sin cos tan sqrt abs`` and any
previously defined function. In ``Gamma(x)`` the argument is the iterate:
``sup(x)`` is its sup norm and ``x(c)`` its value at ``c``.

Recognised names (missing optional entries take library defaults):

* nonlocal: ``f(t,x) g(t,x) Gamma(x) x0(t)``; optional ``exact(t) alpha(t)
  phi(u) gamma(t) psi(u)`` and constants ``rho r delta L_Gamma``.
* integral: ``f(t,x) q(t) K(t,s,x) x0(t)``; optional ``exact(t) sigma(t)
  tau(t) eta(t) alpha(t) phi(u) gamma(t,s) psi(u)`` and constants ``rho r``.
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from hybridfp.errors import HybridFPError
from hybridfp.hybrid_core import DFunction, FunctionExpr
from hybridfp.integral_solver import HybridIntegralEq
from hybridfp.ivp_solver import NonlocalIVP


class ProblemFileError(HybridFPError, ValueError):
    """Syntax or semantic error in a problem file, with its location."""

    def __init__(self, message: str, line: int, column: int = 1) -> None:
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_BUILTINS: dict[str, Callable] = {
    "exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos,
    "tan": np.tan, "sqrt": np.sqrt, "abs": np.abs,
}
_CONSTANTS = {"pi": math.pi, "e": math.e}

_SIGNATURES = {
    "nonlocal": {"f": 2, "g": 2, "Gamma": 1, "x0": 1, "exact": 1, "alpha": 1, "phi": 1, "gamma": 1, "psi": 1},
    "integral": {"f": 2, "q": 1, "K": 3, "x0": 1, "exact": 1, "sigma": 1, "tau": 1, "eta": 1,
                 "alpha": 1, "phi": 1, "gamma": 2, "psi": 1},
}
_REQUIRED = {"nonlocal": ("f", "g", "Gamma", "x0"), "integral": ("f", "q", "K", "x0")}
_SCALARS = {"nonlocal": ("rho", "r", "delta", "L_Gamma"), "integral": ("rho", "r")}

_DEF = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\(([^)]*)\))?\s*=(.*)$")


@dataclass
class ProblemDefinition:
    kind: str
    problem: Union[NonlocalIVP, HybridIntegralEq]
    x0: FunctionExpr
    exact: Optional[FunctionExpr]
    constants: dict


class _Compiler:
    """Turn a validated expression AST into a closure over an environment."""

    def __init__(self, constants: dict, functions: dict, params: list[str], functional: Optional[str],
                 line: int, col0: int, back: Optional[list[int]] = None) -> None:
        self.constants = constants
        self.functions = functions
        self.params = params
        self.functional = functional
        self.line = line
        self.col0 = col0
        self.back = back

    def error(self, node: ast.AST, msg: str) -> ProblemFileError:
        off = getattr(node, "col_offset", 0)
        if self.back is not None:
            off = self.back[min(off, len(self.back) - 1)]
        return ProblemFileError(msg, self.line, self.col0 + off)

    def compile(self, node: ast.AST) -> Callable[[dict], object]:
        if isinstance(node, ast.Expression):
            return self.compile(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            v = float(node.value)
            return lambda env: v
        if isinstance(node, ast.Name):
            name = node.id
            if name in self.params:
                if name == self.functional:
                    raise self.error(node, f"'{name}' must be used as sup({name}) or {name}(point)")
                return lambda env: env[name]
            if name in self.constants:
                v = self.constants[name]
                return lambda env: v
            if name in _CONSTANTS:
                v = _CONSTANTS[name]
                return lambda env: v
            raise self.error(node, f"unknown name '{name}'")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = self.compile(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda env: -inner(env)
            return inner
        if isinstance(node, ast.BinOp):
            ops = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
                   ast.Div: np.divide, ast.Pow: np.power}
            op = ops.get(type(node.op))
            if op is None:
                raise self.error(node, "unsupported operator")
            left, right = self.compile(node.left), self.compile(node.right)
            if op is np.power:
                return lambda env: np.power(np.asarray(left(env), dtype=float), right(env))
            return lambda env: op(left(env), right(env))
        if isinstance(node, ast.Call):
            return self.compile_call(node)
        raise self.error(node, "unsupported syntax")

    def compile_call(self, node: ast.Call) -> Callable[[dict], object]:
        if not isinstance(node.func, ast.Name) or node.keywords:
            raise self.error(node, "only plain function calls are allowed")
        name = node.func.id
        args = node.args
        if name == "sup":
            if self.functional is None or len(args) != 1 or not (
                    isinstance(args[0], ast.Name) and args[0].id == self.functional):
                raise self.error(node, "sup(...) is only available inside Gamma(x) as sup(x)")
            return lambda env: env["__sup__"](env["__x__"])
        if self.functional is not None and name == self.functional:
            if len(args) != 1:
                raise self.error(node, f"{name}(...) takes one point")
            point = self.compile(args[0])
            return lambda env: env["__x__"](np.asarray(point(env), dtype=float))
        compiled = [self.compile(a) for a in args]
        if name in _BUILTINS:
            if len(compiled) != 1:
                raise self.error(node, f"{name} takes one argument")
            fn = _BUILTINS[name]
            arg = compiled[0]
            return lambda env: fn(arg(env))
        if name in self.functions:
            fn, arity = self.functions[name]
            if arity != len(compiled):
                raise self.error(node, f"{name} takes {arity} arguments")
            return lambda env: fn(*[c(env) for c in compiled])
        raise self.error(node, f"unknown function '{name}'")


def _parse_expr(text: str, line: int, col0: int) -> tuple[ast.Expression, list[int]]:
    """Parse ``text`` (already stripped) with ``^`` read as power.

    Returns the tree and a map from offsets in the rewritten source back to
    offsets in ``text``, so errors point at the user's characters.
    """
    source, back = [], []
    for i, ch in enumerate(text):
        piece = "**" if ch == "^" else ch
        source.append(piece)
        back.extend([i] * len(piece))
    back.append(len(text))
    try:
        return ast.parse("".join(source), mode="eval"), back
    except SyntaxError as exc:
        off = min(max((exc.offset or 1) - 1, 0), len(back) - 1)
        raise ProblemFileError(f"syntax error: {exc.msg}", line, col0 + back[off]) from None


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def parse_problem(text: str) -> ProblemDefinition:
    """Parse the text of a problem file."""
    constants: dict[str, float] = {}
    functions: dict[str, tuple[Callable, int]] = {}
    gamma_functional: Optional[Callable] = None
    kind: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        match = _DEF.match(line)
        if not match:
            raise ProblemFileError("expected 'name = expression' or 'name(args) = expression'", lineno)
        name, arglist, body = match.group(1), match.group(2), match.group(3)
        # 1-based column of the first character of the expression
        col0 = match.start(3) + 1 + len(body) - len(body.lstrip())
        body = body.strip()
        if not body:
            raise ProblemFileError("missing expression", lineno, col0)
        if name == "kind" and arglist is None:
            kind = body
            if kind not in _SIGNATURES:
                raise ProblemFileError("kind must be 'nonlocal' or 'integral'", lineno, col0)
            continue
        tree, back = _parse_expr(body, lineno, col0)
        if arglist is None:
            fn = _Compiler(constants, functions, [], None, lineno, col0, back).compile(tree)
            value = np.asarray(fn({}), dtype=float)
            if value.ndim != 0 or not np.isfinite(value):
                raise ProblemFileError(f"constant '{name}' is not a finite number", lineno, col0)
            constants[name] = float(value)
            continue
        params = [p.strip() for p in arglist.split(",")] if arglist.strip() else []
        if not all(re.fullmatch(r"[A-Za-z_]\w*", p) for p in params):
            raise ProblemFileError("invalid parameter list", lineno, match.start(2) + 1)
        if name == "Gamma":
            if len(params) != 1:
                raise ProblemFileError("Gamma takes exactly one argument", lineno)
            body_fn = _Compiler(constants, functions, params, params[0], lineno, col0, back).compile(tree)
            gamma_functional = _make_functional(body_fn)
            continue
        body_fn = _Compiler(constants, functions, params, None, lineno, col0, back).compile(tree)
        functions[name] = (_make_function(body_fn, params), len(params))
    if kind is None:
        raise ProblemFileError("missing 'kind = nonlocal|integral'", 1)
    if gamma_functional is not None:
        functions["Gamma"] = (gamma_functional, 1)
    return _build(kind, constants, functions)


def _make_function(body: Callable, params: list[str]) -> Callable:
    def fn(*args):
        return body(dict(zip(params, args)))
    return fn


def _make_functional(body: Callable) -> Callable:
    def gamma(x, sup):
        return float(np.asarray(body({"__x__": x, "__sup__": sup}), dtype=float).ravel()[0])
    return gamma


def _build(kind: str, constants: dict, functions: dict) -> ProblemDefinition:
    sig = _SIGNATURES[kind]
    for name, (_, arity) in functions.items():
        if name in sig and sig[name] != arity:
            raise ProblemFileError(f"{name} must take {sig[name]} arguments", 1)
    missing = [n for n in _REQUIRED[kind] if n not in functions]
    if missing:
        raise ProblemFileError(f"missing definitions: {', '.join(missing)}", 1)
    scalars = {k: constants[k] for k in _SCALARS[kind] if k in constants}
    fn = {k: functions[k][0] for k in sig if k in functions}
    kw: dict = dict(scalars)
    for key in ("phi", "psi"):
        if key in fn:
            kw[key] = DFunction(fn[key], key)
    for key in ("alpha", "gamma", "exact"):
        if key in fn:
            kw[key] = fn[key]
    if kind == "nonlocal":
        problem = NonlocalIVP(f=fn["f"], g=fn["g"], Gamma=fn["Gamma"], **kw)
    else:
        for key in ("sigma", "tau", "eta"):
            if key in fn:
                kw[key] = fn[key]
        problem = HybridIntegralEq(f=fn["f"], q=fn["q"], K=fn["K"], **kw)
    rho = problem.rho
    x0 = FunctionExpr.lift(fn["x0"], "x0", rho)
    exact = FunctionExpr.lift(fn["exact"], "x*", rho) if "exact" in fn else None
    return ProblemDefinition(kind, problem, x0, exact, dict(constants))


def load_problem(path: Union[str, Path]) -> ProblemDefinition:
    """Read and parse a problem file."""
    return parse_problem(Path(path).read_text())
