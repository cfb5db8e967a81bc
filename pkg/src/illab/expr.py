"""Closed-form coordinate expressions in ``eps``.

A restricted arithmetic grammar: ``+ - * /``, integer powers (``**`` or ``^``),
``sqrt``/``exp``/``sin``/``cos``, numeric and complex literals (``2j``, ``I``
or the pair form ``(re, im)``), ``pi``, the variable ``eps`` and named scenario
parameters.  Expressions are parsed with :mod:`ast` and never passed to
``eval``.
"""

from __future__ import annotations

import ast
import operator
from typing import Callable, Mapping

from .errors import ConfigError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
}
_FUNCS = ("sqrt", "exp", "sin", "cos")


def _const_int(node: ast.AST) -> int | None:
    if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        inner = _const_int(node.operand)
        return None if inner is None else -inner
    return None


def compile_expression(text: str, params: Mapping[str, complex] | None = None) -> Callable:
    """Return ``f(eps, ctx)`` evaluating ``text`` with the scalar functions of ``ctx``."""
    params = dict(params or {})
    source = str(text).replace("^", "**")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {text!r}: {exc.msg}") from None

    def build(node: ast.AST) -> Callable:
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float, complex)):
                raise ConfigError(f"unsupported literal {node.value!r} in {text!r}")
            value = node.value
            return lambda eps, ctx: ctx.num(value)
        if isinstance(node, ast.Tuple):
            if len(node.elts) != 2:
                raise ConfigError(f"complex literal must be (re, im) in {text!r}")
            re_, im = (build(e) for e in node.elts)
            return lambda eps, ctx: re_(eps, ctx) + ctx.num(1j) * im(eps, ctx)
        if isinstance(node, ast.Name):
            name = node.id
            if name == "eps":
                return lambda eps, ctx: ctx.num(eps)
            if name == "I":
                return lambda eps, ctx: ctx.num(1j)
            if name == "pi":
                return lambda eps, ctx: ctx.num(ctx.pi)
            if name in params:
                value = params[name]
                return lambda eps, ctx: ctx.num(value)
            raise ConfigError(f"unknown name {name!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda eps, ctx: -inner(eps, ctx)
            return inner
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = build(node.left), build(node.right)
            return lambda eps, ctx: op(left(eps, ctx), right(eps, ctx))
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
            k = _const_int(node.right)
            if k is None:
                raise ConfigError(f"only integer powers are allowed in {text!r}")
            base = build(node.left)
            return lambda eps, ctx: base(eps, ctx) ** k
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if len(node.args) != 1 or node.keywords:
                raise ConfigError(f"{node.func.id} takes one argument in {text!r}")
            arg = build(node.args[0])
            fname = node.func.id
            return lambda eps, ctx: getattr(ctx, fname)(arg(eps, ctx))
        raise ConfigError(f"unsupported construct {ast.dump(node)[:40]} in {text!r}")

    return build(tree)
