"""Restricted arithmetic expressions for circuit parameters and guards."""

from __future__ import annotations

import ast
import math
import operator
from typing import Mapping

FUNCTIONS = {
    "sqrt": math.sqrt, "acos": math.acos, "asin": math.asin, "atan": math.atan,
    "cos": math.cos, "sin": math.sin, "tan": math.tan, "exp": math.exp, "log": math.log,
    "abs": abs, "min": min, "max": max,
}
CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow, ast.Mod: operator.mod,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg, ast.Not: operator.not_}
_COMPARE = {
    ast.Eq: operator.eq, ast.NotEq: operator.ne, ast.Lt: operator.lt,
    ast.LtE: operator.le, ast.Gt: operator.gt, ast.GtE: operator.ge,
}


class ExprError(ValueError):
    pass


def compile_expr(text: str) -> ast.Expression:
    """Parse and whitelist ``text``; raises ExprError on anything else."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExprError(f"malformed expression {text.strip()!r}") from exc
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.Load, ast.Name, ast.BinOp, ast.UnaryOp,
                             ast.Compare, ast.BoolOp, ast.And, ast.Or, ast.IfExp)):
            continue
        if type(node) in _BINOPS or type(node) in _UNARY or type(node) in _COMPARE:
            continue
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExprError(f"only real numbers are allowed, got {node.value!r}")
            continue
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS or node.keywords:
                raise ExprError(f"unknown function in {text.strip()!r}")
            continue
        raise ExprError(f"unsupported syntax in {text.strip()!r}")
    return tree


def canonical(text: str) -> str:
    return ast.unparse(compile_expr(text))


def names(text: str) -> set[str]:
    tree = compile_expr(text)
    called = {id(n.func) for n in ast.walk(tree) if isinstance(n, ast.Call)}
    return {n.id for n in ast.walk(tree)
            if isinstance(n, ast.Name) and id(n) not in called and n.id not in CONSTANTS}


def evaluate(text: str, env: Mapping[str, float]) -> float:
    tree = compile_expr(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            if node.id in CONSTANTS:
                return CONSTANTS[node.id]
            raise ExprError(f"unbound parameter {node.id!r}")
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.BoolOp):
            vals = [ev(v) for v in node.values]
            return all(vals) if isinstance(node.op, ast.And) else any(vals)
        if isinstance(node, ast.Compare):
            left = ev(node.left)
            for op, comp in zip(node.ops, node.comparators):
                right = ev(comp)
                if not _COMPARE[type(op)](left, right):
                    return False
                left = right
            return True
        if isinstance(node, ast.IfExp):
            return ev(node.body) if ev(node.test) else ev(node.orelse)
        if isinstance(node, ast.Call):
            return FUNCTIONS[node.func.id](*[ev(a) for a in node.args])
        raise ExprError("unsupported syntax")  # pragma: no cover - whitelisted above

    try:
        value = ev(tree)
    except ExprError:
        raise
    except (ValueError, ZeroDivisionError, OverflowError, TypeError) as exc:
        raise ExprError(f"cannot evaluate {text.strip()!r}: {exc}") from exc
    if isinstance(value, complex):
        raise ExprError(f"{text.strip()!r} is not real")
    return float(value)
