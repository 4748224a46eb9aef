"""Rotation numbers with an exact doubling orbit.

Doubling ``omega -> 2 omega mod 1`` in binary floating point discards one
bit per step, so after 53 steps any double collapses to 0.  Here a rotation
number keeps its defining expression and regenerates as many binary digits
as an orbit needs.
"""

import ast
import math
import operator
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import ConfigError

ALIASES = {
    "golden": "(sqrt(5)-1)/2",
    "sqrt5/2": "sqrt(5)/2",
    "silver": "sqrt(2)-1",
}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = ("sqrt", "exp", "log", "sin", "cos")
_CONSTS = ("pi", "e")


class _Inexact(Exception):
    pass


def _parse(text):
    try:
        tree = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse rotation number {text!r}") from exc
    _validate(tree, text)
    return tree


def _validate(node, text):
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _validate(node.left, text)
        _validate(node.right, text)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        _validate(node.operand, text)
    elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        pass
    elif isinstance(node, ast.Name) and node.id in _CONSTS:
        pass
    elif (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
          and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
        _validate(node.args[0], text)
    else:
        raise ConfigError(f"unsupported construct in rotation number {text!r}")


def _eval_exact(node):
    if isinstance(node, ast.Constant):
        # decimal literals mean what they say: "0.1" is 1/10
        return Fraction(repr(node.value))
    if isinstance(node, ast.UnaryOp):
        x = _eval_exact(node.operand)
        return -x if isinstance(node.op, ast.USub) else x
    if isinstance(node, ast.BinOp):
        a, b = _eval_exact(node.left), _eval_exact(node.right)
        if isinstance(node.op, ast.Pow):
            if b.denominator != 1:
                raise _Inexact
            return a ** int(b)
        return _BINOPS[type(node.op)](a, b)
    raise _Inexact


def _eval_mp(node):
    if isinstance(node, ast.Constant):
        f = Fraction(repr(node.value))
        return mpmath.mpf(f.numerator) / f.denominator
    if isinstance(node, ast.Name):
        return +mpmath.pi if node.id == "pi" else +mpmath.e
    if isinstance(node, ast.UnaryOp):
        x = _eval_mp(node.operand)
        return -x if isinstance(node.op, ast.USub) else x
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval_mp(node.left), _eval_mp(node.right))
    return getattr(mpmath, node.func.id)(_eval_mp(node.args[0]))


def dyadic_digits(source, nbits):
    """Integer W with frac(omega) in [W / 2**nbits, (W + 1) / 2**nbits)."""
    tree = _parse(source)
    try:
        q = _eval_exact(tree)
        q -= math.floor(q)
        return (q.numerator << nbits) // q.denominator
    except _Inexact:
        pass
    with mpmath.workprec(nbits + 64):
        x = _eval_mp(tree)
        x -= mpmath.floor(x)
        return int(mpmath.floor(mpmath.ldexp(x, nbits)))


def _normalize_source(value):
    if isinstance(value, RotationNumber):
        return value.source, value.shift
    if isinstance(value, (float, np.floating)):
        # a double is itself a dyadic rational; keep all of its bits
        f = Fraction(float(value))
        return f"{f.numerator}/{f.denominator}", 0
    if isinstance(value, (int, np.integer)):
        return str(int(value)), 0
    text = str(value).strip()
    text = ALIASES.get(text.lower(), text)
    _parse(text)
    return text, 0


@dataclass(frozen=True)
class RotationNumber:
    """A point of the circle together with its position on the doubling orbit.

    ``RotationNumber("golden").doubled(3)`` is 8 * golden mod 1, computed
    from enough exact binary digits.
    """

    source: str
    shift: int = 0

    def __post_init__(self):
        if not isinstance(self.source, str):
            src, _ = _normalize_source(self.source)
            object.__setattr__(self, "source", src)
        elif self.source.strip().lower() in ALIASES:
            object.__setattr__(self, "source", ALIASES[self.source.strip().lower()])

    @classmethod
    def of(cls, value):
        src, shift = _normalize_source(value)
        return cls(src, shift)

    @property
    def value(self):
        return float(self.orbit(1)[0])

    def __float__(self):
        return self.value

    def doubled(self, times=1):
        return RotationNumber(self.source, self.shift + times)

    def orbit(self, n):
        """The next ``n`` doubling iterates, starting with this one."""
        if n <= 0:
            return np.zeros(0)
        nbits = self.shift + n + 64
        bits = format(dyadic_digits(self.source, nbits), "b").zfill(nbits)
        scale = 2.0 ** -53
        out = np.empty(n)
        for k in range(n):
            j = self.shift + k
            out[k] = int(bits[j:j + 53], 2) * scale
        return out

    def __repr__(self):
        tail = f", shift={self.shift}" if self.shift else ""
        return f"RotationNumber({self.source!r}{tail})"


def as_rotation(value):
    return value if isinstance(value, RotationNumber) else RotationNumber.of(value)
