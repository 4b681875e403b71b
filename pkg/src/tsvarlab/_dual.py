"""Forward-mode dual numbers, nestable for exact second derivatives.

A Dual holds a value part and a tangent part.  Components may be floats,
numpy arrays (vector tangents propagate many directions in one pass), or
further Duals (nesting yields exact mixed second derivatives).  Domain
guards inspect the innermost value via :func:`primal`.
"""

from __future__ import annotations

import math

import numpy as np


class DomainError(ValueError):
    """Evaluation left the domain of a function (log, sqrt, division, pow)."""


def primal(x):
    """Innermost value of a possibly nested dual."""
    while isinstance(x, Dual):
        x = x.a
    return x


class Dual:
    __slots__ = ("a", "b")

    def __init__(self, a, b=0.0):
        self.a = a
        self.b = b

    def __repr__(self):
        return f"Dual({self.a!r}, {self.b!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a + other.a, self.b + other.b)
        return Dual(self.a + other, self.b)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a - other.a, self.b - other.b)
        return Dual(self.a - other, self.b)

    def __rsub__(self, other):
        return Dual(other - self.a, -self.b)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a * other.a, self.a * other.b + self.b * other.a)
        return Dual(self.a * other, self.b * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            if primal(other.a) == 0.0:
                raise DomainError("division by zero")
            return Dual(
                self.a / other.a, (self.b * other.a - self.a * other.b) / (other.a * other.a)
            )
        if primal(other) == 0.0:
            raise DomainError("division by zero")
        return Dual(self.a / other, self.b / other)

    def __rtruediv__(self, other):
        if primal(self.a) == 0.0:
            raise DomainError("division by zero")
        return Dual(other / self.a, -other * self.b / (self.a * self.a))

    def __neg__(self):
        return Dual(-self.a, -self.b)


def add(x, y):
    return x + y


def sub(x, y):
    return x - y


def mul(x, y):
    return x * y


def div(x, y):
    if not isinstance(x, Dual) and not isinstance(y, Dual):
        if y == 0.0:
            raise DomainError("division by zero")
    return x / y  # Dual operands guard through __truediv__/__rtruediv__


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.a), cos(x.a) * x.b)
    return math.sin(x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.a), -sin(x.a) * x.b)
    return math.cos(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.a)
        return Dual(e, e * x.b)
    return math.exp(x)


def ln(x):
    if isinstance(x, Dual):
        if primal(x.a) <= 0.0:
            raise DomainError(f"ln of non-positive value {primal(x.a)!r}")
        return Dual(ln(x.a), x.b / x.a)
    if x <= 0.0:
        raise DomainError(f"ln of non-positive value {x!r}")
    return math.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        if primal(x.a) < 0.0:
            raise DomainError(f"sqrt of negative value {primal(x.a)!r}")
        if primal(x.a) == 0.0:
            raise DomainError("sqrt derivative undefined at 0")
        root = sqrt(x.a)
        return Dual(root, x.b / (2.0 * root))
    if x < 0.0:
        raise DomainError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def absval(x):
    if isinstance(x, Dual):
        s = _sign(primal(x.a))
        return Dual(absval(x.a), x.b * s)
    return abs(x)


def _sign(v):
    return 1.0 if v > 0 else (-1.0 if v < 0 else 0.0)


def _tangent_free(x) -> bool:
    """True when x carries no derivative information at any nesting level."""
    while isinstance(x, Dual):
        if not _is_zero(x.b):
            return False
        x = x.a
    return True


def _is_zero(x):
    if isinstance(x, Dual):
        return _is_zero(x.a) and _is_zero(x.b)
    return bool(np.all(x == 0.0))


def power(base, expo):
    """x^p with an integer fast path.

    Tangent-free integer exponents are evaluated by repeated multiplication,
    so expressions like t^2 stay defined for negative t.  Any other exponent
    requires a strictly positive base.
    """
    pe = primal(expo)
    if _tangent_free(expo) and float(pe).is_integer():
        k = int(pe)
        if k < 0:
            if primal(base) == 0.0:
                raise DomainError("0 raised to a negative power")
            return div(1.0, _ipow(base, -k))
        return _ipow(base, k)
    if primal(base) <= 0.0:
        raise DomainError(
            f"non-integer exponent requires a positive base (base={primal(base)!r})"
        )
    return exp(mul(expo, ln(base)))


def _ipow(x, k: int):
    result = 1.0
    acc = x
    while k:
        if k & 1:
            result = mul(result, acc)
        acc = mul(acc, acc)
        k >>= 1
    return result
