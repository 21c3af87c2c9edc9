"""Forward-mode automatic differentiation on scalars.

A :class:`Dual` carries a value and the derivative of that value with
respect to one seed variable.  Components may be real numbers, complex
numbers, or other Duals; nesting Duals therefore yields exact second and
mixed partial derivatives without any finite differencing.

The module-level math functions (`sqrt`, `log`, `exp`, ...) dispatch on
their argument: Duals get the differentiation rule, complex numbers go
through :mod:`cmath` (principal branches), and plain floats through
:mod:`math`.
"""

from __future__ import annotations

import cmath
import math

_NUMBERS = (int, float, complex)


class Dual:
    """Number of the form a + b*eps with eps**2 = 0."""

    __slots__ = ("val", "eps")

    def __init__(self, val, eps=0.0):
        self.val = val
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.val!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val + other.val, self.eps + other.eps)
        if isinstance(other, _NUMBERS):
            return Dual(self.val + other, self.eps)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.val, -self.eps)

    def __sub__(self, other):
        return self.__add__(-other)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.val * other.val,
                        self.eps * other.val + self.val * other.eps)
        if isinstance(other, _NUMBERS):
            return Dual(self.val * other, self.eps * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            q = self.val / other.val
            return Dual(q, (self.eps - q * other.eps) / other.val)
        if isinstance(other, _NUMBERS):
            return Dual(self.val / other, self.eps / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, _NUMBERS):
            q = other / self.val
            return Dual(q, -q * self.eps / self.val)
        return NotImplemented

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("Dual power supports integer exponents only")
        if n == 0:
            return Dual(self.val * 0 + 1, self.eps * 0)
        if n < 0:
            return 1.0 / self.__pow__(-n)
        return Dual(self.val ** n, n * self.val ** (n - 1) * self.eps)


def _lift(fn_real, fn_cplx, x):
    if isinstance(x, complex):
        return fn_cplx(x)
    return fn_real(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.val)
        return Dual(s, x.eps / (2.0 * s))
    return _lift(math.sqrt, cmath.sqrt, x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.val), x.eps / x.val)
    return _lift(math.log, cmath.log, x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.val)
        return Dual(e, e * x.eps)
    return _lift(math.exp, cmath.exp, x)


def sin(x):
    if isinstance(x, Dual):
        return Dual(sin(x.val), cos(x.val) * x.eps)
    return _lift(math.sin, cmath.sin, x)


def cos(x):
    if isinstance(x, Dual):
        return Dual(cos(x.val), -sin(x.val) * x.eps)
    return _lift(math.cos, cmath.cos, x)


def tan(x):
    if isinstance(x, Dual):
        t = tan(x.val)
        return Dual(t, (1.0 + t * t) * x.eps)
    return _lift(math.tan, cmath.tan, x)


def atan(x):
    if isinstance(x, Dual):
        return Dual(atan(x.val), x.eps / (1.0 + x.val * x.val))
    return _lift(math.atan, cmath.atan, x)


def value(x):
    """Innermost plain value of a possibly nested Dual."""
    while isinstance(x, Dual):
        x = x.val
    return x


def derivative(fn, x0):
    """d fn / dx at x0 for a scalar-to-scalar fn built from Dual-aware ops."""
    one = 1.0 if not isinstance(x0, complex) else complex(1.0)
    out = fn(Dual(x0, one))
    return out.eps if isinstance(out, Dual) else 0.0 * x0


def second_derivative(fn, x0):
    """d^2 fn / dx^2 at x0 via one level of nesting."""
    one = 1.0 if not isinstance(x0, complex) else complex(1.0)
    out = fn(Dual(Dual(x0, one), Dual(one, 0.0 * one)))
    if isinstance(out, Dual) and isinstance(out.eps, Dual):
        return out.eps.eps
    return 0.0 * x0
