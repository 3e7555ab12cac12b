"""Second-order jets: a value bundled with its first and second derivatives.

A ``Jet2`` carries ``(value, d1, d2)`` with respect to one or two tracked
input coordinates.  Arithmetic follows the product and chain rules exactly,
so composing jets of elementary functions yields exact derivatives of the
composition.  Jets are the currency of the single-point evaluation API;
batched training uses flat arrays internally but obeys the same algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, UnsupportedOrderError


@dataclass(frozen=True)
class Jet2:
    """Value with exact first and second partials w.r.t. tracked coordinates.

    ``d1`` has shape ``(ndim,)`` and ``d2`` shape ``(ndim, ndim)`` where
    ``ndim`` is 1 for ODE problems and 2 for space-time PDE problems.
    ``d2`` is symmetric for every jet produced by this package.
    """

    value: float
    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        d1 = np.atleast_1d(np.asarray(self.d1, dtype=float))
        d2 = np.atleast_2d(np.asarray(self.d2, dtype=float))
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "d1", d1)
        object.__setattr__(self, "d2", d2)
        n = d1.shape[0]
        if n not in (1, 2):
            raise UnsupportedOrderError(
                f"jets track 1 or 2 coordinates, got {n}"
            )
        if d2.shape != (n, n):
            raise ShapeError(f"d2 shape {d2.shape} does not match d1 length {n}")

    @property
    def ndim(self) -> int:
        return self.d1.shape[0]

    @classmethod
    def constant(cls, value: float, ndim: int = 1) -> "Jet2":
        return cls(value, np.zeros(ndim), np.zeros((ndim, ndim)))

    @classmethod
    def variable(cls, value: float, index: int = 0, ndim: int = 1) -> "Jet2":
        """Jet of the coordinate function x -> x[index]."""
        d1 = np.zeros(ndim)
        d1[index] = 1.0
        return cls(value, d1, np.zeros((ndim, ndim)))

    def _coerce(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            if other.ndim != self.ndim:
                raise ShapeError("jets track different coordinate sets")
            return other
        return Jet2.constant(float(other), self.ndim)

    def __add__(self, other) -> "Jet2":
        o = self._coerce(other)
        return Jet2(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __neg__(self) -> "Jet2":
        return Jet2(-self.value, -self.d1, -self.d2)

    def __sub__(self, other) -> "Jet2":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Jet2":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Jet2":
        o = self._coerce(other)
        # product rule: (fg)'' = f''g + f'(x)g'(y) + g'(x)f'(y) + fg''
        outer = np.outer(self.d1, o.d1)
        cross = outer + outer.T  # exactly symmetric before summing
        return Jet2(
            self.value * o.value,
            self.value * o.d1 + o.value * self.d1,
            self.value * o.d2 + cross + o.value * self.d2,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet2":
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        return self * (1.0 / float(other))

    def reciprocal(self) -> "Jet2":
        v = self.value
        return self.apply(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def apply(self, f0: float, f1: float, f2: float) -> "Jet2":
        """Chain rule through a scalar function with given derivative values.

        ``f0 = f(value)``, ``f1 = f'(value)``, ``f2 = f''(value)``.
        """
        outer = np.outer(self.d1, self.d1)
        return Jet2(f0, f1 * self.d1, f1 * self.d2 + f2 * outer)

    def exp(self) -> "Jet2":
        e = np.exp(self.value)
        return self.apply(e, e, e)

    def sin(self) -> "Jet2":
        s, c = np.sin(self.value), np.cos(self.value)
        return self.apply(s, c, -s)

    def cos(self) -> "Jet2":
        s, c = np.sin(self.value), np.cos(self.value)
        return self.apply(c, -s, -c)

    def tanh(self) -> "Jet2":
        t = np.tanh(self.value)
        return self.apply(t, 1.0 - t * t, -2.0 * t * (1.0 - t * t))
