"""Extended real numbers with the conventions inf(empty) = +inf, sup(empty nonnegatives) = 0.

Internally the heavy numerics run on raw floats (numpy handles +-inf natively);
``ExtReal`` is the API-surface wrapper that enforces the arithmetic conventions,
in particular rejecting (+inf) + (-inf) instead of silently producing nan.
"""

from __future__ import annotations

import math
from functools import total_ordering
from typing import Iterable

from .errors import ExtRealArithmeticError

__all__ = ["ExtReal", "PLUS_INF", "MINUS_INF", "ext_inf", "ext_sup_nonneg"]


@total_ordering
class ExtReal:
    """A real number extended with +inf and -inf under total order."""

    __slots__ = ("v",)

    def __init__(self, value: float):
        v = float(value)
        if math.isnan(v):
            raise ExtRealArithmeticError("nan is not an extended real")
        object.__setattr__(self, "v", v)

    def __setattr__(self, name, value):
        raise AttributeError("ExtReal is immutable")

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.v)

    @property
    def value(self) -> float:
        return self.v

    def __float__(self) -> float:
        return self.v

    def __add__(self, other):
        o = other.v if isinstance(other, ExtReal) else float(other)
        if math.isinf(self.v) and math.isinf(o) and self.v != o:
            raise ExtRealArithmeticError("(+inf) + (-inf) is rejected")
        return ExtReal(self.v + o)

    __radd__ = __add__

    def __neg__(self):
        return ExtReal(-self.v)

    def __sub__(self, other):
        o = other if isinstance(other, ExtReal) else ExtReal(other)
        return self + (-o)

    def __rsub__(self, other):
        return ExtReal(other) + (-self)

    def __mul__(self, other):
        o = other.v if isinstance(other, ExtReal) else float(other)
        if (self.v == 0.0 and math.isinf(o)) or (o == 0.0 and math.isinf(self.v)):
            raise ExtRealArithmeticError("0 * inf is rejected")
        return ExtReal(self.v * o)

    __rmul__ = __mul__

    def __eq__(self, other):
        o = other.v if isinstance(other, ExtReal) else other
        return self.v == o

    def __lt__(self, other):
        o = other.v if isinstance(other, ExtReal) else other
        return self.v < o

    def __hash__(self):
        return hash(self.v)

    def __repr__(self):
        if self.v == math.inf:
            return "ExtReal(+inf)"
        if self.v == -math.inf:
            return "ExtReal(-inf)"
        return f"ExtReal({self.v!r})"


PLUS_INF = ExtReal(math.inf)
MINUS_INF = ExtReal(-math.inf)


def ext_inf(values: Iterable[float]) -> ExtReal:
    """Infimum with inf(empty) = +inf."""
    best = math.inf
    for v in values:
        v = float(v)
        if v < best:
            best = v
    return ExtReal(best)


def ext_sup_nonneg(values: Iterable[float]) -> ExtReal:
    """Supremum of a family of nonnegative values, sup(empty) = 0."""
    best = 0.0
    for v in values:
        v = float(v)
        if v < 0:
            raise ValueError("ext_sup_nonneg expects nonnegative values")
        if v > best:
            best = v
    return ExtReal(best)
