import math

import pytest
from hypothesis import given, strategies as st

from decoupling_lab.errors import ExtRealArithmeticError
from decoupling_lab.extreal import ExtReal, MINUS_INF, PLUS_INF, ext_inf, ext_sup_nonneg

FIN = ExtReal(1.5)
NEG = ExtReal(-2.0)


def test_addition_table_exhaustive():
    # (+inf) + a = +inf for a > -inf; (-inf) + a = -inf for a < +inf
    assert PLUS_INF + FIN == PLUS_INF
    assert FIN + PLUS_INF == PLUS_INF
    assert PLUS_INF + PLUS_INF == PLUS_INF
    assert MINUS_INF + FIN == MINUS_INF
    assert FIN + MINUS_INF == MINUS_INF
    assert MINUS_INF + MINUS_INF == MINUS_INF
    assert (FIN + NEG).value == -0.5
    # the rejected operation, both orders, also via subtraction
    with pytest.raises(ExtRealArithmeticError):
        PLUS_INF + MINUS_INF
    with pytest.raises(ExtRealArithmeticError):
        MINUS_INF + PLUS_INF
    with pytest.raises(ExtRealArithmeticError):
        PLUS_INF - PLUS_INF
    with pytest.raises(ExtRealArithmeticError):
        MINUS_INF - MINUS_INF


def test_ordering_total():
    assert MINUS_INF < NEG < FIN < PLUS_INF
    assert not (PLUS_INF < PLUS_INF)
    assert PLUS_INF <= PLUS_INF
    assert sorted([PLUS_INF, FIN, MINUS_INF, NEG]) == [MINUS_INF, NEG, FIN, PLUS_INF]


def test_nan_rejected():
    with pytest.raises(ExtRealArithmeticError):
        ExtReal(float("nan"))


def test_empty_conventions():
    assert ext_inf([]) == PLUS_INF
    assert ext_sup_nonneg([]) == ExtReal(0.0)
    assert ext_inf([3.0, -1.0, 2.0]).value == -1.0
    assert ext_sup_nonneg([0.5, 2.0]).value == 2.0
    with pytest.raises(ValueError):
        ext_sup_nonneg([-1.0])


def test_zero_times_inf_rejected():
    with pytest.raises(ExtRealArithmeticError):
        ExtReal(0.0) * PLUS_INF


@given(st.floats(allow_nan=False, allow_infinity=True),
       st.floats(allow_nan=False, allow_infinity=True))
def test_order_matches_floats(a, b):
    assert (ExtReal(a) < ExtReal(b)) == (a < b)
    assert (ExtReal(a) == ExtReal(b)) == (a == b)


@given(st.floats(allow_nan=False, allow_infinity=False, min_value=-1e12, max_value=1e12),
       st.floats(allow_nan=False, allow_infinity=False, min_value=-1e12, max_value=1e12))
def test_finite_addition_matches_floats(a, b):
    assert math.isclose((ExtReal(a) + ExtReal(b)).value, a + b, rel_tol=1e-15, abs_tol=1e-300)
