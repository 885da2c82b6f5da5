from fractions import Fraction

import pytest

from freeboundary.scalars import QSqrt, as_float, exact_str


def test_field_operations():
    x = QSqrt(Fraction(1, 2), Fraction(1, 3), 3)
    y = QSqrt(Fraction(-2), Fraction(1, 6), 3)
    assert (x + y) - y == x
    assert x * y == y * x
    prod = x * y
    assert prod.p == Fraction(1, 2) * Fraction(-2) + Fraction(1, 3) * Fraction(1, 6) * 3
    assert prod.q == Fraction(1, 2) * Fraction(1, 6) + Fraction(1, 3) * Fraction(-2)
    assert (x / y) * y == x
    assert x ** 0 == 1
    assert x ** 3 == x * x * x
    assert x ** -2 == (x * x).inverse()


def test_root_power():
    assert QSqrt.root_power(0, 3) == 1
    assert QSqrt.root_power(2, 3) == 3
    assert QSqrt.root_power(-2, 3) == Fraction(1, 3)
    r = QSqrt.root_power(1, 3)
    assert r * r == 3
    assert QSqrt.root_power(-1, 3) * r == 1
    assert QSqrt.root_power(5, 3) == QSqrt(0, 9, 3)


def test_sign_and_comparisons():
    # mixed-sign cases exercise the p^2 vs q^2*base comparison
    assert QSqrt(2, -1, 3).sign() > 0  # 2 > sqrt(3)
    assert QSqrt(1, -1, 3).sign() < 0  # 1 < sqrt(3)
    assert QSqrt(-1, 1, 3).sign() > 0
    assert QSqrt(-2, 1, 3).sign() < 0
    assert QSqrt(0, 0, 3).sign() == 0
    assert QSqrt(Fraction(7, 4), -1, 3) > 0  # 7/4 > sqrt(3) ~ 1.732
    assert QSqrt(Fraction(17, 10), -1, 3) < 0
    assert abs(QSqrt(1, -1, 3)) == QSqrt(-1, 1, 3)
    assert QSqrt(1, 1, 3) > QSqrt(1, 0, 3) > QSqrt(0, 0, 3)


def test_rational_interop_and_hash():
    x = QSqrt(Fraction(3, 4), 0, 3)
    assert x == Fraction(3, 4)
    assert hash(x) == hash(Fraction(3, 4))
    assert x + Fraction(1, 4) == 1
    assert 2 * x == Fraction(3, 2)
    assert 1 - x == Fraction(1, 4)
    assert Fraction(3, 2) / QSqrt(0, 1, 3) == QSqrt(0, Fraction(1, 2), 3)


def test_perfect_square_base_folds():
    x = QSqrt(1, 1, 9)  # sqrt(9) = 3 folds into the rational part
    assert x.q == 0 and x.p == 4


def test_zero_division():
    with pytest.raises(ZeroDivisionError):
        QSqrt(0, 0, 3).inverse()


def test_rendering():
    assert exact_str(QSqrt(Fraction(1, 2), Fraction(-1, 12), 3)) == "1/2+-1/12*sqrt(3)"
    assert exact_str(Fraction(2, 3)) == "2/3"
    assert abs(as_float(QSqrt(0, Fraction(1, 2), 3)) - 0.8660254037844386) < 1e-15
