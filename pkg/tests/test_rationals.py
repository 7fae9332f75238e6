"""Exact-rational scalar layer: parsing, formatting, infinity ordering."""

from fractions import Fraction

import pytest

from metricsynth.rationals import INF, format_scalar, is_finite, parse_scalar


def test_parse_integer_fraction_decimal_forms():
    assert parse_scalar("5") == Fraction(5)
    assert parse_scalar("5/2") == Fraction(5, 2)
    assert parse_scalar("2.5") == Fraction(5, 2)
    assert parse_scalar(7) == Fraction(7)
    assert parse_scalar("0") == Fraction(0)


def test_parse_infinity_spellings():
    assert parse_scalar("inf") is INF
    assert parse_scalar("Infinity") is INF
    assert parse_scalar(" inf ") is INF


def test_parse_rejects_floats_negatives_and_garbage():
    with pytest.raises(ValueError):
        parse_scalar(0.5)
    with pytest.raises(ValueError):
        parse_scalar("-3")
    with pytest.raises(ValueError):
        parse_scalar("three")
    with pytest.raises(ValueError):
        parse_scalar(True)
    with pytest.raises(ValueError):
        parse_scalar("1/0")


def test_format_canonical_forms():
    assert format_scalar(Fraction(5)) == "5"
    assert format_scalar(Fraction(5, 2)) == "5/2"
    assert format_scalar(INF) == "inf"
    assert format_scalar(Fraction(0)) == "0"


def test_format_parse_round_trip():
    for value in (Fraction(0), Fraction(3), Fraction(7, 3), INF):
        assert parse_scalar(format_scalar(value)) == value


def test_infinity_ordering_and_arithmetic():
    assert INF > Fraction(10**9)
    assert not (INF < INF)
    assert INF == INF
    assert Fraction(3) < INF
    assert min(INF, Fraction(2)) == Fraction(2)
    assert max(INF, Fraction(2)) is INF
    assert is_finite(Fraction(4))
    assert not is_finite(INF)


def test_infinity_absorbs_addition_and_positive_scaling():
    assert INF + Fraction(3) is INF
    assert Fraction(3) + INF is INF
    assert INF * Fraction(2) is INF
    assert INF / Fraction(2) is INF
    assert Fraction(5) / INF == Fraction(0)


def test_undefined_infinity_operations_raise():
    with pytest.raises(ArithmeticError):
        _ = Fraction(0) * INF
    with pytest.raises(ArithmeticError):
        _ = INF - INF
    with pytest.raises(ArithmeticError):
        _ = Fraction(5) - INF
    with pytest.raises(ArithmeticError):
        _ = INF / INF


def test_infinity_sorts_last_in_vectors():
    vectors = [(INF, Fraction(0)), (Fraction(1), INF), (Fraction(1), Fraction(5))]
    assert sorted(vectors) == [
        (Fraction(1), Fraction(5)),
        (Fraction(1), INF),
        (INF, Fraction(0)),
    ]
