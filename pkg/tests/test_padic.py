from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ultrarg.padic import (
    PadicError,
    PadicPoint,
    PadicScalar,
    PrecisionError,
    UnitFraction,
    character,
    character_value,
    dot,
    embed,
    format_padic,
    norm,
    parse_padic,
    point_norm,
    polar_part,
    val,
)

PRIMES = [2, 3, 5, 7]


def vp_int(n: int, p: int) -> int:
    # independent oracle: repeated division
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def vp(q: Fraction, p: int) -> int:
    return vp_int(abs(q.numerator), p) - vp_int(q.denominator, p)


def oracle_norm(q: Fraction, p: int) -> Fraction:
    return Fraction(0) if q == 0 else Fraction(p) ** (-vp(q, p))


rationals = st.builds(
    Fraction,
    st.integers(min_value=-(10**6), max_value=10**6),
    st.integers(min_value=1, max_value=10**6),
)


@st.composite
def prime_and_pair(draw):
    p = draw(st.sampled_from(PRIMES))
    return p, draw(rationals), draw(rationals)


# --- construction and parsing ------------------------------------------------


def test_parse_literal_value():
    x = parse_padic("101.1", 2)
    assert x.to_fraction() == Fraction(11, 2)  # 1/2 + 1 + 4
    assert val(x) == -1
    assert norm(x) == 2


def test_parse_zero_is_zero():
    z = parse_padic("0", 5)
    assert z.is_zero and norm(z) == 0 and val(z) == float("inf")


def test_polar_part_literal():
    assert polar_part(parse_padic("0.01", 3)).as_fraction() == Fraction(1, 9)


@pytest.mark.parametrize("bad", ["", "1.2.3", "12a", "2"])
def test_parse_rejects_malformed(bad):
    with pytest.raises(PadicError):
        parse_padic(bad, 2)


def test_parse_rational_form():
    x = parse_padic("-2/3", 5, precision=20)
    assert (x * PadicScalar.from_int(3, 5, 20) + PadicScalar.from_int(2, 5, 20)).is_zero


@given(st.sampled_from(PRIMES), rationals)
def test_format_parse_roundtrip(p, q):
    assume(q != 0)
    x = PadicScalar.from_fraction(q, p, 30)
    y = parse_padic(format_padic(x), p, 30)
    assert y.to_fraction() == x.to_fraction()


def test_leading_zero_digit_rejected():
    with pytest.raises(PadicError):
        PadicScalar(3, 0, [0, 1])


def test_digit_beyond_window():
    x = PadicScalar(2, 0, [1, 0, 1])
    assert [x.digit(j) for j in range(-2, 3)] == [0, 0, 1, 0, 1]
    with pytest.raises(PrecisionError):
        x.digit(3)


def test_json_roundtrip():
    x = parse_padic("21.02", 3)
    assert PadicScalar.from_json(x.to_json()) == x


# --- arithmetic against the rational oracle -------------------------------------


@given(prime_and_pair())
def test_norm_matches_oracle(case):
    p, q, _ = case
    assert norm(PadicScalar.from_fraction(q, p)) == oracle_norm(q, p)


@given(prime_and_pair())
def test_operations_agree_with_rationals(case):
    p, a, b = case
    x, y = PadicScalar.from_fraction(a, p), PadicScalar.from_fraction(b, p)
    # results must agree with exact rationals on the reliable window
    for res, exact in ((x + y, a + b), (x - y, a - b), (x * y, a * b)):
        if exact == 0:
            assert res.is_zero or res.valuation >= 20
            continue
        assert val(res) == vp(exact, p)
        diff = res.to_fraction() - exact
        assert diff == 0 or vp(diff, p) >= min(res.absolute_precision, 20)
    if b != 0:
        z = x / y
        assert val(z) == vp(a / b, p) if a else z.is_zero


@given(prime_and_pair())
def test_ultrametric_inequality(case):
    p, a, b = case
    x, y = PadicScalar.from_fraction(a, p), PadicScalar.from_fraction(b, p)
    nx, ny, ns = norm(x), norm(y), norm(x + y)
    assert ns <= max(nx, ny)
    if nx != ny:
        assert ns == max(nx, ny)


@given(prime_and_pair())
def test_norm_multiplicative(case):
    p, a, b = case
    x, y = PadicScalar.from_fraction(a, p), PadicScalar.from_fraction(b, p)
    assert norm(x * y) == norm(x) * norm(y)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        PadicScalar.from_int(3, 5) / PadicScalar.zero(5)


def test_prime_mismatch():
    with pytest.raises(PadicError):
        PadicScalar.from_int(1, 2) + PadicScalar.from_int(1, 3)


def test_cancellation_loses_relative_precision():
    x = PadicScalar(2, 0, [1, 0, 0, 1])
    y = PadicScalar(2, 0, [1, 0, 0, 0])
    z = x - y
    assert val(z) == 3 and z.absolute_precision == 4


# --- polar part and characters ---------------------------------------------------


@given(st.sampled_from(PRIMES), rationals)
def test_polar_decomposition(p, q):
    x = PadicScalar.from_fraction(q, p, 40)
    t = polar_part(x)
    rest = x - embed(t, 40)
    # rest lies in Z_p and the polar part in [0, 1)
    assert rest.is_zero or norm(rest) <= 1
    assert 0 <= t.as_fraction() < 1
    # oracle: q - t has no p in the denominator
    assert (q - t.as_fraction()).denominator % p != 0


@given(st.sampled_from(PRIMES), rationals, rationals)
def test_character_is_additive(p, a, b):
    x, y = PadicScalar.from_fraction(a, p, 40), PadicScalar.from_fraction(b, p, 40)
    assert character(x + y) == character(x) + character(y)


def test_character_values_exact_at_quarters():
    assert character_value(UnitFraction(1, 1, 2)) == -1
    assert character_value(UnitFraction(1, 2, 2)) == -1j
    assert character_value(UnitFraction.zero(3)) == 1


def test_character_trivial_on_integers():
    assert character(PadicScalar.from_int(12345, 3)).numerator == 0


def test_unit_fraction_validation():
    with pytest.raises(PadicError):
        UnitFraction(4, 2, 2)


# --- points ---------------------------------------------------------------------


def test_point_norm_is_max():
    x = PadicPoint.from_values([Fraction(1, 4), 6, 0], 2)
    assert point_norm(x) == 4


def test_dot_product():
    x = PadicPoint.from_values([Fraction(1, 2), 3], 2)
    k = PadicPoint.from_values([2, Fraction(1, 3)], 2)
    assert dot(x, k).to_fraction() == PadicScalar.from_fraction(2, 2).to_fraction()


def test_point_dimension_mismatch():
    with pytest.raises(PadicError):
        PadicPoint.from_values([1], 2) - PadicPoint.from_values([1, 2], 2)
