from __future__ import annotations

import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from kplump.numfield import (
    LUMP,
    FieldElement,
    format_rational,
    make_context,
    parse_element,
    pythagorean_pair,
    rational,
)

CTX = make_context(1, 5)


def test_make_context_examples():
    c = make_context(1, 5)
    assert (c.k, c.b) == (mpq(5, 13), mpq(12, 13))
    c = make_context(1, 12)
    assert (c.k, c.b) == (mpq(24, 145), mpq(143, 145))
    assert c.k ** 2 + c.b ** 2 == 1


def test_make_context_rejections():
    with pytest.raises(ValueError):
        make_context(1, 2)  # k = 4/5
    with pytest.raises(ValueError):
        make_context(2, 4)
    with pytest.raises(ValueError):
        make_context(3, 2)
    # outside the periodic range but fine as a plain Pythagorean context
    assert make_context(1, 2, periodic=False).k == mpq(4, 5)


def test_a_squared():
    assert CTX.a_squared == mpq(23, 48)
    A = CTX.A
    assert A * A == CTX.const(23, 48)


def test_defining_relations():
    s3, i = CTX.sqrt3, CTX.i
    assert s3 * s3 == CTX.const(3)
    assert i * i == CTX.const(-1)
    one_plus_i = CTX.one() + i
    assert one_plus_i.inverse() == (CTX.one() - i).scale(mpq(1, 2))


def test_lump_context_has_no_A():
    with pytest.raises(ValueError):
        LUMP.A


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        CTX.zero().inverse()


def test_context_mismatch():
    other = make_context(1, 12)
    with pytest.raises(ValueError):
        CTX.one() + other.one()


def test_pythagorean_pair():
    assert pythagorean_pair(mpq(5, 13)) == (1, 5)
    assert pythagorean_pair(mpq(24, 145)) == (1, 12)
    assert pythagorean_pair(mpq(1, 3)) is None


def test_rational_canonical():
    q = rational(6, -4)
    assert q.denominator > 0 and format_rational(q) == "-3/2"
    assert format_rational(rational(0, 7)) == "0/1"


fracs = st.builds(rational, st.integers(-60, 60), st.integers(1, 30))
elements = st.lists(fracs, min_size=8, max_size=8).map(lambda cs: FieldElement.from_coords(cs, CTX))


@settings(max_examples=40, deadline=None)
@given(elements, elements, elements)
def test_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@settings(max_examples=40, deadline=None)
@given(elements)
def test_inverse_property(a):
    if a.is_zero():
        return
    assert a * a.inverse() == CTX.one()


@settings(max_examples=40, deadline=None)
@given(elements)
def test_serialize_roundtrip(a):
    text = a.serialize()
    assert text.startswith("ctx(1,5);")
    assert parse_element(text).serialize() == text
