from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from diamond_embed.dyadic import Dyadic, dyadic_level, to_dyadic

dyadics = st.builds(Dyadic, st.integers(-10**6, 10**6), st.integers(0, 30))


def test_canonical_form():
    assert Dyadic(4, 3) == Dyadic(1, 1)
    assert (Dyadic(4, 3).num, Dyadic(4, 3).exp) == (1, 1)
    assert str(Dyadic(3, 2)) == "3/2^2"


def test_bits_and_levels():
    assert Dyadic(5, 3).bits(3) == (1, 0, 1)
    assert Dyadic(3, 2).in_level(2)
    assert not Dyadic(1, 1).in_level(2)
    assert dyadic_level(Dyadic(3, 3)) == 3
    assert dyadic_level(Dyadic(0)) == 0


def test_to_dyadic_rejects_thirds():
    with pytest.raises(ValueError):
        to_dyadic(Fraction(1, 3))


def test_numpy_integers_coerce():
    import numpy as np

    assert Dyadic(3) == np.int64(3)
    assert Dyadic(1, 1) + np.int64(1) == Dyadic(3, 1)


@given(dyadics, dyadics)
def test_matches_fraction(a, b):
    fa, fb = a.to_fraction(), b.to_fraction()
    assert (a + b).to_fraction() == fa + fb
    assert (a - b).to_fraction() == fa - fb
    assert (a * b).to_fraction() == fa * fb
    assert (a < b) == (fa < fb)
    assert (a == b) == (fa == fb)
    assert abs(a).to_fraction() == abs(fa)


@given(dyadics)
def test_half_double(a):
    assert a.half().double() == a
    assert a.scale_pow2(-3).to_fraction() == a.to_fraction() / 8


@given(dyadics)
def test_hash_agrees_with_fraction(a):
    assert hash(a) == hash(a.to_fraction())
