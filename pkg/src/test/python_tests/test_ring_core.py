# Licensed under the MIT License.
"""
Tests for exact ring arithmetic and the ring spec syntax.
"""
import numpy as np
import pytest
from hamcrest import assert_that, contains_exactly, equal_to, has_length, is_
from hypothesis import given, settings
from hypothesis import strategies as st

from ring_core import Family, RingSpec, format_ring, parse_ring
from vr_utils import CapacityError, ConfigError, InvalidElementError, NotInvertibleError

from .valring_test_client import defaults, oracles

Z4 = parse_ring("Z/2^2")
Z9 = parse_ring("Z/3^2")
F2T2 = parse_ring("GF(2)[t]/t^2")
F2T3 = parse_ring("GF(2)[t]/t^3")


def elem_pairs(spec: str):
    ring = parse_ring(spec)
    element = st.integers(min_value=0, max_value=ring.order - 1)
    return st.tuples(st.just(ring), element, element)


ANY_PAIR = st.sampled_from(defaults.ARITHMETIC_RINGS).flatmap(elem_pairs)


@pytest.mark.parametrize(
    "ring, op, x, y, expected",
    [
        (Z4, "mul", 2, 2, 0),
        (Z4, "add", 3, 3, 2),
        (F2T3, "mul", F2T3.parse_elem("1+t"), F2T3.parse_elem("1+t+t^2"), 1),
        (Z9, "sub", 2, 5, 6),
    ],
)
def test_arithmetic_examples(ring, op, x, y, expected):
    """Worked examples of add, sub and mul."""
    assert_that(getattr(ring, op)(x, y), is_(expected))


@pytest.mark.parametrize(
    "ring, x, expected",
    [(Z4, 3, True), (Z4, 2, False), (F2T2, F2T2.parse_elem("t"), False)],
)
def test_is_unit(ring, x, expected):
    assert_that(ring.is_unit(x), is_(expected))


@pytest.mark.parametrize(
    "ring, x, expected",
    [(Z4, "3", "3"), (Z9, "2", "5"), (F2T2, "1+t", "1+t")],
)
def test_inverse_examples(ring, x, expected):
    assert_that(ring.format_elem(ring.inverse(ring.parse_elem(x))), is_(expected))


@pytest.mark.parametrize(
    "ring, x, expected",
    [
        (F2T3, "1+t", "1+t+t^2"),
        (F2T3, "1+t^2", "1+t^2"),
        (F2T3, "1+t+t^2", "1+t"),
        (parse_ring("GF(4)[t]/t^2"), "1", "1"),
        (parse_ring("GF(4)[t]/t^2"), "(x)+t", "(x+1)+(x)t"),
    ],
)
def test_inverse_in_characteristic_two(ring, x, expected):
    """Hensel steps use 1 + 1, which is zero here, not the element coded 2."""
    inverse = ring.inverse(ring.parse_elem(x))
    assert_that(inverse, is_(ring.parse_elem(expected)))
    assert_that(ring.mul(ring.parse_elem(x), inverse), is_(ring.from_int(1)))


@pytest.mark.parametrize(
    "spec, n, expected",
    [
        ("Z/3^2", 2, "2"),
        ("Z/3^2", 11, "2"),
        ("Z/3^2", -1, "8"),
        ("GF(2)[t]/t^2", 2, "0"),
        ("GF(2)[t]/t^2", 3, "1"),
        ("GF(4)[t]/t^2", 2, "0"),
        ("GF(9)[t]/t^2", 5, "2"),
    ],
)
def test_from_int(spec, n, expected):
    ring = parse_ring(spec)
    assert_that(ring.format_elem(ring.from_int(n)), is_(expected))


@pytest.mark.parametrize("spec", defaults.ARITHMETIC_RINGS)
def test_every_unit_times_its_inverse_is_one(spec):
    ring = parse_ring(spec)
    one = ring.from_int(1)
    for u in ring.units():
        assert ring.mul(u, ring.inverse(u)) == one


def test_inverse_of_nonunit_raises():
    with pytest.raises(NotInvertibleError):
        Z4.inverse(2)


@pytest.mark.parametrize(
    "ring, x, expected",
    [(Z4, "2", 1), (Z4, "0", 2), (F2T3, "t^2+t^3", 2), (Z9, "1", 0)],
)
def test_valuation(ring, x, expected):
    """Powers of t at or above r vanish while parsing, so t^2+t^3 is t^2."""
    assert_that(ring.valuation(ring.parse_elem(x)), is_(expected))


def test_invalid_element_raises():
    with pytest.raises(InvalidElementError):
        Z4.add(4, 0)
    with pytest.raises(InvalidElementError):
        Z4.mul(-1, 1)


@pytest.mark.parametrize(
    "ring, expected",
    [(Z4, [1, 3]), (parse_ring("Z/2"), [1])],
)
def test_unit_enumeration(ring, expected):
    assert_that(ring.units(), contains_exactly(*expected))


def test_truncated_poly_units_have_unit_constant_term():
    assert_that(F2T3.units(), has_length(4))
    assert_that(all(x % 2 == 1 for x in F2T3.units()), is_(True))


@pytest.mark.parametrize("spec", defaults.ARITHMETIC_RINGS)
def test_unit_and_nonunit_counts(spec):
    ring = parse_ring(spec)
    assert_that(len(ring.units()), is_(ring.order - ring.q ** (ring.r - 1)))
    assert_that(len(ring.nonunits()), is_(ring.q ** (ring.r - 1)))
    assert_that(ring.unit_count, is_(len(ring.units())))


@pytest.mark.parametrize("spec", defaults.ARITHMETIC_RINGS)
def test_nonunits_form_the_principal_ideal(spec):
    """R^0 is closed under + and under multiplication by R, and equals pi R."""
    ring = parse_ring(spec)
    nonunits = set(ring.nonunits())
    for x in nonunits:
        for y in nonunits:
            assert ring.add(x, y) in nonunits
        for z in ring.elements():
            assert ring.mul(x, z) in nonunits
    multiples = {ring.mul(ring.uniformizer, z) for z in ring.elements()}
    assert_that(multiples, is_(nonunits))


@pytest.mark.parametrize("spec", defaults.ARITHMETIC_RINGS)
def test_ideal_chain_sizes(spec):
    ring = parse_ring(spec)
    sizes = [len(ring.ideal_power(k)) for k in range(ring.r + 1)]
    assert_that(sizes, is_([ring.q ** (ring.r - k) for k in range(ring.r + 1)]))


@pytest.mark.parametrize("spec", defaults.TINY_RINGS + ("GF(4)[t]/t^2",))
def test_is_unit_matches_inverse_scan(spec):
    ring = parse_ring(spec)
    for x in ring.elements():
        scanned = oracles.naive_inverse(ring, x)
        assert_that(ring.is_unit(x), is_(scanned >= 0))
        if scanned >= 0:
            assert_that(ring.inverse(x), is_(scanned))


@pytest.mark.parametrize("spec", defaults.ARITHMETIC_RINGS)
def test_arithmetic_matches_oracle(spec):
    """1000 seeded random pairs per ring against the schoolbook oracle."""
    ring = parse_ring(spec)
    rng = np.random.default_rng(defaults.SEED)
    for x, y in rng.integers(0, ring.order, size=(1000, 2)):
        x, y = int(x), int(y)
        assert_that(ring.mul(x, y), is_(oracles.naive_mul(ring, x, y)))
        assert_that(ring.add(x, y), is_(oracles.naive_add(ring, x, y)))


@given(ANY_PAIR)
@settings(max_examples=200, deadline=None)
def test_ring_axioms(triple):
    ring, x, y = triple
    assert ring.add(x, y) == ring.add(y, x)
    assert ring.mul(x, y) == ring.mul(y, x)
    assert ring.sub(ring.add(x, y), y) == x
    assert ring.add(x, ring.neg(x)) == 0
    z = ring.add(x, 1 % ring.order)
    assert ring.mul(x, ring.add(y, z)) == ring.add(ring.mul(x, y), ring.mul(x, z))
    assert ring.mul(ring.mul(x, y), z) == ring.mul(x, ring.mul(y, z))


@given(ANY_PAIR)
@settings(max_examples=200, deadline=None)
def test_valuation_is_multiplicative(triple):
    ring, x, y = triple
    assert ring.valuation(ring.mul(x, y)) == min(
        ring.valuation(x) + ring.valuation(y), ring.r
    )
    assert (ring.valuation(x) == 0) == ring.is_unit(x)


@given(ANY_PAIR)
@settings(max_examples=100, deadline=None)
def test_element_syntax_round_trip(triple):
    ring, x, _ = triple
    assert ring.parse_elem(ring.format_elem(x)) == x


@pytest.mark.parametrize("spec", defaults.ARITHMETIC_RINGS)
def test_operation_tables_match_scalar_arithmetic(spec):
    ring = parse_ring(spec)
    add, mul = ring.operation_tables()
    for x in range(0, ring.order, max(1, ring.order // 16)):
        for y in ring.elements():
            assert int(add[x, y]) == ring.add(x, y)
            assert int(mul[x, y]) == ring.mul(x, y)


def test_operation_tables_follow_the_order_cap():
    ring = parse_ring("Z/3^7")
    add, mul = ring.operation_tables()
    assert_that(add.shape, is_((2187, 2187)))
    assert_that(int(mul[2186, 2186]), is_(1))
    assert_that(int(add[2000, 1000]), is_(813))
    with pytest.raises(CapacityError, match="exceeds cap 100"):
        ring.operation_tables(cap=100)


@pytest.mark.parametrize("text", ["9", "-1", "81", "x", ""])
def test_parse_elem_rejects_out_of_range_integers(text):
    with pytest.raises(InvalidElementError):
        Z9.parse_elem(text)


@pytest.mark.parametrize(
    "text, family, p, m, r",
    [
        ("Z/2^3", Family.ZPowerR, 2, 1, 3),
        ("Z/9", Family.ZPowerR, 3, 1, 2),
        ("GF(3)[t]/t^2", Family.TruncatedPoly, 3, 1, 2),
        ("GF(4:x^2+x+1)[t]/t^2", Family.TruncatedPoly, 2, 2, 2),
        ("GF(2^3)[t]/t^1", Family.TruncatedPoly, 2, 3, 1),
    ],
)
def test_parse_ring(text, family, p, m, r):
    ring = parse_ring(text)
    assert_that((ring.family, ring.p, ring.m, ring.r), is_((family, p, m, r)))
    assert_that(parse_ring(format_ring(ring)), equal_to(ring))


def test_explicit_modulus_is_kept():
    ring = parse_ring("GF(9:x^2+x+2)[t]/t^2")
    assert_that(ring.modulus, is_((2, 1, 1)))
    assert_that(format_ring(ring), is_("GF(9:x^2+x+2)[t]/t^2"))
    assert_that(parse_ring(format_ring(ring)), equal_to(ring))


@pytest.mark.parametrize(
    "text",
    ["Z/6", "Z/4^0", "GF(6)[t]/t^2", "GF(4:x^2+1)[t]/t^2", "R/2", "GF(3)[t]/t^"],
)
def test_bad_ring_specs(text):
    with pytest.raises(ConfigError):
        parse_ring(text)


def test_order_cap():
    with pytest.raises(CapacityError):
        parse_ring("Z/2^21")
    assert_that(parse_ring("Z/2^21", order_cap=2**21).order, is_(2**21))
    with pytest.raises(CapacityError):
        RingSpec.z_power(3, 4, order_cap=80)
