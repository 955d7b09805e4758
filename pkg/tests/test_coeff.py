import pytest
from hypothesis import given, settings, strategies as st

from plethora.coeff import (
    NonUnit, NotDivisible, RingSpec, TruncScalar, binom_conv, exact_divide, format_poly, trunc_invert, valuation,
)

SPECS = [RingSpec(2, 6, 4), RingSpec(3, 4, 3), RingSpec(5, 3, 5), RingSpec(2, 1, 1)]


@st.composite
def scalars(draw, count=1):
    spec = draw(st.sampled_from(SPECS))
    out = []
    for _ in range(count):
        coeffs = draw(st.lists(st.integers(-10 ** 6, 10 ** 6), min_size=0, max_size=spec.N + 2))
        out.append(TruncScalar(spec, coeffs))
    return out


def test_binomial_convention():
    assert binom_conv(-1, 0, 2, 6) == 0
    assert binom_conv(5, 2, 2, 6) == 10
    assert binom_conv(4, 7, 3, 4) == 0


def test_valuation():
    assert valuation(48, 2) == 4
    assert valuation(7, 7) == 1
    assert valuation(10, 3) == 0


def test_inverse_of_one_plus_a():
    s = RingSpec(2, 6, 4)
    a = TruncScalar.gen(s)
    assert str(trunc_invert(1 + a)) == "1 - a + a^2 - a^3"
    with pytest.raises(NonUnit):
        trunc_invert(2 + a)


def test_exact_divide_lands_at_lower_precision():
    s = RingSpec(2, 6, 4, slack=4)
    q = exact_divide(TruncScalar(s, [4, 6]), 2)
    assert q.spec.M == 2
    assert q.coeffs == (2, 3, 0, 0)
    assert str(q) == "2 - a"
    with pytest.raises(NotDivisible):
        exact_divide(TruncScalar(s, [1]), 2)


def test_truncation_and_format():
    s = RingSpec(3, 2, 3)
    x = TruncScalar(s, [10, -1, 4, 99])
    assert x.coeffs == (1, 8, 4)
    assert format_poly(x) == "1 - a + 4a^2"
    assert TruncScalar.from_json(s, x.to_json()) == x
    assert TruncScalar.gen(s) ** 3 == 0


def test_bad_spec():
    with pytest.raises(ValueError):
        RingSpec(4, 3, 3)
    with pytest.raises(ValueError):
        RingSpec(2, 0, 3)


@settings(max_examples=1000, deadline=None)
@given(scalars(3))
def test_ring_axioms(xs):
    x, y, z = xs
    assert (x + y) + z == x + (y + z)
    assert x + y == y + x
    assert (x * y) * z == x * (y * z)
    assert x * y == y * x
    assert x * (y + z) == x * y + x * z
    assert x + (-x) == 0
    assert x * 1 == x
    assert x - y == x + (-y)


@settings(max_examples=1000, deadline=None)
@given(scalars(1))
def test_units_invert(xs):
    (x,) = xs
    if x.is_unit():
        assert x * trunc_invert(x) == 1
    else:
        assert x.coeffs[0] % x.spec.p == 0


@settings(max_examples=1000, deadline=None)
@given(scalars(1), st.integers(0, 3))
def test_divide_undoes_multiply(xs, v):
    (x,) = xs
    s = x.spec
    if s.M <= v:
        return
    hi = s.lifted()
    m = s.p ** v * (s.p + 1)
    y = TruncScalar(hi, x.coeffs) * m
    assert exact_divide(y, m, s) == x


@settings(max_examples=1000, deadline=None)
@given(scalars(2))
def test_reduction_is_a_ring_map(xs):
    x, y = xs
    s = x.spec
    lo = s.with_(M=max(1, s.M - 1), N=max(1, s.N - 1))
    assert (x * y).reduce_to(lo) == x.reduce_to(lo) * y.reduce_to(lo)
    assert (x + y).reduce_to(lo) == x.reduce_to(lo) + y.reduce_to(lo)
