import random

import pytest
from hypothesis import given, settings, strategies as st

from plethora import linalg
from plethora.coeff import RingSpec, TruncScalar
from plethora.linalg import (
    FlatMatrix, cokernel_presentation, contains, elementary_divisors, flatten, howell_form, howell_rows, image_rows,
    in_span, kernel_basis, mat_mul, preimage, same_span, solve_in_span, span_over_ring,
)

PM = [(2, 3), (2, 5), (3, 2), (5, 2), (2, 12)]


@st.composite
def raw_matrices(draw, max_rows=5, max_cols=5):
    p, M = draw(st.sampled_from(PM))
    r = draw(st.integers(0, max_rows))
    c = draw(st.integers(1, max_cols))
    mod = p ** M
    rows = [[draw(st.integers(0, mod - 1)) for _ in range(c)] for _ in range(r)]
    return rows, c, p, M


def _row_op(rows, p, M, seed):
    rng = random.Random(seed)
    mod = p ** M
    rows = [list(r) for r in rows]
    rng.shuffle(rows)
    if len(rows) >= 2:
        i, j = rng.sample(range(len(rows)), 2)
        k = rng.randrange(mod)
        rows[i] = [(x + k * y) % mod for x, y in zip(rows[i], rows[j])]
        u = rng.randrange(1, mod)
        while u % p == 0:
            u = rng.randrange(1, mod)
        rows[j] = [(u * x) % mod for x in rows[j]]
    # redundant rows do not change the span
    if rows:
        rows.append([(2 * x) % mod for x in rows[0]])
    return rows


def test_small_howell_form():
    H = howell_form([[2, 4], [6, 8]], 2, 2, 4)
    assert H.rows == ((2, 0), (0, 4))
    assert H.length() == 5
    assert elementary_divisors([[2, 4], [6, 8]], 2, 2, 4) == [1, 2]


def test_howell_property_catches_hidden_vectors():
    # row (2, 1) over Z/4: 2*(2, 1) = (0, 2) has to appear in the form
    H = howell_form([[2, 1]], 2, 2, 2)
    assert in_span([0, 2], H)
    assert not in_span([0, 1], H)
    assert solve_in_span([0, 2], H) is not None


@settings(max_examples=1000, deadline=None)
@given(raw_matrices(), st.integers(0, 10 ** 6))
def test_howell_canonical_under_row_operations(m, seed):
    rows, c, p, M = m
    assert howell_form(rows, c, p, M) == howell_form(_row_op(rows, p, M, seed), c, p, M)


@settings(max_examples=1000, deadline=None)
@given(raw_matrices())
def test_backends_agree(m):
    rows, c, p, M = m
    assert howell_rows(rows, c, p, M, force_python=True) == howell_rows(rows, c, p, M)


@settings(max_examples=1000, deadline=None)
@given(raw_matrices(), st.integers(0, 10 ** 6))
def test_span_membership(m, seed):
    rows, c, p, M = m
    H = howell_form(rows, c, p, M)
    rng = random.Random(seed)
    mod = p ** M
    combo = [0] * c
    for r in rows:
        k = rng.randrange(mod)
        combo = [(x + k * y) % mod for x, y in zip(combo, r)]
    assert in_span(combo, H)
    assert contains(H, howell_form([combo], c, p, M))
    # the spans of the rows and of the Howell rows are the same
    assert all(in_span(r, H) for r in rows)


@settings(max_examples=1000, deadline=None)
@given(raw_matrices())
def test_kernel_correct(m):
    rows, c, p, M = m
    if not rows:
        return
    A = FlatMatrix.from_rows(rows, c, p, M)
    K = kernel_basis(A)
    assert all(not any(v) for v in image_rows(list(K.rows), rows, p, M))
    # length of kernel + length of image = rows * M
    assert K.length() + howell_form(A).length() == A.rows * M


@settings(max_examples=300, deadline=None)
@given(raw_matrices(max_rows=4, max_cols=3), st.integers(0, 10 ** 6))
def test_preimage(m, seed):
    rows, c, p, M = m
    if not rows:
        return
    rng = random.Random(seed)
    mod = p ** M
    target = howell_form([[rng.randrange(mod) for _ in range(c)]], c, p, M)
    P = preimage(rows, target, p, M)
    assert all(in_span(v, target) for v in image_rows(list(P.rows), rows, p, M))


@st.composite
def truncated_matrices(draw):
    spec = draw(st.sampled_from([RingSpec(2, 3, 3), RingSpec(3, 2, 2), RingSpec(2, 4, 1)]))
    shape = draw(st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3)))
    ints = st.integers(0, spec.modulus - 1)

    def mat(r, c):
        return [[TruncScalar(spec, draw(st.lists(ints, min_size=spec.N, max_size=spec.N))) for _ in range(c)]
                for _ in range(r)]
    a, b, c = shape
    return spec, mat(a, b), mat(b, c)


@settings(max_examples=1000, deadline=None)
@given(truncated_matrices())
def test_flatten_multiplicative(data):
    spec, A, B = data
    assert flatten(mat_mul(A, B, spec), spec) == flatten(A, spec).matmul(flatten(B, spec))


@settings(max_examples=300, deadline=None)
@given(truncated_matrices())
def test_span_over_ring_is_a_module_span(data):
    spec, A, _ = data
    a = TruncScalar.gen(spec)
    shifted = A + [[a * x for x in row] for row in A]
    assert same_span(A, shifted, spec)


def test_span_over_ring_empty():
    spec = RingSpec(2, 3, 2)
    assert len(span_over_ring([], spec, 2)) == 0


def test_cokernel_of_two_times_identity():
    spec = RingSpec(2, 4, 2)
    two = TruncScalar.const(spec, 2)
    zero = TruncScalar.zero(spec)
    pres = cokernel_presentation([[two, zero], [zero, two]], ["x", "y"], spec)
    assert pres.length() == 4
    assert pres.invariants() == [1, 1, 1, 1]


def test_pure_python_flag():
    assert linalg.backend() in ("compiled", "python")


@pytest.mark.parametrize("p,M", [(2, 40), (3, 30)])
def test_large_modulus_uses_python_path(p, M):
    mod = p ** M
    rows = [[p, 1], [mod - 1, p * p]]
    assert howell_rows(rows, 2, p, M) == howell_rows(rows, 2, p, M, force_python=True)
