import pytest

from plethora import lambda_algebra as lam


def w(*entries):
    return tuple((0, r) for r in entries)


@pytest.mark.parametrize("x,y,expected", [
    (w(0), w(1), ()),
    (w(0), w(2), (w(1, 1),)),
    (w(1), w(1), (w(1, 1),)),
    (w(1), w(3), ()),
    (w(2), w(5), ()),
])
def test_products(x, y, expected):
    assert lam.lambda_product([x], [y]) == expected


def test_coadmissibility():
    assert lam.is_coadmissible(w(3, 1))
    assert not lam.is_coadmissible(w(1, 3))


def test_source_basis():
    assert lam.ext_basis_source(2, 0, 3) == [w(-1, -4)]
    assert lam.format_lambda(w(-1, -4)) == "L-1 L-4"
    assert len(lam.coadmissible_words(3, 2, 8, 6)) == 63


def test_odd_prime_rewriting_not_available():
    with pytest.raises(NotImplementedError):
        lam.lambda_rewrite(w(1, 3), p=3)


def test_unit_module_window():
    data = lam.unit_module()
    dims, _, unreliable = lam.ext_over_F_window(data, 0, 2, (0, 6))
    assert dims[(1, 1)] == 1
    assert dims[(2, 3)] == 1
    win = lam.build_window(data, 0, 2, (0, 6))
    assert lam.delta_squared_zero(win)
    assert lam.random_delta_squared(win, count=50)
