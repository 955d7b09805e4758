import pytest

from plethora import dyer_lashof as dl
from plethora.koszul_core import dyer_lashof_pbw


def w(*entries):
    return tuple((0, r) for r in entries)


@pytest.mark.parametrize("word,expected", [
    (w(2, 0), "Q1 Q1"),
    (w(3, 1), "0"),
    (w(2, 2), "Q2 Q2"),
    (w(4, 1), "Q3 Q2"),
])
def test_adem_p2(word, expected):
    assert str(dl.adem_normalize(word, 2)) == expected


def test_adem_p3():
    assert str(dl.adem_normalize(w(3, 1), 3)) == "Q3 Q1"
    assert str(dl.adem_normalize(((1, 3), (0, 1)), 3)) == "bQ3 Q1"


def test_strategies_agree():
    for word in [w(5, 1, 0), w(6, 2, 1), w(4, 0, 0)]:
        assert dl.adem_normalize(word, 2, "left") == dl.adem_normalize(word, 2, "right")


def test_word_stats():
    deg, exc, adm = dl.word_stats(w(2, 0), 2)
    assert (deg, exc, adm) == (2, 2, False)
    assert dl.is_admissible(w(2, 1), 2)


def test_basis_window_counts():
    assert len(dl.free_basis_window(1, 0, (0, 12), 3, 2)) == 24
    assert len(dl.dl_generators(1, (0, 12), 3, 2)) == 19
    basis = dl.free_basis_window(1, 0, (0, 6), 3, 2)
    assert [dl.format_word(x, 2) for x in basis] == ["1", "Q1", "Q2", "Q3", "Q4", "Q5", "Q2 Q1", "Q3 Q2"]


def test_instability():
    assert dl.satisfies_instability(w(2), 1, 0, 2)


def test_pbw_for_admissible_words():
    assert dyer_lashof_pbw().passes
