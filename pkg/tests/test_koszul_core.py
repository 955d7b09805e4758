import json

from plethora import koszul_core as kc


def test_gamma_ranks():
    q = kc.gamma_datum(6, 6)
    assert kc.rank_profile(q, 3) == [1, 3, 7, 15]
    assert kc.rank_profile(kc.quadratic_dual(q), 3) == [1, 3, 2, 0]


def test_gamma_dual_matches_displayed_elements():
    q = kc.gamma_datum(6, 6)
    dual = kc.quadratic_dual(q)
    assert kc.elements_span(dual, kc.gamma_dual_expected()) == dual.relation_span(2)


def test_exterior_profile():
    assert kc.rank_profile(kc.exterior_datum(), 4) == [1, 1, 0, 0, 0]


def test_koszulity():
    assert kc.koszulity_check(kc.exterior_datum(), 3, 3).passes
    rep = kc.koszulity_check(kc.non_koszul_datum(), 4, 4)
    assert rep.witness == (3, 4, 1)
    assert kc.hilbert_defect(kc.non_koszul_datum()) == [0, 0, 0, 0, 1, 2]


def test_koszul_matches_cobar_for_exterior():
    ok, _ = kc.koszul_vs_cobar(kc.exterior_datum(), 3)
    assert ok


def test_json_roundtrip():
    q = kc.gamma_datum(4, 4)
    back = kc.QuadraticDatum.from_json(json.loads(json.dumps(q.to_json())))
    assert back.relation_span(2) == q.relation_span(2)
    assert kc.rank_profile(back, 2) == kc.rank_profile(q, 2)
