import json

from click.testing import CliRunner

from plethora.cli import main


def run(*args, env=None):
    res = CliRunner().invoke(main, list(args), env=env)
    return res.exit_code, res.output


def test_adem_normalize_json():
    code, out = run("adem-normalize", "--p", "2", "--word", "2,0")
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["normal_form"] == "Q1 Q1"
    assert doc["config"]["p"] == 2 and doc["config"]["M"] == 12


def test_output_is_deterministic():
    a = run("dl-basis", "--n", "1", "--deg-max", "8")[1]
    b = run("dl-basis", "--n", "1", "--deg-max", "8")[1]
    assert a == b


def test_precision_env_override():
    code, out = run("morava-orient", "--p", "2", env={"PLETHORA_PRECISION": "6,5"})
    doc = json.loads(out)
    assert (doc["config"]["M"], doc["config"]["N"]) == (6, 5)
    assert doc["result"]["matches_target"]


def test_usage_errors_exit_2():
    assert run("adem-normalize", "--word", "2,0", "--bogus")[0] == 2
    assert run("morava-taq-su", "--n", "12")[0] == 2
    assert run("adem-normalize", "--p", "4", "--word", "1")[0] == 2
    assert run("morava-ext1", "--module", "zz")[0] == 2


def test_computational_failure_exits_1():
    code, out = run("lambda-ext", "--p", "3")
    assert code == 1
    assert json.loads(out)["result"]["error"]["type"] == "NotImplementedError"


def test_taq_su4():
    code, out = run("morava-taq-su", "--n", "4", "--format", "json")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["paper_match"] is True
    assert len(res["ext2"]["relations"]) == 9


def test_hgamma_and_ext1():
    code, out = run("morava-hgamma", "--M", "8", "--N", "8")
    assert code == 0 and json.loads(out)["result"]["h3_rank"] == 0
    code, out = run("morava-ext1", "--module", "t", "--omega", "4")
    assert json.loads(out)["result"]["ext1_order"] == 8


def test_quad_dual_from_file(tmp_path):
    from plethora.koszul_core import gamma_datum
    path = tmp_path / "gamma.json"
    path.write_text(json.dumps(gamma_datum(4, 4).to_json()))
    code, out = run("quad-dual", "--input", str(path))
    assert code == 0
    assert json.loads(out)["result"]["ranks"] == [1, 3, 2, 0]


def test_koszul_check_witness():
    code, out = run("koszul-check", "--builtin", "non-koszul", "--coh-max", "4")
    res = json.loads(out)["result"]
    assert res["koszul_on_window"] is False
    assert res["witness"] == [3, 4, 1]


def test_text_format():
    code, out = run("adem-normalize", "--word", "3,1", "--format", "text")
    assert code == 0
    assert "normal_form: 0" in out
