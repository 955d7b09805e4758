"""Command-line interface. JSON is the contract format; text is a readable dump."""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from . import dyer_lashof as dl, koszul_core as kc, lambda_algebra as lam, morava as mv, verify
from .coeff import DEFAULT_M, DEFAULT_N, DEFAULT_SLACK, RingSpec


def _precision_override(M, N):
    raw = os.environ.get("PLETHORA_PRECISION")
    if not raw:
        return M, N
    parts = [int(x) for x in raw.replace(" ", "").split(",") if x]
    if len(parts) == 1:
        return parts[0], N
    return parts[0], parts[1]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (str, int, bool)) or x is None:
        return x
    if hasattr(x, "to_json"):
        return _jsonable(x.to_json())
    return str(x)


def _text(obj, indent=0):
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_text(v, indent + 1))
            else:
                lines.append(f"{pad}- {v}")
    else:
        lines.append(f"{pad}{obj}")
    return lines


def emit(config, result, fmt):
    doc = {"config": _jsonable(config), "result": _jsonable(result)}
    if fmt == "json":
        click.echo(json.dumps(doc, sort_keys=True, indent=2))
    else:
        click.echo("\n".join(_text(doc)))


def common_options(f):
    @click.option("--p", "p", type=int, default=2, show_default=True)
    @click.option("--M", "M", type=int, default=DEFAULT_M, show_default=True)
    @click.option("--N", "N", type=int, default=DEFAULT_N, show_default=True)
    @click.option("--slack", type=int, default=DEFAULT_SLACK, show_default=True)
    @click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json", show_default=True)
    @functools.wraps(f)
    def wrapper(p, M, N, slack, fmt, **kw):
        M, N = _precision_override(M, N)
        try:
            spec = RingSpec(p, M, N, slack)
        except ValueError as err:
            raise click.UsageError(str(err))
        config = {"command": click.get_current_context().info_name, **spec.to_json(), "format": fmt,
                  **{k: v for k, v in kw.items()}}
        try:
            result = f(spec=spec, **kw)
        except click.ClickException:
            raise
        except (ArithmeticError, AssertionError, LookupError, NotImplementedError) as err:
            doc = {"error": {"type": type(err).__name__, "message": str(err),
                             "obstruction": getattr(err, "obstruction", None)}}
            emit(config, doc, fmt)
            sys.exit(1)
        emit(config, result, fmt)
        if isinstance(result, dict) and result.get("_exit"):
            sys.exit(result["_exit"])
    return wrapper


def window_options(f):
    f = click.option("--deg-min", type=int, default=0, show_default=True)(f)
    f = click.option("--deg-max", type=int, default=12, show_default=True)(f)
    f = click.option("--len-cap", type=int, default=3, show_default=True)(f)
    f = click.option("--coh-max", type=int, default=3, show_default=True)(f)
    return f


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Exact computations with algebras of power operations."""


def _parse_word(text, p):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.startswith("b"):
            out.append((1, int(tok[1:])))
        else:
            out.append((0, int(tok)))
    if p == 2 and any(e for e, _ in out):
        raise click.UsageError("Bockstein entries are only allowed at odd p")
    return tuple(out)


@main.command("adem-normalize")
@common_options
@click.option("--word", required=True, help="comma-separated entries, leftmost first; 'b3' marks a Bockstein")
@click.option("--strategy", type=click.Choice(["left", "right"]), default="left")
def adem_normalize_cmd(spec, word, strategy):
    w = _parse_word(word, spec.p)
    el = dl.adem_normalize(w, spec.p, strategy)
    deg, exc, adm = dl.word_stats(w, spec.p)
    return {"input": dl.format_word(w, spec.p), "degree": deg, "excess": exc, "admissible": adm,
            "normal_form": str(el), "terms": el.to_json()}


@main.command("dl-basis")
@common_options
@window_options
@click.option("--n", "n", type=int, default=0, help="degree of the generator")
@click.option("--u", "u", type=int, default=0, help="instability shift")
@click.option("--generators", is_flag=True, help="free DL-ring generators instead of the module basis")
def dl_basis_cmd(spec, deg_min, deg_max, len_cap, coh_max, n, u, generators):
    if generators:
        words = dl.dl_generators(n, (deg_min, deg_max), len_cap, spec.p)
    else:
        words = dl.free_basis_window(n, u, (deg_min, deg_max), len_cap, spec.p)
    return {"count": len(words), "basis": [dl.format_word(w, spec.p) for w in words]}


@main.command("lambda-basis")
@common_options
@click.option("--length", "n", type=int, required=True)
@click.option("--a", "a", type=int, required=True)
@click.option("--b", "b", type=int, default=None, help="source degree; omit for the target form over a window")
@click.option("--window", type=(int, int), default=(-20, 20))
@click.option("--unstable", is_flag=True)
def lambda_basis_cmd(spec, n, a, b, window, unstable):
    if spec.p != 2 and b is None:
        raise click.UsageError("the target form is only available at p = 2")
    if b is not None:
        words = lam.ext_basis_source(n, a, b, spec.p)
        if unstable:
            words = lam.unstable_restrict(words)
        return {"form": "source", "count": len(words), "basis": [lam.format_lambda(w, spec.p) for w in words]}
    table = lam.ext_basis_target(n, a, window, spec.p)
    out = {}
    for c, words in sorted(table.items()):
        if unstable:
            words = lam.unstable_restrict(words)
        if words:
            out[str(c)] = [lam.format_lambda(w, spec.p) for w in words]
    return {"form": "target", "by_source_degree": out}


@main.command("lambda-ext")
@common_options
@window_options
@click.option("--a", "a", type=int, default=0)
@click.option("--module", type=click.Choice(["unit", "free"]), default="unit")
def lambda_ext_cmd(spec, deg_min, deg_max, len_cap, coh_max, a, module):
    if spec.p != 2:
        raise NotImplementedError("the lambda differential is only implemented at p = 2")
    data = lam.unit_module() if module == "unit" else dl.free_module_data(1, 0, (1, deg_max + 2), len_cap)
    dims, _, unreliable = lam.ext_over_F_window(data, a, coh_max, (deg_min, deg_max))
    win = lam.build_window(data, a, coh_max, (deg_min, deg_max))
    return {"dims": {f"{n},{t}": v for (n, t), v in sorted(dims.items()) if v},
            "unreliable": sorted(f"{n},{t}" for n, t in unreliable),
            "delta_squared_zero": lam.delta_squared_zero(win)}


BUILTIN = {"gamma": lambda spec: kc.gamma_datum(spec.M, spec.N), "exterior": lambda spec: kc.exterior_datum(spec.p),
           "non-koszul": lambda spec: kc.non_koszul_datum()}


def _load_datum(spec, builtin, input_path):
    if input_path:
        with open(input_path) as fh:
            return kc.QuadraticDatum.from_json(json.load(fh))
    return BUILTIN[builtin](spec)


@main.command("quad-dual")
@common_options
@click.option("--builtin", type=click.Choice(sorted(BUILTIN)), default="gamma")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--n-max", type=int, default=3)
def quad_dual_cmd(spec, builtin, input_path, n_max):
    q = _load_datum(spec, builtin, input_path)
    dual = kc.quadratic_dual(q)
    out = {"dual": dual.to_json(), "ranks": kc.rank_profile(dual, n_max)}
    if builtin == "gamma" and not input_path:
        out["matches_displayed_span"] = kc.elements_span(dual, kc.gamma_dual_expected()) == dual.relation_span(2)
    return out


@main.command("koszul-check")
@common_options
@window_options
@click.option("--builtin", type=click.Choice(sorted(BUILTIN)), default="gamma")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None)
def koszul_check_cmd(spec, deg_min, deg_max, len_cap, coh_max, builtin, input_path):
    q = _load_datum(spec, builtin, input_path)
    rep = kc.koszulity_check(q, coh_max, coh_max)
    out = {"koszul_on_window": rep.passes, "witness": rep.witness,
           "bar_homology_lengths": {f"{n},{m}": v for (n, m), v in sorted(rep.lengths.items())}}
    out["koszul_equals_cobar"] = kc.koszul_vs_cobar(q, coh_max)[0]
    return out


@main.command("morava-taq-su")
@common_options
@click.option("--n", "n", type=int, default=4)
@click.option("--convention", type=click.Choice(["untwisted", "twisted"]), default="untwisted")
def taq_su_cmd(spec, n, convention):
    if spec.p != 2:
        raise click.UsageError("height 2 is implemented at p = 2 only")
    if not 2 <= n <= 8:
        raise click.UsageError("--n must be between 2 and 8")
    return mv.taq_su(n, spec, convention).to_json()


@main.command("morava-hgamma")
@common_options
def hgamma_cmd(spec):
    if spec.p != 2:
        raise click.UsageError("height 2 is implemented at p = 2 only")
    out = mv.gamma_cohomology(spec.M, spec.N)
    rules, dual = mv.dualize_generators(mv.gamma_cobialgebroid(spec.M, spec.N))
    out["dual_rules"] = mv.format_dual_rules(rules, dual.spec)
    return out


@main.command("morava-ext1")
@common_options
@click.option("--module", default="t", help="t, s, or an integer theta scalar")
@click.option("--omega", "n", type=int, default=1)
def ext1_cmd(spec, module, n):
    if module not in ("t", "s"):
        try:
            int(module)
        except ValueError:
            raise click.UsageError("--module must be t, s or an integer")
    if n < 1:
        raise click.UsageError("--omega must be >= 1")
    out = mv.height1_ext(module, n, spec.p, spec.M)
    out["stable"] = mv.height1_ext_stable(module, n, spec.p, spec.M)
    return out


@main.command("morava-orient")
@common_options
@click.option("--K", "K", type=int, default=12)
def orient_cmd(spec, K):
    if K < spec.p:
        raise click.UsageError("--K must be >= p")
    return mv.orientation_det(spec.p, spec.M, K)


@main.command("verify-paper")
@common_options
def verify_cmd(spec):
    rows = verify.run_all()
    table = [{"check": name, "ok": ok, "detail": detail, "seconds": round(sec, 1)} for name, ok, detail, sec in rows]
    for r in table:
        click.echo(f"{'PASS' if r['ok'] else 'FAIL'}  {r['check']}  {r['detail']}", err=True)
    failed = sum(not r["ok"] for r in table)
    # timings vary run to run, so keep them out of the JSON contract
    for r in table:
        r.pop("seconds")
    return {"checks": table, "failed": failed, "_exit": 1 if failed else 0}


if __name__ == "__main__":
    main()
