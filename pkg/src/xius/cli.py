"""Command-line front door.

Exit codes: 0 every check passed, 1 a verified identity failed,
2 usage or configuration error, 3 some check was inconclusive.
"""
from __future__ import annotations

import json
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import __version__
from . import sequences as seqs
from .kset import SequenceError, SigmaCoder, SpecialSequence, enumerate_K, norm_K_bracket, verify_tree
from .norms import ResourceLimit, norm_W, norm_W_truncated, norm_tildeK
from .params import FinVec, Interval, ParamError, SignVector, make_param_seq, parse_frac
from .reports import EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PASS, Report, emit as emit_report, exact, load_report
from .ris import (RISError, basic_inequality_transform, build_ris, find_l1_average, ris_average_estimates)
from .suites import SUITES, ConfigError, RunConfig, load_config, run_suite
from .trees import tree_from_json, tree_to_json
from .uncond import BlockError, sign_flip_transform, unconditionality_certificate

STATUS_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}


# ---------------------------------------------------------------------------
# input helpers


def _params(text):
    """A preset name or a path to a parameter JSON file."""
    try:
        if text is None:
            return make_param_seq("toyA")
        path = Path(text)
        if path.suffix == ".json" or path.exists():
            return make_param_seq(json.loads(path.read_text()))
        return make_param_seq(text)
    except (OSError, json.JSONDecodeError, ParamError, KeyError, TypeError) as exc:
        raise click.BadParameter(str(exc), param_hint="--params") from exc


def _read_json(path, hint):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise click.BadParameter(str(exc), param_hint=hint) from exc


def _vec(data) -> FinVec:
    if isinstance(data, dict):
        return FinVec((int(c), parse_frac(v)) for c, v in data.items())
    return FinVec.from_json(data)


def _vecs(path, hint="--blocks") -> list[FinVec]:
    data = _read_json(path, hint)
    try:
        return [_vec(v) for v in data]
    except (ValueError, TypeError) as exc:
        raise click.BadParameter(str(exc), param_hint=hint) from exc


def _fracs(text, hint) -> list[Fraction]:
    try:
        return [parse_frac(t.strip()) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(str(exc), param_hint=hint) from exc


def _ints(text, hint) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint=hint) from exc


def _interval(text, hint="--window") -> Interval:
    try:
        a, b = text.split(":")
        return Interval(int(a), int(b))
    except ValueError as exc:
        raise click.BadParameter("expected LO:HI", param_hint=hint) from exc


def _tree(path, params, coder):
    """A tree file: either a bare tree or {"tree": ..., "sequences": {key: sequence}}."""
    data = _read_json(path, "--tree")
    sequences = {}
    if "tree" in data:
        for key, sdata in data.get("sequences", {}).items():
            try:
                sequences[key] = SpecialSequence.from_json(sdata, params, coder, sequences)
            except (SequenceError, ValueError) as exc:
                raise click.BadParameter(f"sequence {key}: {exc}", param_hint="--tree") from exc
        data = data["tree"]
    try:
        return tree_from_json(data, sequences)
    except (KeyError, ValueError, TypeError) as exc:
        raise click.BadParameter(str(exc), param_hint="--tree") from exc


def _output(data, out, status="pass"):
    text = json.dumps(exact(data), sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)
    sys.exit(STATUS_EXIT[status])


params_option = click.option("--params", "params_text", default=None, help="Preset name or parameter JSON file.")
out_option = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write JSON here.")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="xius")
def main():
    """Exact-arithmetic checks for the space X_ius and its norming sets."""


# ---------------------------------------------------------------------------
# norm


@main.command()
@click.option("--space", type=click.Choice(["W", "Wk", "tildeK"]), default="W")
@params_option
@click.option("--vec", "vec_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=None, help="Truncation index for Wk.")
@click.option("--budget", type=click.IntRange(1), default=None, help="DP support ceiling.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@out_option
def norm(space, params_text, vec_path, k, budget, fmt, out):
    """Exact norm of a vector with its witness functional."""
    p = _params(params_text)
    x = _vec(_read_json(vec_path, "--vec"))
    kwargs = {"ceiling": budget} if budget else {}
    if space == "Wk" and k is None:
        raise click.UsageError("--k is required for --space Wk")
    try:
        if space == "W":
            data = norm_W(x, p, **kwargs).to_json()
        elif space == "Wk":
            data = norm_W_truncated(x, p, k, **kwargs).to_json()
        else:
            data = {"value": norm_tildeK(x, p)}
        status, reason = "pass", ""
    except ResourceLimit as exc:
        data = {"reason": str(exc), "bracket": list(exc.bracket)}
        status, reason = "inconclusive", str(exc)
    if fmt == "csv":
        report = Report("norm", {"space": space, "params": p.to_json(), "x": x})
        report.add(f"norm in {space}", "exact norm", status, data, reason=reason)
        text = emit_report(report, "csv", Path(out) if out else None)
        if not out:
            click.echo(text, nl=False)
        sys.exit(STATUS_EXIT[status])
    _output(dict(data, status=status), out, status)


# ---------------------------------------------------------------------------
# kset


@main.group()
def kset():
    """Enumerate, verify and bracket against the norming set K."""


@kset.command("enum")
@params_option
@click.option("--window", required=True, help="LO:HI")
@click.option("--depth", type=click.IntRange(0), default=1)
@out_option
def kset_enum(params_text, window, depth, out):
    """Deterministic database of K functionals in a window."""
    p = _params(params_text)
    db = enumerate_K(p, SigmaCoder(p), _interval(window), depth)
    _output({"count": len(db), "functionals": [tree_to_json(f) for f in db]}, out)


@kset.command("verify")
@params_option
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, dir_okay=False))
@out_option
def kset_verify(params_text, tree_path, out):
    """Check a functional tree against the defining clauses of K."""
    p = _params(params_text)
    coder = SigmaCoder(p)
    check = verify_tree(_tree(tree_path, p, coder), p, coder)
    _output({"ok": check.ok, "violations": [[list(a), c] for a, c in check.violations], "scope": check.scope},
            out, "pass" if check.ok else "fail")


@kset.command("bracket")
@params_option
@click.option("--vec", "vec_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--depth", type=click.IntRange(0), default=0, help="Enumeration depth of the database.")
@out_option
def kset_bracket(params_text, vec_path, depth, out):
    """Lower and upper bounds for the norm against K."""
    p = _params(params_text)
    x = _vec(_read_json(vec_path, "--vec"))
    db = enumerate_K(p, SigmaCoder(p), x.range, depth) if depth and not x.is_zero else []
    b = norm_K_bracket(x, p, db)
    _output({"lower": b.lower, "upper": b.upper, "upper_exact": b.upper_exact, "scope": b.scope,
             "witness": tree_to_json(b.witness) if b.witness is not None else None},
            out, "pass" if b.lower == b.upper else "inconclusive")


# ---------------------------------------------------------------------------
# uncond


@main.group()
def uncond():
    """Sign-flip transform and unconditionality certificates."""


def _uncond_inputs(params_text, tree_path, blocks_path, signs):
    p = _params(params_text)
    coder = SigmaCoder(p)
    f = _tree(tree_path, p, coder)
    xs = _vecs(blocks_path)
    try:
        sv = SignVector.parse(signs)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--signs") from exc
    if len(sv) != len(xs):
        raise click.BadParameter("one sign per block is required", param_hint="--signs")
    return p, coder, f, xs, sv


@uncond.command("flip")
@params_option
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--blocks", "blocks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--signs", required=True, help='For example "+-+".')
@click.option("--lift", is_flag=True, help="Take depended couples with respect to unrestricted windows.")
@out_option
def uncond_flip(params_text, tree_path, blocks_path, signs, lift, out):
    """Apply the sign-flip transform to a functional and blocks."""
    p, coder, f, xs, sv = _uncond_inputs(params_text, tree_path, blocks_path, signs)
    try:
        r = sign_flip_transform(f, xs, sv, p, coder, lift)
    except BlockError as exc:
        raise click.BadParameter(str(exc), param_hint="--blocks") from exc
    _output(r.to_json(), out, r.status)


@uncond.command("certify")
@params_option
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--blocks", "blocks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--signs", required=True)
@click.option("--coeffs", required=True, help="Comma-separated rationals b_k.")
@click.option("--sigmas", default=None, help="Comma-separated bounds; default: the exact auxiliary norms.")
@click.option("--lift", is_flag=True)
@out_option
def uncond_certify(params_text, tree_path, blocks_path, signs, coeffs, sigmas, lift, out):
    """Exact lower-bound chain for a sign-flipped combination."""
    p, coder, f, xs, sv = _uncond_inputs(params_text, tree_path, blocks_path, signs)
    bs = _fracs(coeffs, "--coeffs")
    ss = _fracs(sigmas, "--sigmas") if sigmas else [norm_tildeK(x, p) for x in xs]
    try:
        cert = unconditionality_certificate(xs, bs, sv, f, ss, p, coder, lift)
    except (BlockError, ValueError) as exc:
        raise click.UsageError(str(exc)) from exc
    _output(cert.to_json(), out, cert.status)


# ---------------------------------------------------------------------------
# ris


@main.group()
def ris():
    """l1 averages, rapidly increasing sequences and the basic inequality."""


ris_inputs = [
    click.option("--blocks", "blocks_path", required=True, type=click.Path(exists=True, dir_okay=False)),
    click.option("--js", required=True, help="Comma-separated indices j_1 < j_2 < ..."),
    click.option("--C", "C", default="1", help="Rational constant C >= 1."),
    click.option("--eps", required=True, help="Rational eps > 0."),
]


def _with_ris_inputs(fn):
    for opt in reversed(ris_inputs):
        fn = opt(fn)
    return fn


def _ris(p, blocks_path, js, C, eps):
    try:
        return build_ris(_vecs(blocks_path), _ints(js, "--js"), parse_frac(C), parse_frac(eps), p)
    except RISError as exc:
        raise click.UsageError(str(exc)) from exc


@ris.command("find-avg")
@params_option
@click.option("--blocks", "blocks_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=click.IntRange(1), required=True)
@click.option("--C", "C", default="2")
@out_option
def ris_find_avg(params_text, blocks_path, k, C, out):
    """Search for a C-l1^k average among consecutive blocks."""
    p = _params(params_text)
    w = find_l1_average(_vecs(blocks_path), k, parse_frac(C), p)
    if w.status == "none":
        _output({"status": "none", "reason": w.reason, "scanned": w.scanned}, out, "inconclusive")
    _output(w.to_json(), out, w.status)


@ris.command("build")
@params_option
@_with_ris_inputs
@out_option
def ris_build(params_text, blocks_path, js, C, eps, out):
    """Check conditions (a)-(c) of a rapidly increasing sequence."""
    p = _params(params_text)
    _output(_ris(p, blocks_path, js, C, eps).to_json(), out)


@ris.command("transform")
@params_option
@_with_ris_inputs
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--coeffs", required=True)
@click.option("--j0", type=int, default=None)
@out_option
def ris_transform(params_text, blocks_path, js, C, eps, tree_path, coeffs, j0, out):
    """Run the basic-inequality recursion and check the master inequality."""
    p = _params(params_text)
    r = _ris(p, blocks_path, js, C, eps)
    f = _tree(tree_path, p, SigmaCoder(p))
    try:
        res = basic_inequality_transform(f, r, _fracs(coeffs, "--coeffs"), p, j0)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    _output(res.to_json(), out, res.status)


@ris.command("estimate")
@params_option
@_with_ris_inputs
@click.option("--j", type=int, required=True)
@click.option("--variant", type=click.Choice(["1", "2", "3"]), default="1")
@click.option("--depth", type=click.IntRange(0), default=1, help="Enumeration depth of the audited set.")
@out_option
def ris_estimate(params_text, blocks_path, js, C, eps, j, variant, depth, out):
    """Upper and lower estimates on averages of a rapidly increasing sequence."""
    p = _params(params_text)
    r = _ris(p, blocks_path, js, C, eps)
    window = Interval(min(x.min_supp() for x in r.blocks), max(x.max_supp() for x in r.blocks))
    db = enumerate_K(p, SigmaCoder(p), window, depth)
    try:
        rep = ris_average_estimates(r, j, p, db, variant=int(variant), database=db)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    _output(rep.to_json(), out, rep.status)


# ---------------------------------------------------------------------------
# seq


@main.group()
def seq():
    """Depended sequences, cancellation identities and the operator probe."""


seq_options = [
    click.option("--odd-index", type=int, default=3),
    click.option("--size", type=click.IntRange(10), default=800, help="Coordinates of the standard toy input."),
]


def _with_seq_options(fn):
    for opt in reversed(seq_options):
        fn = opt(fn)
    return fn


def _chi(p, odd_index, size):
    M, ys = seqs.standard_toy_input(size)
    try:
        return seqs.build_depended_sequence(M, ys, odd_index, p, SigmaCoder(p)), M, ys
    except (SequenceError, ParamError) as exc:
        _output({"status": "inconclusive", "reason": str(exc)}, None, "inconclusive")


def _seq_params(params_text):
    return _params(params_text or "toyS")


@seq.command("build")
@params_option
@_with_seq_options
@out_option
def seq_build(params_text, odd_index, size, out):
    """Build a depended sequence and its special sequence."""
    p = _seq_params(params_text)
    chi, _, _ = _chi(p, odd_index, size)
    phi = chi.phi
    _output({"phi": phi.to_json(), "chi_even": {str(pos): s.x for pos, s in chi.steps.items()},
             "c": {str(pos): s.c for pos, s in chi.steps.items()},
             "digits": {str(pos): s.digits for pos, s in chi.steps.items()},
             "ris": {str(pos): s.ris.to_json() for pos, s in chi.steps.items()}}, out)


@seq.command("depest")
@params_option
@_with_seq_options
@click.option("--B", "B", default="", help="Comma-separated 1-based pairs whose even functional cancels.")
@out_option
def seq_depest(params_text, odd_index, size, B, out):
    """Cancellation identities for K_phi functionals on a depended sequence."""
    p = _seq_params(params_text)
    chi, _, _ = _chi(p, odd_index, size)
    try:
        f = seqs.phi_functional(chi, [i - 1 for i in _ints(B, "--B")])
    except SequenceError as exc:
        _output({"status": "inconclusive", "reason": str(exc)}, out, "inconclusive")
    rec = seqs.check_alternating_sum(chi, [f])
    _output(rec.to_json(), out, rec.status)


@seq.command("ld")
@params_option
@_with_seq_options
@out_option
def seq_ld(params_text, odd_index, size, out):
    """K_phi functionals on the offset average."""
    p = _seq_params(params_text)
    chi, _, _ = _chi(p, odd_index, size)
    rec = seqs.check_offset_average(chi.phi, seqs.offset_family(chi), p)
    _output(rec.to_json(), out, rec.status)


@seq.command("distance")
@params_option
@_with_seq_options
@out_option
def seq_distance(params_text, odd_index, size, out):
    """Exact lower-bound chain of the distance experiment."""
    p = _seq_params(params_text)
    M, ys = seqs.standard_toy_input(size)
    try:
        rec = seqs.distance_experiment(M, ys, odd_index, p, SigmaCoder(p))
    except (SequenceError, ParamError) as exc:
        _output({"status": "inconclusive", "reason": str(exc)}, out, "inconclusive")
    _output(rec.to_json(), out, rec.status)


OPERATORS = {
    "identity": lambda n: FinVec({n: 1}),
    "double": lambda n: FinVec({n: 2}),
    "shift": lambda n: FinVec({n + 1: 1}),
}


@seq.command("probe")
@params_option
@click.option("--operator", type=click.Choice(sorted(OPERATORS)), default="shift")
@click.option("--columns", "columns_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help='JSON object {"n": vector} giving T e_n; overrides --operator.')
@click.option("--delta", default="1")
@click.option("--window", default="1:400")
@click.option("--odd-index", type=int, default=3)
@out_option
def seq_probe(params_text, operator, columns_path, delta, window, odd_index, out):
    """Look for the functionals that witness a non-scalar operator."""
    p = _params(params_text or "toyU")
    if columns_path:
        columns = {int(n): _vec(v) for n, v in _read_json(columns_path, "--columns").items()}
    else:
        W = _interval(window)
        columns = {n: OPERATORS[operator](n) for n in range(W.lo, W.hi + 1)}
    rec = seqs.operator_probe(columns, parse_frac(delta), odd_index, p, SigmaCoder(p))
    _output(rec.to_json(), out, rec.status)


# ---------------------------------------------------------------------------
# run / emit


@main.command()
@click.option("--suite", required=True, help=f"One of: {', '.join(SUITES)}.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@params_option
@click.option("--budget", type=click.IntRange(1), default=None, help="Generated instances per family.")
@click.option("--seed", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@out_option
def run(suite, config_path, params_text, budget, seed, fmt, out):
    """Run a registered suite and emit its report."""
    if suite not in SUITES:
        raise click.BadParameter(f"unknown suite {suite!r}; known: {', '.join(SUITES)}", param_hint="--suite")
    try:
        cfg = load_config(config_path) if config_path else RunConfig()
        data = cfg.to_json()
        if params_text is not None:
            p = Path(params_text)
            data["params"] = json.loads(p.read_text()) if p.suffix == ".json" or p.exists() else params_text
        if budget is not None:
            data["budget"] = budget
        if seed is not None:
            data["seed"] = seed
        cfg = RunConfig.from_json(data)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(str(exc)) from exc
    report = run_suite(cfg, suite)
    text = emit_report(report, fmt, Path(out) if out else None)
    if not out:
        click.echo(text, nl=False)
    else:
        c = report.counts()
        click.echo(f"{suite}: {report.status} ({c['pass']} pass, {c['fail']} fail, "
                   f"{c['inconclusive']} inconclusive)", err=True)
    sys.exit(report.exit_code)


@main.command()
@click.option("--report", "report_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), required=True)
@out_option
def emit(report_path, fmt, out):
    """Re-emit a saved JSON report as JSON or CSV."""
    try:
        report = load_report(report_path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read report: {exc}") from exc
    text = emit_report(report, fmt, Path(out) if out else None)
    if not out:
        click.echo(text, nl=False)
    sys.exit(EXIT_PASS)


if __name__ == "__main__":
    main()
