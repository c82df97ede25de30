"""Registered check suites and their configuration.

Every suite is a deterministic function of its RunConfig: all randomness
comes from ``random.Random(seed)`` and results are collected in order.
"""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from .generators import (random_fraction, random_k_functional, random_blocks, random_ris_blocks,
                         toy_special_sequence)
from .kset import SequenceError, SigmaCoder, enumerate_K, flat_average, flat_functional, norm_K_bracket, verify_tree
from .norms import DEFAULT_DP_CEILING, brute_force_norm, norm_W, norm_tildeK, tree_weights
from .params import FinVec, Interval, ParamError, ParamSeq, SignVector, make_param_seq, preset
from .reports import Report
from .ris import basic_inequality_transform, build_ris
from .trees import Special, evaluate, restrict, walk
from .uncond import index_depended_couples, sign_flip_transform, unconditionality_certificate
from . import sequences as seqs


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: Optional[object] = None        # preset name or parameter dict; None = suite default
    seed: int = 0
    budget: Optional[int] = None           # generated instances; None = suite default
    depth: int = 1                         # enumeration depth for K databases
    dp_ceiling: int = DEFAULT_DP_CEILING
    denominators: int = 6                  # random entries p/q with |p|, q <= this

    def __post_init__(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        for name in ("depth", "dp_ceiling", "denominators"):
            if not isinstance(getattr(self, name), int) or getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be a positive integer")
        if self.budget is not None and (not isinstance(self.budget, int) or self.budget <= 0):
            raise ConfigError("budget must be a positive integer")
        if self.params is not None:
            try:
                make_param_seq(self.params)
            except (ParamError, KeyError, TypeError) as exc:
                raise ConfigError(f"bad params: {exc}") from exc

    def resolve(self, default: str) -> ParamSeq:
        return make_param_seq(self.params) if self.params is not None else preset(default)

    def size(self, default: int) -> int:
        return self.budget if self.budget is not None else default

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(data: dict) -> "RunConfig":
        known = set(RunConfig.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**data)


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return RunConfig.from_json(data)


def _status(fails: list, inconclusive: list = ()) -> str:
    return "fail" if fails else ("inconclusive" if inconclusive else "pass")


def _coverage_target(total: int) -> int:
    """20 instances, or a fifth of a smaller run."""
    return min(20, -(-total // 5))


def _sigma_audit(report: Report, coder: SigmaCoder):
    problems = coder.audit()
    report.add("coding table is injective, increasing along extensions and respects the range bound",
               "coding function", "fail" if problems else "pass",
               {"assignments": len(coder.records), "problems": problems[:10]})


# ---------------------------------------------------------------------------
# norm-oracle


def norm_corpus(cfg: RunConfig, count: int) -> tuple[list[FinVec], list[FinVec]]:
    """Exhaustive ±1/0 vectors on coordinates 1..5 and ``count`` random rational vectors of support <= 6."""
    exhaustive = [FinVec({i + 1: v for i, v in enumerate(t) if v})
                  for t in itertools.product((-1, 0, 1), repeat=5)]
    rng = random.Random(cfg.seed)
    randoms = []
    for _ in range(count):
        coords = sorted(rng.sample(range(1, 10), rng.randint(1, 6)))
        randoms.append(FinVec({c: random_fraction(rng, cfg.denominators, cfg.denominators) for c in coords}))
    return exhaustive, randoms


def _patterns(x: FinVec, rng: random.Random, exhaustive: bool, count: int = 12):
    """Sign-flip / zeroing patterns as maps coord -> factor in {1, -1, 0}."""
    supp = x.supp
    if exhaustive:
        for t in itertools.product((1, -1, 0), repeat=len(supp)):
            yield dict(zip(supp, t))
        return
    for c in supp:
        yield {c: -1}
        yield {c: 0}
    for _ in range(count):
        yield {c: rng.choice((1, -1, 0)) for c in supp}


def suite_norm_oracle(cfg: RunConfig) -> Report:
    p = cfg.resolve("toyA")
    report = Report("norm-oracle", {"config": cfg.to_json(), "params": p.to_json()})
    exhaustive, randoms = norm_corpus(cfg, cfg.size(200))
    w_cache: dict[FinVec, Fraction] = {}
    k_cache: dict[FinVec, Fraction] = {}

    def nw(v):
        if v not in w_cache:
            w_cache[v] = norm_W(v, p, cfg.dp_ceiling).value if not v.is_zero else Fraction(0)
        return w_cache[v]

    def nk(v):
        if v not in k_cache:
            k_cache[v] = norm_tildeK(v, p) if not v.is_zero else Fraction(0)
        return k_cache[v]

    for label, corpus in (("exhaustive ±1/0 vectors, support <= 5", exhaustive),
                          ("seeded random rational vectors, support <= 6", randoms)):
        mismatches = []
        for v in corpus:
            if v.is_zero:
                continue
            a, b = nw(v), brute_force_norm(v, p)
            if a != b:
                mismatches.append({"x": v, "dp": a, "brute": b})
        report.add(f"norm_W equals the brute-force oracle on {label}", "W norm",
                   _status(mismatches), {"cases": len(corpus), "mismatches": mismatches[:5]})
    rng = random.Random(cfg.seed + 1)
    for name, norm in (("norm_W", nw), ("norm_tildeK", nk)):
        for label, corpus, full in (("exhaustive", exhaustive, True), ("random", randoms, False)):
            bad, checked = [], 0
            for v in corpus:
                base = norm(v)
                for pat in _patterns(v, rng, full):
                    u = FinVec({c: val * pat.get(c, 1) for c, val in v.items()})
                    checked += 1
                    if norm(u) > base:
                        bad.append({"x": v, "pattern": pat, "before": base, "after": norm(u)})
            report.add(f"sign flips and zeroing never increase {name} ({label} corpus)",
                       "unconditional auxiliary norms", _status(bad), {"comparisons": checked, "violations": bad[:5]})
    return report


# ---------------------------------------------------------------------------
# kset-audit


def suite_kset_audit(cfg: RunConfig) -> Report:
    p = cfg.resolve("toyA")
    report = Report("kset-audit", {"config": cfg.to_json(), "params": p.to_json()})
    rng = random.Random(cfg.seed)
    coder = SigmaCoder(p)
    databases = [("plain window [1, 6]", p, None, enumerate_K(p, coder, Interval(1, 6), cfg.depth))]
    u = preset("toyU")
    u_coder = SigmaCoder(u)
    try:
        seq = toy_special_sequence(u, u_coder, 1, rng)
        hi = max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp())
        databases.append(("small-arity window with special functionals", u, u_coder,
                          enumerate_K(u, u_coder, Interval(1, hi), cfg.depth, special_budget=40,
                                      sequences=[seq], even_indices=[2])))
    except SequenceError as exc:
        report.add("special sequence for the enumeration", "norming set", "inconclusive", reason=str(exc))
    for label, params, c, db in databases:
        bad = [(i, verify_tree(f, params, c).first()) for i, f in enumerate(db)]
        bad = [b for b in bad if b[1] is not None]
        report.add(f"every enumerated functional verifies ({label})", "norming set", _status(bad),
                   {"functionals": len(db), "specials": sum(isinstance(f, Special) for f in db), "violations": bad[:5]})
        lo, hi = 1, max(f.vector.max_supp() for f in db)
        bad = []
        for i, f in enumerate(db):
            a = rng.randint(lo, hi)
            E = Interval(a, rng.randint(a, hi))
            g = restrict(f, E)
            if g is None:
                continue
            check = verify_tree(g, params, c)
            if not check.ok or g.vector != f.vector.restrict(E):
                bad.append({"index": i, "interval": E.to_json(), "problem": check.first() or "vector mismatch"})
        report.add(f"interval restrictions re-verify ({label})", "norming set", _status(bad),
                   {"functionals": len(db), "violations": bad[:5]})
    db = databases[0][3]
    exhaustive, randoms = norm_corpus(cfg, cfg.size(60))
    bad = []
    for i, v in enumerate(exhaustive + randoms):
        if v.is_zero:
            continue
        # the even closure already covers the depth-1 database; the database
        # lower bound is exercised on every tenth vector
        b = norm_K_bracket(v, p, db if i % 10 == 0 else ())
        if not b.lower <= b.upper:
            bad.append({"x": v, "lower": b.lower, "upper": b.upper})
    report.add("norm_K bracket satisfies lower <= upper", "norming set", _status(bad),
               {"vectors": len(exhaustive) + len(randoms) - 1, "violations": bad[:5]})
    j = 2
    while p.has(j) and p.n(j) <= 4096:
        coords = list(range(1, p.n(j) + 1))
        witness = flat_functional(coords, j, p)
        value = evaluate(witness, flat_average(coords, p.n(j)))
        ok = verify_tree(witness, p).ok and value == Fraction(1, p.m(j))
        report.add(f"basis average of length n_{j} reaches 1/m_{j} through an explicit witness",
                   "basis averages", "pass" if ok else "fail", {"value": value, "target": Fraction(1, p.m(j))})
        j += 2
    _sigma_audit(report, u_coder)
    return report


# ---------------------------------------------------------------------------
# uncond-transform


def toy_sequences(params: ParamSeq, coder: SigmaCoder, rng: random.Random, count: int = 3) -> list:
    out, start = [], 1
    for _ in range(count):
        s = toy_special_sequence(params, coder, start, rng)
        out.append(s)
        start = s.xs[-1].max_supp() + 3
    return out


def _window(seq) -> Interval:
    lo, hi = seq.x(1).min_supp(), max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp())
    return Interval(max(1, lo - 3), hi + 3)


def suite_uncond_transform(cfg: RunConfig) -> Report:
    p = cfg.resolve("toyU")
    report = Report("uncond-transform", {"config": cfg.to_json(), "params": p.to_json()})
    rng = random.Random(cfg.seed)
    coder = SigmaCoder(p)
    sequences = toy_sequences(p, coder, rng)
    literal = {"pass": 0, "fail": [], "gap": []}
    lifted = {"pass": 0, "fail": []}
    coupled = 0
    for inst in range(cfg.size(150)):
        seq = rng.choice(sequences)
        W = _window(seq)
        f = random_k_functional(p, [seq], rng, W, with_special=rng.random() < 0.8)
        xs = random_blocks(W.lo, W.hi, rng, rng.randint(2, 7))
        signs = SignVector(tuple(rng.choice((1, -1)) for _ in xs))
        has_special = any(isinstance(node, Special) for _, node in walk(f))
        if has_special and index_depended_couples(f, xs).all:
            coupled += 1
        r = sign_flip_transform(f, xs, signs, p, coder)
        if r.status == "pass":
            literal["pass"] += 1
            continue
        if r.status == "fail":
            literal["fail"].append({"instance": inst, "report": r.to_json()})
            continue
        literal["gap"].append({"instance": inst, "unsupported": [[list(a), why] for a, why in r.unsupported]})
        r2 = sign_flip_transform(f, xs, signs, p, coder, lift=True)
        if r2.status == "pass":
            lifted["pass"] += 1
        else:
            lifted["fail"].append({"instance": inst, "status": r2.status, "report": r2.to_json()})
    total = cfg.size(150)
    report.add("sign-flip transform: equalities, supports, couple index and membership (literal windows)",
               "sign-flip transform", "fail" if literal["fail"] else "pass",
               {"instances": total, "passed": literal["pass"], "failed": literal["fail"][:3],
                "outside_literal_scope": len(literal["gap"])})
    if literal["gap"]:
        report.add("instances with a dangling odd member straddling a block, re-run with lifted couples",
                   "sign-flip transform", _status(lifted["fail"]),
                   {"instances": len(literal["gap"]), "passed": lifted["pass"], "failed": lifted["fail"][:3],
                    "examples": literal["gap"][:3]})
    required = _coverage_target(total)
    report.add("coverage: instances with special nodes and depended couples", "sign-flip transform",
               "pass" if coupled >= required else "fail", {"count": coupled, "required": required})
    # the certificate chain on blocks with small auxiliary norm
    bad, inconclusive, passed = [], [], 0
    for inst in range(max(1, cfg.size(150) // 5)):
        seq = rng.choice(sequences)
        W = _window(seq)
        f = random_k_functional(p, [seq], rng, W)
        xs = random_blocks(W.lo, W.hi, rng, rng.randint(2, 5))
        xs = [x.scale(Fraction(1, 16 * len(xs)) / norm_tildeK(x, p)) for x in xs]
        sigmas = [norm_tildeK(x, p) for x in xs]
        coeffs = [random_fraction(rng) for _ in xs]
        signs = SignVector(tuple(rng.choice((1, -1)) for _ in xs))
        cert = unconditionality_certificate(xs, coeffs, signs, f, sigmas, p, coder, lift=True)
        if cert.status == "pass":
            passed += 1
        elif cert.status == "fail":
            bad.append({"instance": inst, "values": cert.values})
        else:
            inconclusive.append({"instance": inst, "reason": cert.reason})
    report.add("unconditionality chain g(sum eps b x) >= f(sum b x) - 4 max|b| sum sigma", "unconditional blocks",
               _status(bad, inconclusive), {"passed": passed, "failed": bad[:3], "inconclusive": inconclusive[:3]},
               reason="; ".join(i["reason"] for i in inconclusive[:3]) if not bad and inconclusive else "")
    _sigma_audit(report, coder)
    return report


# ---------------------------------------------------------------------------
# basic-inequality


def suite_basic_inequality(cfg: RunConfig) -> Report:
    p = cfg.resolve("toyU")
    report = Report("basic-inequality", {"config": cfg.to_json(), "params": p.to_json()})
    rng = random.Random(cfg.seed)
    coder = SigmaCoder(p)
    sequences = toy_sequences(p, coder, rng)
    total = cfg.size(150)
    keys = ("master inequality", "h1 is a W functional with w(h1) = w(f)", "no m_j0 weight in h1",
            "||g2||_inf <= eps")
    fails = {k: [] for k in keys}
    premise, with_j0, case2, passed = [], 0, 0, 0
    for inst in range(total):
        special = rng.random() < 0.7
        seq = rng.choice(sequences)
        W = _window(seq) if special else Interval(1, 30)
        f = random_k_functional(p, sequences if special else [], rng, W, special)
        idx = sorted({node.j for _, node in walk(f) if hasattr(node, "j")})
        j0 = rng.choice(idx) if idx and (inst % 3 == 0) else None
        blocks, js, C, eps = random_ris_blocks(W.lo, W.hi, p, rng, rng.randint(1, 7), j0)
        ris = build_ris(blocks, js, C, eps, p)
        bs = [random_fraction(rng) for _ in blocks]
        out = basic_inequality_transform(f, ris, bs, p, j0)
        with_j0 += j0 is not None
        case2 += any(r.case == "case2" for r in out.records.values())
        if out.premise_failures:
            premise.append({"instance": inst, "premises": [[list(a), c] for a, c in out.premise_failures[:3]]})
            continue
        master = out.lhs <= out.rhs
        h1_ok = out.checks["h1 in W"] and out.checks["w(h1) = w(f)"]
        j0_ok = j0 is None or out.h1 is None or p.m(j0) not in tree_weights(out.h1)
        g2_ok = all(abs(v) <= eps for v in out.g2.values())
        for key, ok in zip(keys, (master, h1_ok, j0_ok, g2_ok)):
            if not ok:
                fails[key].append({"instance": inst, "output": out.to_json()})
        if out.ok and master and h1_ok and j0_ok and g2_ok:
            passed += 1
    for key in keys:
        report.add(f"basic inequality: {key}", "basic inequality", _status(fails[key]),
                   {"instances": total, "failed": fails[key][:2]})
    report.add("basic inequality: every internal check", "basic inequality",
               "pass" if passed + len(premise) == total else "fail",
               {"instances": total, "passed": passed, "premise_failures": len(premise)})
    if premise:
        report.add("basic inequality: instances whose premises fail", "basic inequality", "inconclusive",
                   {"count": len(premise), "examples": premise[:3]}, reason="premise failure in generated instance")
    report.add("coverage: instances with j0 set", "basic inequality",
               "pass" if with_j0 >= _coverage_target(total) else "fail",
               {"count": with_j0, "case2_instances": case2, "required": _coverage_target(total)})
    _sigma_audit(report, coder)
    return report


# ---------------------------------------------------------------------------
# sequences-audit


def _record_experiment(report: Report, rec: "seqs.ExperimentRecord", anchor: str):
    for claim in rec.claims:
        report.add(f"{rec.experiment}: {claim.name}", anchor, claim.status, claim.values, reason=claim.reason)


def suite_sequences_audit(cfg: RunConfig) -> Report:
    p = cfg.resolve("toyS")
    report = Report("sequences-audit", {"config": cfg.to_json(), "params": p.to_json()})
    rng = random.Random(cfg.seed)
    coder = SigmaCoder(p)
    M, ys = seqs.standard_toy_input(800)
    try:
        chi = seqs.build_depended_sequence(M, ys, 3, p, coder)
    except (SequenceError, ValueError) as exc:
        report.add("depended sequence construction", "depended sequences", "inconclusive", reason=str(exc))
        _sigma_audit(report, coder)
        return report
    report.add("depended sequence clauses re-verified", "depended sequences", "pass",
               {"sigmas": list(chi.phi.sigmas), "length": chi.length,
                "rounding_digits": [s.digits for s in chi.steps.values()]})
    k = chi.phi.pair_count
    functionals = [seqs.phi_functional(chi)]
    for _ in range(cfg.size(4)):
        B = [i for i in range(k) if rng.random() < 0.5]
        E = None
        if rng.random() < 0.5:
            lo = chi.phi.x(1).min_supp()
            hi = chi.phi.xs[-1].max_supp()
            a = rng.randint(lo, hi)
            E = Interval(a, rng.randint(a, hi))
        lam_signs = [rng.choice((1, -1)) for _ in range(k)]
        functionals.append(seqs.phi_functional(chi, B, E or Interval.everything(), rng.choice((1, -1)), lam_signs))
    _record_experiment(report, seqs.check_alternating_sum(chi, functionals), "cancellation identities")
    _record_experiment(report, seqs.check_offset_average(chi.phi, seqs.offset_family(chi), p, functionals),
                       "offset averages")
    _record_experiment(report, seqs.distance_experiment(M, ys, 3, p, coder), "distance experiment")
    # pd1 on the scaled basis average of a large even index, against the even functionals of phi
    j0 = next(j for j in range(2, 40, 2) if p.n(3) ** 2 < p.m(j) and j not in chi.phi.sigmas)
    start = chi.phi.xs[-1].max_supp() + 1
    target = FinVec.flat(range(start, start + p.n(j0)), Fraction(p.m(j0), p.n(j0)))
    hs = list(chi.phi.even_trees[:2])
    _record_experiment(report, seqs.check_pd1_estimates(hs, [chi.phi.index_at(2), chi.phi.index_at(4)],
                                                        [Fraction(1)], target, 3, j0, p), "weight-pattern estimates")
    # operator probe on the small-arity parameters
    u = preset("toyU")
    u_coder = SigmaCoder(u)
    shift = {n: FinVec({n + 1: 1}) for n in range(1, 400)}
    _record_experiment(report, seqs.operator_probe(shift, 1, 3, u, u_coder), "operator probe (shift)")
    ident = {n: FinVec({n: 1}) for n in range(1, 60)}
    _record_experiment(report, seqs.operator_probe(ident, Fraction(1, 2), 3, u, u_coder), "operator probe (identity)")
    # weight coincidences: two sequences sharing the opening pair and two elsewhere
    u_rng = random.Random(cfg.seed + 7)
    registry = [toy_special_sequence(u, u_coder, 1, u_rng) for _ in range(2)]
    registry += toy_sequences(u, u_coder, u_rng, 2)
    problems = seqs.weight_coincidence_audit(registry, u)
    report.add("at most one weight coincidence after the first differing position", "coding function",
               "fail" if problems else "pass", {"sequences": len(registry), "problems": problems[:5]})
    _sigma_audit(report, coder)
    _sigma_audit(report, u_coder)
    return report


SUITES: dict[str, Callable[[RunConfig], Report]] = {
    "norm-oracle": suite_norm_oracle,
    "kset-audit": suite_kset_audit,
    "uncond-transform": suite_uncond_transform,
    "basic-inequality": suite_basic_inequality,
    "sequences-audit": suite_sequences_audit,
}


def run_suite(config: RunConfig, name: str) -> Report:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; known: {sorted(SUITES)}")
    return SUITES[name](config)
