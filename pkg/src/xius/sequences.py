"""Depended sequences and the experiments built on them.

A depended sequence chi = (x_1, f_1, ..., x_n, f_n) is a perturbation of a
special sequence phi: odd terms are basis averages taken from a set M of
basis indices, even terms are scaled averages of a rapidly increasing
sequence drawn from a user block sequence, and phi replaces each even x by a
decimal rounding y.  ``build_depended_sequence`` runs the construction and
re-verifies every defining clause; the remaining functions evaluate the
cancellation identities, the offset-average annihilation, the distance
experiment and the operator probe exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .kset import (SequenceError, SigmaCoder, SpecialSequence, assemble_special_sequence,
                   build_special_functional, enumerate_K, flat_average, flat_functional, norm_K_bracket)
from .norms import w_upper
from .params import PAPER_EXACT, FinVec, Interval, ParamSeq, frac_str, is_block_sequence, vector_sum
from .ris import RISWitness, build_ris
from .trees import Avg, Leaf, Node, Special, evaluate, negate, restrict, support


def _jsonable(value):
    if isinstance(value, Fraction):
        return frac_str(value)
    if isinstance(value, FinVec):
        return value.to_json()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class Claim:
    name: str
    status: str                     # pass | fail | inconclusive
    values: dict = field(default_factory=dict)
    reason: str = ""

    def to_json(self) -> dict:
        return {"claim": self.name, "status": self.status, "values": _jsonable(self.values),
                "reason": self.reason}


@dataclass
class ExperimentRecord:
    experiment: str
    inputs: dict
    values: dict
    claims: list

    @property
    def status(self) -> str:
        statuses = {c.status for c in self.claims}
        if "fail" in statuses:
            return "fail"
        return "inconclusive" if "inconclusive" in statuses else "pass"

    def to_json(self) -> dict:
        return {"experiment": self.experiment, "inputs": _jsonable(self.inputs),
                "values": _jsonable(self.values), "claims": [c.to_json() for c in self.claims],
                "status": self.status}


def _audit(name: str, holds: bool, params: ParamSeq, values: dict, caveat: str) -> Claim:
    """Inequalities whose constants need PaperExact growth: a toy violation is inconclusive."""
    if holds:
        return Claim(name, "pass", values)
    if params.regime == PAPER_EXACT:
        return Claim(name, "fail", values, "violated")
    return Claim(name, "inconclusive", values, caveat)


def _exact(name: str, holds: bool, values: dict, reason: str = "identity broken") -> Claim:
    return Claim(name, "pass" if holds else "fail", values, "" if holds else reason)


# ---------------------------------------------------------------------------
# depended sequences


def round_decimal(x: FinVec, bound: Fraction) -> tuple[FinVec, int]:
    """Least number of decimals keeping the support with l1 error at most ``bound``."""
    if x.norm_inf() > 1:
        raise ValueError("entries must have modulus at most 1")
    digits = 0
    while True:
        scale = 10 ** digits
        y = {c: Fraction(round(v * scale), scale) for c, v in x.items()}
        if all(y.values()) and sum(abs(y[c] - x[c]) for c in x) <= bound and max(abs(v) for v in y.values()) <= 1:
            return FinVec(y), digits
        digits += 1
        if digits > 60:
            raise SequenceError("decimal rounding did not converge")


@dataclass
class EvenStep:
    position: int
    index: int                      # sigma of the preceding prefix
    parts: tuple                    # x^{2i}_l
    part_functionals: tuple         # f^{2i}_l with range inside range(x^{2i}_l)
    ris: RISWitness
    c: Fraction
    x: FinVec                       # (c/n) sum of parts
    y: FinVec                       # decimal rounding of x, used by phi
    digits: int
    tree: Avg                       # f_{2i}


@dataclass
class DependedSequence:
    params: ParamSeq
    odd_index: int
    xs: tuple                       # chi's vectors
    fs: tuple                       # functionals as vectors
    phi: SpecialSequence
    steps: dict                     # position -> EvenStep

    @property
    def length(self) -> int:
        return len(self.xs)

    def weight_index(self, pos: int) -> int:
        return self.phi.index_at(pos)

    def phi_vector(self, pos: int) -> FinVec:
        return self.phi.x(pos)

    def verify(self) -> list[str]:
        """Re-check every defining clause from scratch; returns the violations."""
        p = self.params
        problems = []
        for pos in range(1, self.length + 1):
            if pos % 2:
                if self.xs[pos - 1] != self.phi.x(pos) or self.fs[pos - 1] != self.phi.f(pos):
                    problems.append(f"position {pos}: odd term differs from phi")
                continue
            step = self.steps[pos]
            j, n = step.index, p.n(step.index)
            x, y = self.xs[pos - 1], self.phi.x(pos)
            if x.supp != y.supp:
                problems.append(f"position {pos}: supp y differs from supp x")
            if w_upper(y - x, p) > Fraction(1, n * n):
                problems.append(f"position {pos}: ||y - x|| upper bracket exceeds 1/n^2")
            if len(step.parts) != n:
                problems.append(f"position {pos}: {len(step.parts)} parts, expected n_{j} = {n}")
            if x != vector_sum(step.parts).scale(step.c / n) or not 0 < step.c < 1:
                problems.append(f"position {pos}: x is not (c/n) times the sum of the parts")
            try:
                build_ris(step.parts, step.ris.js, 3, Fraction(1, n), p)
            except ValueError as exc:
                problems.append(f"position {pos}: parts are not a (3, 1/n) R.I.S.: {exc}")
            if not evaluate(step.tree, x) >= Fraction(1, 12 * p.m(j)):
                problems.append(f"position {pos}: f(x) < 1/(12 m_{j})")
            if step.tree.vector != self.fs[pos - 1] or step.tree.vector != self.phi.f(pos):
                problems.append(f"position {pos}: functional mismatch")
        return problems


def _norming_functional(part: FinVec, params: ParamSeq, database) -> Node:
    """A K functional f with range inside range(part), f(part) >= 2/3 and f(part) >= (2/3)||part||."""
    for attempt in range(2):
        b = norm_K_bracket(part, params, database)
        f = restrict(b.witness, part.range)
        value = evaluate(f, part)
        if value >= Fraction(2, 3) and value >= Fraction(2, 3) * b.upper:
            return f
        if attempt == 0:
            database = list(database) + enumerate_K(params, None, part.range, 1)
    raise SequenceError(f"no norming functional with ratio 2/3 found for a part on {part.range}")


def _ris_indices(parts: Sequence[FinVec], eps: Fraction, params: ParamSeq) -> list[int]:
    js = [1]
    for part in parts[:-1]:
        j = js[-1] + 1
        while not Fraction(len(part.range), params.m(j)) < eps:
            j += 1
        js.append(j)
    return js


def build_depended_sequence(M: Sequence[int], ys: Sequence[FinVec], odd_index: int, params: ParamSeq,
                            coder: SigmaCoder, database: Sequence[Node] = ()) -> DependedSequence:
    """Alternate basis averages over M with rounded R.I.S. averages drawn from ys."""
    length = params.n(odd_index)
    if odd_index % 2 == 0 or length % 2:
        raise SequenceError("need an odd index whose arity is even")
    if not is_block_sequence(ys):
        raise SequenceError("ys must be a block sequence of nonzero vectors")
    M = sorted(set(M))
    cursor = 0
    pairs: list[tuple[FinVec, FinVec]] = []
    chi_x: list[FinVec] = []
    trees: list[Node] = []
    steps: dict[int, EvenStep] = {}
    for pos in range(1, length + 1):
        index = coder.opening_index(length) if pos == 1 else coder.assign(pairs)
        n, m = params.n(index), params.m(index)
        if pos % 2:
            coords = [c for c in M if c > cursor][:n]
            if len(coords) < n:
                raise SequenceError(f"window exhausted: position {pos} needs {n} indices from M")
            x, f = flat_average(coords, n), flat_functional(coords, index, params).vector
            pairs.append((x, f))
            chi_x.append(x)
            cursor = coords[-1]
            continue
        parts = [y for y in ys if y.min_supp() > cursor][:n]
        if len(parts) < n:
            raise SequenceError(f"window exhausted: position {pos} needs {n} blocks from ys")
        c = Fraction(1, 6) * (1 - Fraction(m, n * n))
        if c <= 0:
            raise SequenceError(f"position {pos}: c = (1/6)(1 - m/n^2) is not positive for index {index}")
        eps = Fraction(1, n)
        ris = build_ris(parts, _ris_indices(parts, eps, params), 3, eps, params)
        norming = tuple(_norming_functional(part, params, database) for part in parts)
        tree = Avg(index, m, norming)
        x = vector_sum(parts).scale(c / n)
        y, digits = round_decimal(x, Fraction(1, n * n))
        if not evaluate(tree, x) >= Fraction(1, 12 * m):
            raise SequenceError(f"position {pos}: f(x) < 1/(12 m)")
        steps[pos] = EvenStep(pos, index, tuple(parts), norming, ris, c, x, y, digits, tree)
        pairs.append((y, tree.vector))
        chi_x.append(x)
        trees.append(tree)
        cursor = max(x.max_supp(), tree.vector.max_supp())
    phi = assemble_special_sequence(params, coder, odd_index, [p[0] for p in pairs], [p[1] for p in pairs],
                                    trees, database)
    chi = DependedSequence(params, odd_index, tuple(chi_x), tuple(p[1] for p in pairs), phi, steps)
    problems = chi.verify()
    if problems:
        raise SequenceError("; ".join(problems))
    return chi


def standard_toy_input(count: int) -> tuple[list[int], list[FinVec]]:
    """M = every coordinate, ys = e_a + e_{a+1} on consecutive pairs: a ready-made test input."""
    return list(range(1, count + 1)), [FinVec({a: 1, a + 1: 1}) for a in range(1, count, 2)]


# ---------------------------------------------------------------------------
# replacements of even functionals


def _subset_with_sum(values: Sequence[Fraction], target: Fraction) -> Optional[set]:
    reach: dict[Fraction, tuple] = {Fraction(0): ()}
    parent: dict[Fraction, tuple] = {}
    for i, v in enumerate(values):
        for s in list(reach):
            t = s + v
            if t not in reach:
                reach[t] = ()
                parent[t] = (s, i)
        if target in reach:
            break
    if target not in reach:
        return None
    chosen = set()
    s = target
    while s != 0:
        s, i = parent[s]
        chosen.add(i)
    return chosen


def cancelling_replacement(tree: Avg, y: FinVec, params: ParamSeq) -> Optional[Avg]:
    """A functional with the weight and support of ``tree`` that vanishes on ``y``.

    Tries sign changes of the children first; when the values cannot be split
    evenly, a tail of children is grouped into inner even nodes.
    """
    kids = list(tree.children)
    options = [list(kids)]
    e = 2
    while params.has(e) and e < min(tree.j, 8):
        ne, me = params.n(e), params.m(e)
        for tail in range(1, min(len(kids), 2 * ne) + 1):
            rest = kids[len(kids) - tail:]
            chunks = [Avg(e, me, tuple(rest[i:i + ne])) for i in range(0, tail, ne)]
            options.append(kids[:len(kids) - tail] + chunks)
        e += 2
    for items in options:
        values = [evaluate(it, y) for it in items]
        total = sum(values, Fraction(0))
        chosen = _subset_with_sum(values, total / 2)
        if chosen is None:
            continue
        signed = tuple(negate(it) if i in chosen else it for i, it in enumerate(items))
        cand = Avg(tree.j, tree.weight, signed)
        if evaluate(cand, y) == 0 and support(cand) == support(tree):
            return cand
    return None


def phi_functional(chi: DependedSequence, B: Sequence[int] = (), window: Interval = Interval.everything(),
                   sign: int = 1, lambda_signs=None) -> Special:
    """An element of K_phi whose pairs in B (0-based) vanish on phi's even vectors."""
    phi, p = chi.phi, chi.params
    reps = []
    for i in range(phi.pair_count):
        tree = phi.even_tree(i)
        if i in B:
            alt = cancelling_replacement(tree, phi.x(2 * i + 2), p)
            if alt is None:
                raise SequenceError(f"pair {i + 1}: no cancelling replacement found")
            tree = alt
        reps.append(tree)
    return build_special_functional(phi, p, reps, window, sign, lambda_signs)


# ---------------------------------------------------------------------------
# estimates


def alternating_average(chi: DependedSequence, use_phi: bool = True) -> FinVec:
    """(1/n) sum (-1)^{i+1} m_{j_i} z_i with z = phi's vectors (or chi's)."""
    n = chi.length
    terms = []
    for pos in range(1, n + 1):
        z = chi.phi_vector(pos) if use_phi else chi.xs[pos - 1]
        factor = Fraction((-1) ** (pos + 1) * chi.params.m(chi.weight_index(pos)), n)
        terms.append(z.scale(factor))
    return vector_sum(terms)


def check_alternating_sum(chi: DependedSequence, functionals: Sequence[Node] = ()) -> ExperimentRecord:
    """Cancellation identities for K_phi functionals and the composite bounds.

    For each pair of a K_phi functional: lambda f_{2i-1}(m x_{2i-1}) - f'_{2i}(m y_{2i})
    is exactly 0 when f'_{2i}(y_{2i}) != 0 and has modulus exactly 1/n^2
    otherwise.  ``functionals`` are extra audited functionals of any kind.
    """
    p, phi = chi.params, chi.phi
    n = chi.length
    m_odd = p.m(chi.odd_index)
    avg_phi = alternating_average(chi, True)
    avg_chi = alternating_average(chi, False)
    claims = []
    values: dict = {"A_terms": 0, "B_terms": 0}
    own = [f for f in functionals if isinstance(f, Special) and f.seq == phi]
    if not own:
        own = [phi_functional(chi)]
    for idx, f in enumerate(own):
        for i, pair in enumerate(f.pairs):
            pos = 2 * i + 2
            m_even = p.m(phi.index_at(pos))
            m_prev = p.m(phi.index_at(pos - 1))
            y = phi.x(pos)
            term = pair.lam * evaluate(pair.odd, phi.x(pos - 1).scale(m_prev)) - evaluate(pair.even, y.scale(m_even))
            if evaluate(pair.even, y) != 0:
                values["A_terms"] += 1
                claims.append(_exact(f"functional {idx}, pair {i + 1}: A-term cancels", term == 0, {"term": term}))
            else:
                values["B_terms"] += 1
                target = Fraction(1, n * n)
                claims.append(_exact(f"functional {idx}, pair {i + 1}: B-term equals 1/n^2", abs(term) == target,
                                     {"term": term, "target": target}))
        value = abs(evaluate(f, avg_phi))
        bound = Fraction(1, m_odd) * (Fraction(1, n) + Fraction(1, n * n))
        claims.append(_exact(f"functional {idx}: |f(alternating average)| <= (1/m)(1/n + 1/n^2)", value <= bound,
                             {"value": value, "bound": bound, "perturbed": abs(evaluate(f, avg_chi))},
                             "composite bound violated"))
    for idx, g in enumerate(functionals):
        if isinstance(g, Special) and g.seq == phi:
            continue
        value = abs(evaluate(g, avg_phi))
        if getattr(g, "weight", None) == m_odd:
            claims.append(_audit(f"audited {idx}: weight m_odd, |g(avg)| < 1/n", value < Fraction(1, n), p,
                                 {"value": value, "bound": Fraction(1, n)},
                                 "foreign-sequence estimate relies on PaperExact growth"))
    upper = w_upper(avg_phi, p)
    claims.append(_audit("||alternating average|| <= 8/m^3", upper <= Fraction(8, m_odd ** 3), p,
                         {"upper": upper, "bound": Fraction(8, m_odd ** 3)},
                         "upper bracket above the PaperExact constant"))
    values["perturbation_l1"] = (avg_phi - avg_chi).norm_l1()
    return ExperimentRecord("depest", {"odd_index": chi.odd_index, "audited": len(functionals)}, values, claims)


def check_pd1_estimates(hs: Sequence[Node], weight_indices: Sequence[int], lambdas: Sequence[Fraction],
                        target: FinVec, odd_index: int, j0: int, params: ParamSeq) -> ExperimentRecord:
    """|(sum lambda_{2k-1} h_{2k-1} + h_{2k})(target)| against 1/n_{2j+1}.

    ``target`` is the scaled basis average (m_j0/n_j0) sum e_{k_l} or a scaled
    R.I.S. average.  The weight-pattern hypotheses are evaluated first; when
    one fails the result is inconclusive and names it.
    """
    n_odd = params.n(odd_index)
    r2 = len(hs)
    if len(weight_indices) != r2 or len(lambdas) != r2 // 2 or r2 % 2:
        raise ValueError("need 2r functionals, 2r weight indices and r coefficients")
    ms = [params.m(j) for j in weight_indices]
    hyp = []
    if r2 and not n_odd < ms[0]:
        hyp.append("n_{2j+1} < m_{j_1}")
    if any(a >= b for a, b in zip(ms, ms[1:])):
        hyp.append("weights strictly increasing")
    if not r2 <= n_odd:
        hyp.append("2r <= n_{2j+1}")
    if r2 and not n_odd * n_odd < ms[0]:
        hyp.append("n_{2j+1} < m_{j_1}^(1/2)")
    if params.m(j0) in ms:
        hyp.append("m_j0 differs from every m_{j_i}")
    if not n_odd * n_odd < params.m(j0):
        hyp.append("m_j0^(1/2) > n_{2j+1}")
    if any(getattr(h, "weight", None) != m for h, m in zip(hs, ms)):
        hyp.append("w(h_i) = m_{j_i}")
    if r2 and not is_block_sequence([h.vector for h in hs]):
        hyp.append("h_1 < ... < h_2r")
    if any(abs(v) > 1 for v in lambdas):
        hyp.append("|lambda| <= 1")
    value = Fraction(0)
    for k in range(r2 // 2):
        value += lambdas[k] * evaluate(hs[2 * k], target) + evaluate(hs[2 * k + 1], target)
    value = abs(value)
    bound = Fraction(1, n_odd)
    vals = {"value": value, "bound": bound, "slack": bound - value}
    if hyp:
        claim = Claim("pd1 estimate", "inconclusive", vals, "hypothesis failure: " + ", ".join(hyp))
    else:
        claim = _audit("pd1 estimate", value <= bound, params, vals, "constant relies on m_{j+1} = m_j^5")
    return ExperimentRecord("pd1", {"r": r2 // 2, "odd_index": odd_index, "j0": j0}, vals, [claim])


def offset_family(chi: DependedSequence) -> dict[int, FinVec]:
    """y_{2i} = (m/n) sum e_k over the first n coordinates of supp x_{2i} outside supp f_{2i}."""
    p = chi.params
    out = {}
    for pos, step in chi.steps.items():
        n, m = p.n(step.index), p.m(step.index)
        free = [c for c in chi.phi.x(pos).supp if c not in set(chi.phi.f(pos).supp)]
        if len(free) < n:
            raise SequenceError(f"position {pos}: only {len(free)} free coordinates, need {n}")
        out[pos] = FinVec.flat(free[:n], Fraction(m, n))
    return out


def check_offset_average(phi: SpecialSequence, family: dict, params: ParamSeq,
                         functionals: Sequence[Node] = ()) -> ExperimentRecord:
    """K_phi functionals annihilate (1/n) sum y_{2i}; other functionals are audited."""
    n_odd = params.n(phi.odd_index)
    m_odd = params.m(phi.odd_index)
    claims = []
    for pos, y in sorted(family.items()):
        j = phi.index_at(pos)
        n, m = params.n(j), params.m(j)
        shape = len(y) == n and set(y.values()) == {Fraction(m, n)}
        disjoint = not set(y.supp) & set(phi.f(pos).supp)
        left = phi.f(pos - 1).max_supp() < y.min_supp()
        right = pos == phi.length or y.max_supp() < phi.f(pos + 1).min_supp()
        if not (shape and disjoint and left and right):
            raise ValueError(f"offset vector at position {pos} violates the shape or placement conditions")
    avg = vector_sum(family.values()).scale(Fraction(1, n_odd)) if family else FinVec()
    own = [f for f in functionals if isinstance(f, Special) and f.seq == phi] or [build_special_functional(phi, params)]
    for idx, f in enumerate(own):
        value = evaluate(f, avg)
        claims.append(_exact(f"K_phi functional {idx} vanishes on the offset average", value == 0, {"value": value}))
    for idx, g in enumerate(functionals):
        if isinstance(g, Special) and g.seq == phi:
            continue
        value = abs(evaluate(g, avg))
        if getattr(g, "weight", None) == m_odd:
            bound = Fraction(2, m_odd * n_odd)
            claims.append(_audit(f"foreign functional {idx}: |g(avg)| <= (1/m)(2/n)", value <= bound, params,
                                 {"value": value, "bound": bound},
                                 "per-term estimates rely on PaperExact growth"))
    return ExperimentRecord("ld", {"odd_index": phi.odd_index, "family": len(family)},
                            {"average_l1": avg.norm_l1()}, claims)


def weight_coincidence_audit(sequences: Sequence[SpecialSequence], params: ParamSeq) -> list[str]:
    """For every pair of sequences of one length: at most one k >= i_1 with w(g_k) among {w(f_i): i >= i_1}."""
    problems = []
    seqs = list(sequences)
    for a in seqs:
        for b in seqs:
            if a is b or a.odd_index != b.odd_index:
                continue
            i1 = next((i for i in range(1, a.length + 1) if a.x(i) != b.x(i) or a.f(i) != b.f(i)), None)
            if i1 is None:
                continue
            ws = {params.m(a.index_at(i)) for i in range(i1, a.length + 1)}
            hits = [k for k in range(i1, b.length + 1) if params.m(b.index_at(k)) in ws]
            if len(hits) > 1:
                problems.append(f"sequences {a.key} / {b.key}: {len(hits)} coincidences from i_1 = {i1}")
    return problems


# ---------------------------------------------------------------------------
# experiments


def distance_experiment(M: Sequence[int], ys: Sequence[FinVec], odd_index: int, params: ParamSeq,
                        coder: SigmaCoder, database: Sequence[Node] = ()) -> ExperimentRecord:
    """Build chi, form the two weighted averages e and y and evaluate the lower-bound chain."""
    chi = build_depended_sequence(M, ys, odd_index, params, coder, database)
    phi = chi.phi
    n, m_odd = chi.length, params.m(odd_index)
    e = vector_sum(chi.xs[pos - 1].scale(Fraction(m_odd * params.m(chi.weight_index(pos)), n))
                   for pos in range(1, n + 1, 2))
    y = vector_sum(chi.xs[pos - 1].scale(Fraction(m_odd * params.m(chi.weight_index(pos)), n))
                   for pos in range(2, n + 1, 2))
    f = build_special_functional(phi, params)
    lambdas = [pair.lam for pair in f.pairs]
    fe, fy = evaluate(f, e), evaluate(f, y)
    claims = []
    for i, lam in enumerate(lambdas):
        claims.append(_exact(f"lambda_{i + 1} > 1/24", lam > Fraction(1, 24), {"lambda": lam}, "bound violated"))
        m_even = params.m(chi.weight_index(2 * i + 2))
        chain = Fraction(1, 12) - Fraction(1, m_even * m_even)
        claims.append(_audit(f"lambda_{i + 1} >= 1/12 - 1/m^2", lam >= chain, params,
                             {"lambda": lam, "bound": chain}, "intermediate step needs n >= m^(3/2)"))
    claims.append(_exact("f(e) >= 1/48", fe >= Fraction(1, 48), {"value": fe}, "bound violated"))
    claims.append(_exact("f(y) >= 1/24", fy >= Fraction(1, 24), {"value": fy}, "bound violated"))
    upper = w_upper(e - y, params)
    claims.append(_audit("||e - y|| <= 8/m^2", upper <= Fraction(8, m_odd ** 2), params,
                         {"upper": upper, "bound": Fraction(8, m_odd ** 2)},
                         "upper bracket is not small at toy scale"))
    values = {"lambdas": lambdas, "f(e)": fe, "f(y)": fy, "dist_upper": upper,
              "sigmas": list(phi.sigmas), "support": len(e) + len(y)}
    return ExperimentRecord("distance", {"odd_index": odd_index, "M": len(M), "ys": len(ys)}, values, claims)


def _dist_bracket(column: FinVec, n: int, params: ParamSeq) -> tuple[Fraction, Fraction]:
    before = column.restrict(Interval(1, n - 1)) if n > 1 else FinVec()
    after = column.restrict(Interval(n + 1, None))
    lo = max(norm_K_bracket(before, params).lower if not before.is_zero else Fraction(0),
             norm_K_bracket(after, params).lower if not after.is_zero else Fraction(0))
    off = before + after
    hi = w_upper(off, params) if not off.is_zero else Fraction(0)
    return lo, hi


def _hull(column: FinVec, n: int) -> Interval:
    coords = list(column.supp) + [n]
    return Interval(min(coords), max(coords))


def select_functional(column: FinVec, n: int, delta: Fraction, database: Sequence[Node]) -> Optional[Node]:
    """x* with x*(Te_n) >= delta, n outside range(x*) and range(x*) inside I(e_n)."""
    hull = _hull(column, n)
    leaves = [Leaf(c, 1 if column[c] > 0 else -1) for c in column.supp if c != n]
    best, best_val = None, None
    for f in list(leaves) + list(database):
        rng = f.vector.range
        if rng.is_empty or n in rng or not hull.covers(rng):
            continue
        v = evaluate(f, column)
        if v >= delta and (best_val is None or v > best_val):
            best, best_val = f, v
    return best


def operator_probe(columns: dict, delta, odd_index: int, params: ParamSeq, coder: SigmaCoder,
                   database: Sequence[Node] = ()) -> ExperimentRecord:
    """Run the probe on T given column-wise (basis index -> T e_n)."""
    delta = Fraction(delta)
    ns = sorted(columns)
    brackets = {n: _dist_bracket(columns[n], n, params) for n in ns}
    inputs = {"window": [ns[0], ns[-1]] if ns else [], "delta": delta, "odd_index": odd_index}
    values: dict = {"dist": {n: list(b) for n, b in brackets.items()}}
    claims = []
    if all(hi == 0 for _, hi in brackets.values()):
        claims.append(Claim("no violation to exploit", "pass", {"max_dist": Fraction(0)}))
        return ExperimentRecord("probe", inputs, values, claims)
    # greedy subsequence with increasing hulls
    chosen, last = [], 0
    for n in ns:
        hull = _hull(columns[n], n)
        if hull.lo > last:
            chosen.append(n)
            last = hull.hi
    selections = {n: select_functional(columns[n], n, delta, database) for n in chosen}
    usable = [n for n in chosen if selections[n] is not None]
    values["gate"] = {n: brackets[n][0] > 2 * delta for n in usable}
    if not usable:
        claims.append(Claim("admissible functionals", "inconclusive", {}, "no admissible x_n* in database"))
        return ExperimentRecord("probe", inputs, values, claims)
    length = params.n(odd_index)
    queue = list(usable)
    pairs, trees, x_parts = [], [], []
    try:
        for pos in range(1, length + 1):
            index = coder.opening_index(length) if pos == 1 else coder.assign(pairs)
            n_idx, m_idx = params.n(index), params.m(index)
            take = [k for k in queue if not pairs or _hull(columns[k], k).lo > max(pairs[-1][0].max_supp(),
                                                                                    pairs[-1][1].max_supp())]
            take = take[:n_idx]
            if len(take) < n_idx:
                raise SequenceError(f"window too small: position {pos} needs {n_idx} basis indices")
            queue = [k for k in queue if k > take[-1]]
            if pos % 2:
                pairs.append((flat_average(take, n_idx), flat_functional(take, index, params).vector))
            else:
                xv = vector_sum(columns[k] for k in take).scale(Fraction(1, n_idx))
                tree = Avg(index, m_idx, tuple(selections[k] for k in take))
                pairs.append((xv, tree.vector))
                trees.append(tree)
                x_parts.append(FinVec.flat(take, Fraction(m_idx, n_idx)))
        phi = assemble_special_sequence(params, coder, odd_index, [a for a, _ in pairs], [b for _, b in pairs],
                                        trees, database)
    except (SequenceError, ValueError) as exc:
        claims.append(Claim("special sequence of the probe", "inconclusive", {}, str(exc)))
        return ExperimentRecord("probe", inputs, values, claims)
    x = vector_sum(x_parts).scale(Fraction(1, length))
    tx = vector_sum(columns[c].scale(x[c]) for c in x.supp)
    f = build_special_functional(phi, params)
    m_odd = params.m(odd_index)
    lower = evaluate(f, tx)
    x_upper = w_upper(x, params)
    claims.append(_exact("||Tx|| >= delta/(2 m_{2j+1}) via the special functional", lower >= delta / (2 * m_odd),
                         {"value": lower, "bound": delta / (2 * m_odd)}, "bound violated"))
    claims.append(_audit("||x|| <= 8/m_{2j+1}^3", x_upper <= Fraction(8, m_odd ** 3), params,
                         {"upper": x_upper, "bound": Fraction(8, m_odd ** 3)},
                         "upper bracket is not small at toy scale"))
    values.update({"Tx_lower": lower, "x_upper": x_upper, "norm_T_lower": lower / x_upper,
                   "tension_target": delta * m_odd ** 2 / 16, "sigmas": list(phi.sigmas)})
    return ExperimentRecord("probe", inputs, values, claims)
