"""Exact norms of the auxiliary mixed Tsirelson spaces.

``norm_W`` solves the implicit equation

    ||x|| = max(||x||_inf, max_j (1/m_j) max sum_i ||E_i x||)

where the inner maximum runs over at most 4 n_j successive intervals, by a
dynamic program over sub-intervals of the support.  ``brute_force_norm`` is an
independent exhaustive search used as an oracle; ``norm_tildeK`` is the closed
form for the simple set of flat even-weight averages.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath

from .params import (PAPER_EXACT, FinVec, ParamSeq, _interval_bounds,
                     integer_root)
from .trees import Avg, Leaf, Node, evaluate, successive

DEFAULT_DP_CEILING = 36


class ResourceLimit(RuntimeError):
    """The exact computation was refused; ``bracket`` holds sound partial bounds."""

    def __init__(self, message: str, bracket: tuple[Fraction, Fraction]):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class NormCertificate:
    value: Fraction
    witness: Node
    trace: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        from .params import frac_str
        from .trees import tree_to_json
        return {"value": frac_str(self.value), "witness": tree_to_json(self.witness)}


def _sign(v: Fraction) -> int:
    return 1 if v >= 0 else -1


def relevant_indices(params: ParamSeq, size: int, k: Optional[int] = None) -> list[int]:
    """Weight indices worth exploring for a support of the given size.

    Every j with 4 n_j < size, plus the least j with 4 n_j >= size: beyond that
    index the arity no longer binds and the weight only grows.
    """
    out = []
    for j in params.indices_upto(size):
        if k is not None and j > k:
            break
        out.append(j)
    return out


# ---------------------------------------------------------------------------
# the interval dynamic program


def _w_dp(x: FinVec, params: ParamSeq, k: Optional[int], ceiling: int) -> NormCertificate:
    coords = x.supp
    size = len(coords)
    if size == 0:
        raise ValueError("norm of the zero vector requested; x must be nonzero")
    if size > ceiling:
        raise ResourceLimit(
            f"support size {size} exceeds the DP ceiling {ceiling}",
            (x.norm_inf(), x.norm_l1()),
        )
    vals = [abs(x[c]) for c in coords]
    js = relevant_indices(params, size, k)
    weights = {j: params.m(j) for j in js}
    arity = {j: min(4 * params.n(j), size) for j in js}
    max_parts = max((arity[j] for j in js), default=1)

    norm = [[Fraction(0)] * size for _ in range(size)]
    choice: list[list[tuple]] = [[()] * size for _ in range(size)]
    # best[a][b][t]: best sum over splits of [a, b] into at most t pieces (t >= 1)
    best = [[None] * size for _ in range(size)]
    cut = [[None] * size for _ in range(size)]
    peak = [[0] * size for _ in range(size)]

    for length in range(1, size + 1):
        for a in range(0, size - length + 1):
            b = a + length - 1
            if length == 1:
                peak[a][b] = a
            else:
                prev = peak[a][b - 1]
                peak[a][b] = prev if vals[prev] >= vals[b] else b
            top = vals[peak[a][b]]
            value, how = top, ("leaf", peak[a][b])
            for j in js:
                t = min(arity[j], length)
                if t < 2:
                    continue
                s_best, s_cut = None, None
                for c in range(a, b):
                    cand = best[a][c][min(t - 1, c - a + 1)] + norm[c + 1][b]
                    if s_best is None or cand > s_best:
                        s_best, s_cut = cand, c
                cand = s_best / weights[j]
                if cand > value:
                    value, how = cand, ("avg", j, s_cut, t)
            norm[a][b] = value
            choice[a][b] = how
            limit = min(max_parts, length)
            row = [None, value]
            cuts = [None, None]
            for t in range(2, limit + 1):
                s_best, s_cut = row[t - 1], None
                for c in range(a, b):
                    cand = best[a][c][min(t - 1, c - a + 1)] + norm[c + 1][b]
                    if cand > s_best:
                        s_best, s_cut = cand, c
                row.append(s_best)
                cuts.append(s_cut)
            best[a][b] = row
            cut[a][b] = cuts

    def pieces(a, b, t):
        t = min(t, b - a + 1)
        while t >= 2 and cut[a][b][t] is None:
            t -= 1
        if t < 2:
            return [(a, b)]
        c = cut[a][b][t]
        return pieces(a, c, t - 1) + [(c + 1, b)]

    def witness(a, b) -> Node:
        how = choice[a][b]
        if how[0] == "leaf":
            i = how[1]
            return Leaf(coords[i], _sign(x[coords[i]]))
        _, j, c, t = how
        parts = pieces(a, c, t - 1) + [(c + 1, b)]
        return Avg(j, weights[j], tuple(witness(p, q) for p, q in parts))

    tree = witness(0, size - 1)
    value = norm[0][size - 1]
    return NormCertificate(value, tree, {"indices": js, "support": size})


def norm_W(x: FinVec, params: ParamSeq, ceiling: int = DEFAULT_DP_CEILING) -> NormCertificate:
    """Exact norm in the mixed Tsirelson space with all weights m_j."""
    return _w_dp(x, params, None, ceiling)


def norm_W_truncated(x: FinVec, params: ParamSeq, k: int,
                     ceiling: int = DEFAULT_DP_CEILING) -> NormCertificate:
    """Exact norm when only the weights m_1..m_k are allowed (k = 0 gives the sup norm)."""
    if k < 0:
        raise ValueError("truncation index must be >= 0")
    if k == 0:
        if x.is_zero:
            raise ValueError("x must be nonzero")
        c = max(x.supp, key=lambda i: (abs(x[i]), -i))
        return NormCertificate(abs(x[c]), Leaf(c, _sign(x[c])), {"indices": []})
    return _w_dp(x, params, k, ceiling)


def w_upper(x: FinVec, params: ParamSeq, ceiling: int = DEFAULT_DP_CEILING) -> Fraction:
    """Sound upper bound on the W norm: exact below the ceiling, l1 above it."""
    if x.is_zero:
        return Fraction(0)
    try:
        return norm_W(x, params, ceiling).value
    except ResourceLimit as exc:
        return exc.bracket[1]


# ---------------------------------------------------------------------------
# oracle


class ExplosionGuard(RuntimeError):
    pass


def brute_force_norm(x: FinVec, params: ParamSeq, depth_cap: Optional[int] = None,
                     arity_cap: Optional[int] = None, max_support: int = 8) -> Fraction:
    """Maximum of f(x) over every W-tree within the caps.

    Trees are enumerated through their leaf sets: a tree of height at most h on
    the coordinate set T is a leaf of T or (1/m_j) times a sum of trees on the
    consecutive runs of a composition of some subset of T.  Every subset and
    every composition is tried, so no structural shortcut of the DP is reused.
    """
    coords = x.supp
    size = len(coords)
    if size == 0:
        return Fraction(0)
    if size > max_support:
        raise ExplosionGuard(f"support {size} too large for exhaustive search")
    depth_cap = size if depth_cap is None else depth_cap
    arity_cap = size if arity_cap is None else arity_cap
    vals = {c: abs(x[c]) for c in coords}
    # every index up to one past the first whose arity covers the support
    js = []
    j = 1
    while params.has(j):
        js.append(j)
        if 4 * params.n(j) >= size and len(js) >= 2 and 4 * params.n(js[-2]) >= size:
            break
        j += 1
    memo: dict = {}

    def best_on(subset: tuple, h: int) -> Fraction:
        # best value of a tree whose leaves lie inside ``subset``
        key = (subset, h)
        if key in memo:
            return memo[key]
        result = max(vals[c] for c in subset)
        if h >= 1 and len(subset) >= 2:
            for r in range(2, len(subset) + 1):
                for chosen in itertools.combinations(subset, r):
                    result = max(result, exact_on(chosen, h))
        memo[key] = result
        return result

    def exact_on(chosen: tuple, h: int) -> Fraction:
        # root is a weighted node whose children partition exactly ``chosen``
        top = Fraction(0)
        n = len(chosen)
        for cuts in range(1, n):
            for positions in itertools.combinations(range(1, n), cuts):
                bounds = (0,) + positions + (n,)
                runs = [chosen[bounds[i]:bounds[i + 1]] for i in range(len(bounds) - 1)]
                if len(runs) > arity_cap:
                    continue
                total = sum((best_on(run, h - 1) for run in runs), Fraction(0))
                for j in js:
                    if len(runs) <= 4 * params.n(j):
                        top = max(top, total / params.m(j))
        return top

    return best_on(tuple(coords), depth_cap)


# ---------------------------------------------------------------------------
# the simple set of flat averages


def norm_tildeK(x: FinVec, params: ParamSeq) -> Fraction:
    """max(||x||_inf, max over even j of (1/m_j) * (sum of the n_j largest |x_i|))."""
    if x.is_zero:
        return Fraction(0)
    mags = sorted((abs(v) for v in x.values()), reverse=True)
    prefix = [Fraction(0)]
    for v in mags:
        prefix.append(prefix[-1] + v)
    value = mags[0]
    j = 2
    while params.has(j):
        count = min(params.n(j), len(mags))
        value = max(value, prefix[count] / params.m(j))
        if params.n(j) >= len(mags):
            break
        j += 2
    return value


# ---------------------------------------------------------------------------
# W-tree verification


def verify_w_tree(f: Node, params: ParamSeq, max_index: Optional[int] = None) -> list[str]:
    """Violations of W membership, each prefixed by the node address; empty when valid."""
    problems: list[str] = []

    def visit(node, address):
        if isinstance(node, Leaf):
            return
        if not isinstance(node, Avg):
            problems.append(f"{address}: node kind {type(node).__name__} is not allowed in W")
            return
        if max_index is not None and node.j > max_index:
            problems.append(f"{address}: weight index {node.j} exceeds truncation {max_index}")
        if node.weight != params.m(node.j):
            problems.append(f"{address}: weight {node.weight} is not m_{node.j}")
        if not 1 <= len(node.children) <= 4 * params.n(node.j):
            problems.append(f"{address}: arity {len(node.children)} outside 1..4n_{node.j}")
        if not successive(node.children):
            problems.append(f"{address}: children are not successive")
        for i, child in enumerate(node.children):
            visit(child, address + (i,))

    visit(f, ())
    return problems


def tree_weights(f: Node) -> set[int]:
    out = set()
    stack = [f]
    while stack:
        node = stack.pop()
        w = getattr(node, "weight", None)
        if w is not None:
            out.add(w)
        stack.extend(node.children)
    return out


# ---------------------------------------------------------------------------
# l_p domination


def _fraction_power_upper(value: Fraction, exponent_lo: Fraction, exponent_hi: Fraction,
                          bits: int) -> tuple[Fraction, Fraction]:
    ctx = mpmath.iv
    ctx.prec = bits
    base = ctx.mpf(value.numerator) / value.denominator
    e = ctx.mpf([mpmath.mpf(exponent_lo.numerator) / exponent_lo.denominator,
                 mpmath.mpf(exponent_hi.numerator) / exponent_hi.denominator])
    return _interval_bounds(base ** e)


def _exact_rational_power(value: Fraction, exponent: Fraction) -> Optional[Fraction]:
    """value**exponent when it is rational, else None (value > 0)."""
    u, v = exponent.numerator, exponent.denominator
    num, den = value.numerator, value.denominator
    rn, rd = integer_root(num, v), integer_root(den, v)
    if rn ** v != num or rd ** v != den:
        return None
    return Fraction(rn, rd) ** u


def lp_upper_bound(x: FinVec, params: ParamSeq, k: int, slack: Fraction = Fraction(1, 10 ** 12)
                   ) -> Fraction:
    """A rational r >= ||x||_{p_k}, exact when the value is rational, else within ``slack``."""
    pair = params.conjugate_exponents(k)
    if pair.p_is_infinite:
        raise ValueError(f"p_{k} is infinite")
    if x.is_zero:
        return Fraction(0)
    mags = [abs(v) for v in x.values()]
    p_exact = pair.p.exact()
    if p_exact is not None:
        if p_exact < 1:
            raise ValueError(f"p_{k} = {p_exact} is below 1; the l_p bound is undefined")
        terms = [_exact_rational_power(v, p_exact) for v in mags]
        if all(t is not None for t in terms):
            total = sum(terms, Fraction(0))
            root = _exact_rational_power(total, 1 / p_exact)
            if root is not None:
                return root
    bits = 96
    while True:
        p_lo, p_hi = pair.p.bounds(bits)
        if p_lo < 1:
            raise ValueError(f"p_{k} is below 1; the l_p bound is undefined")
        total_hi = Fraction(0)
        total_lo = Fraction(0)
        for v in mags:
            lo, hi = _fraction_power_upper(v, p_lo, p_hi, bits)
            total_lo += lo
            total_hi += hi
        lo, _ = _fraction_power_upper(total_lo, 1 / p_hi, 1 / p_lo, bits)
        _, hi = _fraction_power_upper(total_hi, 1 / p_hi, 1 / p_lo, bits)
        if hi - lo <= slack or bits > 4096:
            return hi
        bits *= 2


# ---------------------------------------------------------------------------
# basis averages


@dataclass
class BoundReport:
    claim: str
    status: str            # pass | fail | inconclusive
    values: dict
    reason: str = ""


def check_basis_average_bounds(f: Node, j: int, average: FinVec, params: ParamSeq) -> list[BoundReport]:
    """Check the upper estimates of |f(average)| for the flat average of length n_j.

    The constants are proved for PaperExact growth; in the toy regime a
    violated estimate is reported as inconclusive with a regime caveat.
    """
    nj = params.n(j)
    mj = params.m(j)
    coeffs = set(average.values())
    if len(average) != nj or coeffs != {Fraction(1, nj)}:
        raise ValueError(f"average must be (1/n_{j}) times a sum of n_{j} distinct unit vectors")
    value = abs(evaluate(f, average))
    regime_ok = params.regime == PAPER_EXACT
    out = []

    def judged(claim, bound, reason=""):
        holds = value <= bound
        if holds:
            status = "pass"
        elif regime_ok:
            status = "fail"
        else:
            status = "inconclusive"
            reason = reason or "constant proved for PaperExact growth only; toy violation is expected"
        out.append(BoundReport(claim, status, {"value": value, "bound": bound}, "" if holds else reason))

    w = getattr(f, "weight", None)
    if w is None:
        # leaves: |e*_k(average)| <= 1/n_j
        out.append(BoundReport("leaf: |f(avg)| <= 1/n_j", "pass" if value <= Fraction(1, nj) else "fail",
                               {"value": value, "bound": Fraction(1, nj)}))
        return out
    if w < mj:
        judged("w(f) < m_j: |f(avg)| <= 2/(w(f) m_j)", Fraction(2, w * mj))
    else:
        judged("w(f) >= m_j: |f(avg)| <= 1/w(f)", Fraction(1, w))
    if mj not in tree_weights(f):
        judged("tree avoids m_j: |f(avg)| <= 2/m_j^3", Fraction(2, mj ** 3))
    return out
