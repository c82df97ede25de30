"""l1 averages, rapidly increasing sequences and the basic inequality.

Norms in the space normed by K cannot be computed exactly, so every vector
carries a bracket (lower from explicit K functionals, upper from the W norm)
and each inequality is decided in the sound direction only.  Undecidable
comparisons come back as "inconclusive".
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .kset import norm_K_bracket
from .params import PAPER_EXACT, FinVec, Interval, ParamSeq, frac_str, is_block_sequence, vector_sum
from .norms import verify_w_tree
from .trees import Avg, Leaf, Node, evaluate, node_range, restrict, support, tree_to_json, walk


def _bracket(x: FinVec, params: ParamSeq, database=()) -> tuple[Fraction, Fraction]:
    if x.is_zero:
        return Fraction(0), Fraction(0)
    b = norm_K_bracket(x, params, database)
    return b.lower, b.upper


def _decide(small_hi: Fraction, big_lo: Fraction, small_lo: Fraction, big_hi: Fraction) -> str:
    """pass if small <= big is certain, fail if small > big is certain."""
    if small_hi <= big_lo:
        return "pass"
    if small_lo > big_hi:
        return "fail"
    return "inconclusive"


# ---------------------------------------------------------------------------
# l1 averages


@dataclass
class L1AverageWitness:
    x: FinVec
    parts: tuple
    C: Fraction
    norm_bracket: tuple             # (lower, upper) for ||x||
    part_brackets: tuple            # per part
    status: str                     # pass | fail | inconclusive
    normalized: bool = False

    @property
    def k(self) -> int:
        return len(self.parts)

    def to_json(self) -> dict:
        return {
            "x": self.x.to_json(), "parts": [p.to_json() for p in self.parts], "C": frac_str(self.C),
            "norm": [frac_str(v) for v in self.norm_bracket],
            "part_norms": [[frac_str(v) for v in b] for b in self.part_brackets],
            "status": self.status, "normalized": self.normalized,
        }


def verify_l1_average(parts: Sequence[FinVec], C, params: ParamSeq, database=()) -> L1AverageWitness:
    """Check ||x_i|| <= C ||x|| for x = (1/k) sum x_i using norm brackets."""
    parts = tuple(parts)
    if len(parts) < 2:
        raise ValueError("an l1 average needs k >= 2 parts")
    if not is_block_sequence(parts):
        raise ValueError("parts must be successive nonzero vectors")
    C = Fraction(C)
    x = vector_sum(parts).scale(Fraction(1, len(parts)))
    lo, hi = _bracket(x, params, database)
    part_brackets = tuple(_bracket(p, params, database) for p in parts)
    statuses = [_decide(p_hi, C * lo, p_lo, C * hi) for p_lo, p_hi in part_brackets]
    if "fail" in statuses:
        status = "fail"
    elif "inconclusive" in statuses:
        status = "inconclusive"
    else:
        status = "pass"
    return L1AverageWitness(x, parts, C, (lo, hi), part_brackets, status, lo == hi == 1)


def normalize_average(w: L1AverageWitness, params: ParamSeq, database=()) -> L1AverageWitness:
    """Rescale to norm one; only possible when the norm bracket is tight."""
    lo, hi = w.norm_bracket
    if lo != hi or lo == 0:
        raise ValueError("norm bracket is not tight; cannot normalize exactly")
    factor = 1 / lo
    return verify_l1_average([p.scale(factor) for p in w.parts], w.C, params, database)


@dataclass
class NoAverage:
    reason: str
    scanned: int = 0
    status: str = "none"


def find_l1_average(ys: Sequence[FinVec], k: int, C, params: ParamSeq, database=(),
                    max_level: Optional[int] = None):
    """Leftmost C-l1^k average among grouped partial sums of ``ys``.

    Level t groups the ys into consecutive sums of k^t vectors; every aligned
    k-tuple of such groups is a candidate.  Levels are scanned upwards and,
    inside a level, left to right.  Returns a verified witness or NoAverage.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    ys = list(ys)
    if not is_block_sequence(ys):
        raise ValueError("ys must be a block sequence of nonzero vectors")
    if k > len(ys):
        return NoAverage(f"none within window: k = {k} exceeds the {len(ys)} available vectors")
    scanned = 0
    t = 0
    while k ** (t + 1) <= len(ys) and (max_level is None or t <= max_level):
        group = k ** t
        sums = [vector_sum(ys[i:i + group]) for i in range(0, len(ys) - group + 1, group)]
        for start in range(0, len(sums) - k + 1, k):
            scanned += 1
            w = verify_l1_average(sums[start:start + k], C, params, database)
            if w.status == "pass":
                return w
        t += 1
    return NoAverage(f"none within window: no C-l1^{k} average among {scanned} candidates", scanned)


@dataclass
class SplitReport:
    status: str
    values: dict
    reason: str = ""


def check_split_bound(w: L1AverageWitness, intervals: Sequence[Interval], params: ParamSeq,
                      j: Optional[int] = None, database=()) -> SplitReport:
    """sum ||E_i x|| <= C ||x|| (1 + 2n/k) for successive intervals E_1 < ... < E_n.

    With ``j`` given (k = n_j) the bound below 3C/2 is also judged, which
    needs n <= n_{j-1}.
    """
    if w.status != "pass":
        raise ValueError("the witness does not verify")
    n = len(intervals)
    for a, b in zip(intervals, intervals[1:]):
        if a.is_empty or b.is_empty or a.hi is None or a.hi >= b.lo:
            raise ValueError("intervals must be successive")
    k = w.k
    pieces = [w.x.restrict(E) for E in intervals]
    brackets = [_bracket(p, params, database) for p in pieces]
    lhs_hi = sum((b[1] for b in brackets), Fraction(0))
    lhs_lo = sum((b[0] for b in brackets), Fraction(0))
    x_lo, x_hi = w.norm_bracket
    factor = w.C * (1 + Fraction(2 * n, k))
    status = _decide(lhs_hi, factor * x_lo, lhs_lo, factor * x_hi)
    values = {"n": n, "k": k, "sum_upper": lhs_hi, "sum_lower": lhs_lo,
              "bound_lower": factor * x_lo, "bound_upper": factor * x_hi}
    reason = "" if status == "pass" else "brackets too loose to decide" if status == "inconclusive" else \
        "certain violation"
    if j is not None:
        if params.n(j) != k:
            raise ValueError(f"witness has {k} parts but n_{j} = {params.n(j)}")
        if j >= 2 and n <= params.n(j - 1):
            values["three_halves"] = _decide(lhs_hi, Fraction(3, 2) * w.C * x_lo, lhs_lo,
                                             Fraction(3, 2) * w.C * x_hi)
        else:
            values["three_halves"] = "inconclusive"
    return SplitReport(status, values, reason)


def _successive_runs(count: int, pieces: int, start: int = 0):
    """Successive nonempty runs [a, b) of positions start..count-1, exactly ``pieces`` of them."""
    if pieces == 0:
        yield []
        return
    for a in range(start, count):
        for b in range(a + 1, count + 1):
            for rest in _successive_runs(count, pieces - 1, b):
                yield [(a, b)] + rest


def adversarial_split_search(w: L1AverageWitness, params: ParamSeq, max_pieces: Optional[int] = None,
                             database=()) -> list[SplitReport]:
    """Exhaustive search over interval tuples; returns the non-passing reports."""
    coords = w.x.supp
    if len(coords) > 10:
        raise ValueError("support too large for the exhaustive split scan")
    top = max_pieces or len(coords)
    bad = []
    for n in range(1, top + 1):
        for runs in _successive_runs(len(coords), n):
            intervals = [Interval(coords[a], coords[b - 1]) for a, b in runs]
            rep = check_split_bound(w, intervals, params, database=database)
            if rep.status != "pass":
                bad.append(rep)
    return bad


# ---------------------------------------------------------------------------
# rapidly increasing sequences


class RISError(ValueError):
    pass


@dataclass
class RISWitness:
    blocks: tuple
    js: tuple                       # len(blocks) or len(blocks) + 1 entries
    C: Fraction
    eps: Fraction
    conditions: dict                # "a"/"b"/"c" -> per-k status
    scope: str                      # what condition (c) was checked against

    @property
    def length(self) -> int:
        return len(self.blocks)

    def j_next(self, k: int) -> Optional[int]:
        """j_{k+1} for 1-based k, or None past the end."""
        return self.js[k] if k < len(self.js) else None

    def l1_certified(self) -> bool:
        return all(x.norm_l1() <= self.C for x in self.blocks)

    def to_json(self) -> dict:
        return {
            "blocks": [x.to_json() for x in self.blocks], "js": list(self.js), "C": frac_str(self.C),
            "eps": frac_str(self.eps), "conditions": {c: {str(k): s for k, s in v.items()}
                                                      for c, v in sorted(self.conditions.items())},
            "scope": self.scope,
        }


def build_ris(ys: Sequence[FinVec], js: Sequence[int], C, eps, params: ParamSeq,
              audit_family: Sequence[Node] = (), database=()) -> RISWitness:
    """Verify (a), (b), (c) and package the witness.

    (a) and (c) are certified for all of K when ||x_k||_1 <= C, since every
    f in K has ||f||_inf <= 1/w(f).  Otherwise (a) uses the norm bracket and
    (c) is checked against ``audit_family`` only; the scope is recorded.
    Certain violations raise RISError naming the condition and index.
    """
    ys = tuple(ys)
    js = tuple(js)
    C = Fraction(C)
    eps = Fraction(eps)
    if C < 1 or eps <= 0:
        raise RISError("need C >= 1 and eps > 0")
    if not ys or not is_block_sequence(ys):
        raise RISError("ys must be a nonempty block sequence of nonzero vectors")
    if len(js) not in (len(ys), len(ys) + 1):
        raise RISError("js must have one entry per block (optionally one more)")
    if any(a >= b for a, b in zip(js, js[1:])):
        raise RISError("js must be strictly increasing")
    params.ensure(js[-1])
    cond = {"a": {}, "b": {}, "c": {}}
    scopes = set()
    for k, x in enumerate(ys, start=1):
        l1 = x.norm_l1()
        if l1 <= C:
            cond["a"][k] = "certified"
        else:
            lo, hi = _bracket(x, params, database)
            verdict = _decide(hi, C, lo, C)
            if verdict == "fail":
                raise RISError(f"condition (a) fails at k={k}: ||x_{k}|| >= {frac_str(lo)} > C")
            cond["a"][k] = "certified" if verdict == "pass" else "inconclusive"
        if k < len(js):
            size = len(x.range)
            if not Fraction(size, params.m(js[k])) < eps:
                raise RISError(f"condition (b) fails at k={k}: #range(x_{k}) / m_(j_{k + 1}) = "
                               f"{size}/{params.m(js[k])} is not < eps")
            cond["b"][k] = "certified"
        else:
            cond["b"][k] = "vacuous"
        if l1 <= C:
            cond["c"][k] = "certified"
            scopes.add("all of K (l1 bound)")
        else:
            limit = params.m(js[k - 1])
            checked = 0
            for f in audit_family:
                w = getattr(f, "weight", None)
                if w is None or w >= limit:
                    continue
                checked += 1
                if abs(evaluate(f, x)) > C / w:
                    raise RISError(f"condition (c) fails at k={k} for an audited functional of weight {w}")
            cond["c"][k] = "audited"
            scopes.add(f"audit family ({len(audit_family)} functionals)")
    return RISWitness(ys, js, C, eps, cond, "; ".join(sorted(scopes)))


# ---------------------------------------------------------------------------
# the basic inequality


def _index_of(node: Node) -> Optional[int]:
    return None if isinstance(node, Leaf) else node.j


@dataclass
class NodeRecord:
    """Per-node data of the recursion."""

    D: tuple
    case: str                       # leaf | empty | case1 | case2
    T1: tuple = ()
    T2: tuple = ()
    t: Optional[int] = None
    lhs: Fraction = Fraction(0)
    rhs: Fraction = Fraction(0)
    premises: list = field(default_factory=list)   # (claim, holds)


@dataclass
class BasicInequalityOutput:
    f: Node
    t: Optional[int]
    h1: Optional[Node]
    g1: FinVec
    g2: FinVec
    A: dict                         # k -> address
    records: dict                   # address -> NodeRecord
    lhs: Fraction
    rhs: Fraction
    checks: dict                    # name -> bool
    premise_failures: list          # (address, claim)
    j0: Optional[int] = None

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def status(self) -> str:
        if self.premise_failures:
            return "inconclusive"
        return "pass" if self.ok else "fail"

    def to_json(self) -> dict:
        return {
            "t": self.t, "h1": tree_to_json(self.h1) if self.h1 is not None else None,
            "g1": self.g1.to_json(), "g2": self.g2.to_json(), "j0": self.j0,
            "A": {str(k): list(a) for k, a in sorted(self.A.items())},
            "D": {".".join(map(str, a)) or "root": {"D": list(r.D), "case": r.case, "T1": list(r.T1),
                                                   "T2": list(r.T2), "t": r.t, "lhs": frac_str(r.lhs),
                                                   "rhs": frac_str(r.rhs)}
                  for a, r in sorted(self.records.items())},
            "lhs": frac_str(self.lhs), "rhs": frac_str(self.rhs),
            "checks": dict(sorted(self.checks.items())),
            "premise_failures": [[list(a), c] for a, c in self.premise_failures],
            "status": self.status,
        }


def _coeffs(bs, d: int) -> dict:
    if isinstance(bs, FinVec):
        return {k: bs[k] for k in range(1, d + 1)}
    bs = list(bs)
    if len(bs) != d:
        raise ValueError("one coefficient per block is required")
    return {k: Fraction(b) for k, b in enumerate(bs, start=1)}


def _split_around(h: Node, t: int) -> list:
    out = []
    if t > 1:
        left = restrict(h, Interval(1, t - 1))
        if left is not None:
            out.append(left)
    out.append(Leaf(t))
    right = restrict(h, Interval(t + 1, None))
    if right is not None:
        out.append(right)
    return out


def basic_inequality_transform(f: Node, ris: RISWitness, bs, params: ParamSeq,
                               j0: Optional[int] = None) -> BasicInequalityOutput:
    """Run the D_alpha recursion and build g_1 = [e*_t +] h_1 and g_2.

    The premises (a)-(c), and (d) when ``j0`` is given, are used only at the
    specific (node, block) pairs where the recursion needs them; those
    instances are re-checked exactly and any failure makes the result
    inconclusive with the offending node.
    """
    xs = ris.blocks
    d = len(xs)
    C, eps = ris.C, ris.eps
    b = _coeffs(bs, d)
    nodes = dict(walk(f))
    kids = {addr: [addr + (i,) for i in range(len(node.children))] for addr, node in nodes.items()}
    fsupp = set(support(f))

    # A_k: walk down while a child carries the whole trace of f on range(x_k)
    A: dict[int, tuple] = {}
    for k, x in enumerate(xs, start=1):
        rng = x.range
        trace = {c for c in fsupp if c in rng}
        if not trace:
            continue
        addr = ()
        while True:
            node = nodes[addr]
            if j0 is not None and _index_of(node) == j0:
                break
            nxt = None
            for c in kids[addr]:
                if {q for q in support(nodes[c]) if q in rng} == trace:
                    nxt = c
                    break
            if nxt is None:
                break
            addr = nxt
        A[k] = addr
    touched = sorted(A)

    own: dict[tuple, set] = {a: set() for a in nodes}
    for k, a in A.items():
        own[a].add(k)
    D: dict[tuple, set] = {}
    for addr in sorted(nodes, key=len, reverse=True):
        D[addr] = set(own[addr])
        for c in kids[addr]:
            D[addr] |= D[c]

    records: dict[tuple, NodeRecord] = {}
    g1s: dict[tuple, tuple] = {}       # address -> (t, h)
    g2s: dict[tuple, FinVec] = {}
    failures: list = []

    def premise(addr, claim, holds):
        records[addr].premises.append((claim, holds))
        if not holds:
            failures.append((addr, claim))

    for addr in sorted(nodes, key=len, reverse=True):
        node = nodes[addr]
        Dset = tuple(sorted(D[addr]))
        if not Dset:
            records[addr] = NodeRecord(Dset, "empty")
            g1s[addr], g2s[addr] = (None, None), FinVec()
            continue
        if isinstance(node, Leaf):
            (k,) = Dset
            records[addr] = NodeRecord(Dset, "leaf", t=k)
            premise(addr, f"(a) |f(x_{k})| <= C", abs(evaluate(node, xs[k - 1])) <= C)
            g1s[addr], g2s[addr] = (k, None), FinVec()
        elif j0 is not None and node.j == j0:
            t = max(Dset, key=lambda k: (abs(b[k]), -k))
            records[addr] = NodeRecord(Dset, "case2", t=t)
            # D is the hull of D minus blocks whose range misses supp f, and
            # those contribute nothing; (d) is needed with their b_k set to 0
            hull = range(Dset[0], Dset[-1] + 1)
            premise(addr, "D is an interval of touched blocks", set(Dset) == {k for k in hull if k in A})
            lhs = abs(evaluate(node, vector_sum(xs[k - 1].scale(b[k]) for k in Dset)))
            bound = C * (max(abs(b[k]) for k in Dset) + eps * sum(abs(b[k]) for k in Dset))
            premise(addr, "(d) on the blocks of D", lhs <= bound)
            g1s[addr], g2s[addr] = (t, None), FinVec({k: eps for k in Dset})
        else:
            j, mj = node.j, node.weight
            T = sorted(own[addr])
            T2 = [k for k in T if ris.j_next(k) is not None and params.m(ris.j_next(k)) <= mj]
            T1 = [k for k in T if k not in T2]
            rec = NodeRecord(Dset, "case1", tuple(T1), tuple(T2))
            records[addr] = rec
            for k in T2:
                premise(addr, f"(b) #supp(x_{k})/m_j <= eps", Fraction(len(xs[k - 1]), mj) <= eps)
            t = None
            leaves = list(T1)
            if T1 and not mj < params.m(ris.js[T1[0] - 1]):
                t = leaves.pop(0)
                premise(addr, f"(a) |f(x_{t})| <= C", abs(evaluate(node, xs[t - 1])) <= C)
            for k in leaves:
                premise(addr, f"(c) |f(x_{k})| <= C/w(f)", abs(evaluate(node, xs[k - 1])) <= C / mj)
            rec.t = t
            pieces: list[Node] = [Leaf(k) for k in leaves]
            g2 = FinVec({k: eps for k in T2})
            for c in kids[addr]:
                tc, hc = g1s[c]
                if tc is None:
                    if hc is not None:
                        pieces.append(hc)
                else:
                    pieces.extend(_split_around(hc, tc) if hc is not None else [Leaf(tc)])
                g2 = g2 + g2s[c]
            pieces.sort(key=lambda p: node_range(p).lo)
            h = Avg(j, mj, tuple(pieces)) if pieces else None
            g1s[addr], g2s[addr] = (t, h), g2
        # property (4) at this node
        rec = records[addr]
        tn, hn = g1s[addr]
        g1v = (FinVec.basis(tn) if tn is not None else FinVec()) + (hn.vector if hn is not None else FinVec())
        target = FinVec({k: abs(b[k]) for k in Dset})
        rec.lhs = abs(evaluate(node, vector_sum(xs[k - 1].scale(b[k]) for k in Dset)))
        rec.rhs = C * (g1v + g2s[addr]).dot(target)

    t, h1 = g1s[()]
    g1 = (FinVec.basis(t) if t is not None else FinVec()) + (h1.vector if h1 is not None else FinVec())
    g2 = g2s[()]
    lhs = abs(evaluate(f, vector_sum(x.scale(b[k]) for k, x in enumerate(xs, start=1))))
    rhs = C * (g1 + g2).dot(FinVec({k: abs(v) for k, v in b.items()}))
    allowed = set(touched)
    checks = {
        "master inequality": lhs <= rhs,
        "node inequalities": all(r.lhs <= r.rhs for r in records.values()),
        "supp g1 within touched blocks": set(g1.supp) <= allowed,
        "supp g2 within touched blocks": set(g2.supp) <= allowed,
        "g2 sup norm <= eps": g2.norm_inf() <= eps,
        "D shrinks downwards": all(D[c] <= D[a] for a in nodes for c in kids[a]),
        "h1 in W": h1 is None or not verify_w_tree(h1, params),
        "w(h1) = w(f)": h1 is None or h1.weight == getattr(f, "weight", None),
        "t outside supp h1": t is None or h1 is None or t not in support(h1),
    }
    if j0 is not None:
        checks["D empty below m_j0 nodes"] = all(
            not D[c] for a, n in nodes.items() if _index_of(n) == j0 for c, _ in walk(n, a) if c != a)
        checks["h1 avoids m_j0"] = h1 is None or all(_index_of(n) != j0 for _, n in walk(h1))
    return BasicInequalityOutput(f, t, h1, g1, g2, A, records, lhs, rhs, checks, failures, j0)


# ---------------------------------------------------------------------------
# estimates on averages of rapidly increasing sequences


@dataclass
class EstimateRecord:
    claim: str
    status: str
    values: dict
    reason: str = ""


@dataclass
class EstimateReport:
    variant: int
    j: int
    records: list
    scope: str

    @property
    def status(self) -> str:
        statuses = {r.status for r in self.records}
        if "fail" in statuses:
            return "fail"
        return "inconclusive" if "inconclusive" in statuses else "pass"

    def to_json(self) -> dict:
        from .reports import exact
        return {"variant": self.variant, "j": self.j, "scope": self.scope, "status": self.status,
                "records": [{"claim": r.claim, "status": r.status, "reason": r.reason,
                             "values": exact(r.values)} for r in self.records]}


def _regime_status(holds: bool, params: ParamSeq) -> tuple[str, str]:
    if holds:
        return "pass", ""
    if params.regime == PAPER_EXACT:
        return "fail", "violated"
    return "inconclusive", "constant proved for PaperExact growth only"


def ris_average_estimates(ris: RISWitness, j: int, params: ParamSeq, functionals: Sequence[Node],
                          bs=None, variant: int = 1, database=()) -> EstimateReport:
    """Evaluate the upper (and for variant 3 lower) estimates on (1/n_j) sum b_k x_k.

    Each audited functional is evaluated exactly; the same functional is also
    pushed through the basic inequality and its majorant is recorded.
    """
    nj, mj = params.n(j), params.m(j)
    if ris.length != nj:
        raise ValueError(f"need exactly n_{j} = {nj} blocks, got {ris.length}")
    if ris.eps > Fraction(1, nj):
        raise ValueError("the estimates need eps <= 1/n_j")
    if variant not in (1, 2, 3):
        raise ValueError("variant must be 1, 2 or 3")
    C = ris.C
    bvals = [Fraction(1)] * nj if bs is None else [Fraction(v) for v in bs]
    if any(abs(v) > 1 for v in bvals):
        raise ValueError("coefficients must satisfy |b_k| <= 1")
    avg = vector_sum(x.scale(v / nj) for x, v in zip(ris.blocks, bvals))
    records = []
    j0 = j if variant == 2 else None
    for idx, f in enumerate(functionals):
        value = abs(evaluate(f, avg))
        w = getattr(f, "weight", None)
        if variant == 2:
            bound = 4 * C / mj ** 3
            claim = "|f(avg)| <= 4C/m_j^3"
        elif w is None:
            bound = C / nj
            claim = "leaf: |f(avg)| <= C/n_j"
        elif w < mj:
            bound = 3 * C / (mj * w)
            claim = "w(f) < m_j: |f(avg)| <= 3C/(m_j w(f))"
        else:
            bound = C / w + 2 * C / nj
            claim = "w(f) >= m_j: |f(avg)| <= C/w(f) + 2C/n_j"
        out = basic_inequality_transform(f, ris, [v / nj for v in bvals], params, j0)
        values = {"functional": idx, "value": value, "bound": bound, "majorant": out.rhs,
                  "transform": out.status}
        if variant == 2 and out.premise_failures:
            records.append(EstimateRecord(claim, "inconclusive", values,
                                          "premise (d) fails for this functional"))
            continue
        status, reason = _regime_status(value <= bound, params)
        if w is None and variant != 2:
            status, reason = ("pass", "") if value <= bound else ("fail", "violated")
        records.append(EstimateRecord(claim, status, values, reason))
    lo, hi = _bracket(avg, params, database)
    if variant == 1:
        status, reason = _regime_status(hi <= 2 * C / mj, params)
        records.append(EstimateRecord("||avg|| <= 2C/m_j", status, {"upper": hi, "bound": 2 * C / mj},
                                      reason and "upper bracket above bound"))
    if variant == 3:
        records.extend(_variant_three(ris, j, params, avg, (lo, hi), database))
    scope = f"{len(functionals)} audited functionals"
    return EstimateReport(variant, j, records, scope)


def _variant_three(ris: RISWitness, j: int, params: ParamSeq, avg: FinVec, bracket, database) -> list:
    out = []
    mj, nj = params.m(j), params.n(j)
    if j % 2:
        return [EstimateRecord("two-sided estimate", "inconclusive", {}, "needs an even index")]
    if ris.C != 3:
        return [EstimateRecord("two-sided estimate", "inconclusive", {}, "needs C = 3")]
    norming = []
    for x in ris.blocks:
        b = norm_K_bracket(x, params, database)
        if b.lower != 1 or b.witness is None:
            norming = None
            break
        norming.append(restrict(b.witness, x.range))
    if norming is None:
        out.append(EstimateRecord("lower: ||avg|| >= 1/m_j", "inconclusive", {},
                                  "blocks are not certified normalized"))
    else:
        witness = Avg(j, mj, tuple(norming))
        value = evaluate(witness, avg)
        out.append(EstimateRecord("lower: ||avg|| >= 1/m_j via (1/m_j) sum f_i",
                                  "pass" if value >= Fraction(1, mj) else "fail",
                                  {"value": value, "bound": Fraction(1, mj), "arity": len(norming),
                                   "arity_ok": len(norming) <= nj}))
    status, reason = _regime_status(bracket[1] <= Fraction(6, mj), params)
    out.append(EstimateRecord("upper: ||avg|| <= 6/m_j", status,
                              {"upper": bracket[1], "bound": Fraction(6, mj)}, reason))
    return out
