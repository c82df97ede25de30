"""The norming set K: sigma coding, special sequences, special functionals,
tree verification, enumeration and two-sided norm brackets."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .norms import DEFAULT_DP_CEILING, ExplosionGuard, norm_W, ResourceLimit
from .params import FinVec, Interval, ParamError, ParamSeq, frac_str
from .trees import (Avg, Leaf, Node, Pair, Special, evaluate, negate, node_range, restrict,
                    successive, support)


# ---------------------------------------------------------------------------
# small constructors


def flat_average(coords: Iterable[int], count: int) -> FinVec:
    return FinVec.flat(coords, Fraction(1, count))


def flat_functional(coords: Sequence[int], j: int, params: ParamSeq, sign: int = 1) -> Avg:
    """(1/m_j) sum of sign * e*_c over ``coords``."""
    return Avg(j, params.m(j), tuple(Leaf(c, sign) for c in coords))


def in_Q(v: FinVec) -> bool:
    return not v.is_zero and v.norm_inf() <= 1


# ---------------------------------------------------------------------------
# sigma coding


def encode_prefix(pairs: Sequence[tuple[FinVec, FinVec]]) -> str:
    """Canonical text of (x_1, f_1, ..., x_n, f_n): sorted coordinates, reduced fractions."""
    return json.dumps([[x.to_json(), f.to_json()] for x, f in pairs], separators=(",", ":"))


@dataclass
class SigmaRecord:
    encoding: str
    parent: Optional[str]
    value: int
    max_range: int


class SigmaCoder:
    """Injective assignment of even indices to prefixes of special sequences.

    A prefix receives the least even index that exceeds the value of its own
    shorter prefix, is still unused, and satisfies max range <= m_sigma^{1/2}.
    Indices used by opening averages are reserved and never assigned, so a
    weight of a special sequence identifies its position across sequences.
    Not thread-safe: confine one coder to one worker.
    """

    def __init__(self, params: ParamSeq, start: int = 2):
        self.params = params
        self.start = start
        self.table: dict[str, int] = {}
        self.records: list[SigmaRecord] = []
        self.used: set[int] = set()
        self.openings: set[int] = set()

    def opening_index(self, length: int) -> int:
        """Least even index with m > length^2 that is not a coded value; reserves it."""
        e = 2
        while True:
            if not self.params.has(e):
                raise ParamError(f"parameter sequence too short for an opening index with m > {length * length}")
            if self.params.m(e) > length * length and e not in self.used:
                self.openings.add(e)
                return e
            e += 2

    def reserve_opening(self, e: int):
        if e in self.used:
            raise ValueError(f"index {e} is already a coded value and cannot open a sequence")
        self.openings.add(e)

    def lookup(self, pairs) -> Optional[int]:
        return self.table.get(encode_prefix(pairs))

    def assign(self, pairs: Sequence[tuple[FinVec, FinVec]]) -> int:
        if not pairs:
            raise ValueError("sigma is defined on nonempty prefixes")
        enc = encode_prefix(pairs)
        if enc in self.table:
            return self.table[enc]
        floor = self.start - 1
        parent = None
        if len(pairs) > 1:
            floor = self.assign(pairs[:-1])
            parent = encode_prefix(pairs[:-1])
        x, f = pairs[-1]
        top = max([x.max_supp()] + ([f.max_supp()] if not f.is_zero else []))
        need = top * top
        sigma = floor + 1
        if sigma % 2:
            sigma += 1
        while True:
            if not self.params.has(sigma):
                raise ParamError(
                    f"parameter sequence too short to satisfy range bound: need an even index "
                    f"with m >= {need}")
            if sigma not in self.used and sigma not in self.openings and self.params.m(sigma) >= need:
                break
            sigma += 2
        self.table[enc] = sigma
        self.used.add(sigma)
        self.records.append(SigmaRecord(enc, parent, sigma, top))
        return sigma

    def audit(self) -> list[str]:
        """Violations of injectivity, extension monotonicity or the range bound."""
        problems = []
        seen: dict[int, str] = {}
        for rec in self.records:
            if rec.value in seen and seen[rec.value] != rec.encoding:
                problems.append(f"value {rec.value} assigned twice")
            seen[rec.value] = rec.encoding
            if rec.value % 2:
                problems.append(f"odd value {rec.value}")
            if rec.parent is not None and not self.table[rec.parent] < rec.value:
                problems.append(f"value {rec.value} does not exceed its prefix value")
            if self.params.m(rec.value) < rec.max_range ** 2:
                problems.append(f"range {rec.max_range} exceeds m_{rec.value}^(1/2)")
            if rec.value in self.openings:
                problems.append(f"value {rec.value} is also an opening index")
        if len(set(self.table.values())) != len(self.table):
            problems.append("table is not injective")
        return problems

    def to_json(self) -> list:
        return [{"digest": hashlib.sha256(r.encoding.encode()).hexdigest()[:16], "value": r.value,
                 "max_range": r.max_range,
                 "parent": None if r.parent is None else hashlib.sha256(r.parent.encode()).hexdigest()[:16]}
                for r in self.records]


# ---------------------------------------------------------------------------
# special sequences


class SequenceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpecialSequence:
    """(x_1, f_1, ..., x_{2k}, f_{2k}) with its sigma values.

    ``odd_index`` is the odd index whose arity n_{odd_index} = 2k is the length;
    ``first_index`` is the even index of the opening average x_1.
    ``sigmas[i-1]`` is sigma(x_1, f_1, ..., x_i, f_i) for i = 1 .. 2k-1.
    ``side_scope[i]`` records how |g(x_{2i})| <= 1/m_sigma was established.
    """

    odd_index: int
    first_index: int
    xs: tuple
    fs: tuple
    even_trees: tuple
    sigmas: tuple
    side_scope: tuple
    key: str

    def __eq__(self, other):
        return isinstance(other, SpecialSequence) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def length(self) -> int:
        return len(self.xs)

    @property
    def pair_count(self) -> int:
        return len(self.xs) // 2

    def x(self, pos: int) -> FinVec:
        return self.xs[pos - 1]

    def f(self, pos: int) -> FinVec:
        return self.fs[pos - 1]

    def index_at(self, pos: int) -> int:
        """Weight index of f_pos: the opening index for pos = 1, sigma of the prefix otherwise."""
        return self.first_index if pos == 1 else self.sigmas[pos - 2]

    def odd_tree(self, pair: int, params: ParamSeq) -> Avg:
        pos = 2 * pair + 1
        return flat_functional(self.f(pos).supp, self.index_at(pos), params)

    def even_tree(self, pair: int) -> Node:
        return self.even_trees[pair]

    def prefix(self, upto: int) -> list:
        return [(self.xs[i], self.fs[i]) for i in range(upto)]

    def to_json(self) -> dict:
        from .trees import tree_to_json
        return {
            "odd_index": self.odd_index, "first_index": self.first_index,
            "xs": [v.to_json() for v in self.xs], "fs": [v.to_json() for v in self.fs],
            "even_trees": [tree_to_json(t) for t in self.even_trees],
            "sigmas": list(self.sigmas), "side_scope": list(self.side_scope),
        }

    @staticmethod
    def from_json(data: dict, params: ParamSeq, coder: SigmaCoder, sequences=None) -> "SpecialSequence":
        from .trees import tree_from_json
        return assemble_special_sequence(
            params, coder, int(data["odd_index"]),
            [FinVec.from_json(v) for v in data["xs"]], [FinVec.from_json(v) for v in data["fs"]],
            [tree_from_json(t, sequences) for t in data["even_trees"]])


def _flat_check(x: FinVec, f: FinVec, j: int, params: ParamSeq) -> Optional[str]:
    nj, mj = params.n(j), params.m(j)
    if len(x) != nj or set(x.values()) != {Fraction(1, nj)}:
        return f"x is not (1/n_{j}) times a sum of n_{j} unit vectors"
    if f.supp != x.supp or set(f.values()) != {Fraction(1, mj)}:
        return f"f is not (1/m_{j}) times the sum of the matching coordinate functionals"
    return None


def assemble_special_sequence(params: ParamSeq, coder: SigmaCoder, odd_index: int,
                              xs: Sequence[FinVec], fs: Sequence[FinVec],
                              even_trees: Sequence[Node], database: Sequence[Node] = ()
                              ) -> SpecialSequence:
    """Validate the defining conditions and register every prefix with the coder."""
    xs, fs, even_trees = tuple(xs), tuple(fs), tuple(even_trees)
    if odd_index % 2 == 0 or odd_index < 3:
        raise SequenceError("the length index must be odd and at least 3")
    length = params.n(odd_index)
    if length % 2:
        raise SequenceError(f"n_{odd_index} = {length} is odd; pairs cannot be formed")
    if len(xs) != length or len(fs) != length:
        raise SequenceError(f"expected {length} vectors and functionals, got {len(xs)}/{len(fs)}")
    if len(even_trees) != length // 2:
        raise SequenceError("one tree per even functional is required")
    for pos, (x, f) in enumerate(zip(xs, fs), start=1):
        if not in_Q(x) or not in_Q(f):
            raise SequenceError(f"position {pos}: entries must be nonzero rationals with max <= 1")
    for pos in range(1, length):
        left = max(xs[pos - 1].max_supp(), fs[pos - 1].max_supp())
        right = min(xs[pos].min_supp(), fs[pos].min_supp())
        if not left < right:
            raise SequenceError(f"position {pos}: ranges are not increasing")
    # opening average
    first = None
    for e in range(2, 10 ** 6, 2):
        if not params.has(e):
            break
        if params.n(e) == len(xs[0]):
            first = e
            break
        if params.n(e) > len(xs[0]):
            break
    if first is None:
        raise SequenceError("x_1 is not an even-index basis average")
    msg = _flat_check(xs[0], fs[0], first, params)
    if msg:
        raise SequenceError("position 1: " + msg)
    if not params.m(first) > length * length:
        raise SequenceError(f"m_{first}^(1/2) must exceed the length {length}")
    try:
        coder.reserve_opening(first)
    except ValueError as exc:
        raise SequenceError(f"position 1: {exc}") from None
    pairs = list(zip(xs, fs))
    sigmas = [coder.assign(pairs[:i]) for i in range(1, length)]
    side = []
    for pos in range(2, length + 1):
        sigma = sigmas[pos - 2]
        m_sigma = params.m(sigma)
        x, f = xs[pos - 1], fs[pos - 1]
        if pos % 2:
            msg = _flat_check(x, f, sigma, params)
            if msg:
                raise SequenceError(f"position {pos}: {msg}")
            continue
        if f.norm_inf() > Fraction(1, m_sigma):
            raise SequenceError(f"position {pos}: ||f||_inf exceeds 1/m_{sigma}")
        if abs(f.dot(x)) > Fraction(1, m_sigma):
            raise SequenceError(f"position {pos}: |f(x)| exceeds 1/m_{sigma}")
        tree = even_trees[pos // 2 - 1]
        if not isinstance(tree, Avg) or tree.j != sigma or tree.weight != m_sigma:
            raise SequenceError(f"position {pos}: functional tree must be an even node of index {sigma}")
        if tree.vector != f:
            raise SequenceError(f"position {pos}: tree does not represent f")
        # |g(x)| <= 1/m_sigma for all g of weight m_sigma: certified by ||x||_1 <= 1
        if x.norm_l1() <= 1:
            side.append("certified: l1 norm at most 1")
        else:
            worst = max((abs(evaluate(g, x)) for g in database
                         if getattr(g, "weight", None) == m_sigma), default=Fraction(0))
            if worst > Fraction(1, m_sigma):
                raise SequenceError(f"position {pos}: an audited functional of weight m_{sigma} sees x too well")
            side.append(f"sampled: {sum(1 for g in database if getattr(g, 'weight', None) == m_sigma)} functionals")
    key = hashlib.sha256(encode_prefix(pairs).encode()).hexdigest()[:20]
    return SpecialSequence(odd_index, first, xs, fs, even_trees, tuple(sigmas), tuple(side), key)


# ---------------------------------------------------------------------------
# special functionals


def lambda_for(replacement: Node, z: FinVec, m_sigma: int, n_odd: int, sign: int = 1) -> Fraction:
    """The coefficient rule: f'(m_sigma z) when f'(z) != 0, else sign/n^2."""
    v = evaluate(replacement, z)
    if v:
        return m_sigma * v
    return Fraction(sign, n_odd * n_odd)


def build_special_functional(seq: SpecialSequence, params: ParamSeq,
                             replacements: Optional[Sequence[Node]] = None,
                             window: Interval = Interval.everything(), sign: int = 1,
                             lambda_signs: Optional[Sequence[int]] = None) -> Special:
    """An element of K_phi; replacements default to the sequence's own even functionals."""
    k = seq.pair_count
    reps = list(replacements) if replacements is not None else [seq.even_tree(i) for i in range(k)]
    lam_signs = list(lambda_signs) if lambda_signs is not None else [1] * k
    if len(reps) != k or len(lam_signs) != k:
        raise SequenceError(f"need {k} replacements and lambda signs")
    n_odd = params.n(seq.odd_index)
    pairs = []
    for i in range(k):
        pos = 2 * i + 2
        sigma = seq.index_at(pos)
        rep = reps[i]
        if not isinstance(rep, Avg) or rep.j != sigma or rep.weight != params.m(sigma):
            raise SequenceError(f"pair {i + 1}: replacement must have weight m_{sigma}")
        if support(rep) != seq.f(pos).supp:
            raise SequenceError(f"pair {i + 1}: replacement support differs from supp f_{pos}")
        lam = lambda_for(rep, seq.x(pos), params.m(sigma), n_odd, lam_signs[i])
        pairs.append(Pair(seq.odd_tree(i, params), rep, lam))
    node = Special(seq.odd_index, params.m(seq.odd_index), seq, tuple(pairs), window, sign)
    if not node.members:
        raise SequenceError("window removes every member; the functional vanishes")
    return node


# ---------------------------------------------------------------------------
# verification


@dataclass
class TreeCheck:
    ok: bool
    violations: list = field(default_factory=list)   # (address, clause)
    nodes: dict = field(default_factory=dict)        # address -> node: the tree (f_alpha)
    scope: list = field(default_factory=list)

    def first(self) -> Optional[str]:
        if not self.violations:
            return None
        addr, clause = self.violations[0]
        return f"{addr}: {clause}"


def verify_tree(f: Node, params: ParamSeq, coder: Optional[SigmaCoder] = None) -> TreeCheck:
    """Check that the tree witnesses membership in K, node by node."""
    check = TreeCheck(True)
    seen_seqs = set()

    def bad(address, clause):
        check.violations.append((address, clause))

    def visit(node, address):
        check.nodes[address] = node
        if isinstance(node, Leaf):
            return
        if isinstance(node, Avg):
            if node.j % 2:
                bad(address, f"weighted node of odd index {node.j} is not an even operation")
            elif node.weight != params.m(node.j):
                bad(address, f"weight {node.weight} is not m_{node.j}")
            if len(node.children) > params.n(node.j):
                bad(address, f"arity exceeds n_{node.j}")
            if not node.children:
                bad(address, "even node without children")
            if not successive(node.children):
                bad(address, "children are not successive")
            for i, child in enumerate(node.children):
                visit(child, address + (i,))
            return
        if isinstance(node, Special):
            visit_special(node, address)
            return
        bad(address, f"unknown node kind {type(node).__name__}")

    def visit_special(node: Special, address):
        seq = node.seq
        if node.j % 2 == 0 or node.j != seq.odd_index:
            bad(address, f"special node index {node.j} does not match its sequence")
        if node.weight != params.m(node.j):
            bad(address, f"weight {node.weight} is not m_{node.j}")
        if len(node.pairs) != seq.pair_count:
            bad(address, "number of pairs differs from the sequence length")
            return
        if coder is not None and seq.key not in seen_seqs:
            seen_seqs.add(seq.key)
            for i, sigma in enumerate(seq.sigmas, start=1):
                if coder.lookup(seq.prefix(i)) != sigma:
                    bad(address, f"sigma of prefix {i} disagrees with the coder")
                    break
        n_odd = params.n(node.j)
        for i, pair in enumerate(node.pairs):
            pos = 2 * i + 2
            sigma = seq.index_at(pos)
            if pair.odd != seq.odd_tree(i, params):
                bad(address, f"pair {i + 1}: odd member is not f_{pos - 1} of the sequence")
            rep = pair.even
            if not isinstance(rep, Avg) or rep.j != sigma or rep.weight != params.m(sigma):
                bad(address, f"pair {i + 1}: even member must carry weight m_{sigma}")
                continue
            if support(rep) != seq.f(pos).supp:
                bad(address, f"pair {i + 1}: supp f'_{pos} differs from supp f_{pos}")
            sub = verify_tree(rep, params, coder)
            for sub_addr, clause in sub.violations:
                bad(address, f"pair {i + 1} even member {sub_addr}: {clause}")
            v = evaluate(rep, seq.x(pos))
            if v:
                if pair.lam != params.m(sigma) * v:
                    bad(address, f"pair {i + 1}: lambda {frac_str(pair.lam)} differs from f'(m x) = "
                                 f"{frac_str(params.m(sigma) * v)}")
            elif abs(pair.lam) != Fraction(1, n_odd * n_odd):
                bad(address, f"pair {i + 1}: f'(x) = 0 but |lambda| != 1/n_{node.j}^2")
        check.scope.extend(f"seq {seq.key} pair {i + 1}: {s}" for i, s in enumerate(seq.side_scope))
        if not node.members:
            bad(address, "special node vanishes on its window")
        for i, child in enumerate(node.children):
            visit(child, address + (i,))

    visit(f, ())
    if f.vector.norm_inf() > 1:
        check.violations.append(((), "sup norm of the functional exceeds 1"))
    check.ok = not check.violations
    return check


# ---------------------------------------------------------------------------
# enumeration


def _chains(items: list, max_len: int, limit: int) -> list[tuple]:
    """All successive tuples (by range) of length 1..max_len drawn from ``items``."""
    ordered = sorted(items, key=lambda t: (node_range(t).lo, node_range(t).hi))
    lows = [node_range(t).lo for t in ordered]
    highs = [node_range(t).hi for t in ordered]
    out: list[tuple] = []

    def extend(prefix: tuple, last_hi: int, start: int):
        for idx in range(start, len(ordered)):
            if lows[idx] <= last_hi:
                continue
            chain = prefix + (ordered[idx],)
            out.append(chain)
            if len(out) > limit:
                raise ExplosionGuard(f"more than {limit} candidate chains")
            if len(chain) < max_len:
                extend(chain, highs[idx], idx + 1)

    extend((), 0, 0)
    return out


def enumerate_K(params: ParamSeq, coder: Optional[SigmaCoder], window: Interval, depth: int,
                special_budget: int = 0, sequences: Sequence[SpecialSequence] = (),
                even_indices: Optional[Sequence[int]] = None, max_items: int = 50000) -> list[Node]:
    """Deterministic database of K functionals supported in ``window``.

    Depth 0 gives the signed coordinate functionals; each further level adds the
    even operations (index in ``even_indices``, default 2 and 4) applied to
    successive functionals of the previous level.  Special functionals of the
    given sequences are added for every sub-interval of the window, up to
    ``special_budget`` of them.
    """
    if window.hi is None:
        raise ValueError("enumeration window must be finite")
    if even_indices is None:
        even_indices = [e for e in (2, 4) if params.has(e)]
    coords = list(range(window.lo, window.hi + 1))
    found: dict[FinVec, Node] = {}

    def add(node):
        vec = node.vector
        if vec.is_zero or vec in found:
            return
        found[vec] = node
        if len(found) > max_items:
            raise ExplosionGuard(f"more than {max_items} functionals")

    for c in coords:
        add(Leaf(c, 1))
        add(Leaf(c, -1))
    specials: list[Node] = []
    for seq in sequences:
        lo = max(window.lo, min(seq.x(1).min_supp(), seq.f(1).min_supp()))
        hi = min(window.hi, max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp()))
        for a in range(lo, hi + 1):
            for b in range(a, hi + 1):
                for sgn in (1, -1):
                    if len(specials) >= special_budget:
                        break
                    try:
                        node = build_special_functional(seq, params, window=Interval(a, b), sign=sgn)
                    except SequenceError:
                        continue
                    specials.append(node)
    for node in specials:
        add(node)
    for _ in range(depth):
        level = list(found.values())
        for e in even_indices:
            for chain in _chains(level, params.n(e), max_items * 4):
                add(Avg(e, params.m(e), chain))
    return list(found.values())


# ---------------------------------------------------------------------------
# norm brackets


@dataclass(frozen=True)
class KBracket:
    lower: Fraction
    upper: Fraction
    witness: Optional[Node]
    upper_exact: bool
    scope: str = ""


def norm_K_bracket(x: FinVec, params: ParamSeq, database: Sequence[Node] = (),
                   even_dp: bool = True, dp_ceiling: int = 24,
                   w_ceiling: int = DEFAULT_DP_CEILING) -> KBracket:
    """(lower, upper) for the norm in the space normed by K.

    The lower bound is the best database value, improved by closing the values
    on sub-intervals of the support under even operations; the upper bound is
    the W norm (exact under ``w_ceiling``, otherwise the l1 norm).
    """
    if x.is_zero:
        return KBracket(Fraction(0), Fraction(0), None, True, "zero vector")
    coords = x.supp
    top = max(coords, key=lambda c: (abs(x[c]), -c))
    best_val = abs(x[top])
    best_node: Node = Leaf(top, 1 if x[top] > 0 else -1)
    for f in database:
        v = evaluate(f, x)
        if abs(v) > best_val:
            best_val = abs(v)
            best_node = f if v > 0 else negate(f)
    scope = f"database of {len(database)}"
    if even_dp and 1 < len(coords) <= dp_ceiling:
        val, node = _even_closure(x, params, database)
        if val > best_val:
            best_val, best_node = val, node
        scope += " with even-operation closure"
    try:
        upper = norm_W(x, params, w_ceiling).value
        exact = True
    except ResourceLimit as exc:
        upper = exc.bracket[1]
        exact = False
    return KBracket(best_val, upper, best_node, exact, scope)


def _even_closure(x: FinVec, params: ParamSeq, database: Sequence[Node]):
    coords = x.supp
    size = len(coords)
    evens = []
    e = 2
    while params.has(e):
        evens.append(e)
        if params.n(e) >= size:
            break
        e += 2
    seeds = {}
    for a in range(size):
        for b in range(a, size):
            E = Interval(coords[a], coords[b])
            y = x.restrict(E)
            top = max(y.supp, key=lambda c: (abs(y[c]), -c))
            val, node = abs(y[top]), Leaf(top, 1 if y[top] > 0 else -1)
            for f in database:
                v = evaluate(f, y)
                if abs(v) > val:
                    r = restrict(f, E)
                    val, node = abs(v), (r if v > 0 else negate(r))
            seeds[a, b] = (val, node)
    lower: dict = {}
    for length in range(1, size + 1):
        for a in range(size - length + 1):
            b = a + length - 1
            val, node = seeds[a, b]
            for e in evens:
                parts = min(params.n(e), length)
                if parts < 2:
                    continue
                # best split of [a, b] into at most ``parts`` pieces
                frontier = {a - 1: (Fraction(0), ())}
                best_here = None
                for used in range(1, parts + 1):
                    nxt = {}
                    for end, (acc, pieces) in frontier.items():
                        for stop in range(end + 1, b + 1):
                            if end + 1 == a and stop == b:
                                continue
                            cand = acc + lower[end + 1, stop][0]
                            if stop not in nxt or cand > nxt[stop][0]:
                                nxt[stop] = (cand, pieces + ((end + 1, stop),))
                    frontier = nxt
                    if b in frontier and used >= 2:
                        if best_here is None or frontier[b][0] > best_here[0]:
                            best_here = frontier[b]
                if best_here is not None:
                    cand = best_here[0] / params.m(e)
                    if cand > val:
                        kids = tuple(lower[p, q][1] for p, q in best_here[1])
                        val, node = cand, Avg(e, params.m(e), kids)
            lower[a, b] = (val, node)
    return lower[0, size - 1]
