"""Depended couples, the projections y_k and the sign-flip transform.

Given a functional f in K with a fixed tree, a block sequence x_1 < ... < x_d and
signs eps_k, ``sign_flip_transform`` builds g in K with

    f(x_k - y_k) = g(eps_k (x_k - y_k)),   supp f_a = supp g_a,   F_{f,x_k} = F_{g,x_k},

where y_k is x_k restricted to the supports of the first members of the
depended couples that straddle x_k.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

from .kset import SigmaCoder, TreeCheck, verify_tree
from .norms import norm_tildeK
from .params import FinVec, Interval, ParamSeq, SignVector, frac_str, is_block_sequence, vector_sum
from .trees import (Address, Avg, Leaf, Node, Pair, Special, evaluate, negate, node_range,
                    restrict, support, tree_to_json, walk)


class BlockError(ValueError):
    pass


def _check_blocks(xs: Sequence[FinVec]):
    if not xs:
        raise BlockError("at least one block is required")
    if not is_block_sequence(xs):
        raise BlockError("xs is not a block sequence of nonzero vectors")


# ---------------------------------------------------------------------------
# depended couples


@dataclass
class DependedCoupleIndex:
    per_k: dict                 # k -> set of addresses of first members
    couples: dict               # first member address -> (second member address or None, its max support)
    blocks: int

    @property
    def all(self) -> set:
        out = set()
        for addrs in self.per_k.values():
            out |= addrs
        return out

    @property
    def first_members(self) -> set:
        return set(self.couples)

    def as_sorted(self) -> dict:
        return {k: sorted(v) for k, v in sorted(self.per_k.items())}


def depended_couples(f: Node, lift: bool = False) -> dict:
    """First members of depended couples mapped to (second member address, its max support).

    A couple is an odd member immediately followed by its own even partner among
    the children of a special node.  With ``lift`` an odd member whose partner
    was cut away by the node's window still counts, paired with the unrestricted
    partner (second address ``None``); this realises the reduction to an
    unrestricted window.
    """
    out = {}
    for addr, node in walk(f):
        if not isinstance(node, Special):
            continue
        members = node.members
        for idx, (i, kind, _) in enumerate(members):
            if kind != "odd":
                continue
            nxt = members[idx + 1] if idx + 1 < len(members) else None
            if nxt is not None and nxt[0] == i and nxt[1] == "even":
                out[addr + (idx,)] = (addr + (idx + 1,), node_range(nxt[2]).hi)
            elif lift:
                out[addr + (idx,)] = (None, node_range(node.pairs[i].even).hi)
    return out


def index_depended_couples(f: Node, xs: Sequence[FinVec], lift: bool = False) -> DependedCoupleIndex:
    _check_blocks(xs)
    couples = depended_couples(f, lift)
    d = len(xs)
    per_k = {k: set() for k in range(1, d + 1)}
    nodes = dict(walk(f))
    for first, (_, hi_next) in couples.items():
        lo = node_range(nodes[first]).lo
        for k in range(1, d):
            left_ok = k == 1 or xs[k - 2].max_supp() < lo
            if left_ok and lo <= xs[k - 1].max_supp() and hi_next >= xs[k].min_supp():
                per_k[k].add(first)
    return DependedCoupleIndex(per_k, couples, d)


def index_uniqueness_violations(index: DependedCoupleIndex) -> list:
    """Pairs (k, parent) where a node has two children in F_{f,x_k}."""
    bad = []
    for k, addrs in index.per_k.items():
        parents = [a[:-1] for a in addrs]
        for p in set(parents):
            if parents.count(p) > 1:
                bad.append((k, p))
    return bad


def project_y(f: Node, xs: Sequence[FinVec], index: DependedCoupleIndex) -> list[FinVec]:
    nodes = dict(walk(f))
    coords = set()
    for addr in index.all:
        coords.update(support(nodes[addr]))
    return [x.restrict_to(coords) for x in xs]


@dataclass
class SimpleReport:
    status: str                     # pass | fail | inconclusive
    values: dict = field(default_factory=dict)
    reason: str = ""


def check_small_projection(f: Node, xs: Sequence[FinVec], sigmas: Sequence[Fraction],
                           params: ParamSeq) -> SimpleReport:
    """|f(y_k)| <= 2 sigma_k given ||x_k||_{tilde K} <= sigma_k."""
    if params.m(1) != 2:
        return SimpleReport("inconclusive", reason="hypothesis failure: m_1 != 2")
    if len(sigmas) != len(xs):
        raise ValueError("one bound per block is required")
    for k, (x, s) in enumerate(zip(xs, sigmas), start=1):
        if norm_tildeK(x, params) > s:
            return SimpleReport("inconclusive", reason=f"hypothesis failure: ||x_{k}|| exceeds sigma_{k}")
    index = index_depended_couples(f, xs)
    ys = project_y(f, xs, index)
    values = {}
    ok = True
    for k, (y, s) in enumerate(zip(ys, sigmas), start=1):
        v = abs(evaluate(f, y))
        values[k] = {"value": v, "bound": 2 * s, "slack": 2 * s - v}
        ok &= v <= 2 * s
    return SimpleReport("pass" if ok else "fail", values)


# ---------------------------------------------------------------------------
# the transform


@dataclass
class TransformReport:
    f: Node
    g: Node
    signs: SignVector
    per_k: list                   # (k, f(x_k - y_k), g(eps_k (x_k - y_k)))
    supports_equal: bool
    index_f: DependedCoupleIndex
    index_g: DependedCoupleIndex
    check: TreeCheck
    trace: dict                   # address -> partition label
    unsupported: list             # (address, reason)
    lifted: bool = False

    @property
    def equalities_hold(self) -> bool:
        return all(a == b for _, a, b in self.per_k)

    @property
    def index_equal(self) -> bool:
        return self.index_f.per_k == self.index_g.per_k

    @property
    def ok(self) -> bool:
        return (not self.unsupported and self.equalities_hold and self.supports_equal
                and self.index_equal and self.check.ok)

    @property
    def status(self) -> str:
        if self.unsupported:
            return "inconclusive"
        return "pass" if self.ok else "fail"

    def to_json(self) -> dict:
        sequences: dict = {}
        return {
            "f": tree_to_json(self.f, sequences), "g": tree_to_json(self.g, sequences),
            "signs": str(self.signs), "lifted": self.lifted, "status": self.status,
            "per_k": [{"k": k, "f(x_k - y_k)": frac_str(a), "g(eps_k (x_k - y_k))": frac_str(b), "equal": a == b}
                      for k, a, b in self.per_k],
            "supports_equal": self.supports_equal, "couple_index_equal": self.index_equal,
            "couples_f": {str(k): [list(a) for a in v] for k, v in self.index_f.as_sorted().items()},
            "verify_g": [[list(a), c] for a, c in self.check.violations],
            "partition": {".".join(map(str, a)) or "root": label for a, label in sorted(self.trace.items())},
            "unsupported": [[list(a), r] for a, r in self.unsupported],
            "sequences": sequences,
        }


def _extend(g_res: Node, f_full: Node, E: Interval) -> Node:
    """Undo the restriction to E: parts of f_full outside E are kept as they are."""
    if restrict(f_full, E) == f_full:
        return g_res
    if isinstance(f_full, Leaf):
        return g_res
    if isinstance(f_full, Avg):
        kids = []
        it = iter(g_res.children)
        for child in f_full.children:
            if restrict(child, E) is None:
                kids.append(child)
            else:
                kids.append(_extend(next(it), child, E))
        return Avg(f_full.j, f_full.weight, tuple(kids))
    return replace(g_res, window=f_full.window)


def sign_flip_transform(f: Node, xs: Sequence[FinVec], signs: SignVector, params: ParamSeq,
                        coder: Optional[SigmaCoder] = None, lift: bool = False) -> TransformReport:
    """Build g from f following the D / D+ / D- partition.

    With ``lift`` the couples (and so the projections y_k) are taken with
    respect to unrestricted windows; see ``depended_couples``.
    """
    _check_blocks(xs)
    d = len(xs)
    if len(signs) != d:
        raise ValueError("one sign per block is required")
    index = index_depended_couples(f, xs, lift)
    in_F = index.all
    first_members = index.first_members
    ranges = [x.range for x in xs]
    trace: dict = {}
    unsupported: list = []

    def meets(node) -> list[int]:
        rng = node_range(node)
        return [k for k in range(1, d + 1) if rng.meets(ranges[k - 1])]

    def block_before(node) -> int:
        lo = node_range(node).lo
        before = [k for k in range(1, d + 1) if ranges[k - 1].hi < lo]
        return max(before, default=0)

    def eps(k: int) -> int:
        return 1 if k == 0 else signs.at(k)

    def mark_below(node, addr, label):
        for sub, _ in walk(node, addr):
            if sub != addr:
                trace[sub] = label

    def build(node: Node, addr: Address):
        """Return (g_node, sign) where sign is set for D nodes and None for D- nodes."""
        ks = meets(node)
        if len(ks) <= 1:
            if addr in first_members:
                trace[addr] = "D(a)"
                mark_below(node, addr, "D+")
                return node, 1
            if ks:
                k, label = ks[0], "D(b)"
            else:
                k, label = block_before(node), "D(c)"
            e = eps(k)
            trace[addr] = f"{label} k={k}"
            mark_below(node, addr, "D+")
            return (node if e > 0 else negate(node)), e
        if isinstance(node, Avg):
            if addr in in_F:
                trace[addr] = "D- case 1"
                mark_below(node, addr, "D+ (kept)")
                return node, None
            trace[addr] = "D- case 2"
            kids = tuple(build(c, addr + (i,))[0] for i, c in enumerate(node.children))
            return Avg(node.j, node.weight, kids), None
        if isinstance(node, Special):
            trace[addr] = "D- case 3"
            return special_case(node, addr), None
        raise TypeError(f"leaf meeting several blocks at {addr}")  # unreachable

    def special_case(node: Special, addr: Address) -> Special:
        seq = node.seq
        n_odd = params.n(node.j)
        position = {(i, kind): idx for idx, (i, kind, _) in enumerate(node.members)}
        pairs = []
        for i, pair in enumerate(node.pairs):
            oi, ei = position.get((i, "odd")), position.get((i, "even"))
            if oi is None and ei is None:
                pairs.append(pair)
                continue
            pos = 2 * i + 2
            m_sigma = params.m(seq.index_at(pos))
            z = seq.x(pos)
            g_even = pair.even
            moved_sign = None
            odd_addr = odd_node = None
            if oi is not None:
                odd_node = node.members[oi][2]
                odd_addr = addr + (oi,)
                g_odd, _ = build(odd_node, odd_addr)
                ks = meets(odd_node)
                if ei is None and len(ks) == 1 and odd_addr not in in_F:
                    # the partner is outside the window: carry the block sign through lambda
                    moved_sign = eps(ks[0])
                if g_odd != odd_node:
                    if ei is None and len(ks) <= 1:
                        trace[odd_addr] += " (kept; sign carried by lambda)"
                        mark_below(odd_node, odd_addr, "D+ (kept)")
                    else:
                        unsupported.append((odd_addr, "odd member meets several blocks while its even "
                                                      "partner lies outside the window"))
            if ei is not None:
                even_node = node.members[ei][2]
                g_child, e_sign = build(even_node, addr + (ei,))
                if e_sign is not None:
                    g_even = pair.even if e_sign > 0 else negate(pair.even)
                else:
                    g_even = _extend(g_child, pair.even, node.window)
            elif moved_sign is not None:
                g_even = pair.even if moved_sign > 0 else negate(pair.even)
            v = evaluate(g_even, z)
            if v:
                lam = m_sigma * v
            elif odd_node is None or odd_addr in in_F or not meets(odd_node):
                lam = Fraction(1, n_odd * n_odd)
            else:
                k = meets(odd_node)[0]
                lam = eps(k) * pair.lam
            pairs.append(Pair(pair.odd, g_even, lam))
        return replace(node, pairs=tuple(pairs))

    g, _ = build(f, ())
    ys = project_y(f, xs, index)
    per_k = []
    for k in range(1, d + 1):
        diff = xs[k - 1] - ys[k - 1]
        per_k.append((k, evaluate(f, diff), evaluate(g, diff.scale(eps(k)))))
    f_nodes = dict(walk(f))
    g_nodes = dict(walk(g))
    supports_equal = f_nodes.keys() == g_nodes.keys() and all(
        support(f_nodes[a]) == support(g_nodes[a]) for a in f_nodes)
    index_g = index_depended_couples(g, xs, lift)
    check = verify_tree(g, params, coder)
    return TransformReport(f, g, signs, per_k, supports_equal, index, index_g, check, trace,
                           unsupported, lift)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class UnconditionalityCertificate:
    status: str
    report: Optional[TransformReport]
    values: dict
    reason: str = ""

    def to_json(self) -> dict:
        return {"status": self.status, "reason": self.reason,
                "values": {k: frac_str(v) for k, v in self.values.items()},
                "transform": self.report.to_json() if self.report is not None else None}


def unconditionality_certificate(xs: Sequence[FinVec], coeffs: Sequence[Fraction], signs: SignVector,
                                 f: Node, sigmas: Sequence[Fraction], params: ParamSeq,
                                 coder: Optional[SigmaCoder] = None,
                                 lift: bool = False) -> UnconditionalityCertificate:
    """Exact chain g(sum eps b x) >= f(sum b x) - sum|b||g(y)| - sum|b||f(y)| >= f(sum b x) - 4 max|b| sum sigma."""
    coeffs = [Fraction(c) for c in coeffs]
    if not (len(xs) == len(coeffs) == len(sigmas) == len(signs)):
        raise ValueError("blocks, coefficients, bounds and signs must have equal length")
    total_sigma = sum(sigmas, Fraction(0))
    if total_sigma > Fraction(1, 8):
        return UnconditionalityCertificate("inconclusive", None, {}, "hypothesis failure: sum of sigma exceeds 1/8")
    if params.m(1) != 2:
        return UnconditionalityCertificate("inconclusive", None, {}, "hypothesis failure: m_1 != 2")
    for k, (x, s) in enumerate(zip(xs, sigmas), start=1):
        if norm_tildeK(x, params) > s:
            return UnconditionalityCertificate("inconclusive", None, {},
                                               f"hypothesis failure: ||x_{k}|| exceeds sigma_{k}")
    report = sign_flip_transform(f, xs, signs, params, coder, lift)
    ys = project_y(f, xs, report.index_f)
    plain = vector_sum(x.scale(b) for x, b in zip(xs, coeffs))
    flipped = vector_sum(x.scale(b * e) for x, b, e in zip(xs, coeffs, signs.signs))
    f_value = evaluate(f, plain)
    g_value = evaluate(report.g, flipped)
    g_y = sum((abs(b) * abs(evaluate(report.g, y)) for y, b in zip(ys, coeffs)), Fraction(0))
    f_y = sum((abs(b) * abs(evaluate(f, y)) for y, b in zip(ys, coeffs)), Fraction(0))
    middle = f_value - g_y - f_y
    big_b = max((abs(b) for b in coeffs), default=Fraction(0))
    floor = f_value - 4 * big_b * total_sigma
    values = {"f(sum b x)": f_value, "g(sum eps b x)": g_value, "sum |b||g(y)|": g_y,
              "sum |b||f(y)|": f_y, "middle": middle, "floor": floor, "sum sigma": total_sigma,
              "max |b|": big_b}
    ok = report.ok and g_value >= middle >= floor
    status = "pass" if ok else ("inconclusive" if report.unsupported else "fail")
    return UnconditionalityCertificate(status, report, values)
