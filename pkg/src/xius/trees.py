"""Tree-structured functionals.

Three node kinds cover every functional the package builds:

* ``Leaf(coord, sign)`` is the coordinate functional ``sign * e*_coord``.
* ``Avg(j, weight, children)`` is ``(1/weight) * sum(children)``.  In W the
  index ``j`` may be anything; in K it must be even (an "Even" node).
* ``Special(j, weight, seq, pairs, window, sign)`` is the odd-weight
  functional ``(sign/weight) * E(sum_i lam_i f_{2i-1} + f'_{2i})`` of a special
  sequence, where ``E`` is ``window``.  The pair members are stored unrestricted;
  the node's children in the tree are their nonzero restrictions to ``window``.

Addresses are tuples of child positions, the root being ``()``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterator, Optional, Union

from .params import FinVec, Interval, frac_str, parse_frac

Address = tuple


@dataclass(frozen=True)
class Leaf:
    coord: int
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("leaf sign must be +1 or -1")
        if self.coord < 1:
            raise ValueError("leaf coordinate must be positive")

    @cached_property
    def vector(self) -> FinVec:
        return FinVec({self.coord: self.sign})

    @property
    def children(self) -> tuple:
        return ()

    @property
    def weight(self) -> None:
        return None


@dataclass(frozen=True)
class Avg:
    j: int
    weight: int
    children: tuple

    def __post_init__(self):
        if not isinstance(self.children, tuple):
            object.__setattr__(self, "children", tuple(self.children))

    @cached_property
    def vector(self) -> FinVec:
        acc: dict[int, Fraction] = {}
        for child in self.children:
            for c, v in child.vector.items():
                acc[c] = acc.get(c, Fraction(0)) + v
        scale = Fraction(1, self.weight)
        return FinVec({c: v * scale for c, v in acc.items()})


@dataclass(frozen=True)
class Pair:
    """One (f_{2i-1}, f'_{2i}, lambda) triple of a special functional."""

    odd: "Node"
    even: "Node"
    lam: Fraction


@dataclass(frozen=True)
class Special:
    j: int
    weight: int
    seq: Any = field(compare=True)
    pairs: tuple
    window: Interval
    sign: int = 1

    def __post_init__(self):
        if not isinstance(self.pairs, tuple):
            object.__setattr__(self, "pairs", tuple(self.pairs))
        if self.sign not in (1, -1):
            raise ValueError("special sign must be +1 or -1")

    @cached_property
    def members(self) -> tuple:
        """Nonzero restricted members as (pair index, 'odd'|'even', node), in order."""
        out = []
        for i, pair in enumerate(self.pairs):
            for kind, node in (("odd", pair.odd), ("even", pair.even)):
                r = restrict(node, self.window)
                if r is not None:
                    out.append((i, kind, r))
        return tuple(out)

    @property
    def children(self) -> tuple:
        return tuple(node for _, _, node in self.members)

    @cached_property
    def vector(self) -> FinVec:
        acc: dict[int, Fraction] = {}
        for i, kind, node in self.members:
            factor = self.pairs[i].lam if kind == "odd" else Fraction(1)
            for c, v in node.vector.items():
                acc[c] = acc.get(c, Fraction(0)) + factor * v
        scale = Fraction(self.sign, self.weight)
        return FinVec({c: v * scale for c, v in acc.items()})


Node = Union[Leaf, Avg, Special]


# ---------------------------------------------------------------------------
# basic queries


def evaluate(f: Node, x: FinVec) -> Fraction:
    """Exact value f(x)."""
    return f.vector.dot(x)


def evaluate_recursive(f: Node, x: FinVec) -> Fraction:
    """Same value computed by walking the tree; kept as an independent cross-check."""
    if isinstance(f, Leaf):
        return f.sign * x[f.coord]
    if isinstance(f, Avg):
        return sum((evaluate_recursive(c, x) for c in f.children), Fraction(0)) / f.weight
    total = Fraction(0)
    y = x.restrict(f.window)
    for pair in f.pairs:
        total += pair.lam * evaluate_recursive(pair.odd, y) + evaluate_recursive(pair.even, y)
    return Fraction(f.sign, f.weight) * total


def support(f: Node) -> tuple[int, ...]:
    return f.vector.supp


def node_range(f: Node) -> Interval:
    return f.vector.range


def weight_of(f: Node) -> Optional[int]:
    return getattr(f, "weight", None)


def restrict(f: Node, E: Interval) -> Optional[Node]:
    """The functional E f as a tree, or None when it vanishes."""
    if isinstance(f, Leaf):
        return f if f.coord in E else None
    rng = node_range(f)
    if rng.is_empty or not rng.meets(E):
        return None
    if E.covers(rng):
        return f
    if isinstance(f, Avg):
        kids = tuple(r for r in (restrict(c, E) for c in f.children) if r is not None)
        return Avg(f.j, f.weight, kids) if kids else None
    g = replace(f, window=f.window.intersect(E))
    return g if g.members else None


def negate(f: Node) -> Node:
    if isinstance(f, Leaf):
        return Leaf(f.coord, -f.sign)
    if isinstance(f, Avg):
        return Avg(f.j, f.weight, tuple(negate(c) for c in f.children))
    return replace(f, sign=-f.sign)


def walk(f: Node, address: Address = ()) -> Iterator[tuple[Address, Node]]:
    """Pre-order traversal yielding (address, node)."""
    yield address, f
    for i, child in enumerate(f.children):
        yield from walk(child, address + (i,))


def node_at(f: Node, address: Address) -> Node:
    node = f
    for i in address:
        node = node.children[i]
    return node


def depth(f: Node) -> int:
    kids = f.children
    return 0 if not kids else 1 + max(depth(c) for c in kids)


def successive(nodes) -> bool:
    """Nonzero nodes whose supports are strictly increasing blocks."""
    ranges = [node_range(n) for n in nodes]
    if any(r.is_empty for r in ranges):
        return False
    return all(a.hi < b.lo for a, b in zip(ranges, ranges[1:]))


# ---------------------------------------------------------------------------
# JSON


def tree_to_json(f: Node, sequences: dict | None = None) -> dict:
    """Node-kind tagged encoding; special sequences are collected into ``sequences``."""
    if isinstance(f, Leaf):
        return {"kind": "leaf", "coord": f.coord, "sign": f.sign}
    if isinstance(f, Avg):
        return {"kind": "avg", "j": f.j, "weight": str(f.weight),
                "children": [tree_to_json(c, sequences) for c in f.children]}
    if sequences is not None:
        sequences.setdefault(f.seq.key, f.seq.to_json())
    return {
        "kind": "special", "j": f.j, "weight": str(f.weight), "seq": f.seq.key,
        "window": [f.window.lo, f.window.hi] if not f.window.is_empty else None,
        "sign": f.sign,
        "pairs": [{"odd": tree_to_json(p.odd, sequences), "even": tree_to_json(p.even, sequences),
                   "lam": frac_str(p.lam)} for p in f.pairs],
    }


def tree_from_json(data: dict, sequences: dict | None = None) -> Node:
    kind = data["kind"]
    if kind == "leaf":
        return Leaf(int(data["coord"]), int(data["sign"]))
    if kind == "avg":
        return Avg(int(data["j"]), int(data["weight"]),
                   tuple(tree_from_json(c, sequences) for c in data["children"]))
    if kind == "special":
        if sequences is None or data["seq"] not in sequences:
            raise ValueError(f"special node refers to unknown sequence {data['seq']!r}")
        pairs = tuple(Pair(tree_from_json(p["odd"], sequences), tree_from_json(p["even"], sequences),
                           parse_frac(p["lam"])) for p in data["pairs"])
        return Special(int(data["j"]), int(data["weight"]), sequences[data["seq"]], pairs,
                       Interval.from_json(data["window"]), int(data["sign"]))
    raise ValueError(f"unknown node kind {kind!r}")
