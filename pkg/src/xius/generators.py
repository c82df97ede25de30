"""Seeded generators of test instances: toy special sequences, random K
functionals built around them, and random block sequences."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional, Sequence

from .kset import (SigmaCoder, SpecialSequence, assemble_special_sequence, build_special_functional,
                   flat_average, flat_functional)
from .params import FinVec, Interval, ParamSeq
from .trees import Avg, Leaf, Node, node_range


def random_fraction(rng: random.Random, num: int = 6, den: int = 6, nonzero: bool = True) -> Fraction:
    while True:
        value = Fraction(rng.randint(-num, num), rng.randint(1, den))
        if value or not nonzero:
            return value


def _grouped_functional(coords: Sequence[int], index: int, params: ParamSeq, rng: random.Random,
                        inner: Sequence[int] = (2,)) -> Avg:
    """(1/m_index) times successive pieces covering ``coords``: leaves or small even averages."""
    limit = params.n(index)
    for _ in range(50):
        kids = []
        pos = 0
        while pos < len(coords):
            take = 1
            e = rng.choice(list(inner))
            if rng.random() < 0.4 and pos + 1 < len(coords):
                take = rng.randint(2, min(params.n(e), len(coords) - pos))
            chunk = coords[pos:pos + take]
            if take == 1:
                kids.append(Leaf(chunk[0], rng.choice((1, -1))))
            else:
                kids.append(Avg(e, params.m(e), tuple(Leaf(c, rng.choice((1, -1))) for c in chunk)))
            pos += take
        if len(kids) <= limit:
            return Avg(index, params.m(index), tuple(kids))
    # fall back to the flat functional, which always fits when len(coords) <= n_index
    return Avg(index, params.m(index), tuple(Leaf(c) for c in coords[:limit]))


def toy_special_sequence(params: ParamSeq, coder: SigmaCoder, start: int, rng: random.Random,
                         odd_index: int = 3) -> SpecialSequence:
    """A special sequence starting at coordinate ``start`` with short even blocks.

    Each x_{2i} has l1 norm at most 1, so the side condition on the even terms
    is certified for all of K, not only for a sample.
    """
    length = params.n(odd_index)
    first = coder.opening_index(length)
    pos = start
    xs: list[FinVec] = []
    fs: list[FinVec] = []
    trees: list[Node] = []
    idx = first
    for step in range(1, length + 1):
        if step % 2:
            count = params.n(idx)
            coords = list(range(pos, pos + count))
            xs.append(flat_average(coords, count))
            fs.append(flat_functional(coords, idx, params).vector)
            pos += count
        else:
            width = rng.randint(2, 4)
            coords = list(range(pos, pos + width))
            x_coords = coords[: rng.randint(1, width)]
            raw = [Fraction(rng.randint(1, 4)) * rng.choice((1, -1)) for _ in x_coords]
            total = sum(abs(v) for v in raw)
            scale = Fraction(rng.randint(1, 4), 4) / total
            xs.append(FinVec({c: v * scale for c, v in zip(x_coords, raw)}))
            tree = _grouped_functional(coords, idx, params, rng)
            trees.append(tree)
            fs.append(tree.vector)
            pos += width
        if step < length:
            idx = coder.assign(list(zip(xs, fs)))
        pos += rng.randint(0, 1)
    return assemble_special_sequence(params, coder, odd_index, xs, fs, trees)


def random_replacement(seq: SpecialSequence, pair: int, params: ParamSeq, rng: random.Random) -> Avg:
    pos = 2 * pair + 2
    return _grouped_functional(list(seq.f(pos).supp), seq.index_at(pos), params, rng)


def random_special(seq: SpecialSequence, params: ParamSeq, rng: random.Random,
                   window: Optional[Interval] = None) -> Node:
    k = seq.pair_count
    reps = [seq.even_tree(i) if rng.random() < 0.4 else random_replacement(seq, i, params, rng)
            for i in range(k)]
    lo = seq.x(1).min_supp()
    hi = max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp())
    if window is None:
        if rng.random() < 0.4:
            window = Interval.everything()
        else:
            a = rng.randint(lo, hi)
            b = rng.randint(a, hi)
            window = Interval(a, b)
    lam_signs = [rng.choice((1, -1)) for _ in range(k)]
    return build_special_functional(seq, params, reps, window, rng.choice((1, -1)), lam_signs)


def random_k_functional(params: ParamSeq, sequences: Sequence[SpecialSequence], rng: random.Random,
                        window: Interval, with_special: bool = True) -> Node:
    """A random element of K inside ``window`` (special nodes optional)."""
    for _ in range(100):
        try:
            return _random_k_functional(params, sequences, rng, window, with_special)
        except ValueError:
            continue
    raise RuntimeError("could not generate a functional")


def _random_leaves(lo: int, hi: int, rng: random.Random, count: int) -> list:
    if hi < lo or count <= 0:
        return []
    coords = sorted(rng.sample(range(lo, hi + 1), min(count, hi - lo + 1)))
    return [Leaf(c, rng.choice((1, -1))) for c in coords]


def _random_k_functional(params, sequences, rng, window, with_special):
    lo, hi = window.lo, window.hi
    if with_special and sequences:
        seq = rng.choice(list(sequences))
        core = random_special(seq, params, rng)
        core_rng = node_range(core)
        shape = rng.random()
        if shape < 0.35:
            return core
        e = rng.choice([e for e in (2, 4, 6) if params.has(e)])
        before = _random_leaves(lo, core_rng.lo - 1, rng, rng.randint(0, 2))
        after = _random_leaves(core_rng.hi + 1, hi, rng, rng.randint(0, 2))
        kids = before + [core] + after
        while len(kids) > params.n(e):
            kids.pop(0 if kids[0] is not core else -1)
        return Avg(e, params.m(e), tuple(kids))
    e = rng.choice([e for e in (2, 4) if params.has(e)])
    kids: list[Node] = []
    pos = lo
    while pos <= hi and len(kids) < params.n(e):
        width = rng.randint(1, 3)
        coords = list(range(pos, min(pos + width, hi + 1)))
        if rng.random() < 0.5 or len(coords) == 1:
            kids.append(Leaf(coords[0], rng.choice((1, -1))))
        else:
            inner = 2 if e != 2 else 4
            if len(coords) > params.n(inner):
                coords = coords[: params.n(inner)]
            kids.append(Avg(inner, params.m(inner), tuple(Leaf(c, rng.choice((1, -1))) for c in coords)))
        pos += width + rng.randint(0, 2)
    if not kids:
        raise ValueError("empty")
    return Avg(e, params.m(e), tuple(kids))


def random_blocks(lo: int, hi: int, rng: random.Random, count: Optional[int] = None,
                  entries=lambda rng: random_fraction(rng)) -> list[FinVec]:
    """A random block sequence inside [lo, hi]."""
    width = hi - lo + 1
    if count is None:
        count = rng.randint(2, min(6, width))
    count = min(count, width)
    cuts = sorted(rng.sample(range(lo + 1, hi + 1), count - 1)) if count > 1 else []
    bounds = [lo] + cuts + [hi + 1]
    blocks = []
    for a, b in zip(bounds, bounds[1:]):
        span = list(range(a, b))
        chosen = sorted(rng.sample(span, rng.randint(1, len(span))))
        blocks.append(FinVec({c: entries(rng) for c in chosen}))
    return blocks


def random_ris_blocks(lo: int, hi: int, params: ParamSeq, rng: random.Random, count: Optional[int] = None,
                      j0: Optional[int] = None, max_index: int = 8):
    """Blocks with ||x_k||_1 <= C, strictly increasing js and the least admissible eps.

    The l1 bound certifies conditions (a) and (c) for all of K; with ``j0``
    eps is raised to at least 1/m_j0, which certifies condition (d) as well.
    Returns (blocks, js, C, eps).
    """
    blocks = random_blocks(lo, hi, rng, count)
    C = rng.choice((Fraction(1), Fraction(3, 2), Fraction(2)))
    scaled = []
    for x in blocks:
        target = C * Fraction(rng.randint(1, 4), 4)
        scaled.append(x.scale(target / x.norm_l1()))
    d = len(scaled)
    extra = rng.random() < 0.5
    pool = range(1, max(max_index, d + 1) + 1)
    js = tuple(sorted(rng.sample(list(pool), d + 1 if extra else d)))
    params.ensure(js[-1])
    ratios = [Fraction(len(x.range), params.m(js[k])) for k, x in enumerate(scaled, start=1) if k < len(js)]
    eps = max(ratios, default=Fraction(1, 8)) * Fraction(9, 8)
    if j0 is not None:
        eps = max(eps, Fraction(1, params.m(j0)))
    return scaled, js, C, eps
