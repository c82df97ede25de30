import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from xius.generators import random_fraction, random_k_functional, random_ris_blocks
from xius.kset import SigmaCoder, enumerate_K
from xius.params import FinVec, Interval, preset
from xius.ris import (NoAverage, RISError, adversarial_split_search, basic_inequality_transform, build_ris,
                      check_split_bound, find_l1_average, ris_average_estimates)
from xius.trees import Avg, Leaf, walk


def e(i):
    return FinVec.basis(i)


def test_two_term_l1_average(toyA):
    w = find_l1_average([e(1), e(2)], 2, 2, toyA)
    assert w.status == "pass"
    assert w.x == FinVec({1: Fraction(1, 2), 2: Fraction(1, 2)})
    assert w.norm_bracket == (Fraction(1, 2), Fraction(1, 2))
    assert all(b == (1, 1) for b in w.part_brackets)


def test_no_average_when_window_too_small(toyA):
    out = find_l1_average([e(1)], 2, 2, toyA)
    assert isinstance(out, NoAverage)
    assert "none within window" in out.reason


def test_split_bounds(toyA):
    w = find_l1_average([e(1), e(2)], 2, 2, toyA)
    every = check_split_bound(w, [Interval(1, 1), Interval(2, 2)], toyA)
    assert every.status == "pass" and every.values["sum_upper"] == 1
    whole = check_split_bound(w, [Interval(1, 2)], toyA)
    assert whole.status == "pass" and whole.values["sum_upper"] == Fraction(1, 2)
    assert adversarial_split_search(w, toyA) == []


def test_four_term_average(toyA):
    w = find_l1_average([e(i) for i in range(1, 9)], 4, 4, toyA)
    assert w.status == "pass"
    assert w.norm_bracket == (Fraction(1, 4), Fraction(1, 2))
    assert adversarial_split_search(w, toyA) == []


def test_single_block_ris(toyA):
    r = build_ris([e(1)], [1], 1, Fraction(1, 8), toyA)
    assert r.conditions["a"][1] == "certified"
    assert r.conditions["b"][1] == "vacuous"


def test_ris_condition_b_names_k(toyA):
    with pytest.raises(RISError, match="k=1"):
        build_ris([FinVec({1: 1, 2: 1, 3: 1}), e(5)], [1, 2], 3, Fraction(1, 2), toyA)


@pytest.fixture
def small_ris(toyA):
    return build_ris([FinVec({1: Fraction(1, 2)}), FinVec({3: Fraction(1, 2), 4: Fraction(1, 2)})],
                     [1, 3], 1, Fraction(1, 2), toyA)


def test_leaf_case(toyA, small_ris):
    out = basic_inequality_transform(Leaf(1), small_ris, [Fraction(3), Fraction(1)], toyA)
    assert out.status == "pass"
    assert out.g1 == FinVec({1: 1}) and out.g2.is_zero
    assert out.lhs == Fraction(3, 2) and out.rhs == 3


def test_flat_case(toyA, small_ris):
    f = Avg(2, 4, (Leaf(1), Leaf(3)))
    out = basic_inequality_transform(f, small_ris, [Fraction(3), Fraction(1)], toyA)
    assert out.status == "pass"
    assert out.h1 == Avg(2, 4, (Leaf(1), Leaf(2)))
    assert (out.lhs, out.rhs) == (Fraction(1, 2), 1)


def test_collapsed_weight(toyA, small_ris):
    f = Avg(2, 4, (Leaf(1), Leaf(3)))
    out = basic_inequality_transform(f, small_ris, [Fraction(3), Fraction(1)], toyA, j0=2)
    assert out.status == "pass"
    assert out.t == 1 and out.h1 is None
    assert out.g2 == FinVec({1: Fraction(1, 2), 2: Fraction(1, 2)})
    assert (out.lhs, out.rhs) == (Fraction(1, 2), 5)
    assert out.checks["h1 avoids m_j0"]


def test_average_estimates_on_basis(toyA):
    db = enumerate_K(toyA, SigmaCoder(toyA), Interval(1, 8), 1)
    r = build_ris([e(1), e(2), e(3), e(4)], [1, 3, 4, 5], 1, Fraction(1, 4), toyA)
    rep = ris_average_estimates(r, 1, toyA, db[:300])
    assert rep.status == "pass"


def test_lower_estimate_variant_three(toyA):
    db = enumerate_K(toyA, SigmaCoder(toyA), Interval(1, 8), 1)
    r = build_ris([e(i) for i in range(1, 9)], [1] + list(range(4, 11)), 3, Fraction(1, 8), toyA)
    rep = ris_average_estimates(r, 2, toyA, db[:200], variant=3)
    lower = [x for x in rep.records if x.claim.startswith("lower")]
    assert lower and lower[0].status == "pass"
    assert lower[0].values["value"] == Fraction(1, 4)
    # toy violations of PaperExact constants are never reported as failures
    assert rep.status != "fail"
    assert ris_average_estimates(r, 2, toyA, db[:200], variant=2).status != "fail"


def _instance(seed, with_j0):
    from xius.suites import toy_sequences
    p = preset("toyU")
    coder = SigmaCoder(p)
    seqs = toy_sequences(p, coder, random.Random(5))
    rng = random.Random(seed)
    seq = rng.choice(seqs)
    lo = max(1, seq.x(1).min_supp() - 3)
    hi = max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp()) + 3
    f = random_k_functional(p, [seq], rng, Interval(lo, hi))
    j0 = None
    if with_j0:
        idx = sorted({n.j for _, n in walk(f) if hasattr(n, "j")})
        j0 = rng.choice(idx) if idx else None
    blocks, js, C, eps = random_ris_blocks(lo, hi, p, rng, rng.randint(1, 6), j0)
    ris = build_ris(blocks, js, C, eps, p)
    bs = [random_fraction(rng) for _ in blocks]
    return p, f, ris, bs, j0, eps


@given(st.integers(0, 10_000), st.booleans())
def test_master_inequality(seed, with_j0):
    p, f, ris, bs, j0, eps = _instance(seed, with_j0)
    out = basic_inequality_transform(f, ris, bs, p, j0)
    assert not out.premise_failures
    assert out.lhs <= out.rhs
    assert out.g2.norm_inf() <= eps
    assert out.ok, out.checks
    if j0 is not None and out.h1 is not None:
        assert all(getattr(n, "j", None) != j0 for _, n in walk(out.h1))


def test_case_mix_is_covered():
    seen = Counter()
    for seed in range(60):
        p, f, ris, bs, j0, _ = _instance(seed, seed % 2 == 0)
        out = basic_inequality_transform(f, ris, bs, p, j0)
        seen.update(r.case for r in out.records.values())
    assert seen["case1"] and seen["leaf"]
