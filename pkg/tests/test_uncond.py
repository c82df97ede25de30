import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from xius.generators import random_blocks, random_k_functional
from xius.kset import SigmaCoder, build_special_functional, verify_tree
from xius.params import FinVec, Interval, SignVector, preset
from xius.trees import Avg, Leaf
from xius.uncond import (BlockError, check_small_projection, depended_couples, index_depended_couples,
                         index_uniqueness_violations, project_y, sign_flip_transform,
                         unconditionality_certificate)

from builders import hand_sequence


def flat(*coords, j=2, m=4):
    return Avg(j, m, tuple(Leaf(c) for c in coords))


@pytest.fixture
def hand(toyU):
    coder = SigmaCoder(toyU)
    seq = hand_sequence(toyU, coder)
    return toyU, coder, build_special_functional(seq, toyU)


def test_blocks_must_be_successive(toyA):
    with pytest.raises(BlockError):
        index_depended_couples(Leaf(1), [FinVec.basis(2), FinVec.basis(1)])


def test_no_special_node_no_couples(toyA):
    idx = index_depended_couples(flat(1, 2), [FinVec.basis(1), FinVec.basis(2)])
    assert idx.all == set()
    assert project_y(flat(1, 2), [FinVec.basis(1)], idx) == [FinVec()]


def test_straddling_couple_is_indexed(hand):
    p, coder, g = hand
    assert (0,) in depended_couples(g)
    x1 = FinVec({c: 1 for c in range(1, 9)})
    x2 = FinVec({9: 1, 12: 1})
    idx = index_depended_couples(g, [x1, x2])
    assert idx.per_k[1] == {(0,)}
    assert index_uniqueness_violations(idx) == []
    ys = project_y(g, [x1, x2], idx)
    assert ys[0] == x1.restrict(Interval(1, 7))


def test_shifted_blocks_give_empty_index(hand):
    p, coder, g = hand
    xs = [FinVec.basis(30), FinVec.basis(31)]
    assert index_depended_couples(g, xs).all == set()


def test_small_projection(hand):
    p, coder, g = hand
    xs = [FinVec({c: Fraction(1, 64) for c in range(1, 9)}), FinVec({9: Fraction(1, 64)})]
    from xius.norms import norm_tildeK
    sigmas = [norm_tildeK(x, p) for x in xs]
    rep = check_small_projection(g, xs, sigmas, p)
    assert rep.status == "pass"
    assert all(v["value"] <= v["bound"] for v in rep.values.values())
    zero = check_small_projection(Leaf(40), xs, sigmas, p)
    assert zero.values[1]["value"] == 0
    low = check_small_projection(g, xs, [Fraction(0), Fraction(0)], p)
    assert low.status == "inconclusive" and "hypothesis" in low.reason


def test_flip_without_specials(toyA):
    f = flat(1, 2, j=2, m=4)
    xs = [FinVec.basis(1), FinVec.basis(2)]
    r = sign_flip_transform(f, xs, SignVector((1, -1)), toyA)
    assert r.g.vector == FinVec({1: Fraction(1, 4), 2: Fraction(-1, 4)})
    assert r.status == "pass"
    assert all(a == b for _, a, b in r.per_k)


def test_all_plus_signs_keep_f(toyA):
    f = flat(1, 2, 3, j=2, m=4)
    xs = [FinVec.basis(1), FinVec({2: 1, 3: 2})]
    r = sign_flip_transform(f, xs, SignVector((1, 1)), toyA)
    assert r.g.vector == f.vector and r.ok


def test_flip_on_special_instance(hand):
    p, coder, g = hand
    xs = [FinVec({c: 1 for c in range(1, 9)}), FinVec({9: 1, 12: -1}), FinVec({20: 1, 22: 1})]
    r = sign_flip_transform(g, xs, SignVector((1, -1, -1)), p, coder)
    assert r.status == "pass", r.to_json()
    assert r.index_f.per_k[1] == {(0,)}
    # the first member of the couple is kept verbatim; its lambda follows the new even part
    assert r.g.pairs[0].odd == g.pairs[0].odd
    assert r.g.pairs[0].lam == Fraction(1, 16)
    assert verify_tree(r.g, p, coder).ok


def test_sign_length_mismatch(toyA):
    with pytest.raises(ValueError):
        sign_flip_transform(Leaf(1), [FinVec.basis(1)], SignVector((1, 1)), toyA)


def test_certificate_trivial_signs(toyA):
    xs = [FinVec({1: Fraction(1, 32)}), FinVec({2: Fraction(1, 32)})]
    cert = unconditionality_certificate(xs, [1, 1], SignVector((1, 1)), flat(1, 2), [Fraction(1, 32)] * 2, toyA)
    assert cert.status == "pass"
    assert cert.values["g(sum eps b x)"] == cert.values["f(sum b x)"]


def test_certificate_quarter_bound(toyA):
    # f(sum b x) >= 3/4 with sum sigma <= 1/8 leaves at least 1/4
    xs = [FinVec({1: Fraction(1, 16)}), FinVec({2: Fraction(1, 16)})]
    f = flat(1, 2)
    coeffs = [24, 24]
    cert = unconditionality_certificate(xs, coeffs, SignVector((1, -1)), f, [Fraction(1, 16)] * 2, toyA)
    assert cert.values["f(sum b x)"] == Fraction(3, 4)
    assert cert.status == "pass"
    assert cert.values["g(sum eps b x)"] >= Fraction(1, 4)


def test_certificate_rejects_large_sigma(toyA):
    cert = unconditionality_certificate([FinVec.basis(1)], [1], SignVector((1,)), Leaf(1), [Fraction(1)], toyA)
    assert cert.status == "inconclusive"


def _instance(seed):
    from xius.suites import toy_sequences
    p = preset("toyU")
    coder = SigmaCoder(p)
    seqs = toy_sequences(p, coder, random.Random(5))
    rng = random.Random(seed)
    seq = rng.choice(seqs)
    lo = max(1, seq.x(1).min_supp() - 3)
    hi = max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp()) + 3
    f = random_k_functional(p, [seq], rng, Interval(lo, hi))
    xs = random_blocks(lo, hi, rng, rng.randint(2, 6))
    signs = SignVector(tuple(rng.choice((1, -1)) for _ in xs))
    return p, coder, f, xs, signs


@given(st.integers(0, 10_000))
def test_transform_postconditions(seed):
    p, coder, f, xs, signs = _instance(seed)
    r = sign_flip_transform(f, xs, signs, p, coder)
    if r.unsupported:
        r = sign_flip_transform(f, xs, signs, p, coder, lift=True)
    assert not r.unsupported
    assert r.equalities_hold
    assert r.supports_equal
    assert r.index_equal
    assert r.check.ok, r.check.violations
