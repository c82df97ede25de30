import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from xius.generators import random_k_functional, random_replacement
from xius.kset import (SequenceError, SigmaCoder, assemble_special_sequence, build_special_functional,
                       enumerate_K, flat_average, flat_functional, in_Q, lambda_for, norm_K_bracket,
                       verify_tree)
from xius.params import FinVec, Interval, ParamError, preset
from xius.trees import Avg, Leaf, Special, evaluate, restrict, support

from builders import hand_sequence
from strategies import vectors


def test_sigma_values_on_hand_sequence(toyU):
    coder = SigmaCoder(toyU)
    seq = hand_sequence(toyU, coder)
    assert seq.first_index == 6
    assert seq.sigmas == (8, 10, 12)
    assert coder.audit() == []


def test_sigma_is_stable_and_injective(toyU):
    coder = SigmaCoder(toyU)
    x, f = FinVec.basis(1), FinVec({1: Fraction(1, 2)})
    a = coder.assign([(x, f)])
    assert coder.assign([(x, f)]) == a
    b = coder.assign([(x, f), (FinVec.basis(2), FinVec({2: Fraction(1, 2)}))])
    assert b > a and b % 2 == 0
    c = coder.assign([(FinVec.basis(3), FinVec({3: Fraction(1, 2)}))])
    assert len({a, b, c}) == 3
    assert coder.audit() == []


def test_sigma_range_bound(toyU):
    coder = SigmaCoder(toyU)
    x = FinVec({5: 1})
    v = coder.assign([(x, x)])
    assert toyU.m(v) >= 25


def test_opening_indices_are_never_assigned(toyU):
    coder = SigmaCoder(toyU)
    first = coder.opening_index(4)
    x = FinVec.basis(1)
    assert coder.assign([(x, x)]) != first
    with pytest.raises(ValueError):
        coder.reserve_opening(coder.assign([(x, x)]))


def test_sigma_runs_out_of_parameters():
    from xius.params import ParamSeq
    coder = SigmaCoder(ParamSeq([2, 4], [2, 3]))
    with pytest.raises(ParamError):
        coder.assign([(FinVec.basis(9), FinVec.basis(9))])


def test_in_Q():
    assert in_Q(FinVec({1: Fraction(1, 2), 2: -1}))
    assert not in_Q(FinVec({1: 2}))
    assert not in_Q(FinVec())


def test_assembly_rejects_wrong_length(toyU):
    coder = SigmaCoder(toyU)
    with pytest.raises(SequenceError):
        assemble_special_sequence(toyU, coder, 3, [FinVec.basis(1)], [FinVec.basis(1)], [])
    with pytest.raises(SequenceError):
        assemble_special_sequence(toyU, coder, 2, [], [], [])


def test_special_functional_verifies(toyU):
    coder = SigmaCoder(toyU)
    seq = hand_sequence(toyU, coder)
    g = build_special_functional(seq, toyU)
    assert verify_tree(g, toyU, coder).ok
    # f_2(x_2) = 1/m_8 so lambda_1 = 1; f_4(x_4) = 0 gives the default 1/n^2
    assert [q.lam for q in g.pairs] == [1, Fraction(1, 16)]


def test_lambda_rule_sign():
    z = FinVec({1: 1, 2: -1})
    rep = Avg(2, 4, (Leaf(1), Leaf(2)))
    assert lambda_for(rep, z, 4, 4) == Fraction(1, 16)
    assert lambda_for(rep, z, 4, 4, sign=-1) == Fraction(-1, 16)
    assert lambda_for(Avg(2, 4, (Leaf(1),)), z, 4, 4) == 1


def test_window_cuts_first_pair(toyU):
    coder = SigmaCoder(toyU)
    seq = hand_sequence(toyU, coder)
    g = build_special_functional(seq, toyU, window=Interval(3, 23))
    assert verify_tree(g, toyU, coder).ok
    assert min(support(g)) == 3
    with pytest.raises(SequenceError):
        build_special_functional(seq, toyU, window=Interval(100, 200))


def test_replacement_must_match(toyU):
    coder = SigmaCoder(toyU)
    seq = hand_sequence(toyU, coder)
    with pytest.raises(SequenceError):
        build_special_functional(seq, toyU, replacements=[Leaf(8), seq.even_tree(1)])


def test_verify_tree_flags_arity(toyA):
    bad = Avg(2, 4, tuple(Leaf(c) for c in range(1, 10)))
    check = verify_tree(bad, toyA)
    assert not check.ok
    assert "arity exceeds n_2" in check.first()


def test_verify_tree_flags_overlap(toyA):
    bad = Avg(2, 4, (Leaf(2), Leaf(1)))
    assert not verify_tree(bad, toyA).ok


def test_enumerate_depth_zero(toyA):
    db = enumerate_K(toyA, SigmaCoder(toyA), Interval(1, 3), 0)
    assert len(db) == 6
    assert all(isinstance(f, Leaf) for f in db)


def test_enumerate_depth_one_verifies(toyA):
    db = enumerate_K(toyA, SigmaCoder(toyA), Interval(1, 4), 1)
    assert len(db) > 6
    assert all(verify_tree(f, toyA).ok for f in db)
    assert len({f.vector for f in db}) == len(db)


def test_enumerate_with_specials(special_world):
    p, coder, seqs = special_world
    seq = seqs[0]
    hi = max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp())
    db = enumerate_K(p, coder, Interval(1, hi), 0, special_budget=30, sequences=[seq])
    specials = [f for f in db if isinstance(f, Special)]
    assert specials
    assert all(verify_tree(f, p, coder).ok for f in db)


def test_restrictions_reverify(special_world):
    p, coder, seqs = special_world
    rng = random.Random(3)
    seq = seqs[1]
    lo = seq.x(1).min_supp()
    hi = max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp())
    for _ in range(40):
        f = random_k_functional(p, [seq], rng, Interval(lo, hi))
        a = rng.randint(lo, hi)
        E = Interval(a, rng.randint(a, hi))
        g = restrict(f, E)
        if g is None:
            assert f.vector.restrict(E).is_zero
            continue
        assert g.vector == f.vector.restrict(E)
        assert verify_tree(g, p, coder).ok


def test_random_replacements_verify(special_world):
    p, coder, seqs = special_world
    rng = random.Random(11)
    seq = seqs[0]
    reps = [random_replacement(seq, i, p, rng) for i in range(seq.pair_count)]
    g = build_special_functional(seq, p, replacements=reps)
    assert verify_tree(g, p, coder).ok


def test_basis_average_witness(toyA):
    for j in (2, 4, 6):
        coords = list(range(1, toyA.n(j) + 1))
        w = flat_functional(coords, j, toyA)
        assert verify_tree(w, toyA).ok
        assert evaluate(w, flat_average(coords, toyA.n(j))) == Fraction(1, toyA.m(j))


def test_bracket_on_basis(toyA):
    b = norm_K_bracket(FinVec.basis(4), toyA)
    assert b.lower == b.upper == 1
    assert norm_K_bracket(FinVec(), toyA).upper == 0


@given(vectors(max_support=5))
def test_bracket_is_ordered(x):
    p = preset("toyA")
    b = norm_K_bracket(x, p)
    assert b.lower <= b.upper
    assert evaluate(b.witness, x) == b.lower


@given(st.integers(0, 50))
def test_random_functionals_verify(seed):
    p = preset("toyU")
    coder = SigmaCoder(p)
    from xius.suites import toy_sequences
    seqs = toy_sequences(p, coder, random.Random(5))
    rng = random.Random(seed)
    seq = rng.choice(seqs)
    lo = seq.x(1).min_supp()
    hi = max(seq.xs[-1].max_supp(), seq.fs[-1].max_supp())
    f = random_k_functional(p, [seq], rng, Interval(lo, hi))
    assert verify_tree(f, p, coder).ok
