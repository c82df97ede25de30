import random
from fractions import Fraction

import pytest
from hypothesis import assume, given

from xius.kset import SequenceError, SigmaCoder, build_special_functional, verify_tree
from xius.norms import w_upper
from xius.params import FinVec, preset
from xius.sequences import (DependedSequence, alternating_average, build_depended_sequence,
                            cancelling_replacement, check_alternating_sum, check_offset_average,
                            check_pd1_estimates, distance_experiment, offset_family, operator_probe,
                            phi_functional, round_decimal, select_functional, standard_toy_input,
                            weight_coincidence_audit)
from xius.trees import Avg, Leaf, evaluate

from strategies import vectors


@pytest.fixture(scope="module")
def world():
    p = preset("toyS")
    coder = SigmaCoder(p)
    M, ys = standard_toy_input(800)
    chi = build_depended_sequence(M, ys, 3, p, coder)
    return p, coder, chi


def test_build_verifies(world):
    p, coder, chi = world
    assert isinstance(chi, DependedSequence)
    assert chi.verify() == []
    assert chi.phi.first_index == 4
    assert chi.phi.sigmas == (14, 92, 286)
    assert coder.audit() == []
    assert verify_tree(phi_functional(chi), p, coder).ok


def test_first_term_is_flat(world):
    p, _, chi = world
    j = chi.phi.first_index
    assert chi.fs[0].dot(chi.xs[0]) == Fraction(1, p.m(j))


def test_even_terms_see_their_vectors(world):
    p, _, chi = world
    for pos, step in chi.steps.items():
        m, n = p.m(step.index), p.n(step.index)
        assert evaluate(step.tree, step.x) >= Fraction(1, 12 * m)
        assert step.c == Fraction(1, 6) * (1 - Fraction(m, n * n))
        assert w_upper(step.y - step.x, p) <= Fraction(1, n * n)


def test_window_exhaustion(toyS):
    M, ys = standard_toy_input(20)
    with pytest.raises(SequenceError, match="window exhausted"):
        build_depended_sequence(M, ys, 3, toyS, SigmaCoder(toyS))


def test_round_decimal_exact_input():
    y, digits = round_decimal(FinVec({1: Fraction(1, 2)}), Fraction(0))
    assert y == FinVec({1: Fraction(1, 2)}) and digits == 1
    with pytest.raises(ValueError):
        round_decimal(FinVec({1: 2}), Fraction(1))


@given(vectors(max_support=4))
def test_round_decimal_error_bound(x):
    assume(x.norm_inf() <= 1)
    bound = Fraction(1, 100)
    y, _ = round_decimal(x, bound)
    assert y.supp == x.supp
    assert (y - x).norm_l1() <= bound


def test_cancellation_identities(world):
    p, _, chi = world
    fs = [phi_functional(chi), phi_functional(chi, B=[0, 1]), phi_functional(chi, B=[1], lambda_signs=[1, -1])]
    rec = check_alternating_sum(chi, fs)
    assert rec.values["A_terms"] == 3 and rec.values["B_terms"] == 3
    for claim in rec.claims:
        if "A-term" in claim.name:
            assert claim.status == "pass" and claim.values["term"] == 0
        if "B-term" in claim.name:
            assert claim.status == "pass" and abs(claim.values["term"]) == Fraction(1, 16)
    assert rec.status != "fail"


def test_cancelling_replacement(world):
    p, _, chi = world
    phi = chi.phi
    for i in range(phi.pair_count):
        y = phi.x(2 * i + 2)
        alt = cancelling_replacement(phi.even_tree(i), y, p)
        assert alt is not None
        assert evaluate(alt, y) == 0
        assert alt.vector.supp == phi.f(2 * i + 2).supp


def test_offset_average_vanishes(world):
    p, _, chi = world
    rec = check_offset_average(chi.phi, offset_family(chi), p, [phi_functional(chi, B=[0])])
    assert rec.status == "pass"
    assert all(c.values["value"] == 0 for c in rec.claims)
    empty = check_offset_average(chi.phi, {}, p)
    assert empty.values["average_l1"] == 0


def test_distance_chain(toyS):
    M, ys = standard_toy_input(800)
    rec = distance_experiment(M, ys, 3, toyS, SigmaCoder(toyS))
    status = {c.name: c.status for c in rec.claims}
    for name in ("lambda_1 > 1/24", "lambda_2 > 1/24", "f(e) >= 1/48", "f(y) >= 1/24"):
        assert status[name] == "pass"
    assert rec.values["f(e)"] == Fraction(5007981, 80000000)
    assert rec.values["f(y)"] == Fraction(22938011, 366838092)
    assert rec.values["sigmas"] == [14, 92, 286]
    # the smallness of ||e - y|| is not established at toy scale
    assert status["||e - y|| <= 8/m^2"] == "inconclusive"


def test_pd1_empty_family(toyS):
    rec = check_pd1_estimates([], [], [], FinVec.basis(1), 3, 4, toyS)
    assert rec.values["value"] == 0


def test_pd1_hypothesis_failure_is_inconclusive(toyS):
    hs = [Avg(2, toyS.m(2), (Leaf(1),)), Avg(2, toyS.m(2), (Leaf(2),))]
    rec = check_pd1_estimates(hs, [2, 2], [Fraction(1)], FinVec.basis(1), 3, 4, toyS)
    assert rec.status == "inconclusive"
    assert "hypothesis failure" in rec.claims[0].reason


def test_weight_coincidences(special_world):
    p, coder, seqs = special_world
    assert weight_coincidence_audit(seqs, p) == []


def test_probe_identity_and_diagonal(toyU):
    ident = {n: FinVec({n: 1}) for n in range(1, 50)}
    rec = operator_probe(ident, Fraction(1, 2), 3, toyU, SigmaCoder(toyU))
    assert rec.status == "pass" and rec.claims[0].name == "no violation to exploit"
    two = {n: FinVec({n: 2}) for n in range(1, 50)}
    rec = operator_probe(two, Fraction(1, 2), 3, toyU, SigmaCoder(toyU))
    assert rec.claims[0].values["max_dist"] == 0


def test_probe_shift(toyU):
    shift = {n: FinVec({n + 1: 1}) for n in range(1, 400)}
    assert select_functional(shift[5], 5, 1, []) == Leaf(6)
    rec = operator_probe(shift, 1, 3, toyU, SigmaCoder(toyU))
    first = rec.claims[0]
    assert first.status == "pass" and first.values["value"] == Fraction(1, 16)
    assert rec.values["sigmas"] == [8, 10, 12]


def test_alternating_average_shape(world):
    p, _, chi = world
    avg = alternating_average(chi)
    assert avg.supp
    assert alternating_average(chi, use_phi=False) != avg


def test_canonical_functional_on_phi(world):
    p, coder, chi = world
    g = build_special_functional(chi.phi, p)
    assert [q.lam for q in g.pairs] == [q.lam for q in phi_functional(chi).pairs]
    rng = random.Random(1)
    signs = [rng.choice((1, -1)) for _ in g.pairs]
    h = phi_functional(chi, B=[0], lambda_signs=signs)
    assert verify_tree(h, p, coder).ok
