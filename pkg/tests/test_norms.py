from fractions import Fraction

import pytest
from hypothesis import given

from xius.kset import verify_tree
from xius.norms import (ResourceLimit, brute_force_norm, check_basis_average_bounds, lp_upper_bound,
                        norm_tildeK, norm_W, norm_W_truncated, verify_w_tree)
from xius.params import FinVec
from xius.trees import Avg, Leaf, evaluate

from strategies import sign_patterns, vectors


def ones(*coords, value=1):
    return FinVec({c: value for c in coords})


def test_norm_W_basis_vector(toyA):
    cert = norm_W(ones(5), toyA)
    assert cert.value == 1 and cert.witness == Leaf(5)


def test_norm_W_flat_four(toyA):
    cert = norm_W(ones(1, 2, 3, 4), toyA)
    assert cert.value == 2
    assert evaluate(cert.witness, ones(1, 2, 3, 4)) == 2
    assert not verify_w_tree(cert.witness, toyA)


def test_norm_W_homogeneous(toyA):
    assert norm_W(ones(1, 2, 3, 4, value=Fraction(1, 4)), toyA).value == Fraction(1, 2)


def test_truncated_norms(toyA):
    assert norm_W_truncated(ones(1, 2, 3, 4), toyA, 1).value == 2
    assert norm_W_truncated(FinVec({1: 3, 2: -5}), toyA, 0).value == 5


def test_norm_tildeK_examples(toyA):
    assert norm_tildeK(ones(7), toyA) == 1
    assert norm_tildeK(ones(1, 2, 3, 4), toyA) == 1
    assert norm_tildeK(ones(*range(1, 9)), toyA) == 2


def test_lp_upper_bound_examples(toyA):
    assert lp_upper_bound(ones(3), toyA, 2) >= 1
    assert lp_upper_bound(ones(*range(1, 33)), toyA, 2) >= 8


def test_brute_force_small_cases(toyA):
    assert brute_force_norm(ones(1), toyA) == 1
    assert brute_force_norm(ones(1, 2), toyA) == 1


def test_resource_limit_brackets_value(toyA):
    x = ones(*range(1, 41))
    with pytest.raises(ResourceLimit) as info:
        norm_W(x, toyA, ceiling=36)
    lo, hi = info.value.bracket
    assert lo <= hi and lo >= 1


def test_basis_average_bounds(toyA):
    avg = ones(*range(1, 9), value=Fraction(1, 8))       # n_2 = 8
    flat = Avg(2, 4, tuple(Leaf(c) for c in range(1, 9)))
    assert verify_tree(flat, toyA).ok
    reports = check_basis_average_bounds(flat, 2, avg, toyA)
    assert all(r.status == "pass" for r in reports)
    assert evaluate(flat, avg) == Fraction(1, 4)
    leaf = check_basis_average_bounds(Leaf(1), 2, avg, toyA)
    assert leaf[0].status == "pass" and leaf[0].values["value"] == Fraction(1, 8)


@given(vectors())
def test_dp_matches_brute_force(x):
    from xius.params import preset
    p = preset("toyA")
    assert norm_W(x, p).value == brute_force_norm(x, p)


@given(vectors(max_support=5).flatmap(lambda x: sign_patterns(x).map(lambda y: (x, y))))
def test_auxiliary_norms_unconditional(pair):
    from xius.params import preset
    p = preset("toyA")
    x, y = pair
    if y.is_zero:
        return
    assert norm_W(y, p).value <= norm_W(x, p).value
    assert norm_tildeK(y, p) <= norm_tildeK(x, p)


@given(vectors())
def test_norm_between_sup_and_l1(x):
    from xius.params import preset
    p = preset("toyA")
    v = norm_W(x, p).value
    assert x.norm_inf() <= v <= x.norm_l1()
    assert norm_W_truncated(x, p, 1).value <= v


@given(vectors())
def test_witness_attains_value(x):
    from xius.params import preset
    p = preset("toyA")
    cert = norm_W(x, p)
    assert evaluate(cert.witness, x) == cert.value
    assert not verify_w_tree(cert.witness, p)
