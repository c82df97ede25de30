"""Hand-built instances shared by several test modules."""
from fractions import Fraction

from xius.kset import assemble_special_sequence, flat_average, flat_functional
from xius.params import FinVec
from xius.trees import Avg, Leaf


def hand_sequence(p, coder):
    """Length-4 sequence on toyU laid out on coordinates 1..23."""
    first = coder.opening_index(p.n(3))
    x1 = flat_average(range(1, 1 + p.n(first)), p.n(first))
    f1 = flat_functional(list(x1.supp), first, p).vector
    s1 = coder.assign([(x1, f1)])
    x2 = FinVec({8: Fraction(1, 2), 9: Fraction(1, 2)})
    t2 = Avg(s1, p.m(s1), (Leaf(8), Leaf(9), Leaf(10)))
    s2 = coder.assign([(x1, f1), (x2, t2.vector)])
    x3 = flat_average(range(11, 11 + p.n(s2)), p.n(s2))
    f3 = flat_functional(list(x3.supp), s2, p).vector
    s3 = coder.assign([(x1, f1), (x2, t2.vector), (x3, f3)])
    a = x3.max_supp() + 1
    x4 = FinVec({a: Fraction(1, 3), a + 1: Fraction(1, 3)})
    t4 = Avg(s3, p.m(s3), (Leaf(a), Leaf(a + 1, -1)))
    return assemble_special_sequence(p, coder, 3, [x1, x2, x3, x4], [f1, t2.vector, f3, t4.vector], [t2, t4])
