"""Hypothesis strategies shared by the test modules."""
from fractions import Fraction

from hypothesis import strategies as st

from xius.params import FinVec

small_fractions = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 6))
nonzero_fractions = small_fractions.filter(bool)


@st.composite
def vectors(draw, max_coord=9, max_support=6, min_support=1):
    coords = draw(st.lists(st.integers(1, max_coord), min_size=min_support, max_size=max_support, unique=True))
    return FinVec({c: draw(nonzero_fractions) for c in coords})


def sign_patterns(x):
    return st.lists(st.sampled_from((1, -1, 0)), min_size=len(x), max_size=len(x)).map(
        lambda pat: FinVec({c: v * s for (c, v), s in zip(sorted(x.items()), pat)}))
