"""Element representations: composition, reduction, prefixes, homomorphisms."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stopwalk.errors import ContractError, UndecidablePrefixError
from stopwalk.groups import (
    FreeGroup,
    FreeSemigroup,
    Homomorphism,
    InfiniteWord,
    IntegerLattice,
    evaluate_hom,
    group_spec_from_json,
    prefix_leq,
    quotient,
    reduce_group_word,
    word_length,
)

Z3 = IntegerLattice(3)
F2 = FreeSemigroup(("a", "b"))
FG2 = FreeGroup(("a", "b"))


def lattice_points(dim=3):
    return st.tuples(*([st.integers(-9, 9)] * dim))


def semigroup_words():
    return st.lists(st.sampled_from(["a", "b"]), max_size=8).map(tuple)


def group_words():
    letters = st.tuples(st.sampled_from(["a", "b"]), st.sampled_from([1, -1]))
    return st.lists(letters, max_size=8).map(lambda ls: reduce_group_word(ls))


class TestCompose:
    def test_identity_cases(self):
        g = (1, -2, 0)
        assert Z3.compose(Z3.identity(), g) == g
        assert Z3.compose(g, Z3.identity()) == g
        assert F2.compose((), ("b",)) == ("b",)

    def test_lattice_addition(self):
        assert Z3.compose((1, 0, 0), (0, -2, 0)) == (1, -2, 0)

    def test_semigroup_concatenation(self):
        w = F2.compose(("b",), ("b", "a"))
        assert w == ("b", "b", "a")
        assert word_length(w) == 3

    def test_mismatched_spec_raises(self):
        with pytest.raises(ContractError):
            Z3.compose((1, 0), (0, 0, 0))
        with pytest.raises(ContractError):
            F2.compose(("c",), ("a",))

    @settings(max_examples=60, deadline=None)
    @given(lattice_points(), lattice_points(), lattice_points())
    def test_lattice_associative(self, a, b, c):
        assert Z3.compose(Z3.compose(a, b), c) == Z3.compose(a, Z3.compose(b, c))

    @settings(max_examples=60, deadline=None)
    @given(group_words(), group_words(), group_words())
    def test_free_group_associative(self, a, b, c):
        assert FG2.compose(FG2.compose(a, b), c) == FG2.compose(a, FG2.compose(b, c))

    @settings(max_examples=40, deadline=None)
    @given(group_words())
    def test_free_group_identity_and_inverse(self, a):
        assert FG2.compose(a, FG2.identity()) == a
        assert FG2.compose(a, FG2.inverse(a)) == FG2.identity()


class TestReduction:
    def test_adjacent_cancellation(self):
        word = (("a", 1), ("b", 1), ("b", -1), ("a", -1), ("a", 1))
        assert reduce_group_word(word) == (("a", 1),)

    @settings(max_examples=60, deadline=None)
    @given(group_words())
    def test_idempotent_on_reduced(self, w):
        assert reduce_group_word(w) == w

    def test_unreduced_rejected_by_validate(self):
        with pytest.raises(ContractError):
            FG2.validate((("a", 1), ("a", -1)))


class TestPrefix:
    def test_direct_prefix(self):
        assert prefix_leq(("b",), ("b", "a"))
        assert quotient(("b",), ("b", "a")) == ("a",)

    def test_mismatch(self):
        assert not prefix_leq(("a",), ("b", "a"))
        assert quotient(("a",), ("b", "a")) is None

    def test_empty_prefix(self):
        assert prefix_leq((), ("b", "a", "a"))

    @settings(max_examples=80, deadline=None)
    @given(semigroup_words(), semigroup_words())
    def test_matches_naive_letter_scan(self, x, y):
        naive = len(x) <= len(y) and all(x[i] == y[i] for i in range(len(x)))
        assert prefix_leq(x, y) == naive
        if naive:
            assert x + quotient(x, y) == y


class TestOrderAndHash:
    def test_elements_are_hashable_and_ordered(self):
        pts = [(1, 0, 0), (0, 1, 0), (0, -1, 0)]
        assert sorted(pts) == [(0, -1, 0), (0, 1, 0), (1, 0, 0)]
        assert len({F2.compose(("a",), ("b",)), ("a", "b")}) == 1


class TestTextForms:
    @settings(max_examples=60, deadline=None)
    @given(lattice_points())
    def test_lattice_round_trip(self, p):
        assert Z3.parse(Z3.format(p)) == p

    @settings(max_examples=60, deadline=None)
    @given(semigroup_words())
    def test_word_round_trip(self, w):
        assert F2.parse(F2.format(w)) == w

    @settings(max_examples=60, deadline=None)
    @given(group_words())
    def test_group_word_round_trip(self, w):
        assert FG2.parse(FG2.format(w)) == w

    def test_identity_text(self):
        assert F2.format(()) == "e"
        assert FG2.parse("e") == ()
        assert FG2.format(FG2.parse("a·b^-1")) == "a·b^-1"

    def test_spec_json_round_trip(self):
        for spec in (Z3, F2, FG2, FreeSemigroup(None)):
            assert group_spec_from_json(spec.to_json()) == spec


class TestInfiniteRank:
    def test_indexed_labels(self):
        spec = FreeSemigroup(None)
        assert spec.infinite_rank
        assert spec.generator(7) == ("g7",)
        assert spec.has_label("g123")
        assert not spec.has_label("x1")
        spec.validate(("g0", "g5"))

    def test_distinct_labels_required(self):
        with pytest.raises(ContractError):
            FreeSemigroup(("a", "a"))


class TestInfiniteWord:
    def test_periodic_letters(self):
        g = InfiniteWord((), ("a", "b"))
        assert g.letters(5) == ("a", "b", "a", "b", "a")
        assert g.starts_with(("a", "b", "a"))
        assert not g.starts_with(("b",))

    def test_prefix_only_raises_beyond_data(self):
        g = InfiniteWord(("a", "b"), ())
        assert g.starts_with(("a",))
        with pytest.raises(UndecidablePrefixError):
            g.letter(2)


class TestHomomorphism:
    Z1 = IntegerLattice(1)
    phi = Homomorphism(F2, Z1, {"a": (1,), "b": (-1,)})

    def test_empty_word_maps_to_identity(self):
        assert self.phi(()) == (0,)

    def test_signed_sum(self):
        assert evaluate_hom(self.phi, ("a", "b", "b")) == (-1,)

    def test_non_injective(self):
        assert self.phi(("a", "b")) == self.phi(("b", "a")) == (0,)

    def test_unassigned_letter(self):
        partial = Homomorphism(F2, self.Z1, {"a": (1,)})
        with pytest.raises(ContractError):
            partial(("a", "b"))

    @settings(max_examples=60, deadline=None)
    @given(semigroup_words(), semigroup_words())
    def test_homomorphism_law(self, w1, w2):
        lhs = self.phi(w1 + w2)
        rhs = self.Z1.compose(self.phi(w1), self.phi(w2))
        assert lhs == rhs
