"""Measure algebra: convolution, mixing, restriction, serialization."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stopwalk.errors import ContractError, GroupMismatchError
from stopwalk.groups import FreeSemigroup, IntegerLattice
from stopwalk.measures import (
    Measure,
    MeasureDeficit,
    as_fraction,
    convolution_power,
    convolve,
    measure_from_json,
    measure_to_json,
    mix,
    restrict,
    total_variation,
)

F2 = FreeSemigroup(("a", "b"))
Z1 = IntegerLattice(1)
Z3 = IntegerLattice(3)

MU_F2 = Measure(F2, {("a",): "1/2", ("b",): "1/2"})


def z3_intro_measure() -> Measure:
    e1, e2, e3 = Z3.basis(0), Z3.basis(1), Z3.basis(2)
    return Measure(
        Z3,
        {
            e1: "1/8",
            Z3.inverse(e1): "1/8",
            e3: "1/8",
            Z3.inverse(e3): "1/8",
            e2: "1/8",
            Z3.inverse(e2): "3/8",
        },
    )


def small_measures(spec=F2):
    pool = [(), ("a",), ("b",), ("a", "b"), ("b", "b")]
    weights = st.fractions(
        min_value=0, max_value=1, max_denominator=6
    )
    return st.dictionaries(st.sampled_from(pool), weights, min_size=1, max_size=3).map(
        lambda atoms: Measure(spec, atoms)
    )


def probability_measures():
    def normalize(m):
        if m.total_mass == 0:
            return Measure(F2, {(): 1})
        return m.scale(1 / m.total_mass)

    return small_measures().map(normalize)


class TestConstruction:
    def test_zero_atoms_pruned(self):
        m = Measure(F2, {("a",): "1/2", ("b",): 0})
        assert ("b",) not in m and len(m) == 1

    def test_negative_weight_rejected(self):
        with pytest.raises(ContractError):
            Measure(F2, {("a",): Fraction(-1, 2)})

    def test_malformed_rational_rejected(self):
        with pytest.raises(ContractError):
            Measure(F2, {("a",): "1/0"})

    def test_support_in_canonical_order(self):
        m = Measure(F2, {("b",): "1/4", ("a",): "1/4", ("a", "b"): "1/2"})
        assert m.support() == (("a",), ("a", "b"), ("b",))


class TestConvolve:
    def test_unit(self):
        delta = Measure.point(F2, ())
        assert convolve(delta, MU_F2) == MU_F2
        assert convolve(MU_F2, delta) == MU_F2

    def test_two_steps_on_free_semigroup(self):
        m2 = convolve(MU_F2, MU_F2)
        assert m2 == Measure(
            F2,
            {
                ("a", "a"): "1/4",
                ("a", "b"): "1/4",
                ("b", "a"): "1/4",
                ("b", "b"): "1/4",
            },
        )

    def test_z3_return_weight_against_brute_force(self):
        mu = z3_intro_measure()
        # independent oracle: enumerate all 36 ordered step pairs
        brute = Fraction(0)
        for h, wh in mu.items():
            for k, wk in mu.items():
                if Z3.compose(h, k) == Z3.identity():
                    brute += wh * wk
        assert brute == Fraction(5, 32)
        assert convolve(mu, mu)(Z3.identity()) == brute

    def test_mismatched_specs(self):
        with pytest.raises(GroupMismatchError):
            convolve(MU_F2, Measure(Z1, {(0,): 1}))

    @settings(max_examples=40, deadline=None)
    @given(small_measures(), small_measures(), small_measures())
    def test_associative(self, m1, m2, m3):
        assert convolve(convolve(m1, m2), m3) == convolve(m1, convolve(m2, m3))

    @settings(max_examples=40, deadline=None)
    @given(small_measures(), small_measures())
    def test_mass_multiplies(self, m1, m2):
        assert convolve(m1, m2).total_mass == m1.total_mass * m2.total_mass


class TestConvolutionPower:
    def test_zeroth_power_is_point_mass(self):
        assert convolution_power(MU_F2, 0) == Measure.point(F2, ())

    def test_uniform_cube_word(self):
        assert convolution_power(MU_F2, 3)(("a", "b", "a")) == Fraction(1, 8)

    def test_deterministic_walk(self):
        mu = Measure.point(Z1, (1,))
        assert convolution_power(mu, 5) == Measure.point(Z1, (5,))

    def test_negative_power_rejected(self):
        with pytest.raises(ContractError):
            convolution_power(MU_F2, -1)

    @pytest.mark.parametrize("n", range(9))
    def test_generator_supported_powers_sit_on_level_sets(self, n):
        mu = Measure(F2, {("a",): "1/3", ("b",): "2/3"})
        power = convolution_power(mu, n)
        for word, weight in power.items():
            assert len(word) == n
            prod = Fraction(1)
            for lab in word:
                prod *= mu((lab,))
            assert weight == prod
        assert len(power) == 2**n


class TestMix:
    def test_single_component(self):
        assert mix([1], [MU_F2]) == MU_F2

    def test_equal_components_collapse(self):
        assert mix(["1/3", "2/3"], [MU_F2, MU_F2]) == MU_F2

    def test_intro_example_combination(self):
        tail = Measure(
            F2,
            {("b",) * n + ("a",): Fraction(1, 2 ** (n + 1)) for n in range(10)},
        )
        combined = mix(["1/2", "1/2"], [MU_F2, tail])
        assert combined(("a",)) == Fraction(1, 2)
        for n in range(1, 10):
            assert combined(("b",) * n + ("a",)) == Fraction(1, 2 ** (n + 2))

    def test_overweight_rejected(self):
        with pytest.raises(ContractError):
            mix(["2/3", "2/3"], [MU_F2, MU_F2])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ContractError):
            mix(["1/2"], [MU_F2, MU_F2])


class TestTotalVariation:
    def test_identical(self):
        assert total_variation(MU_F2, MU_F2) == 0

    def test_disjoint_points(self):
        da = Measure.point(F2, ("a",))
        db = Measure.point(F2, ("b",))
        assert total_variation(da, db) == 1

    def test_direct_sum(self):
        m1 = Measure(F2, {("a",): "1/2", ("b",): "1/2"})
        m2 = Measure(F2, {("a",): "3/4", ("b",): "1/4"})
        assert total_variation(m1, m2) == Fraction(1, 4)

    @settings(max_examples=40, deadline=None)
    @given(probability_measures(), probability_measures(), probability_measures())
    def test_metric_axioms(self, p, q, r):
        d_pq = total_variation(p, q)
        assert 0 <= d_pq <= 1
        assert d_pq == total_variation(q, p)
        assert (d_pq == 0) == (p == q)
        assert d_pq <= total_variation(p, r) + total_variation(r, q)


class TestRestrict:
    def test_whole_space(self):
        assert restrict(MU_F2, lambda el: True) == MU_F2

    def test_split_pieces(self):
        beta, alpha = MU_F2.split(lambda el: el == ("a",))
        assert beta == Measure(F2, {("a",): "1/2"})
        assert alpha == Measure(F2, {("b",): "1/2"})
        assert beta.total_mass + alpha.total_mass == MU_F2.total_mass

    def test_empty_set(self):
        zero = restrict(MU_F2, lambda el: False)
        assert zero.total_mass == 0 and len(zero) == 0


class TestDeficit:
    def test_negative_missing_rejected(self):
        with pytest.raises(ContractError):
            MeasureDeficit(MU_F2, Fraction(-1, 4))


class TestSerialization:
    def test_round_trip_examples(self):
        for m in (MU_F2, z3_intro_measure(), Measure(F2, {("a", "b"): "3/7"})):
            assert measure_from_json(measure_to_json(m)) == m

    @settings(max_examples=60, deadline=None)
    @given(small_measures())
    def test_round_trip_random(self, m):
        assert measure_from_json(measure_to_json(m)) == m

    def test_duplicate_atom_rejected(self):
        data = measure_to_json(MU_F2)
        data["atoms"].append(dict(data["atoms"][0]))
        with pytest.raises(ContractError):
            measure_from_json(data)

    def test_records_are_exact_strings(self):
        data = measure_to_json(Measure(F2, {("a",): Fraction(1, 3)}))
        assert data["atoms"][0]["weight"] == "1/3"
