"""Sampling validator: determinism, abort accounting, comparison bands."""

from fractions import Fraction

import pytest

from stopwalk.errors import ContractError
from stopwalk.groups import FreeSemigroup, IntegerLattice
from stopwalk.measures import Measure, MeasureDeficit, convolution_power
from stopwalk.montecarlo import (
    EmpiricalMeasure,
    PositionHit,
    SampleConfig,
    compare,
    estimate_transform,
    sample_walk,
)
from stopwalk.stopping import (
    HittingRule,
    constant_time,
    first_hit_capped,
    transform_bounded,
    transform_hitting,
)

F2 = FreeSemigroup(("a", "b"))
Z3 = IntegerLattice(3)
MU = Measure(F2, {("a",): "1/2", ("b",): "1/2"})


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


class TestSampleWalk:
    def test_zero_length(self):
        assert sample_walk(MU, 0, 1) == [()]

    def test_deterministic_point_mass(self):
        mu = Measure.point(F2, ("a",))
        assert sample_walk(mu, 3, 99) == [(), ("a",), ("a", "a"), ("a", "a", "a")]

    def test_golden_seed_regression(self):
        # pinned after the first run; guards the RNG scheme and inverse CDF
        walk = sample_walk(MU, 8, 12345)
        assert walk[-1] == ("b", "a", "b", "a", "a", "b", "b", "b")

    def test_same_seed_same_walk(self):
        assert sample_walk(MU, 50, 7) == sample_walk(MU, 50, 7)

    def test_probability_required(self):
        with pytest.raises(ContractError):
            sample_walk(Measure(F2, {("a",): "1/3"}), 5, 1)


class TestEstimateTransform:
    def test_determinism(self):
        cfg = SampleConfig(seed=4, num_samples=2000, step_cap=50)
        rule = first_hit_capped([("a",)], 3)
        e1 = estimate_transform(MU, rule, cfg)
        e2 = estimate_transform(MU, rule, cfg)
        assert e1.counts == e2.counts and e1.aborted == e2.aborted

    def test_abort_accounting_invariant(self):
        cfg = SampleConfig(seed=21, num_samples=3000, step_cap=4)
        emp = estimate_transform(MU, HittingRule.of_set([("a",)], 10), cfg)
        assert sum(emp.counts.values()) + emp.aborted == cfg.num_samples
        assert emp.aborted > 0  # cap 4 cuts off the geometric tail

    def test_bounded_rule_samples_match_support(self):
        cfg = SampleConfig(seed=13, num_samples=4000, step_cap=10)
        rule = first_hit_capped([("a",)], 3)
        emp = estimate_transform(MU, rule, cfg)
        exact = transform_bounded(MU, rule)
        assert set(emp.counts) <= set(exact.raw())
        assert emp.aborted == 0

    def test_all_aborted_raises(self):
        cfg = SampleConfig(seed=2, num_samples=50, step_cap=3)
        never = HittingRule.of_set([("a", "a")], 5)  # increments are single letters
        with pytest.raises(ContractError):
            estimate_transform(MU, never, cfg)

    def test_counts_invariant_enforced(self):
        with pytest.raises(ContractError):
            EmpiricalMeasure(F2, {("a",): 3}, aborted=1, num_samples=3)


class TestPositionHit:
    def test_stopped_positions_on_subgroup(self):
        cfg = SampleConfig(seed=6, num_samples=3000, step_cap=2000)
        emp = estimate_transform(z3_intro_measure(), PositionHit((0, 2)), cfg)
        assert all(el[0] == 0 and el[2] == 0 for el in emp.counts)
        assert sum(emp.counts.values()) + emp.aborted == cfg.num_samples

    def test_determinism(self):
        cfg = SampleConfig(seed=17, num_samples=500, step_cap=500)
        e1 = estimate_transform(z3_intro_measure(), PositionHit((0, 2)), cfg)
        e2 = estimate_transform(z3_intro_measure(), PositionHit((0, 2)), cfg)
        assert e1.counts == e2.counts and e1.aborted == e2.aborted

    def test_needs_lattice(self):
        with pytest.raises(ContractError):
            estimate_transform(MU, PositionHit((0,)), SampleConfig(1, 10, 10))

    def test_coordinates_validated(self):
        with pytest.raises(ContractError):
            estimate_transform(
                z3_intro_measure(), PositionHit((5,)), SampleConfig(1, 10, 10)
            )


class TestCompare:
    def test_empirical_against_itself_is_zero(self):
        cfg = SampleConfig(seed=31, num_samples=1000, step_cap=5)
        emp = estimate_transform(MU, constant_time(2), cfg)
        report = compare(emp, emp.to_measure())
        assert report.tv == 0 and report.verdict

    def test_two_step_rule_within_band(self):
        cfg = SampleConfig(seed=8, num_samples=100_000, step_cap=5)
        emp = estimate_transform(MU, constant_time(2), cfg)
        report = compare(emp, convolution_power(MU, 2))
        assert report.verdict
        assert float(report.tv) < report.band

    def test_wrong_oracle_fails_loudly(self):
        cfg = SampleConfig(seed=8, num_samples=20_000, step_cap=5)
        emp = estimate_transform(MU, constant_time(2), cfg)
        report = compare(emp, MU)  # length-1 words vs length-2 words
        assert not report.verdict
        assert float(report.tv) > 0.9

    def test_hitting_truncation_band_includes_missing_mass(self):
        cfg = SampleConfig(seed=14, num_samples=30_000, step_cap=200)
        rule = HittingRule.of_set([("a",)], 6)
        emp = estimate_transform(MU, rule, cfg)
        exact = transform_hitting(MU, rule)
        report = compare(emp, exact)
        assert report.missing_mass == Fraction(1, 64)
        assert report.verdict

    def test_band_compliance_across_seeds(self):
        # the deviation band must hold in at least 99 of 100 seeded runs
        exact = convolution_power(MU, 2)
        passed = 0
        for seed in range(100):
            cfg = SampleConfig(seed=seed, num_samples=2000, step_cap=5)
            emp = estimate_transform(MU, constant_time(2), cfg)
            if compare(emp, exact).verdict:
                passed += 1
        assert passed >= 99
