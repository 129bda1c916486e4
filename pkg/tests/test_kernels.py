"""Green functions, Martin kernels and boundary diagnostics."""

from fractions import Fraction

import pytest

from stopwalk.errors import ContractError, NotReachedError, UndecidablePrefixError
from stopwalk.groups import FreeSemigroup, InfiniteWord, IntegerLattice
from stopwalk.kernels import (
    BoundarySequence,
    PowerTable,
    classify_free_sequence,
    green_free,
    green_truncated,
    kernel_closed_form_audit,
    kernel_sequence,
    martin_free,
    martin_truncated,
    relative_spread,
    step_weight_product,
)
from stopwalk.measures import Measure
from stopwalk.stopping import constant_time, first_hit_capped, transform_bounded

F2 = FreeSemigroup(("a", "b"))
F3 = FreeSemigroup(("a", "b", "c"))
Z3 = IntegerLattice(3)
MU = Measure(F2, {("a",): "1/2", ("b",): "1/2"})
AB = InfiniteWord((), ("a", "b"))


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


class TestClosedForms:
    def test_green_at_identity(self):
        assert green_free(MU, (), ()).value == 1

    def test_green_two_letters(self):
        assert green_free(MU, (), ("a", "b")).value == Fraction(1, 4)

    def test_green_off_prefix(self):
        assert green_free(MU, ("b",), ("a", "b")).value == 0

    def test_martin_normalization(self):
        assert martin_free(MU, (), AB).value == 1
        assert martin_free(MU, (), ("b", "b")).value == 1

    def test_martin_on_geodesic(self):
        assert martin_free(MU, ("a", "b"), AB).value == 4

    def test_martin_off_geodesic(self):
        assert martin_free(MU, ("b",), InfiniteWord((), ("a",))).value == 0

    def test_requires_generator_support(self):
        not_gen = Measure(F2, {("a", "b"): 1})
        with pytest.raises(ContractError):
            green_free(not_gen, (), ("a",))
        with pytest.raises(ContractError):
            green_free(Measure(Z3, {(0, 0, 0): 1}), (0, 0, 0), (0, 0, 0))

    def test_undecidable_prefix_demands_more_data(self):
        short = InfiniteWord(("a",), ())
        with pytest.raises(UndecidablePrefixError):
            martin_free(MU, ("a", "b"), short)

    def test_unreachable_probe_rejected(self):
        only_a = Measure(F2, {("a",): 1})
        with pytest.raises(ContractError):
            martin_free(only_a, ("b",), InfiniteWord((), ("b",)))


class TestTruncated:
    def test_point_series_starts_at_one(self):
        rep = green_truncated(MU, ("a",), ("a",), 0)
        assert rep.value == 1

    def test_matches_closed_form_beyond_word_length(self):
        rep = green_truncated(MU, ("a",), ("a", "b", "b"), 6)
        assert rep.value == green_free(MU, ("a",), ("a", "b", "b")).value
        assert rep.mode == "exact"

    def test_monotone_in_horizon(self):
        mu = z3_intro_measure()
        target = Z3.inverse(Z3.basis(1))
        values = [
            green_truncated(mu, Z3.identity(), target, h).value for h in range(0, 24, 4)
        ]
        assert values == sorted(values)
        assert values[-1] > values[0] > 0 or values[0] == 0

    def test_martin_at_identity_is_one(self):
        mu = z3_intro_measure()
        y = (0, -3, 0)
        assert martin_truncated(mu, Z3.identity(), y, 20).value == 1

    def test_not_reached_error(self):
        mu = z3_intro_measure()
        with pytest.raises(NotReachedError):
            martin_truncated(mu, Z3.identity(), (0, -9, 0), 3)

    def test_martin_matches_closed_form_on_semigroup(self):
        mu = Measure(F2, {("a",): "1/3", ("b",): "2/3"})
        for x in ((), ("a",), ("a", "b")):
            for y in (("a", "b"), ("a", "b", "b"), ("b", "a")):
                free = martin_free(mu, x, y).value
                trunc = martin_truncated(mu, x, y, 8)
                assert trunc.value == free
                assert trunc.mode == "exact"

    def test_transience_guard(self):
        # all Green values on a free semigroup are at most 1
        words = [w for w in _words(4)]
        for x in words[:8]:
            for y in words:
                assert green_free(MU, x, y).value <= 1

    def test_shared_table_depth_check(self):
        table = PowerTable(MU, 2)
        with pytest.raises(ContractError):
            green_truncated(MU, (), ("a",), 5, table)


def _words(max_len, gens=("a", "b")):
    out = [()]
    level = [()]
    for _ in range(max_len):
        level = [w + (g,) for w in level for g in gens]
        out.extend(level)
    return out


class TestPowerTable:
    def test_pruned_matches_unpruned_at_targets(self):
        mu = z3_intro_measure()
        targets = {(0, -2, 0), (1, 1, 0)}
        full = PowerTable(mu, 8)
        pruned = PowerTable(mu, 8, targets=targets)
        for z in targets:
            for k in range(9):
                assert pruned.power_value(k, z) == full.power_value(k, z)

    def test_semigroup_prefix_pruning_is_exact_at_targets(self):
        mt = transform_bounded(MU, first_hit_capped([("a",)], 3))
        target = ("b", "a", "b", "b", "a")
        full = PowerTable(mt, 5)
        pruned = PowerTable(mt, 5, targets={target})
        for k in range(6):
            assert pruned.power_value(k, target) == full.power_value(k, target)

    def test_denominator_scaling(self):
        table = PowerTable(MU, 3)
        assert table.power_value(3, ("a", "b", "a")) == Fraction(1, 8)


class TestAudit:
    @pytest.mark.parametrize(
        "mu,max_len",
        [
            (MU, 5),
            (Measure(F2, {("a",): "1/3", ("b",): "2/3"}), 5),
            (Measure(F3, {("a",): "1/2", ("b",): "1/4", ("c",): "1/4"}), 4),
        ],
    )
    def test_truncated_equals_closed_form_everywhere(self, mu, max_len):
        audit = kernel_closed_form_audit(mu, max_len)
        assert audit.clean
        n_words = sum(len(mu) ** k for k in range(max_len + 1))
        assert audit.pairs_checked == n_words**2


class TestTwoValuedKernels:
    def test_stopped_measure_kernels(self):
        rule = first_hit_capped([("a",)], 3)
        mt = transform_bounded(MU, rule)
        supp = mt.support()
        targets = sorted({F2.compose(u, v) for u in supp for v in supp})
        for y in targets:
            horizon = len(y)
            for x in _words(3):
                if len(x) > len(y):
                    continue
                try:
                    value = martin_truncated(mt, x, y, horizon).value
                except NotReachedError:
                    continue
                wx = step_weight_product(MU, x)
                assert value in (Fraction(0), 1 / wx)


class TestKernelSequence:
    def test_constant_sequence_trivially_stabilizes(self):
        seq = BoundarySequence((("a",),) * 4, "constant")
        table = kernel_sequence(MU, [()], seq, horizon=3)
        assert table.stabilized == [True]
        assert table.values[0] == [1, 1, 1, 1]

    def test_rows_eventually_constant_along_geodesic(self):
        seq = BoundarySequence(tuple(AB.letters(n) for n in range(1, 8)), "prefixes")
        table = kernel_sequence(MU, [(), ("a",), ("a", "b")], seq, horizon=8)
        for i, row in enumerate(table.values):
            assert row[-1] == row[-2] == row[-3]
            assert table.stabilized[i]
        assert table.values[2][-1] == 4

    def test_relative_spread(self):
        assert relative_spread([1.0, 1.0, 1.0]) == 0
        assert relative_spread([0.0, 0.0]) == 0
        assert abs(relative_spread([1.0, 0.9]) - 0.1) < 1e-12


class TestClassification:
    def test_eventually_constant(self):
        word = ("a", "b")
        c = classify_free_sequence([word] * 6, {"a", "b"})
        assert c.kind == "eventually-constant" and c.evidence == word

    def test_increasing_common_prefix(self):
        seq = [AB.letters(n) for n in range(1, 9)]
        c = classify_free_sequence(seq, {"a", "b"})
        assert c.kind == "increasing-common-prefix"
        assert c.evidence == AB.letters(8)

    def test_escaping_generators_on_infinite_rank(self):
        spec = FreeSemigroup(None)
        seq = [(f"g{i}",) for i in range(8)]
        c = classify_free_sequence(seq, {"g0", "g1"}, spec)
        assert c.kind == "finite-common-prefix-escaping"
        assert c.evidence == ()

    def test_escaping_not_claimed_on_finite_rank(self):
        c = classify_free_sequence([("a",), ("b",)] * 3, {"a"}, F2)
        assert c.kind == "inconclusive"

    def test_empty_sequence_rejected(self):
        with pytest.raises(ContractError):
            classify_free_sequence([], set())
