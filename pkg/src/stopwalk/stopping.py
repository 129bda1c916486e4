"""Bounded randomized stopping rules and exact stopped-walk distributions.

A bounded randomized stopping rule is stored as a conditional stop
probability per increment prefix: ``stop_prob(h_1..h_k)`` is the chance of
stopping at time k given the prefix and given the walk has not stopped
yet.  Boundedness means the probability is exactly 1 on prefixes of the
declared bound length.  Deterministic rules are the 0/1 special case.

Unbounded first-hit times are never materialized in this form; they exist
only as HittingRule series truncations with certified missing mass.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

from .errors import BudgetExceededError, ContractError, DivergenceError
from .groups import Element
from .measures import (
    Measure,
    MeasureDeficit,
    Rational,
    as_fraction,
    convolution_power,
    convolve,
    mix,
)

DEFAULT_NODE_BUDGET = 10**7

Prefix = Tuple[Element, ...]


@dataclass(frozen=True)
class StoppingRule:
    """Bounded randomized stopping time in conditional-probability form."""

    bound: int
    stop_prob: Callable[[Prefix], Rational]
    description: str = ""

    def __post_init__(self):
        if self.bound < 1:
            raise ContractError(f"stopping bound must be >= 1, got {self.bound}")

    def prob_at(self, prefix: Prefix) -> Fraction:
        p = as_fraction(self.stop_prob(prefix))
        if not 0 <= p <= 1:
            raise ContractError(
                f"stop probability {p} out of [0,1] at prefix length {len(prefix)}"
            )
        if len(prefix) >= self.bound and p != 1:
            raise ContractError(
                f"rule declared bound {self.bound} but does not stop at "
                f"a prefix of that length"
            )
        return p


@dataclass(frozen=True)
class HittingRule:
    """First time an increment lands in the target set; series truncation only."""

    targets: Callable[[Element], bool]
    series_depth: int

    def __post_init__(self):
        if self.series_depth < 1:
            raise ContractError("series depth must be >= 1")

    @classmethod
    def of_set(cls, elements: Iterable[Element], series_depth: int) -> "HittingRule":
        table = frozenset(elements)
        return cls(targets=table.__contains__, series_depth=series_depth)


@dataclass(frozen=True)
class MixtureRule:
    """Stop according to rule i drawn once with probability weights[i]."""

    weights: Tuple[Fraction, ...]
    rules: Tuple[Union[StoppingRule, HittingRule], ...]

    def __post_init__(self):
        if len(self.weights) != len(self.rules):
            raise ContractError("mixture weights and rules must align")
        if any(w < 0 for w in self.weights):
            raise ContractError("mixture weights must be nonnegative")
        if sum(self.weights, Fraction(0)) > 1:
            raise ContractError("mixture weights must sum to at most 1")

    @classmethod
    def of(cls, parts: Sequence[Tuple[Rational, Union[StoppingRule, HittingRule]]]):
        return cls(
            weights=tuple(as_fraction(w) for w, _ in parts),
            rules=tuple(r for _, r in parts),
        )


# ---------------------------------------------------------------------------
# Rule constructors


def constant_time(k: int) -> StoppingRule:
    """Always stop at time k; the transform is the k-fold convolution."""
    if k < 1:
        raise ContractError("constant stopping time must be >= 1")
    return StoppingRule(
        bound=k,
        stop_prob=lambda prefix: 1 if len(prefix) == k else 0,
        description=f"constant {k}",
    )


def first_hit_capped(
    targets: Union[Callable[[Element], bool], Iterable[Element]], cap: int
) -> StoppingRule:
    """min(first increment in the target set, cap): always bounded."""
    if cap < 1:
        raise ContractError("cap must be >= 1")
    if not callable(targets):
        targets = frozenset(targets).__contains__
    inside = targets

    def stop(prefix: Prefix):
        return 1 if (inside(prefix[-1]) or len(prefix) >= cap) else 0

    return StoppingRule(bound=cap, stop_prob=stop, description=f"hit-or-{cap}")


def table_rule(
    bound: int,
    entries: Mapping[Prefix, Rational],
    default: Rational = 0,
    description: str = "",
) -> StoppingRule:
    """Finite lookup table of stop probabilities with a default value."""
    table = {p: as_fraction(v) for p, v in entries.items()}
    dflt = as_fraction(default)

    def stop(prefix: Prefix):
        if len(prefix) >= bound:
            return 1
        return table.get(prefix, dflt)

    return StoppingRule(bound=bound, stop_prob=stop, description=description or "table")


def random_rule(
    alphabet: Sequence[Element],
    bound: int,
    rng: random.Random,
    denominator: int = 8,
) -> StoppingRule:
    """Seeded random table rule over the given increment alphabet.

    Every prefix shorter than the bound gets an independent rational stop
    probability k/denominator; the bound level is forced to 1.
    """
    entries: Dict[Prefix, Fraction] = {}
    level: list = [()]
    for _ in range(1, bound):
        level = [p + (a,) for p in level for a in alphabet]
        for p in level:
            entries[p] = Fraction(rng.randint(0, denominator), denominator)
    return table_rule(bound, entries, default=0, description=f"random(M={bound})")


def compose_rules(first: StoppingRule, second: StoppingRule) -> StoppingRule:
    """Run ``first``, then ``second`` on the shifted increments.

    The conditional stop probability of the composite at a prefix of
    length k is recovered by dynamic programming over the split point of
    the two stages; the composite transform factors as the convolution of
    the two component transforms.
    """

    def stop(prefix: Prefix) -> Fraction:
        k = len(prefix)
        # stage-one stop-time distribution along this prefix
        alive = Fraction(1)
        first_at: Dict[int, Fraction] = {}
        for j in range(1, min(k, first.bound) + 1):
            p = first.prob_at(prefix[:j])
            first_at[j] = alive * p
            alive *= 1 - p
            if alive == 0:
                break

        def second_mass(j: int, m: int) -> Fraction:
            # P(second stage stops exactly m steps after the split at j)
            if m < 1 or m > second.bound:
                return Fraction(0)
            alive2 = Fraction(1)
            out = Fraction(0)
            shifted = prefix[j:]
            for i in range(1, m + 1):
                p2 = second.prob_at(shifted[:i])
                if i == m:
                    out = alive2 * p2
                alive2 *= 1 - p2
                if alive2 == 0 and i < m:
                    return Fraction(0)
            return out

        stopped_before = Fraction(0)
        for kk in range(2, k):
            stopped_before += sum(
                (
                    first_at.get(j, Fraction(0)) * second_mass(j, kk - j)
                    for j in range(1, kk)
                ),
                Fraction(0),
            )
        at_k = sum(
            (first_at.get(j, Fraction(0)) * second_mass(j, k - j) for j in range(1, k)),
            Fraction(0),
        )
        remaining = 1 - stopped_before
        if remaining == 0:
            # unreachable along a positive-probability path
            return Fraction(1)
        return at_k / remaining

    return StoppingRule(
        bound=first.bound + second.bound,
        stop_prob=stop,
        description=f"({first.description});({second.description})",
    )


# ---------------------------------------------------------------------------
# Exact transforms


def transform_bounded(
    mu: Measure, rule: StoppingRule, node_budget: int = DEFAULT_NODE_BUDGET
) -> Measure:
    """Exact stopped-position distribution of a bounded rule.

    Enumerates every increment prefix up to the bound depth-first,
    accumulating (product of step weights) * (stop-decision weight) at the
    stopped position.  The result is a probability measure with mass
    exactly 1; anything else indicates a broken rule and raises.
    """
    mu.require_probability()
    spec = mu.spec
    support = mu.items()
    out: Dict[Element, Fraction] = {}
    nodes = 0

    stack = [(spec.identity(), (), Fraction(1))]
    while stack:
        pos, prefix, weight = stack.pop()
        for h, wh in support:
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(
                    f"enumeration exceeded {node_budget} nodes",
                    depth_reached=len(prefix) + 1,
                    nodes=nodes,
                )
            nxt = spec.compose(pos, h)
            npref = prefix + (h,)
            w = weight * wh
            p = rule.prob_at(npref)
            if p > 0:
                out[nxt] = out.get(nxt, Fraction(0)) + w * p
            if p < 1:
                stack.append((nxt, npref, w * (1 - p)))

    result = Measure(spec, out)
    if result.total_mass != 1:
        raise ContractError(
            "stopped distribution has mass "
            f"{result.total_mass}; the rule is not a bounded stopping time"
        )
    return result


def transform_hitting(mu: Measure, rule: HittingRule) -> MeasureDeficit:
    """Truncated series for the first-increment-hit transform.

    With beta the restriction of mu to the target set and alpha its
    complement, the stopped distribution is sum_i alpha^{*i} * beta; the
    N-term partial sum misses exactly (1 - mu(B))^N of the mass.
    """
    mu.require_probability()
    beta, alpha = mu.split(rule.targets)
    if beta.total_mass == 0:
        raise DivergenceError(
            "target set carries no mass: the hitting time is almost surely infinite"
        )
    terms: Dict[Element, Fraction] = {}
    alpha_pow = Measure.point(mu.spec, mu.spec.identity())
    for _ in range(rule.series_depth):
        part = convolve(alpha_pow, beta)
        for el, w in part.raw().items():
            terms[el] = terms.get(el, Fraction(0)) + w
        alpha_pow = convolve(alpha_pow, alpha)
    missing = (1 - beta.total_mass) ** rule.series_depth
    return MeasureDeficit(Measure(mu.spec, terms), missing)


def iterate_transform(
    mu: Measure, rule: StoppingRule, n: int, node_budget: int = DEFAULT_NODE_BUDGET
) -> Measure:
    """Distribution of the n-th iterated stop, by direct path enumeration.

    After each stop the rule restarts on the shifted increment sequence,
    so the enumeration walks prefixes of length up to n * bound.  The
    result must agree exactly with the n-fold convolution of the one-stop
    transform; that identity is this module's central cross-check and is
    enforced by the test suite, not assumed here.
    """
    mu.require_probability()
    if n < 1:
        raise ContractError("iteration count must be >= 1")
    spec = mu.spec
    support = mu.items()
    out: Dict[Element, Fraction] = {}
    nodes = 0

    # state: (position, stops done, increments since the last stop, weight)
    stack = [(spec.identity(), 0, (), Fraction(1))]
    while stack:
        pos, done, segment, weight = stack.pop()
        for h, wh in support:
            nodes += 1
            if nodes > node_budget:
                raise BudgetExceededError(
                    f"enumeration exceeded {node_budget} nodes",
                    depth_reached=done * rule.bound + len(segment) + 1,
                    nodes=nodes,
                )
            nxt = spec.compose(pos, h)
            nseg = segment + (h,)
            w = weight * wh
            p = rule.prob_at(nseg)
            if p > 0:
                stop_w = w * p
                if done + 1 == n:
                    out[nxt] = out.get(nxt, Fraction(0)) + stop_w
                else:
                    stack.append((nxt, done + 1, (), stop_w))
            if p < 1:
                stack.append((nxt, done, nseg, w * (1 - p)))

    result = Measure(spec, out)
    if result.total_mass != 1:
        raise ContractError(
            f"iterated stop distribution has mass {result.total_mass}"
        )
    return result


def transform_mixture(mu: Measure, mixture: MixtureRule) -> MeasureDeficit:
    """Weighted combination of component transforms with combined deficit.

    Sub-convex weight vectors are allowed for truncated infinite mixtures;
    the shortfall is counted into the missing mass.
    """
    parts = []
    missing = 1 - sum(mixture.weights, Fraction(0))
    for w, rule in zip(mixture.weights, mixture.rules):
        if isinstance(rule, StoppingRule):
            parts.append(transform_bounded(mu, rule))
        elif isinstance(rule, HittingRule):
            md = transform_hitting(mu, rule)
            parts.append(md.measure)
            missing += w * md.missing_mass
        else:
            raise ContractError(f"cannot transform by {type(rule).__name__}")
    return MeasureDeficit(mix(list(mixture.weights), parts), missing)


def iterated_constant_mixture(
    mu: Measure, weights: Sequence[Rational]
) -> MeasureDeficit:
    """Mixture over the constant rules 1, 2, ..., len(weights): a convex
    combination of convolution powers."""
    rules = [constant_time(i) for i in range(1, len(weights) + 1)]
    return transform_mixture(
        mu, MixtureRule.of(list(zip(map(as_fraction, weights), rules)))
    )


def make_mu_tau_t(mu: Measure, rule: StoppingRule, t: Rational) -> Measure:
    """The generating convex combination t*mu + (1-t)*mu_tau."""
    tt = as_fraction(t)
    if not 0 < tt <= 1:
        raise ContractError(f"t must lie in (0, 1], got {tt}")
    if tt == 1:
        return mu.require_probability()
    return mix([tt, 1 - tt], [mu, transform_bounded(mu, rule)])
