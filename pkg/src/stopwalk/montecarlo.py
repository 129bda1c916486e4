"""Sampling validator for transforms that cannot be enumerated exactly.

Increments are drawn by inverse CDF over the canonically ordered support
using integer thresholds over the common weight denominator, so sampling
probabilities are exact, not float approximations.  All randomness comes
from PCG64 streams:

  * per-trajectory paths derive an independent child stream from
    ``SeedSequence([seed, trajectory_index])``, which makes results
    independent of how trajectories are partitioned across workers;
  * the vectorized lattice engine advances one stream seeded with
    ``SeedSequence([seed])`` across lockstep batches.

Unbounded stopping is always guarded by a per-trajectory step cap with
explicit abort accounting; aborted trajectories are reported, never
folded into the counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ContractError
from .groups import Element, GroupSpec, IntegerLattice
from .measures import Measure, MeasureDeficit
from .stopping import HittingRule, StoppingRule

_MAX_DEN = 2**62


@dataclass(frozen=True)
class SampleConfig:
    seed: int
    num_samples: int
    step_cap: int = 100_000

    def __post_init__(self):
        if self.seed < 0:
            raise ContractError("seed must be a nonnegative integer")
        if self.num_samples < 1:
            raise ContractError("num_samples must be >= 1")
        if self.step_cap < 1:
            raise ContractError("step_cap must be >= 1")


@dataclass(frozen=True)
class PositionHit:
    """Stop at the first time the position's listed coordinates all vanish.

    This is the subgroup-hitting rule for a coordinate subgroup of a
    lattice: the walk stops on its first visit to the subgroup after
    time zero.
    """

    zero_coords: Tuple[int, ...]

    def __post_init__(self):
        if not self.zero_coords:
            raise ContractError("at least one coordinate must be constrained")


@dataclass
class EmpiricalMeasure:
    """Integer sample counts per stopped position plus abort accounting."""

    spec: GroupSpec
    counts: Dict[Element, int]
    aborted: int
    num_samples: int

    def __post_init__(self):
        if sum(self.counts.values()) + self.aborted != self.num_samples:
            raise ContractError("counts plus aborted must equal num_samples")

    def to_measure(self) -> Measure:
        """Exact normalized sub-probability measure (aborted mass missing)."""
        n = self.num_samples
        return Measure(self.spec, {el: Fraction(c, n) for el, c in self.counts.items()})

    def to_deficit(self) -> MeasureDeficit:
        return MeasureDeficit(self.to_measure(), Fraction(self.aborted, self.num_samples))

    def items(self) -> List[Tuple[Element, int]]:
        return sorted(self.counts.items())


class _Sampler:
    """Integer-threshold inverse CDF over the canonically ordered support."""

    def __init__(self, mu: Measure):
        mu.require_probability()
        items = mu.items()
        den = math.lcm(*(w.denominator for _, w in items))
        if den > _MAX_DEN:
            raise ContractError("weight denominators too large to sample exactly")
        self.atoms = [el for el, _ in items]
        nums = [int(w * den) for _, w in items]
        self.denominator = den
        self.cumulative = np.cumsum(np.array(nums, dtype=np.int64))

    def draw(self, rng: np.random.Generator) -> Element:
        u = rng.integers(0, self.denominator)
        return self.atoms[int(np.searchsorted(self.cumulative, u, side="right"))]


def _trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def sample_walk(mu: Measure, length: int, seed: int) -> List[Element]:
    """One walk trajectory (identity included), deterministic in the seed."""
    if length < 0:
        raise ContractError("length must be >= 0")
    sampler = _Sampler(mu)
    rng = _trajectory_rng(seed, 0)
    spec = mu.spec
    pos = spec.identity()
    out = [pos]
    for _ in range(length):
        pos = spec.compose(pos, sampler.draw(rng))
        out.append(pos)
    return out


def _bernoulli(rng: np.random.Generator, p: Fraction) -> bool:
    if p == 1:
        return True
    if p == 0:
        return False
    return int(rng.integers(0, p.denominator)) < p.numerator


def _run_bounded(mu: Measure, rule: StoppingRule, cfg: SampleConfig) -> EmpiricalMeasure:
    sampler = _Sampler(mu)
    spec = mu.spec
    counts: Dict[Element, int] = {}
    aborted = 0
    for i in range(cfg.num_samples):
        rng = _trajectory_rng(cfg.seed, i)
        pos = spec.identity()
        prefix: Tuple[Element, ...] = ()
        stopped = False
        for _ in range(min(rule.bound, cfg.step_cap)):
            h = sampler.draw(rng)
            pos = spec.compose(pos, h)
            prefix = prefix + (h,)
            if _bernoulli(rng, rule.prob_at(prefix)):
                counts[pos] = counts.get(pos, 0) + 1
                stopped = True
                break
        if not stopped:
            aborted += 1
    return EmpiricalMeasure(spec, counts, aborted, cfg.num_samples)


def _run_hitting(mu: Measure, rule: HittingRule, cfg: SampleConfig) -> EmpiricalMeasure:
    sampler = _Sampler(mu)
    spec = mu.spec
    inside = rule.targets
    counts: Dict[Element, int] = {}
    aborted = 0
    for i in range(cfg.num_samples):
        rng = _trajectory_rng(cfg.seed, i)
        pos = spec.identity()
        stopped = False
        for _ in range(cfg.step_cap):
            h = sampler.draw(rng)
            pos = spec.compose(pos, h)
            if inside(h):
                counts[pos] = counts.get(pos, 0) + 1
                stopped = True
                break
        if not stopped:
            aborted += 1
    return EmpiricalMeasure(spec, counts, aborted, cfg.num_samples)


def _run_position_hit(
    mu: Measure, rule: PositionHit, cfg: SampleConfig
) -> EmpiricalMeasure:
    spec = mu.spec
    if not isinstance(spec, IntegerLattice):
        raise ContractError("position-hit sampling runs on integer lattices")
    if any(c < 0 or c >= spec.dim for c in rule.zero_coords):
        raise ContractError("constrained coordinate out of range")
    mu.require_probability()
    items = mu.items()
    den = math.lcm(*(w.denominator for _, w in items))
    if den > 2**20:
        raise ContractError("weight denominators too large for the lattice engine")
    lut = np.zeros(den, dtype=np.int64)
    start = 0
    for j, (_, w) in enumerate(items):
        num = int(w * den)
        lut[start : start + num] = j
        start += num
    steps = np.array([el for el, _ in items], dtype=np.int64)
    zero_cols = list(rule.zero_coords)

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed])))
    pos = np.zeros((cfg.num_samples, spec.dim), dtype=np.int64)
    stopped_chunks: List[np.ndarray] = []
    for _ in range(cfg.step_cap):
        m = pos.shape[0]
        if m == 0:
            break
        idx = lut[rng.integers(0, den, size=m)]
        pos += steps[idx]
        hit = pos[:, zero_cols[0]] == 0
        for c in zero_cols[1:]:
            hit &= pos[:, c] == 0
        if hit.any():
            stopped_chunks.append(pos[hit].copy())
            pos = pos[~hit]
    aborted = pos.shape[0]
    counts: Dict[Element, int] = {}
    if stopped_chunks:
        stacked = np.concatenate(stopped_chunks, axis=0)
        uniq, cnt = np.unique(stacked, axis=0, return_counts=True)
        counts = {
            tuple(int(c) for c in row): int(k) for row, k in zip(uniq, cnt)
        }
    return EmpiricalMeasure(spec, counts, aborted, cfg.num_samples)


Rule = Union[StoppingRule, HittingRule, PositionHit]


def estimate_transform(mu: Measure, rule: Rule, cfg: SampleConfig) -> EmpiricalMeasure:
    """Empirical stopped-position distribution under the given rule."""
    if isinstance(rule, StoppingRule):
        out = _run_bounded(mu, rule, cfg)
    elif isinstance(rule, HittingRule):
        out = _run_hitting(mu, rule, cfg)
    elif isinstance(rule, PositionHit):
        out = _run_position_hit(mu, rule, cfg)
    else:
        raise ContractError(f"cannot sample rule of type {type(rule).__name__}")
    if not out.counts:
        raise ContractError(
            "every trajectory hit the step cap; raise step_cap or check the rule"
        )
    return out


@dataclass
class CompareReport:
    """Total variation against an exact truncation, with a confidence band."""

    tv: Fraction
    band: float
    missing_mass: Fraction
    num_samples: int
    delta: float

    @property
    def verdict(self) -> bool:
        return float(self.tv) <= self.band


def compare(
    empirical: EmpiricalMeasure,
    exact: Union[Measure, MeasureDeficit],
    delta: float = 1e-3,
) -> CompareReport:
    """TV between the normalized counts and the exact truncation.

    The acceptance band is the Dvoretzky-style deviation term for the
    sample size plus the certified missing mass of the truncation.
    """
    if isinstance(exact, Measure):
        exact = MeasureDeficit(exact, Fraction(0))
    empirical.spec.require_same(exact.measure.spec)
    hat = empirical.to_measure()
    ref = exact.measure
    keys = set(hat.raw()) | set(ref.raw())
    tv = sum((abs(hat(el) - ref(el)) for el in keys), Fraction(0)) / 2
    n = empirical.num_samples
    band = 2.0 * math.sqrt(math.log(2.0 / delta) / (2.0 * n)) + float(
        exact.missing_mass
    )
    return CompareReport(
        tv=tv,
        band=band,
        missing_mass=exact.missing_mass,
        num_samples=n,
        delta=delta,
    )
