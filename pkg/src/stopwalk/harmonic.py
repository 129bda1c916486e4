"""The averaging operator P, harmonicity checks and minimality surrogates.

Harmonicity is only ever certified on finite windows named in the report;
user functions are opaque evaluators, so no global claim is possible.
Minimality itself is not decided algorithmically: the testable surrogates
are geodesic support (positivity confined to one infinite word) and the
constancy bounds of the jump chain along that word.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, Union

from .errors import ContractError, EvaluationError
from .groups import (
    Element,
    FreeGroup,
    FreeSemigroup,
    GroupSpec,
    InfiniteWord,
    IntegerLattice,
    SemigroupWord,
)
from .kernels import require_generator_supported, step_weight_product
from .measures import Measure, Rational, as_fraction, convolve, mix

Evaluator = Callable[[Element], Rational]


@dataclass(frozen=True)
class HarmonicFn:
    """A nonnegative rational-valued function given by an evaluator."""

    evaluator: Evaluator
    description: str = ""
    support_hint: Optional[Callable[[Element], bool]] = None

    def evaluate(self, el: Element) -> Fraction:
        try:
            value = as_fraction(self.evaluator(el))
        except ContractError:
            raise
        except Exception as exc:  # surface the offending element
            raise EvaluationError(
                f"evaluator {self.description!r} failed at {el!r}: {exc}", element=el
            ) from exc
        if value < 0:
            raise EvaluationError(
                f"evaluator {self.description!r} returned a negative value at {el!r}",
                element=el,
            )
        return value

    def __call__(self, el: Element) -> Fraction:
        return self.evaluate(el)


def constant_fn(value: Rational = 1) -> HarmonicFn:
    c = as_fraction(value)
    return HarmonicFn(lambda el: c, description=f"constant {c}")


def power_indicator(label: str, base: Rational) -> HarmonicFn:
    """f(label^n) = base^n on a free semigroup, zero off the ray."""
    b = as_fraction(base)

    def ev(el: Element) -> Fraction:
        if all(lab == label for lab in el):
            return b ** len(el)
        return Fraction(0)

    return HarmonicFn(ev, description=f"{base}^n on {label}^n")


def lattice_exponential(base: Rational, axis: int) -> HarmonicFn:
    """f(x) = base ** x[axis]: the multiplicative characters of Z^d."""
    b = as_fraction(base)
    if b <= 0:
        raise ContractError("exponential base must be positive")
    return HarmonicFn(
        lambda el: b ** el[axis], description=f"{base}^x[{axis}]"
    )


def table_fn(values: Dict[Element, Rational], default: Rational = 0) -> HarmonicFn:
    tbl = {el: as_fraction(v) for el, v in values.items()}
    dflt = as_fraction(default)
    return HarmonicFn(
        lambda el: tbl.get(el, dflt),
        description=f"table[{len(tbl)}]",
        support_hint=tbl.__contains__ if dflt == 0 else None,
    )


# ---------------------------------------------------------------------------
# The averaging operator and window checks


def apply_P(mu: Measure, f: HarmonicFn, g: Element) -> Fraction:
    """(P f)(g) = sum_h f(g h) mu(h): finite because mu is."""
    spec = mu.spec
    total = Fraction(0)
    for h, w in mu.items():
        total += f.evaluate(spec.compose(g, h)) * w
    return total


def apply_P_fn(mu: Measure, f: HarmonicFn) -> HarmonicFn:
    """P f as a function, for composing averaging operators."""
    return HarmonicFn(
        lambda g: apply_P(mu, f, g), description=f"P[{mu!r}]({f.description})"
    )


@dataclass
class HarmonicityReport:
    """Exact comparison of P f against f over a finite window."""

    window: Tuple[Element, ...]
    max_defect: Fraction
    failures: List[Tuple[Element, Fraction, Fraction]]  # (g, Pf(g), f(g))

    @property
    def harmonic_on_window(self) -> bool:
        return not self.failures

    def failure_elements(self) -> Set[Element]:
        return {g for g, _, _ in self.failures}


def check_harmonic(
    mu: Measure, f: HarmonicFn, window: Sequence[Element]
) -> HarmonicityReport:
    failures = []
    worst = Fraction(0)
    for g in window:
        lhs = apply_P(mu, f, g)
        rhs = f.evaluate(g)
        if lhs != rhs:
            failures.append((g, lhs, rhs))
            worst = max(worst, abs(lhs - rhs))
    return HarmonicityReport(tuple(window), worst, failures)


def word_ball(
    spec: GroupSpec, radius: int, letters: Optional[Sequence] = None
) -> List[Element]:
    """Ball of the word metric: the default finite window for checks."""
    if radius < 0:
        raise ContractError("radius must be >= 0")
    if isinstance(spec, IntegerLattice):
        pts = [spec.identity()]
        seen = {spec.identity()}
        frontier = [spec.identity()]
        steps = [spec.basis(i) for i in range(spec.dim)]
        steps += [spec.inverse(s) for s in steps]
        for _ in range(radius):
            nxt = []
            for p in frontier:
                for s in steps:
                    q = spec.compose(p, s)
                    if q not in seen:
                        seen.add(q)
                        nxt.append(q)
            pts.extend(nxt)
            frontier = nxt
        return sorted(pts)
    if isinstance(spec, FreeSemigroup):
        if letters is None:
            if spec.infinite_rank:
                raise ContractError(
                    "infinite-rank semigroup: pass the letters to enumerate"
                )
            letters = spec.generators
        words: List[Element] = [()]
        level: List[SemigroupWord] = [()]
        for _ in range(radius):
            level = [w + (g,) for w in level for g in letters]
            words.extend(level)
        return words
    if isinstance(spec, FreeGroup):
        gens = [spec.generator(lab, s) for lab in spec.generators for s in (1, -1)]
        seen = {spec.identity()}
        frontier = [spec.identity()]
        out = [spec.identity()]
        for _ in range(radius):
            nxt = []
            for p in frontier:
                for s in gens:
                    q = spec.compose(p, s)
                    if q not in seen:
                        seen.add(q)
                        nxt.append(q)
            out.extend(nxt)
            frontier = nxt
        return sorted(out)
    raise ContractError(f"no ball enumeration for {spec!r}")


def geodesic_window(g: InfiniteWord, n: int) -> List[SemigroupWord]:
    """The first n prefixes of an infinite word, identity included."""
    return [g.letters(i) for i in range(n)]


# ---------------------------------------------------------------------------
# Minimal harmonic witnesses on free semigroups


def minimal_witness(mu: Measure, g: InfiniteWord) -> HarmonicFn:
    """The reciprocal-weight function supported on the prefixes of g."""
    require_generator_supported(mu)

    def ev(el: Element) -> Fraction:
        if not g.starts_with(el):
            return Fraction(0)
        w = step_weight_product(mu, el)
        if w == 0:
            raise EvaluationError(
                f"prefix {el!r} uses letters outside the support", element=el
            )
        return 1 / w

    return HarmonicFn(
        ev, description=f"geodesic witness on {g.describe()}",
        support_hint=g.starts_with,
    )


# ---------------------------------------------------------------------------
# The jump chain along a geodesic


@dataclass
class GeodesicChain:
    """Upward jump chain on 0..length induced along an infinite word.

    transitions[(n, n+k)] is the chance of jumping k letters forward from
    depth n; every represented row sums to exactly 1 and the single-step
    rate is at least ``rate``.
    """

    word: InfiniteWord
    jump_bound: int
    length: int
    rate: Fraction
    transitions: Dict[Tuple[int, int], Fraction]

    def row(self, n: int) -> Dict[int, Fraction]:
        return {
            k: self.transitions[(n, n + k)]
            for k in range(1, self.jump_bound + 1)
            if (n, n + k) in self.transitions
        }


def build_conditional_chain(
    mu_tt: Measure,
    mu: Measure,
    g: InfiniteWord,
    length: int,
    rate: Optional[Rational] = None,
) -> GeodesicChain:
    """Jump probabilities of the walk conditioned to follow the word g.

    q(n, n+k) is the stopped-measure mass of the k-letter segment of g at
    depth n divided by that segment's letter-weight product.  Row sums
    must come out exactly 1; anything else means the witness function is
    not harmonic for mu_tt and is reported as an inconsistency.
    """
    require_generator_supported(mu)
    mu.spec.require_same(mu_tt.spec)
    jump = max(len(w) for w in mu_tt.raw())
    transitions: Dict[Tuple[int, int], Fraction] = {}
    min_step = None
    for n in range(length):
        row_sum = Fraction(0)
        for k in range(1, jump + 1):
            seg = g.segment(n, n + k)
            w = mu_tt(seg)
            if w == 0:
                continue
            base = step_weight_product(mu, seg)
            if base == 0:
                raise ContractError(
                    f"geodesic letters at depth {n} fall outside the support"
                )
            transitions[(n, n + k)] = w / base
            row_sum += w / base
        if row_sum != 1:
            raise ContractError(
                f"chain row {n} sums to {row_sum}, not 1: "
                "the measure is not a bounded stop transform of mu"
            )
        step = transitions.get((n, n + 1), Fraction(0))
        min_step = step if min_step is None else min(min_step, step)
    declared = as_fraction(rate) if rate is not None else min_step
    if declared is None:
        raise ContractError("chain must have at least one row")
    if min_step < declared:
        raise ContractError(
            f"single-step rate {min_step} falls below the declared {declared}"
        )
    return GeodesicChain(
        word=g,
        jump_bound=jump,
        length=length,
        rate=declared,
        transitions=transitions,
    )


@dataclass
class ChainSolution:
    """Downward-solved values of a chain-harmonic function, f(0) = 1."""

    values: Tuple[Fraction, ...]
    interior_stop: int  # the bounds window is 0..interior_stop inclusive
    interior_min: Fraction
    interior_max: Fraction


def solve_chain_harmonic(
    chain: GeodesicChain, length: int, terminal: Sequence[Rational]
) -> ChainSolution:
    """Recurse f(n) = sum_k q(n, n+k) f(n+k) down from a terminal window.

    The terminal data supplies f on length..length+jump-1; the solution is
    normalized to f(0) = 1 and the extremes are reported on the interior
    0..length-jump where the two-sided rate bounds apply.
    """
    m = chain.jump_bound
    if length > chain.length:
        raise ContractError("chain is shorter than the requested solve length")
    if len(terminal) != m:
        raise ContractError(f"terminal window must supply {m} values")
    term = [as_fraction(v) for v in terminal]
    if any(v <= 0 for v in term):
        raise ContractError("terminal values must be positive")
    values: List[Fraction] = [Fraction(0)] * (length + m)
    for i, v in enumerate(term):
        values[length + i] = v
    for n in range(length - 1, -1, -1):
        total = Fraction(0)
        for k in range(1, m + 1):
            q = chain.transitions.get((n, n + k))
            if q:
                total += q * values[n + k]
        values[n] = total
    base = values[0]
    if base <= 0:
        raise ContractError("solved value at 0 is not positive")
    normalized = tuple(v / base for v in values)
    stop = max(length - m, 0)
    interior = normalized[: stop + 1]
    return ChainSolution(
        values=normalized,
        interior_stop=stop,
        interior_min=min(interior),
        interior_max=max(interior),
    )


# ---------------------------------------------------------------------------
# Commuting convex combinations


@dataclass
class ConvexCombinationReport:
    commutes: bool
    commute_witness: Optional[Element]
    operators_commute_on_window: bool
    operator_witness: Optional[Element]
    base_report: HarmonicityReport
    combined_report: HarmonicityReport

    @property
    def inclusion_holds(self) -> bool:
        """Window version of: harmonic for the first measure => for the mix."""
        if self.base_report.failures:
            return True
        return not self.combined_report.failures

    @property
    def passed(self) -> bool:
        return (
            self.commutes
            and self.operators_commute_on_window
            and self.inclusion_holds
        )


def check_convex_theorem(
    thetas: Sequence[Measure],
    weights: Sequence[Rational],
    f: HarmonicFn,
    window: Sequence[Element],
) -> ConvexCombinationReport:
    """Exact checks behind the commuting-convex-combination invariance.

    Verifies pairwise commutation of the first measure with every other,
    commutation of the two averaging operators on the window, and the easy
    inclusion: zero defect for the first measure forces zero defect for
    the weighted combination on the same window.
    """
    if not thetas:
        raise ContractError("need at least one measure")
    ws = [as_fraction(w) for w in weights]
    if ws[0] <= 0:
        raise ContractError("the first weight must be positive")
    theta1 = thetas[0]
    witness = None
    for other in thetas[1:]:
        left = convolve(theta1, other)
        right = convolve(other, theta1)
        if left != right:
            diff = set(left.raw()) | set(right.raw())
            witness = sorted(el for el in diff if left(el) != right(el))[0]
            break
    commutes = witness is None

    theta = mix(ws, list(thetas))
    op_witness = None
    pf1 = apply_P_fn(theta1, f)
    pft = apply_P_fn(theta, f)
    for g in window:
        if apply_P(theta, pf1, g) != apply_P(theta1, pft, g):
            op_witness = g
            break

    return ConvexCombinationReport(
        commutes=commutes,
        commute_witness=witness,
        operators_commute_on_window=op_witness is None,
        operator_witness=op_witness,
        base_report=check_harmonic(theta1, f, window),
        combined_report=check_harmonic(theta, f, window),
    )


# ---------------------------------------------------------------------------
# Geodesic support probe


@dataclass
class SupportProbe:
    verdict: str  # "geodesic" | "branching" | "inconsistent"
    prefix: SemigroupWord
    witness: Optional[Element] = None
    branches: Tuple[str, ...] = ()


def geodesic_support_probe(mu_tt: Measure, f: HarmonicFn, depth: int) -> SupportProbe:
    """Greedily follow the positivity of f through the stopped measure.

    At each prefix the probe looks for generator continuations carrying
    positive f-weighted mass.  Exactly one continuation at every level is
    the geodesic-support signature; several is a branching witness; none
    contradicts harmonicity of a positive f and is flagged.
    """
    spec = mu_tt.spec
    if not isinstance(spec, FreeSemigroup):
        raise ContractError("support probe runs on free semigroups")
    if f.evaluate(spec.identity()) <= 0:
        return SupportProbe(
            verdict="inconsistent", prefix=(), witness=spec.identity()
        )
    by_letter: Dict[str, List[Tuple[Element, Fraction]]] = {}
    for y, w in mu_tt.items():
        by_letter.setdefault(y[0], []).append((y, w))

    prefix: SemigroupWord = ()
    while len(prefix) < depth:
        positive = []
        for letter in sorted(by_letter):
            mass = Fraction(0)
            for y, w in by_letter[letter]:
                mass += w * f.evaluate(prefix + y)
            if mass > 0:
                positive.append(letter)
        if not positive:
            return SupportProbe(
                verdict="inconsistent", prefix=prefix, witness=prefix
            )
        if len(positive) > 1:
            return SupportProbe(
                verdict="branching",
                prefix=prefix,
                witness=prefix,
                branches=tuple(positive),
            )
        prefix = prefix + (positive[0],)
    return SupportProbe(verdict="geodesic", prefix=prefix)
