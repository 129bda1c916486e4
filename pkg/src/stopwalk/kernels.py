"""Green functions and Martin kernels.

On a free semigroup with a generator-supported measure both kernels have
closed forms driven by letter-weight products, and the truncated series
must reproduce them exactly; everywhere else the series is reported as a
certified lower bound together with last-term convergence diagnostics.
No rigorous tail bound is attempted for general groups.

Convolution-power tables are the shared workhorse.  They store integer
numerators over a common power denominator, which keeps sixty-step
lattice tables exact without per-entry gcd churn, and they optionally
prune atoms that can no longer reach a declared target set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from .errors import ContractError, NotReachedError
from .groups import (
    Element,
    FreeGroup,
    FreeSemigroup,
    GroupSpec,
    InfiniteWord,
    IntegerLattice,
    SemigroupWord,
    prefix_leq,
    quotient,
)
from .measures import Measure

Target = Union[SemigroupWord, InfiniteWord]


@dataclass
class KernelReport:
    """A kernel value plus the truncation metadata needed to trust it."""

    value: Union[Fraction, float]
    mode: str  # "exact" | "truncated"
    horizon: int
    last_term: float
    term_ratio: Optional[float]
    tail_note: str


@dataclass(frozen=True)
class BoundarySequence:
    points: Tuple[Element, ...]
    description: str = ""


def step_weight_product(mu: Measure, word: SemigroupWord) -> Fraction:
    """Product of single-letter weights along a word: the geodesic weight."""
    out = Fraction(1)
    for lab in word:
        out *= mu((lab,))
        if out == 0:
            return Fraction(0)
    return out


def require_generator_supported(mu: Measure) -> None:
    if not isinstance(mu.spec, FreeSemigroup):
        raise ContractError("closed-form kernels need a free semigroup")
    for el in mu.raw():
        if len(el) != 1:
            raise ContractError(
                f"measure must be supported on single generators, found {el!r}"
            )


# ---------------------------------------------------------------------------
# Closed forms on free semigroups


def green_free(mu: Measure, x: SemigroupWord, y: SemigroupWord) -> KernelReport:
    """Exact Green function for a generator-supported semigroup measure."""
    require_generator_supported(mu)
    z = quotient(x, y)
    if z is None:
        value = Fraction(0)
        note = "x is not a prefix of y: no path"
    else:
        value = step_weight_product(mu, z)
        note = f"single contributing term at n={len(z)}"
    return KernelReport(
        value=value,
        mode="exact",
        horizon=len(y),
        last_term=float(value),
        term_ratio=None,
        tail_note=note,
    )


def martin_free(mu: Measure, x: SemigroupWord, target: Target) -> KernelReport:
    """Exact Martin kernel against a finite word or an infinite-word spec."""
    require_generator_supported(mu)
    if isinstance(target, InfiniteWord):
        below = target.starts_with(x)
    else:
        below = prefix_leq(x, target)
    if below:
        wx = step_weight_product(mu, x)
        if wx == 0:
            raise ContractError(
                f"kernel undefined: {mu.spec.format(x)} uses letters of weight zero"
            )
        value = 1 / wx
        note = "on the geodesic: reciprocal geodesic weight"
    else:
        value = Fraction(0)
        note = "off the geodesic"
    return KernelReport(
        value=value,
        mode="exact",
        horizon=len(x),
        last_term=float(value),
        term_ratio=None,
        tail_note=note,
    )


# ---------------------------------------------------------------------------
# Truncated series


class PowerTable:
    """Convolution powers mu^{*0..horizon} over a common denominator.

    Entries are integer numerators over denominator**k.  When a target set
    is declared, atoms that cannot reach any target within the remaining
    steps are dropped; values at the declared targets stay exact, values
    elsewhere may then undercount and must not be read.
    """

    def __init__(self, mu: Measure, horizon: int, targets: Optional[Set[Element]] = None):
        if horizon < 0:
            raise ContractError("horizon must be >= 0")
        self.mu = mu
        self.spec = mu.spec
        self.horizon = horizon
        self.targets = frozenset(targets) if targets is not None else None
        den = math.lcm(*(w.denominator for w in mu.raw().values())) if len(mu) else 1
        self.denominator = den
        atom_nums = [(el, int(w * den)) for el, w in mu.items()]
        guard = self._make_guard(atom_nums)
        compose = self.spec.compose
        levels: List[Dict[Element, int]] = [{self.spec.identity(): 1}]
        for k in range(1, horizon + 1):
            rem = horizon - k
            nxt: Dict[Element, int] = {}
            for z, num in levels[-1].items():
                for h, hn in atom_nums:
                    z2 = compose(z, h)
                    if guard is None or guard(z2, rem):
                        nxt[z2] = nxt.get(z2, 0) + num * hn
            levels.append(nxt)
        self.levels = levels

    def _make_guard(self, atom_nums):
        if self.targets is None:
            return None
        if isinstance(self.spec, IntegerLattice):
            lo = tuple(min(t[i] for t in self.targets) for i in range(self.spec.dim))
            hi = tuple(max(t[i] for t in self.targets) for i in range(self.spec.dim))
            max_step = max(
                (sum(abs(c) for c in el) for el, _ in atom_nums), default=1
            )

            def guard(z: Element, remaining: int) -> bool:
                dist = 0
                for c, l, h in zip(z, lo, hi):
                    if c < l:
                        dist += l - c
                    elif c > h:
                        dist += c - h
                return dist <= remaining * max_step

            return guard
        if isinstance(self.spec, FreeSemigroup):
            # words only grow, so every partial product on the way to a
            # target is one of its prefixes
            prefixes = set()
            for t in self.targets:
                for k in range(len(t) + 1):
                    prefixes.add(t[:k])
            return lambda z, remaining: z in prefixes
        return None

    def power_value(self, k: int, z: Element) -> Fraction:
        return Fraction(self.levels[k].get(z, 0), self.denominator**k)

    def green_terms(self, z: Element) -> List[Fraction]:
        return [self.power_value(k, z) for k in range(self.horizon + 1)]


def build_power_table(
    mu: Measure, horizon: int, targets: Optional[Set[Element]] = None
) -> PowerTable:
    return PowerTable(mu, horizon, targets)


def _left_quotient(spec: GroupSpec, x: Element, y: Element) -> Optional[Element]:
    """x^{-1} y where it exists; None on a free semigroup when x is no prefix."""
    if isinstance(spec, FreeSemigroup):
        return quotient(x, y)
    return spec.left_quotient(x, y)


def _series_report(mu: Measure, terms: List[Fraction], horizon: int) -> KernelReport:
    value = sum(terms, Fraction(0))
    nonzero = [(k, t) for k, t in enumerate(terms) if t != 0]
    last_term = float(nonzero[-1][1]) if nonzero else 0.0
    ratio = (
        float(nonzero[-1][1] / nonzero[-2][1]) if len(nonzero) >= 2 else None
    )
    mode = "truncated"
    note = "partial sum: certified lower bound of the full series"
    if isinstance(mu.spec, FreeSemigroup) and mu(mu.spec.identity()) == 0:
        # words only grow, so the series has no terms beyond the word length
        top = max((k for k, _ in nonzero), default=0)
        if nonzero and top < horizon:
            mode = "exact"
            note = f"series terminates: no terms beyond n={top}"
        elif not nonzero:
            mode = "exact"
            note = "no path within any horizon"
    return KernelReport(
        value=value,
        mode=mode,
        horizon=horizon,
        last_term=last_term,
        term_ratio=ratio,
        tail_note=note,
    )


def green_truncated(
    mu: Measure,
    x: Element,
    y: Element,
    horizon: int,
    table: Optional[PowerTable] = None,
) -> KernelReport:
    """Partial Green series sum_{n<=horizon} mu^{*n}(x^{-1}y), exact rational."""
    spec = mu.spec
    spec.validate(x)
    spec.validate(y)
    z = _left_quotient(spec, x, y)
    if z is None:
        return KernelReport(
            value=Fraction(0),
            mode="exact",
            horizon=horizon,
            last_term=0.0,
            term_ratio=None,
            tail_note="x is not a prefix of y: empty series",
        )
    if table is None:
        table = PowerTable(mu, horizon, targets={z})
    elif table.horizon < horizon:
        raise ContractError("shared power table is shallower than the horizon")
    terms = [table.power_value(k, z) for k in range(horizon + 1)]
    return _series_report(mu, terms, horizon)


def martin_truncated(
    mu: Measure,
    x: Element,
    y: Element,
    horizon: int,
    table: Optional[PowerTable] = None,
) -> KernelReport:
    """Ratio of truncated Greens; a ratio of lower bounds, not itself a bound."""
    spec = mu.spec
    if table is None:
        z = _left_quotient(spec, x, y)
        targets = {y} if z is None else {y, z}
        table = PowerTable(mu, horizon, targets=targets)
    num = green_truncated(mu, x, y, horizon, table)
    den = green_truncated(mu, spec.identity(), y, horizon, table)
    if den.value == 0:
        raise NotReachedError(
            f"{spec.format(y)} is not reached within horizon {horizon}"
        )
    value = num.value / den.value
    exact = num.mode == "exact" and den.mode == "exact"
    return KernelReport(
        value=value,
        mode="exact" if exact else "truncated",
        horizon=horizon,
        last_term=num.last_term,
        term_ratio=num.term_ratio,
        tail_note=(
            "exact: both series terminate"
            if exact
            else "ratio of truncated series: not a certified bound"
        ),
    )


# ---------------------------------------------------------------------------
# Sequence diagnostics


@dataclass
class KernelTable:
    """Kernel values over a probe set and a boundary-bound sequence."""

    probes: Tuple[Element, ...]
    sequence: BoundarySequence
    horizon: int
    values: List[List[Fraction]]  # rows follow probes
    stabilized: List[bool]
    rel_tol: float

    def row(self, i: int) -> List[Fraction]:
        return self.values[i]

    def limit_value(self, i: int) -> Fraction:
        return self.values[i][-1]


def relative_spread(values: Sequence[Union[Fraction, float]]) -> float:
    xs = [float(v) for v in values]
    top = max(abs(v) for v in xs)
    if top == 0:
        return 0.0
    return (max(xs) - min(xs)) / top


def kernel_sequence(
    mu: Measure,
    probes: Sequence[Element],
    seq: BoundarySequence,
    horizon: int,
    rel_tol: float = 5e-2,
) -> KernelTable:
    """Truncated Martin kernels K(probe, y_n) with per-probe stabilization.

    A row is declared stabilized when its last three values lie within the
    relative tolerance of each other.
    """
    spec = mu.spec
    targets: Set[Element] = set()
    for y in seq.points:
        targets.add(y)
        for x in probes:
            z = _left_quotient(spec, x, y)
            if z is not None:
                targets.add(z)
    table = PowerTable(mu, horizon, targets=targets)
    values: List[List[Fraction]] = []
    verdicts: List[bool] = []
    for x in probes:
        row = [martin_truncated(mu, x, y, horizon, table).value for y in seq.points]
        tail = row[-3:] if len(row) >= 3 else row
        values.append(row)
        verdicts.append(relative_spread(tail) < rel_tol)
    return KernelTable(
        probes=tuple(probes),
        sequence=seq,
        horizon=horizon,
        values=values,
        stabilized=verdicts,
        rel_tol=rel_tol,
    )


@dataclass
class SequenceClassification:
    kind: str  # eventually-constant | increasing-common-prefix |
    #            finite-common-prefix-escaping | inconclusive
    evidence: Optional[SemigroupWord] = None
    note: str = ""


def classify_free_sequence(
    seq: Sequence[SemigroupWord],
    generator_window: Set[str],
    spec: Optional[FreeSemigroup] = None,
) -> SequenceClassification:
    """Consistency of finite evidence with the boundary convergence classes.

    Never claims convergence: the verdict states which class the observed
    terms are consistent with.  The escaping class is only available when
    the ambient semigroup has infinite rank.
    """
    if not seq:
        raise ContractError("cannot classify an empty sequence")
    tail = list(seq[len(seq) // 2 :])

    if all(w == tail[-1] for w in tail):
        return SequenceClassification(
            kind="eventually-constant",
            evidence=tail[-1],
            note=f"constant over the last {len(tail)} terms",
        )

    chain = all(
        prefix_leq(a, b) or prefix_leq(b, a) for a, b in zip(tail, tail[1:])
    )
    lengths = [len(w) for w in tail]
    if chain and lengths == sorted(lengths) and lengths[-1] > lengths[0]:
        longest = max(tail, key=len)
        return SequenceClassification(
            kind="increasing-common-prefix",
            evidence=longest,
            note="terms form a growing geodesic chain",
        )

    if spec is None or spec.infinite_rank:
        common = _common_prefix(tail)
        branches = {
            w[len(common)] for w in tail if len(w) > len(common)
        }
        if branches and not branches.issubset(generator_window):
            return SequenceClassification(
                kind="finite-common-prefix-escaping",
                evidence=common,
                note="continuations escape the declared generator window",
            )

    return SequenceClassification(kind="inconclusive")


def _common_prefix(words: Sequence[SemigroupWord]) -> SemigroupWord:
    first = min(words, key=len)
    out = []
    for i, lab in enumerate(first):
        if all(w[i] == lab for w in words):
            out.append(lab)
        else:
            break
    return tuple(out)


# ---------------------------------------------------------------------------
# Closed-form audit sweep


@dataclass
class KernelAudit:
    pairs_checked: int
    green_mismatches: List[Tuple[Element, Element]]
    martin_mismatches: List[Tuple[Element, Element]]

    @property
    def clean(self) -> bool:
        return not self.green_mismatches and not self.martin_mismatches


def kernel_closed_form_audit(
    mu: Measure, max_len: int, horizon: Optional[int] = None
) -> KernelAudit:
    """Sweep every word pair up to a length: truncated series vs closed form.

    Green values are compared on all ordered pairs and Martin values on
    every pair whose target is reachable; exact equality is required.  The
    sweep works in scaled integers: with atom weights over a common
    denominator d, the truncated Green of a pair with quotient z is
    levels[|z|][z] / d^{|z|} once the level dicts are verified to hold
    length-k words only, which makes every other series term vanish.
    """
    require_generator_supported(mu)
    horizon = max_len if horizon is None else horizon
    if horizon < max_len:
        raise ContractError("horizon must cover the longest quotient")
    gens = sorted(el[0] for el in mu.raw())
    words: List[SemigroupWord] = [()]
    level: List[SemigroupWord] = [()]
    for _ in range(max_len):
        level = [w + (g,) for w in level for g in gens]
        words.extend(level)

    table = PowerTable(mu, horizon)
    levels = table.levels
    den = table.denominator
    for k, lvl in enumerate(levels):
        if any(len(w) != k for w in lvl):
            raise ContractError("power level contains a word of the wrong length")

    atom_num = {el[0]: int(w * den) for el, w in mu.raw().items()}
    weight_num: Dict[SemigroupWord, int] = {(): 1}
    for w in words[1:]:
        weight_num[w] = weight_num[w[:-1]] * atom_num.get(w[-1], 0)

    green_bad: List[Tuple[Element, Element]] = []
    martin_bad: List[Tuple[Element, Element]] = []
    pairs = 0
    for y in words:
        ny = len(y)
        gy_num = levels[ny].get(y, 0)
        wy_num = weight_num[y]
        reachable = wy_num != 0 and gy_num != 0
        for x in words:
            pairs += 1
            nx = len(x)
            if nx <= ny and y[:nx] == x:
                z = y[nx:]
                gz_num = levels[len(z)].get(z, 0)
                if gz_num != weight_num[z]:
                    green_bad.append((x, y))
                # K_free = 1/w(x) vs K_trunc = G(x,y)/G(e,y), both over den powers
                if reachable and weight_num[x] != 0:
                    if gz_num * weight_num[x] != gy_num:
                        martin_bad.append((x, y))
            # off-prefix pairs: both modes return zero with no series to sum
    return KernelAudit(pairs, green_bad, martin_bad)
