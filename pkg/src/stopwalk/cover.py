"""Free-semigroup covers of finitely supported measures.

Every atom of a base measure becomes an independent generator of a cover
semigroup; evaluating formal words back in the base group is a surjective
homomorphism onto the semigroup the support generates.  Pushing measures
forward, lifting functions back, and replaying stopping rules on letter
images all commute with the corresponding base-group operations, which is
what makes harmonicity questions transferable between the two sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .errors import BudgetExceededError, ContractError
from .groups import (
    Element,
    FreeSemigroup,
    GroupSpec,
    Homomorphism,
    SemigroupWord,
)
from .harmonic import HarmonicFn, HarmonicityReport, check_harmonic
from .measures import Measure
from .stopping import StoppingRule


@dataclass(frozen=True)
class FreeCover:
    """A base measure together with its free cover data.

    Cover generators are labeled by the serialized base atom they sit
    over, so reports stay readable and stable across runs.
    """

    base_measure: Measure
    semigroup: FreeSemigroup
    phi: Homomorphism
    lifted_measure: Measure

    @property
    def base_spec(self) -> GroupSpec:
        return self.base_measure.spec

    def labels(self) -> Tuple[str, ...]:
        return self.semigroup.generators


def build_cover(mu: Measure) -> FreeCover:
    """One fresh generator per support atom; the lifted weights match."""
    if len(mu) == 0:
        raise ContractError("cannot cover the zero measure")
    spec = mu.spec
    labels = []
    images: Dict[str, Element] = {}
    weights: Dict[SemigroupWord, Fraction] = {}
    for el, w in mu.items():
        label = spec.format(el)
        labels.append(label)
        images[label] = el
        weights[(label,)] = w
    semigroup = FreeSemigroup(tuple(labels))
    phi = Homomorphism(source=semigroup, target=spec, images=images)
    lifted = Measure(semigroup, weights)
    return FreeCover(
        base_measure=mu, semigroup=semigroup, phi=phi, lifted_measure=lifted
    )


def pushforward(cover: FreeCover, nu: Measure) -> Measure:
    """Image measure on the base: masses of equal-image words merge."""
    cover.semigroup.require_same(nu.spec)
    out: Dict[Element, Fraction] = {}
    for word, w in nu.raw().items():
        g = cover.phi(word)
        out[g] = out.get(g, Fraction(0)) + w
    return Measure(cover.base_spec, out)


def lift_fn(cover: FreeCover, f: HarmonicFn) -> HarmonicFn:
    """f composed with the evaluation map; invariant on fibers by construction."""
    phi = cover.phi
    return HarmonicFn(
        lambda word: f.evaluate(phi(word)),
        description=f"lift({f.description})",
    )


def lift_rule(cover: FreeCover, rule: StoppingRule) -> StoppingRule:
    """Replay a base-group rule on the images of cover increments."""
    phi = cover.phi

    def stop(prefix):
        return rule.stop_prob(tuple(phi(h) for h in prefix))

    return StoppingRule(
        bound=rule.bound, stop_prob=stop, description=f"lift({rule.description})"
    )


def restrict_fn(cover: FreeCover, fhat: HarmonicFn, depth: int) -> HarmonicFn:
    """Push an invariant cover function down to the base group.

    The value at a base element is read off any preimage word; words are
    enumerated up to the depth, so elements needing longer spellings raise
    an evaluation error asking for more depth.
    """
    representative: Dict[Element, SemigroupWord] = {}
    for word in enumerate_words(cover, depth):
        representative.setdefault(cover.phi(word), word)

    def ev(el: Element) -> Fraction:
        word = representative.get(el)
        if word is None:
            raise ContractError(
                f"no preimage word of depth <= {depth} for {el!r}"
            )
        return fhat.evaluate(word)

    return HarmonicFn(ev, description=f"restrict({fhat.description})")


def enumerate_words(cover: FreeCover, depth: int, budget: int = 10**6) -> List[SemigroupWord]:
    """All cover words up to the depth, identity first, canonical order."""
    labels = sorted(cover.labels())
    words: List[SemigroupWord] = [()]
    level: List[SemigroupWord] = [()]
    for _ in range(depth):
        level = [w + (lab,) for w in level for lab in labels]
        words.extend(level)
        if len(words) > budget:
            raise BudgetExceededError(
                f"word enumeration exceeded {budget} nodes", depth_reached=depth
            )
    return words


@dataclass
class InvarianceReport:
    depth: int
    classes: int
    passed: bool
    witness: Optional[Tuple[SemigroupWord, SemigroupWord]] = None


def check_phi_invariant(
    cover: FreeCover, fhat: HarmonicFn, depth: int, budget: int = 10**6
) -> InvarianceReport:
    """Group words by image and require the function constant per class."""
    by_image: Dict[Element, List[SemigroupWord]] = {}
    for word in enumerate_words(cover, depth, budget):
        by_image.setdefault(cover.phi(word), []).append(word)
    for image, cls in sorted(by_image.items()):
        first = cls[0]
        ref = fhat.evaluate(first)
        for other in cls[1:]:
            if fhat.evaluate(other) != ref:
                return InvarianceReport(
                    depth=depth,
                    classes=len(by_image),
                    passed=False,
                    witness=(first, other),
                )
    return InvarianceReport(depth=depth, classes=len(by_image), passed=True)


@dataclass
class TransferReport:
    """Paired harmonicity reports on the base window and its word preimages."""

    base: HarmonicityReport
    cover: HarmonicityReport
    consistent: bool
    mismatches: List[SemigroupWord]


def transfer_harmonicity(
    cover: FreeCover,
    f: HarmonicFn,
    window: Sequence[Element],
    depth: int = 4,
) -> TransferReport:
    """Check f on the base window and its lift on matching preimage words.

    Fibers of the evaluation map are infinite, so the preimage window is
    enumerated by word depth: every word up to the depth whose image lies
    in the base window.  A lifted defect must appear exactly at the words
    sitting over base defects.
    """
    base_report = check_harmonic(cover.base_measure, f, window)
    base_set = set(window)
    preimage = [
        w for w in enumerate_words(cover, depth) if cover.phi(w) in base_set
    ]
    fhat = lift_fn(cover, f)
    cover_report = check_harmonic(cover.lifted_measure, fhat, preimage)
    bad_base = base_report.failure_elements()
    mism = [
        w
        for w in preimage
        if (cover.phi(w) in bad_base) != (w in cover_report.failure_elements())
    ]
    return TransferReport(
        base=base_report,
        cover=cover_report,
        consistent=not mism,
        mismatches=mism,
    )
