"""Finitely supported measures with exact rational weights.

Weights are ``fractions.Fraction`` throughout, so convolution identities,
mass conservation and the counterexample equalities can be asserted with
``==`` rather than tolerances.  Zero-weight atoms are pruned on
construction and support iteration follows the canonical element order,
which keeps every output table deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Mapping, Sequence, Tuple, Union

from .errors import ContractError
from .groups import Element, GroupSpec, group_spec_from_json

Rational = Union[Fraction, int, str]


def as_fraction(value: Rational) -> Fraction:
    """Coerce ints and 'p/q' strings into Fraction; reject non-finite input."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ContractError(f"malformed rational {value!r}") from exc
    raise ContractError(f"not an exact rational: {value!r}")


def format_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


class Measure:
    """Immutable finitely supported measure on a group spec."""

    __slots__ = ("spec", "_atoms", "total_mass")

    def __init__(self, spec: GroupSpec, atoms: Mapping[Element, Rational]):
        clean: Dict[Element, Fraction] = {}
        for el, w in atoms.items():
            weight = as_fraction(w)
            if weight < 0:
                raise ContractError(f"negative weight {weight} at {el!r}")
            if weight == 0:
                continue
            clean[spec.validate(el)] = weight
        self.spec = spec
        self._atoms = clean
        self.total_mass = sum(clean.values(), Fraction(0))

    @classmethod
    def point(cls, spec: GroupSpec, el: Element, weight: Rational = 1) -> "Measure":
        return cls(spec, {el: weight})

    @classmethod
    def zero(cls, spec: GroupSpec) -> "Measure":
        return cls(spec, {})

    def __call__(self, el: Element) -> Fraction:
        return self._atoms.get(el, Fraction(0))

    def __contains__(self, el: Element) -> bool:
        return el in self._atoms

    def __len__(self) -> int:
        return len(self._atoms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Measure)
            and self.spec == other.spec
            and self._atoms == other._atoms
        )

    def __hash__(self):
        return hash((self.spec, frozenset(self._atoms.items())))

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{self.spec.format(el)}: {format_fraction(w)}" for el, w in self.items()
        )
        return f"Measure({parts or 'zero'})"

    def support(self) -> Tuple[Element, ...]:
        return tuple(sorted(self._atoms))

    def items(self) -> list:
        return sorted(self._atoms.items())

    def raw(self) -> Mapping[Element, Fraction]:
        return self._atoms

    @property
    def is_probability(self) -> bool:
        return self.total_mass == 1

    def require_probability(self) -> "Measure":
        if not self.is_probability:
            raise ContractError(
                f"expected a probability measure, total mass is "
                f"{format_fraction(self.total_mass)}"
            )
        return self

    def scale(self, factor: Rational) -> "Measure":
        c = as_fraction(factor)
        return Measure(self.spec, {el: w * c for el, w in self._atoms.items()})

    def restrict(self, inside: Callable[[Element], bool]) -> "Measure":
        """The sub-measure of atoms satisfying the predicate."""
        return Measure(
            self.spec, {el: w for el, w in self._atoms.items() if inside(el)}
        )

    def split(
        self, inside: Callable[[Element], bool]
    ) -> Tuple["Measure", "Measure"]:
        """(restriction, complement): the two pieces summing back to self."""
        hit: Dict[Element, Fraction] = {}
        miss: Dict[Element, Fraction] = {}
        for el, w in self._atoms.items():
            (hit if inside(el) else miss)[el] = w
        return Measure(self.spec, hit), Measure(self.spec, miss)


@dataclass(frozen=True)
class MeasureDeficit:
    """A truncation of an infinite-support measure with certified missing mass."""

    measure: Measure
    missing_mass: Fraction

    def __post_init__(self):
        if self.missing_mass < 0:
            raise ContractError("missing mass cannot be negative")


def convolve(mu: Measure, nu: Measure) -> Measure:
    """Product-of-independents measure: (mu*nu)(g) = sum mu(h) nu(k) over hk=g."""
    mu.spec.require_same(nu.spec)
    compose = mu.spec.compose
    out: Dict[Element, Fraction] = {}
    # outer loop over the smaller support; transforms make sizes very lopsided
    if len(mu) <= len(nu):
        for h, wh in mu.raw().items():
            for k, wk in nu.raw().items():
                g = compose(h, k)
                out[g] = out.get(g, Fraction(0)) + wh * wk
    else:
        for k, wk in nu.raw().items():
            for h, wh in mu.raw().items():
                g = compose(h, k)
                out[g] = out.get(g, Fraction(0)) + wh * wk
    return Measure(mu.spec, out)


def convolution_power(mu: Measure, n: int) -> Measure:
    """n-fold convolution of mu with itself; n = 0 gives the point mass at e."""
    if n < 0:
        raise ContractError(f"convolution power needs n >= 0, got {n}")
    acc = Measure.point(mu.spec, mu.spec.identity())
    for _ in range(n):
        acc = convolve(acc, mu)
    return acc


def mix(weights: Sequence[Rational], measures: Sequence[Measure]) -> Measure:
    """Convex (or declared sub-convex) combination of measures."""
    if len(weights) != len(measures):
        raise ContractError("weights and measures must have equal length")
    if not measures:
        raise ContractError("cannot mix an empty family")
    ws = [as_fraction(w) for w in weights]
    if any(w < 0 for w in ws):
        raise ContractError("mixture weights must be nonnegative")
    if sum(ws) > 1:
        raise ContractError(f"mixture weights sum to {sum(ws)} > 1")
    spec = measures[0].spec
    out: Dict[Element, Fraction] = {}
    for w, m in zip(ws, measures):
        spec.require_same(m.spec)
        if w == 0:
            continue
        for el, v in m.raw().items():
            out[el] = out.get(el, Fraction(0)) + w * v
    return Measure(spec, out)


def total_variation(mu: Measure, nu: Measure) -> Fraction:
    """Half the l1 distance over the union of supports."""
    mu.spec.require_same(nu.spec)
    keys = set(mu.raw()) | set(nu.raw())
    return sum((abs(mu(el) - nu(el)) for el in keys), Fraction(0)) / 2


def restrict(mu: Measure, inside: Callable[[Element], bool]) -> Measure:
    """Sub-probability restriction of mu to the predicate set."""
    return mu.restrict(inside)


# ---------------------------------------------------------------------------
# Serialization: structured records that round-trip bit-exactly.


def measure_to_json(mu: Measure) -> dict:
    return {
        "group": mu.spec.to_json(),
        "atoms": [
            {"element": mu.spec.format(el), "weight": format_fraction(w)}
            for el, w in mu.items()
        ],
    }


def measure_from_json(data: Mapping) -> Measure:
    spec = group_spec_from_json(data["group"])
    atoms: Dict[Element, Fraction] = {}
    for rec in data["atoms"]:
        el = spec.parse(rec["element"])
        if el in atoms:
            raise ContractError(f"duplicate atom {rec['element']!r}")
        atoms[el] = as_fraction(rec["weight"])
    return Measure(spec, atoms)


def deficit_to_json(md: MeasureDeficit) -> dict:
    out = measure_to_json(md.measure)
    out["missing_mass"] = format_fraction(md.missing_mass)
    return out


def deficit_from_json(data: Mapping) -> MeasureDeficit:
    return MeasureDeficit(
        measure_from_json(data), as_fraction(data.get("missing_mass", 0))
    )
