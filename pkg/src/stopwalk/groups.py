"""Group and semigroup element representations.

Three ambient structures are supported: the integer lattice Z^d, free
semigroups (finite or countable rank), and free groups on finitely many
generators.  Elements are plain hashable tuples in canonical form, so they
are immutable, totally ordered and safe to use as measure keys; all
structure-aware operations (composition, inversion, parsing) live on the
spec objects.

Canonical forms:
  * lattice point   -- tuple of ints, one per coordinate
  * semigroup word  -- tuple of generator labels (empty tuple = identity)
  * group word      -- tuple of (label, sign) pairs with sign in {+1, -1},
                       reduced so no letter is adjacent to its inverse
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Tuple, Union

from .errors import ContractError, GroupMismatchError, UndecidablePrefixError

LatticePoint = Tuple[int, ...]
SemigroupWord = Tuple[str, ...]
GroupLetter = Tuple[str, int]
GroupWord = Tuple[GroupLetter, ...]
Element = Union[LatticePoint, SemigroupWord, GroupWord]

WORD_SEP = "·"  # middle dot separating letters in text form
_INDEXED_LABEL = re.compile(r"^g(0|[1-9][0-9]*)$")


class GroupSpec:
    """Common interface of the three element families."""

    kind: str = ""

    def identity(self) -> Element:
        raise NotImplementedError

    def compose(self, a: Element, b: Element) -> Element:
        raise NotImplementedError

    def validate(self, el: Element) -> Element:
        """Return ``el`` if it is a canonical element of this spec, else raise."""
        raise NotImplementedError

    def format(self, el: Element) -> str:
        raise NotImplementedError

    def parse(self, text: str) -> Element:
        raise NotImplementedError

    def require_same(self, other: "GroupSpec") -> None:
        if self != other:
            raise GroupMismatchError(f"group specs differ: {self} vs {other}")

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class IntegerLattice(GroupSpec):
    """Z^d with componentwise addition."""

    dim: int
    kind: str = "integer-lattice"

    def __post_init__(self):
        if self.dim < 1:
            raise ContractError(f"lattice dimension must be >= 1, got {self.dim}")

    def identity(self) -> LatticePoint:
        return (0,) * self.dim

    def compose(self, a: LatticePoint, b: LatticePoint) -> LatticePoint:
        self.validate(a)
        self.validate(b)
        return tuple(x + y for x, y in zip(a, b))

    def inverse(self, a: LatticePoint) -> LatticePoint:
        self.validate(a)
        return tuple(-x for x in a)

    def left_quotient(self, a: LatticePoint, b: LatticePoint) -> LatticePoint:
        """a^{-1} b."""
        self.validate(a)
        self.validate(b)
        return tuple(y - x for x, y in zip(a, b))

    def basis(self, i: int) -> LatticePoint:
        return tuple(1 if j == i else 0 for j in range(self.dim))

    def validate(self, el) -> LatticePoint:
        if (
            not isinstance(el, tuple)
            or len(el) != self.dim
            or not all(isinstance(c, int) for c in el)
        ):
            raise ContractError(f"not a Z^{self.dim} point: {el!r}")
        return el

    def format(self, el: LatticePoint) -> str:
        return "(" + ",".join(str(c) for c in el) + ")"

    def parse(self, text: str) -> LatticePoint:
        body = text.strip()
        if not (body.startswith("(") and body.endswith(")")):
            raise ContractError(f"malformed lattice point {text!r}")
        try:
            el = tuple(int(part) for part in body[1:-1].split(","))
        except ValueError as exc:
            raise ContractError(f"malformed lattice point {text!r}") from exc
        return self.validate(el)

    def to_json(self) -> dict:
        return {"kind": self.kind, "d": self.dim}


@dataclass(frozen=True)
class FreeSemigroup(GroupSpec):
    """Free semigroup on an explicit label set, or on countably many labels.

    Countable rank is represented lazily: ``generators=None`` admits every
    indexed label ``g0, g1, ...``; only finitely many ever occur in a
    finitely supported measure.
    """

    generators: Optional[Tuple[str, ...]]
    kind: str = "free-semigroup"

    def __post_init__(self):
        if self.generators is not None:
            if len(set(self.generators)) != len(self.generators):
                raise ContractError("generator labels must be pairwise distinct")
            if not self.generators:
                raise ContractError("free semigroup needs at least one generator")
            for lab in self.generators:
                _check_label(lab)

    @property
    def infinite_rank(self) -> bool:
        return self.generators is None

    def has_label(self, label: str) -> bool:
        if self.generators is None:
            return bool(_INDEXED_LABEL.match(label))
        return label in self.generators

    def generator(self, label_or_index) -> SemigroupWord:
        if isinstance(label_or_index, int):
            if self.generators is None:
                return (f"g{label_or_index}",)
            return (self.generators[label_or_index],)
        if not self.has_label(label_or_index):
            raise ContractError(f"unknown generator {label_or_index!r}")
        return (label_or_index,)

    def word(self, labels: Iterable[str]) -> SemigroupWord:
        return self.validate(tuple(labels))

    def identity(self) -> SemigroupWord:
        return ()

    def compose(self, a: SemigroupWord, b: SemigroupWord) -> SemigroupWord:
        self.validate(a)
        self.validate(b)
        return a + b

    def validate(self, el) -> SemigroupWord:
        if not isinstance(el, tuple) or not all(
            isinstance(lab, str) and self.has_label(lab) for lab in el
        ):
            raise ContractError(f"not a word over this semigroup: {el!r}")
        return el

    def format(self, el: SemigroupWord) -> str:
        return WORD_SEP.join(el) if el else "e"

    def parse(self, text: str) -> SemigroupWord:
        body = text.strip()
        if body == "e" or body == "":
            return ()
        return self.validate(tuple(body.split(WORD_SEP)))

    def to_json(self) -> dict:
        if self.generators is None:
            return {"kind": self.kind, "generators": "countable"}
        return {"kind": self.kind, "generators": list(self.generators)}


@dataclass(frozen=True)
class FreeGroup(GroupSpec):
    """Free group on finitely many generators, elements kept reduced."""

    generators: Tuple[str, ...]
    kind: str = "free-group"

    def __post_init__(self):
        if not self.generators:
            raise ContractError("free group needs at least one generator")
        if len(set(self.generators)) != len(self.generators):
            raise ContractError("generator labels must be pairwise distinct")
        for lab in self.generators:
            _check_label(lab)

    def generator(self, label: str, power: int = 1) -> GroupWord:
        if label not in self.generators:
            raise ContractError(f"unknown generator {label!r}")
        if power not in (1, -1):
            raise ContractError("generator power must be +1 or -1")
        return ((label, power),)

    def identity(self) -> GroupWord:
        return ()

    def compose(self, a: GroupWord, b: GroupWord) -> GroupWord:
        self.validate(a)
        self.validate(b)
        return reduce_group_word(a + b)

    def inverse(self, a: GroupWord) -> GroupWord:
        self.validate(a)
        return tuple((lab, -sign) for lab, sign in reversed(a))

    def left_quotient(self, a: GroupWord, b: GroupWord) -> GroupWord:
        return self.compose(self.inverse(a), b)

    def validate(self, el) -> GroupWord:
        if not isinstance(el, tuple):
            raise ContractError(f"not a reduced word: {el!r}")
        for letter in el:
            if (
                not isinstance(letter, tuple)
                or len(letter) != 2
                or letter[0] not in self.generators
                or letter[1] not in (1, -1)
            ):
                raise ContractError(f"bad letter {letter!r} in {el!r}")
        for x, y in zip(el, el[1:]):
            if x[0] == y[0] and x[1] == -y[1]:
                raise ContractError(f"word not reduced: {el!r}")
        return el

    def format(self, el: GroupWord) -> str:
        if not el:
            return "e"
        return WORD_SEP.join(
            lab if sign == 1 else f"{lab}^-1" for lab, sign in el
        )

    def parse(self, text: str) -> GroupWord:
        body = text.strip()
        if body == "e" or body == "":
            return ()
        letters = []
        for part in body.split(WORD_SEP):
            if part.endswith("^-1"):
                letters.append((part[:-3], -1))
            else:
                letters.append((part, 1))
        word = reduce_group_word(tuple(letters))
        return self.validate(word)

    def to_json(self) -> dict:
        return {"kind": self.kind, "generators": list(self.generators)}


def _check_label(label: str) -> None:
    if not label or WORD_SEP in label or label == "e":
        raise ContractError(f"invalid generator label {label!r}")


def reduce_group_word(letters: Sequence[GroupLetter]) -> GroupWord:
    """Cancel adjacent inverse pairs; idempotent on reduced words."""
    out: list = []
    for lab, sign in letters:
        if out and out[-1][0] == lab and out[-1][1] == -sign:
            out.pop()
        else:
            out.append((lab, sign))
    return tuple(out)


def group_spec_from_json(data: Mapping) -> GroupSpec:
    kind = data.get("kind")
    if kind == "integer-lattice":
        return IntegerLattice(int(data["d"]))
    if kind == "free-semigroup":
        gens = data["generators"]
        if gens == "countable":
            return FreeSemigroup(None)
        return FreeSemigroup(tuple(gens))
    if kind == "free-group":
        return FreeGroup(tuple(data["generators"]))
    raise ContractError(f"unknown group kind {kind!r}")


# ---------------------------------------------------------------------------
# Word order on free semigroups


def word_length(word: SemigroupWord) -> int:
    return len(word)


def prefix_leq(x: SemigroupWord, y: SemigroupWord) -> bool:
    """True iff y = x h for some word h (x lies on the geodesic to y)."""
    return len(x) <= len(y) and y[: len(x)] == x


def quotient(x: SemigroupWord, y: SemigroupWord) -> Optional[SemigroupWord]:
    """The word h with y = x h, or None when x is not a prefix of y."""
    if prefix_leq(x, y):
        return y[len(x):]
    return None


@dataclass(frozen=True)
class InfiniteWord:
    """An infinite word given by finite data: an explicit prefix and an
    optional repeating period.

    With an empty period only ``len(prefix)`` letters are decidable and
    deeper queries raise UndecidablePrefixError asking for more data.
    """

    prefix: SemigroupWord
    period: SemigroupWord = ()

    def letter(self, i: int) -> str:
        if i < len(self.prefix):
            return self.prefix[i]
        if self.period:
            return self.period[(i - len(self.prefix)) % len(self.period)]
        raise UndecidablePrefixError(
            f"infinite word declared only to depth {len(self.prefix)}, "
            f"letter {i} requested",
            needed=i + 1,
        )

    def letters(self, n: int) -> SemigroupWord:
        return tuple(self.letter(i) for i in range(n))

    def starts_with(self, word: SemigroupWord) -> bool:
        return self.letters(len(word)) == word

    def segment(self, start: int, stop: int) -> SemigroupWord:
        return tuple(self.letter(i) for i in range(start, stop))

    def describe(self) -> str:
        head = WORD_SEP.join(self.prefix) if self.prefix else "e"
        if self.period:
            return f"{head}({WORD_SEP.join(self.period)})^w" if self.prefix else (
                f"({WORD_SEP.join(self.period)})^w"
            )
        return f"{head}..."


# ---------------------------------------------------------------------------
# Homomorphisms out of free semigroups


@dataclass(frozen=True)
class Homomorphism:
    """Letter-wise evaluation map from a free semigroup into a target spec."""

    source: FreeSemigroup
    target: GroupSpec
    images: Mapping[str, Element]

    def image(self, label: str) -> Element:
        try:
            return self.images[label]
        except KeyError:
            raise ContractError(f"no image assigned to letter {label!r}") from None

    def __call__(self, word: SemigroupWord) -> Element:
        out = self.target.identity()
        for lab in word:
            out = self.target.compose(out, self.image(lab))
        return out


def evaluate_hom(phi: Homomorphism, word: SemigroupWord) -> Element:
    """Evaluate the letter-image product of ``word`` in the target."""
    return phi(word)
