"""Character classes over the ASCII alphabet.

Every class denotes a set of single characters, represented as a bitmask
over the 128 ASCII code points (bit i = chr(i)).
"""
from __future__ import annotations

import string
from dataclasses import dataclass
from functools import lru_cache

ALPHABET_SIZE = 128
FULL_MASK = (1 << ALPHABET_SIZE) - 1


def _mask_of(chars: str) -> int:
    m = 0
    for ch in chars:
        m |= 1 << ord(ch)
    return m


# Named classes in canonical order; this order is also the deterministic
# enumeration order used when a hole's hint set is widened with "every class".
NAMED_CLASSES = ("num", "let", "cap", "low", "any", "alphanum", "hex")

_NAMED_MASKS = {
    "num": _mask_of(string.digits),
    "let": _mask_of(string.ascii_letters),
    "cap": _mask_of(string.ascii_uppercase),
    "low": _mask_of(string.ascii_lowercase),
    "any": FULL_MASK,
    "alphanum": _mask_of(string.digits + string.ascii_letters),
    "hex": _mask_of(string.digits + "abcdefABCDEF"),
}


@dataclass(frozen=True, slots=True)
class CharClass:
    """A named character class or a single-character literal."""

    kind: str  # one of NAMED_CLASSES, or "literal"
    char: str = ""

    def __post_init__(self) -> None:
        if self.kind == "literal":
            if len(self.char) != 1 or ord(self.char) >= ALPHABET_SIZE:
                raise ValueError(f"literal class needs one ASCII char, got {self.char!r}")
        elif self.kind not in _NAMED_MASKS:
            raise ValueError(f"unknown character class {self.kind!r}")
        elif self.char:
            raise ValueError("named classes carry no literal char")

    @property
    def mask(self) -> int:
        return _class_mask(self.kind, self.char)

    def matches(self, ch: str) -> bool:
        return len(ch) == 1 and ord(ch) < ALPHABET_SIZE and bool(self.mask >> ord(ch) & 1)

    def text(self) -> str:
        return f"<{self.char}>" if self.kind == "literal" else f"<{self.kind}>"


@lru_cache(maxsize=None)
def _class_mask(kind: str, char: str) -> int:
    if kind == "literal":
        return 1 << ord(char)
    return _NAMED_MASKS[kind]


def literal(ch: str) -> CharClass:
    return CharClass("literal", ch)


def named(kind: str) -> CharClass:
    return CharClass(kind)


@dataclass(frozen=True, slots=True)
class ClassInventory:
    """The finite set of character classes available to enumeration/search.

    Hole expansion widens hint sets with "every character class"; since
    literals range over all of ASCII, that set is materialized against an
    inventory: the named classes plus a chosen pool of literals.
    """

    classes: tuple[CharClass, ...]

    @staticmethod
    def full() -> ClassInventory:
        lits = tuple(literal(chr(i)) for i in range(ALPHABET_SIZE))
        return ClassInventory(tuple(named(k) for k in NAMED_CLASSES) + lits)

    @staticmethod
    def from_literals(chars: str) -> ClassInventory:
        """Named classes plus the given literal characters (deduplicated, by code)."""
        pool = sorted({c for c in chars if ord(c) < ALPHABET_SIZE})
        lits = tuple(literal(c) for c in pool)
        return ClassInventory(tuple(named(k) for k in NAMED_CLASSES) + lits)

    def __contains__(self, cc: CharClass) -> bool:
        return cc in self.classes


FULL_INVENTORY = ClassInventory.full()
