"""Hierarchical sketches: regex templates with depth-bounded holes.

A hole ``?d{S1,...,Sn}`` stands for any regex built from one of its hint
sketches, or (for depth d > 1) any DSL operator whose designated child
recursively fills a depth d-1 hole while sibling positions may additionally
be any character class. Repetition operators may carry symbolic integers,
resolved later against the examples.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass

from .chars import ClassInventory, FULL_INVENTORY
from .regex import (
    BINARY_OPS,
    Cls,
    Regex,
    RegexSyntaxError,
    REPEAT_ARITY,
    REPEAT_OPS,
    Token,
    UNARY_OPS,
    _Parser,
    print_regex,
    tokenize,
)

_uid_counter = itertools.count(1)
_uid_lock = threading.Lock()


def fresh_uid() -> int:
    with _uid_lock:
        return next(_uid_counter)


@dataclass(frozen=True, slots=True)
class SymInt:
    """A symbolic integer; identity is the uid, display name is derived."""

    uid: int

    def name(self) -> str:
        return f"k{self.uid}"


class HSketch:
    """Base class for sketch nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return print_sketch(self)


@dataclass(frozen=True, slots=True)
class SConcrete(HSketch):
    regex: Regex


@dataclass(frozen=True, slots=True)
class SHole(HSketch):
    depth: int | None  # None = take the configured default at synthesis time
    hints: tuple[HSketch, ...]
    with_classes: bool = False  # hint set additionally contains every character class

    def __post_init__(self) -> None:
        if self.depth is not None and self.depth < 1:
            raise ValueError("hole depth must be >= 1")
        if not self.hints and not self.with_classes:
            raise ValueError("hole needs a nonempty hint set")
        deduped = tuple(dict.fromkeys(self.hints))
        if len(deduped) != len(self.hints):
            object.__setattr__(self, "hints", deduped)


@dataclass(frozen=True, slots=True)
class SOp(HSketch):
    """A DSL operator (non-repetition) applied to sketch children."""

    name: str
    args: tuple[HSketch, ...]

    def __post_init__(self) -> None:
        if self.name in UNARY_OPS:
            arity = 1
        elif self.name in BINARY_OPS:
            arity = 2
        else:
            raise ValueError(f"unknown sketch operator {self.name!r}")
        if len(self.args) != arity:
            raise ValueError(f"{self.name} expects {arity} argument(s)")


@dataclass(frozen=True, slots=True)
class SRep(HSketch):
    """A repetition operator with constant or symbolic integer slots."""

    name: str
    arg: HSketch
    slots: tuple[int | SymInt, ...]

    def __post_init__(self) -> None:
        if self.name not in REPEAT_OPS:
            raise ValueError(f"unknown repetition operator {self.name!r}")
        if len(self.slots) != REPEAT_ARITY[self.name]:
            raise ValueError(f"{self.name} expects {REPEAT_ARITY[self.name]} integer slot(s)")
        for slot in self.slots:
            if isinstance(slot, int) and slot < 1:
                raise ValueError("integer slots must be >= 1")


UNARY_F = ("StartsWith", "EndsWith", "Contains", "Not", "Optional", "KleeneStar")
BINARY_F = ("Concat", "Or", "And")
REPEAT_G = ("Repeat", "RepeatAtLeast", "RepeatRange")

CLASS_MARKER = "@classes"


# ---------------------------------------------------------------------------
# Concrete syntax
# ---------------------------------------------------------------------------

def print_sketch(s: HSketch) -> str:
    names: dict[int, str] = {}
    for sym in _iter_syms(s):
        if sym.uid not in names:
            names[sym.uid] = f"k{len(names) + 1}"

    def go(node: HSketch) -> str:
        if isinstance(node, SConcrete):
            return print_regex(node.regex)
        if isinstance(node, SHole):
            d = "" if node.depth is None else str(node.depth)
            parts = ([CLASS_MARKER] if node.with_classes else []) + [go(h) for h in node.hints]
            return f"?{d}{{{','.join(parts)}}}"
        if isinstance(node, SOp):
            return f"{node.name}({','.join(go(a) for a in node.args)})"
        if isinstance(node, SRep):
            slots = ",".join(
                str(sl) if isinstance(sl, int) else names[sl.uid] for sl in node.slots
            )
            return f"{node.name}({go(node.arg)},{slots})"
        raise TypeError(f"unknown sketch node {node!r}")

    return go(s)


def _iter_syms(s: HSketch):
    # yields symbolic ints in printed-text order, so names read k1, k2, ...
    if isinstance(s, SRep):
        yield from _iter_syms(s.arg)
        for slot in s.slots:
            if isinstance(slot, SymInt):
                yield slot
    elif isinstance(s, SOp):
        for a in s.args:
            yield from _iter_syms(a)
    elif isinstance(s, SHole):
        for h in s.hints:
            yield from _iter_syms(h)


class _SketchParser(_Parser):
    """Recursive-descent sketch parser; symbolic ints are numbered in preorder."""

    def __init__(self, toks: list[Token]):
        super().__init__(toks)
        self.sym_names: dict[str, SymInt] = {}

    def parse_sketch(self) -> HSketch:
        t = self.peek()
        if t.kind == "name" and isinstance(t.value, str) and t.value.startswith("?"):
            return self._parse_hole()
        if t.kind == "name" and t.value in UNARY_OPS:
            self.next()
            self.expect("punct", "(")
            arg = self.parse_sketch()
            self.expect("punct", ")")
            return _collapse(SOp(t.value, (arg,)))
        if t.kind == "name" and t.value in BINARY_OPS:
            self.next()
            self.expect("punct", "(")
            left = self.parse_sketch()
            self.expect("punct", ",")
            right = self.parse_sketch()
            self.expect("punct", ")")
            return _collapse(SOp(t.value, (left, right)))
        if t.kind == "name" and t.value in REPEAT_OPS:
            self.next()
            self.expect("punct", "(")
            arg = self.parse_sketch()
            slots: list[int | SymInt] = []
            for _ in range(REPEAT_ARITY[t.value]):
                self.expect("punct", ",")
                slots.append(self._parse_slot())
            self.expect("punct", ")")
            try:
                return _collapse(SRep(t.value, arg, tuple(slots)))
            except ValueError as e:
                raise RegexSyntaxError(str(e), t.pos) from None
        # fall back to a concrete regex leaf (class, eps, null)
        return SConcrete(self.parse_regex())

    def _parse_hole(self) -> SHole:
        t = self.next()
        head = t.value
        assert isinstance(head, str)
        depth: int | None = None
        if len(head) > 1:
            try:
                depth = int(head[1:])
            except ValueError:
                raise RegexSyntaxError(f"bad hole depth in {head!r}", t.pos) from None
        self.expect("punct", "{")
        hints: list[HSketch] = []
        with_classes = False
        while True:
            nxt = self.peek()
            if nxt.kind == "name" and nxt.value == CLASS_MARKER:
                self.next()
                with_classes = True
            else:
                hints.append(self.parse_sketch())
            if self.peek().value == ",":
                self.next()
                continue
            break
        close = self.next()
        if close.value != "}":
            raise RegexSyntaxError("expected '}' closing hole", close.pos)
        try:
            return SHole(depth, tuple(hints), with_classes)
        except ValueError as e:
            raise RegexSyntaxError(str(e), t.pos) from None

    def _parse_slot(self) -> int | SymInt:
        t = self.next()
        if t.kind == "int":
            if t.value < 1:  # type: ignore[operator]
                raise RegexSyntaxError("integer slots must be >= 1", t.pos)
            return t.value  # type: ignore[return-value]
        if t.kind == "name" and isinstance(t.value, str) and not t.value.startswith(("?", "@")):
            sym = self.sym_names.get(t.value)
            if sym is None:
                sym = SymInt(len(self.sym_names) + 1)
                self.sym_names[t.value] = sym
            return sym
        raise RegexSyntaxError("expected integer or symbolic name", t.pos)


def _collapse(node: HSketch) -> HSketch:
    """Fold operator nodes whose children are all concrete into one concrete leaf."""
    if isinstance(node, SOp) and all(isinstance(a, SConcrete) for a in node.args):
        args = tuple(a.regex for a in node.args)  # type: ignore[union-attr]
        if len(args) == 1:
            return SConcrete(UNARY_OPS[node.name](args[0]))
        return SConcrete(BINARY_OPS[node.name](args[0], args[1]))
    if (
        isinstance(node, SRep)
        and isinstance(node.arg, SConcrete)
        and all(isinstance(sl, int) for sl in node.slots)
    ):
        return SConcrete(REPEAT_OPS[node.name](node.arg.regex, *node.slots))  # type: ignore[arg-type]
    return node


def parse_sketch(text: str) -> HSketch:
    p = _SketchParser(tokenize(text, extra_punct="{}"))
    s = p.parse_sketch()
    tail = p.peek()
    if tail.kind != "end":
        raise RegexSyntaxError("trailing input after sketch", tail.pos)
    return s


def sketch_of_regex(r: Regex) -> HSketch:
    return SConcrete(r)


def resolve_depth(s: HSketch, default: int) -> HSketch:
    """Fill every unannotated hole (including inside hints) with the default depth."""
    if isinstance(s, SConcrete):
        return s
    if isinstance(s, SHole):
        return SHole(
            s.depth if s.depth is not None else default,
            tuple(resolve_depth(h, default) for h in s.hints),
            s.with_classes,
        )
    if isinstance(s, SOp):
        return SOp(s.name, tuple(resolve_depth(a, default) for a in s.args))
    if isinstance(s, SRep):
        return SRep(s.name, resolve_depth(s.arg, default), s.slots)
    raise TypeError(f"unknown sketch node {s!r}")


def normalize(s: HSketch) -> HSketch:
    """Canonical form for comparison: hints sorted by printed text."""
    if isinstance(s, SConcrete):
        return s
    if isinstance(s, SHole):
        hints = tuple(sorted((normalize(h) for h in s.hints), key=print_sketch))
        return SHole(s.depth, hints, s.with_classes)
    if isinstance(s, SOp):
        return SOp(s.name, tuple(normalize(a) for a in s.args))
    if isinstance(s, SRep):
        return SRep(s.name, normalize(s.arg), s.slots)
    raise TypeError(f"unknown sketch node {s!r}")


# ---------------------------------------------------------------------------
# Semantics: membership and bounded enumeration
# ---------------------------------------------------------------------------

def member(r: Regex, s: HSketch, inventory: ClassInventory = FULL_INVENTORY) -> bool:
    """Does regex r belong to the sketch's language of instantiations?"""
    if isinstance(s, SConcrete):
        return r == s.regex
    if isinstance(s, SOp):
        cls = BINARY_OPS.get(s.name) or UNARY_OPS[s.name]
        if type(r) is not cls:
            return False
        kids = (r.left, r.right) if s.name in BINARY_OPS else (r.arg,)  # type: ignore[attr-defined]
        return all(member(k, a, inventory) for k, a in zip(kids, s.args))
    if isinstance(s, SRep):
        if type(r) is not REPEAT_OPS[s.name]:
            return False
        values = (r.count,) if s.name != "RepeatRange" else (r.lo, r.hi)  # type: ignore[attr-defined]
        for got, want in zip(values, s.slots):
            if isinstance(want, int) and got != want:
                return False
        return member(r.arg, s.arg, inventory)  # type: ignore[attr-defined]
    if isinstance(s, SHole):
        if s.depth is None:
            raise ValueError("hole depth unresolved; call resolve_depth first")
        if s.with_classes and isinstance(r, Cls) and r.cc in inventory:
            return True
        if any(member(r, h, inventory) for h in s.hints):
            return True
        if s.depth == 1:
            return False
        child = SHole(s.depth - 1, s.hints, s.with_classes)
        sibling = SHole(s.depth - 1, s.hints, True)
        name = type(r).__name__
        if name in UNARY_F:
            return member(r.arg, child, inventory)  # type: ignore[attr-defined]
        if name in BINARY_F:
            return (
                member(r.left, child, inventory) and member(r.right, sibling, inventory)  # type: ignore[attr-defined]
                or member(r.left, sibling, inventory) and member(r.right, child, inventory)  # type: ignore[attr-defined]
            )
        if name in REPEAT_G:
            return member(r.arg, child, inventory)  # type: ignore[attr-defined]
        return False
    raise TypeError(f"unknown sketch node {s!r}")


class EnumerationLimitError(RuntimeError):
    """Bounded enumeration produced more candidates than the cap allows."""


ENUMERATION_CAP = 200_000


def enumerate_sketch(
    s: HSketch,
    int_bound: int,
    inventory: ClassInventory = FULL_INVENTORY,
    cap: int = ENUMERATION_CAP,
) -> list[Regex]:
    """All instantiations with integer constants in [1, int_bound], deduplicated.

    Deterministic order; raises EnumerationLimitError beyond ``cap`` results.
    """
    counter = [0]
    memo: dict[HSketch, list[Regex]] = {}

    def emit(seen: dict[Regex, None], r: Regex) -> None:
        if r not in seen:
            counter[0] += 1
            if counter[0] > cap:
                raise EnumerationLimitError(f"enumeration exceeds cap of {cap}")
            seen[r] = None

    def go(node: HSketch) -> list[Regex]:
        hit = memo.get(node)
        if hit is not None:
            return hit
        out: dict[Regex, None] = {}
        if isinstance(node, SConcrete):
            emit(out, node.regex)
        elif isinstance(node, SOp):
            parts = [go(a) for a in node.args]
            ctor = UNARY_OPS.get(node.name) or BINARY_OPS[node.name]
            for combo in itertools.product(*parts):
                emit(out, ctor(*combo))
        elif isinstance(node, SRep):
            for arg in go(node.arg):
                for ints in _slot_values(node.slots, int_bound):
                    try:
                        emit(out, REPEAT_OPS[node.name](arg, *ints))
                    except ValueError:
                        continue  # e.g. RepeatRange with lo > hi
        elif isinstance(node, SHole):
            if node.depth is None:
                raise ValueError("hole depth unresolved; call resolve_depth first")
            if node.with_classes:
                for cc in inventory.classes:
                    emit(out, Cls(cc))
            for h in node.hints:
                for r in go(h):
                    emit(out, r)
            if node.depth > 1:
                child = go(SHole(node.depth - 1, node.hints, node.with_classes))
                sibling = go(SHole(node.depth - 1, node.hints, True))
                for f in UNARY_F:
                    for r in child:
                        emit(out, UNARY_OPS[f](r))
                for f in BINARY_F:
                    ctor = BINARY_OPS[f]
                    for r in child:
                        for sib in sibling:
                            emit(out, ctor(r, sib))
                            emit(out, ctor(sib, r))
                for g in REPEAT_G:
                    for r in child:
                        for ints in _slot_values((SymInt(0),) * REPEAT_ARITY[g], int_bound):
                            try:
                                emit(out, REPEAT_OPS[g](r, *ints))
                            except ValueError:
                                continue
        else:
            raise TypeError(f"unknown sketch node {node!r}")
        memo[node] = result = list(out)
        return result

    return go(s)


def _slot_values(slots: tuple[int | SymInt, ...], bound: int):
    ranges = [
        [sl] if isinstance(sl, int) else list(range(1, bound + 1)) for sl in slots
    ]
    return itertools.product(*ranges)
