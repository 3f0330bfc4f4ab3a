"""Regex DSL: AST, concrete syntax, desugaring, and whole-string matching.

All operators match the *entire* string (there is no implicit search):
``StartsWith(r)`` is the language of strings with a prefix in L(r),
``Concat(a, b)`` splits the string in two, and so on. Membership is decided
by the automaton backend; see :mod:`rexsynth.automaton`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from .chars import CharClass, literal, named, NAMED_CLASSES


class Regex:
    """Base class for DSL nodes. Instances are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return print_regex(self)


@dataclass(frozen=True)
class Cls(Regex):
    cc: CharClass


@dataclass(frozen=True)
class Eps(Regex):
    pass


@dataclass(frozen=True)
class Null(Regex):
    pass


@dataclass(frozen=True)
class StartsWith(Regex):
    arg: Regex


@dataclass(frozen=True)
class EndsWith(Regex):
    arg: Regex


@dataclass(frozen=True)
class Contains(Regex):
    arg: Regex


@dataclass(frozen=True)
class Not(Regex):
    arg: Regex


@dataclass(frozen=True)
class Optional(Regex):
    arg: Regex


@dataclass(frozen=True)
class KleeneStar(Regex):
    arg: Regex


@dataclass(frozen=True)
class Concat(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Or(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class And(Regex):
    left: Regex
    right: Regex


@dataclass(frozen=True)
class Repeat(Regex):
    arg: Regex
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("Repeat count must be >= 1")


@dataclass(frozen=True)
class RepeatAtLeast(Regex):
    arg: Regex
    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("RepeatAtLeast count must be >= 1")


@dataclass(frozen=True)
class RepeatRange(Regex):
    arg: Regex
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo < 1:
            raise ValueError("RepeatRange bounds must be >= 1")
        if self.lo > self.hi:
            raise ValueError("RepeatRange needs lo <= hi")


def _node_hash(self: Regex) -> int:
    # nodes land in cache keys constantly; hash each tree once, not per lookup
    d = self.__dict__
    h = d.get("_h")
    if h is None:
        cls = self.__class__
        h = hash((cls, *[getattr(self, f) for f in cls._hash_fields]))
        d["_h"] = h
    return h


for _cls in (Cls, Eps, Null, StartsWith, EndsWith, Contains, Not, Optional,
             KleeneStar, Concat, Or, And, Repeat, RepeatAtLeast, RepeatRange):
    _cls._hash_fields = tuple(_cls.__dataclass_fields__)  # type: ignore[attr-defined]
    _cls.__hash__ = _node_hash  # type: ignore[assignment]
del _cls


UNARY_OPS = {
    "StartsWith": StartsWith,
    "EndsWith": EndsWith,
    "Contains": Contains,
    "Not": Not,
    "Optional": Optional,
    "KleeneStar": KleeneStar,
}
BINARY_OPS = {"Concat": Concat, "Or": Or, "And": And}
REPEAT_OPS = {"Repeat": Repeat, "RepeatAtLeast": RepeatAtLeast, "RepeatRange": RepeatRange}
# number of integer arguments per repetition operator
REPEAT_ARITY = {"Repeat": 1, "RepeatAtLeast": 1, "RepeatRange": 2}


def children(r: Regex) -> tuple[Regex, ...]:
    if isinstance(r, (Cls, Eps, Null)):
        return ()
    if isinstance(r, (Concat, Or, And)):
        return (r.left, r.right)
    return (r.arg,)  # type: ignore[attr-defined]


def iter_nodes(r: Regex) -> Iterator[Regex]:
    stack = [r]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def node_count(r: Regex) -> int:
    """Number of AST vertices; integer parameters are attributes, not vertices."""
    return sum(1 for _ in iter_nodes(r))


NOT_WEIGHT = 3


def search_cost(r: Regex) -> int:
    """Ranking size: like node_count, but each negation weighs NOT_WEIGHT.

    A complement has one vertex yet multiplies the candidate's semantic
    complexity; priced at 1 it floods small-first search results with
    negation tricks that match by exclusion.
    """
    return sum(NOT_WEIGHT if isinstance(n, Not) else 1 for n in iter_nodes(r))


def literals_in(r: Regex) -> set[str]:
    return {n.cc.char for n in iter_nodes(r) if isinstance(n, Cls) and n.cc.kind == "literal"}


# ---------------------------------------------------------------------------
# Concrete syntax
# ---------------------------------------------------------------------------

class RegexSyntaxError(ValueError):
    """Raised on malformed regex text; carries the offending position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


def print_regex(r: Regex) -> str:
    if isinstance(r, Cls):
        return r.cc.text()
    if isinstance(r, Eps):
        return "eps"
    if isinstance(r, Null):
        return "null"
    name = type(r).__name__
    if isinstance(r, (Concat, Or, And)):
        return f"{name}({print_regex(r.left)},{print_regex(r.right)})"
    if isinstance(r, (Repeat, RepeatAtLeast)):
        return f"{name}({print_regex(r.arg)},{r.count})"
    if isinstance(r, RepeatRange):
        return f"{name}({print_regex(r.arg)},{r.lo},{r.hi})"
    return f"{name}({print_regex(r.arg)})"  # type: ignore[attr-defined]


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # 'class' | 'name' | 'int' | 'punct' | 'end'
    value: object
    pos: int


def tokenize(text: str, *, extra_punct: str = "") -> list[Token]:
    """Shared tokenizer for regex and sketch text."""
    toks: list[Token] = []
    i, n = 0, len(text)
    punct = "()," + extra_punct
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == "<":
            # <c> single-char literal first (covers <,> <<> <>> < > ...)
            if i + 2 < n and text[i + 2] == ">":
                toks.append(Token("class", literal(text[i + 1]), i))
                i += 3
                continue
            j = text.find(">", i + 1)
            if j > i:
                name = text[i + 1 : j]
                if name in NAMED_CLASSES:
                    toks.append(Token("class", named(name), i))
                    i = j + 1
                    continue
                raise RegexSyntaxError(f"unknown character class <{name}>", i)
            raise RegexSyntaxError("unterminated character class", i)
        if ch in punct:
            toks.append(Token("punct", ch, i))
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", int(text[i:j]), i))
            i = j
            continue
        if ch.isalpha() or ch in "_?@":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_?@"):
                j += 1
            toks.append(Token("name", text[i:j], i))
            i = j
            continue
        raise RegexSyntaxError(f"unexpected character {ch!r}", i)
    toks.append(Token("end", None, n))
    return toks


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, value: object = None) -> Token:
        t = self.next()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            raise RegexSyntaxError(f"expected {want!r}", t.pos)
        return t

    def parse_regex(self) -> Regex:
        t = self.next()
        if t.kind == "class":
            return Cls(t.value)  # type: ignore[arg-type]
        if t.kind == "name":
            name = t.value
            if name == "eps":
                return Eps()
            if name == "null":
                return Null()
            if name in UNARY_OPS:
                self.expect("punct", "(")
                arg = self.parse_regex()
                self.expect("punct", ")")
                return UNARY_OPS[name](arg)
            if name in BINARY_OPS:
                self.expect("punct", "(")
                left = self.parse_regex()
                self.expect("punct", ",")
                right = self.parse_regex()
                self.expect("punct", ")")
                return BINARY_OPS[name](left, right)
            if name in REPEAT_OPS:
                self.expect("punct", "(")
                arg = self.parse_regex()
                counts = []
                for _ in range(REPEAT_ARITY[name]):
                    self.expect("punct", ",")
                    counts.append(self.parse_int())
                self.expect("punct", ")")
                try:
                    return REPEAT_OPS[name](arg, *counts)
                except ValueError as e:
                    raise RegexSyntaxError(str(e), t.pos) from None
            raise RegexSyntaxError(f"unknown operator {name!r}", t.pos)
        raise RegexSyntaxError("expected a regex", t.pos)

    def parse_int(self) -> int:
        t = self.expect("int")
        return t.value  # type: ignore[return-value]


def parse_regex(text: str) -> Regex:
    p = _Parser(tokenize(text))
    r = p.parse_regex()
    tail = p.peek()
    if tail.kind != "end":
        raise RegexSyntaxError("trailing input after regex", tail.pos)
    return r


# ---------------------------------------------------------------------------
# Desugaring and matching
# ---------------------------------------------------------------------------

def desugar(r: Regex) -> Regex:
    """Rewrite Optional/KleeneStar into the Or/RepeatAtLeast core.

    Optional(r) -> Or(eps, r); KleeneStar(r) -> Or(eps, RepeatAtLeast(r, 1)).
    RepeatAtLeast is kept primitive. Language-preserving.
    """
    if isinstance(r, Optional):
        return Or(Eps(), desugar(r.arg))
    if isinstance(r, KleeneStar):
        return Or(Eps(), RepeatAtLeast(desugar(r.arg), 1))
    if isinstance(r, (Cls, Eps, Null)):
        return r
    if isinstance(r, (Concat, Or, And)):
        return type(r)(desugar(r.left), desugar(r.right))
    if isinstance(r, (Repeat, RepeatAtLeast)):
        return type(r)(desugar(r.arg), r.count)
    if isinstance(r, RepeatRange):
        return RepeatRange(desugar(r.arg), r.lo, r.hi)
    return type(r)(desugar(r.arg))  # type: ignore[attr-defined,call-arg]


_STAR_ANY = KleeneStar(Cls(named("any")))  # the everything-language


def _rewrite(r: Regex) -> Regex | None:
    """One local language-preserving rewrite at the root, or None."""
    if isinstance(r, StartsWith):
        a = r.arg
        if isinstance(a, Null) or isinstance(a, StartsWith):
            return a
        if isinstance(a, Eps) or a == _STAR_ANY:
            return _STAR_ANY
        if isinstance(a, Concat) and a.right == _STAR_ANY:
            return StartsWith(a.left)
    elif isinstance(r, EndsWith):
        a = r.arg
        if isinstance(a, Null) or isinstance(a, EndsWith):
            return a
        if isinstance(a, Eps) or a == _STAR_ANY:
            return _STAR_ANY
        if isinstance(a, Concat) and a.left == _STAR_ANY:
            return EndsWith(a.right)
    elif isinstance(r, Contains):
        a = r.arg
        if isinstance(a, Null) or isinstance(a, Contains):
            return a
        if isinstance(a, Eps) or a == _STAR_ANY:
            return _STAR_ANY
        if isinstance(a, (StartsWith, EndsWith)):
            return Contains(a.arg)
        if isinstance(a, Concat) and a.right == _STAR_ANY:
            return Contains(a.left)
        if isinstance(a, Concat) and a.left == _STAR_ANY:
            return Contains(a.right)
    elif isinstance(r, Not):
        a = r.arg
        if isinstance(a, Not):
            return a.arg
        if isinstance(a, Null):
            return _STAR_ANY
        if a == _STAR_ANY:
            return Null()
    elif isinstance(r, Optional):
        a = r.arg
        if isinstance(a, (Null, Eps)):
            return Eps()
        if isinstance(a, (Optional, KleeneStar)) or a == _STAR_ANY:
            return a
    elif isinstance(r, KleeneStar):
        a = r.arg
        if isinstance(a, (Null, Eps)):
            return Eps()
        if isinstance(a, KleeneStar):
            return a
        if isinstance(a, Optional):
            return KleeneStar(a.arg)
    elif isinstance(r, Concat):
        a, b = r.left, r.right
        if isinstance(a, Null) or isinstance(b, Null):
            return Null()
        if isinstance(a, Eps):
            return b
        if isinstance(b, Eps):
            return a
        if a == _STAR_ANY:
            if b == _STAR_ANY:
                return a
            if isinstance(b, Concat) and b.left == _STAR_ANY:
                return b
        if b == _STAR_ANY and isinstance(a, Concat) and a.right == _STAR_ANY:
            return a
    elif isinstance(r, Or):
        a, b = r.left, r.right
        if isinstance(a, Null):
            return b
        if isinstance(b, Null):
            return a
        if a == _STAR_ANY or b == _STAR_ANY:
            return _STAR_ANY
        if a == b:
            return a
    elif isinstance(r, And):
        a, b = r.left, r.right
        if isinstance(a, Null) or isinstance(b, Null):
            return Null()
        if a == _STAR_ANY:
            return b
        if b == _STAR_ANY:
            return a
        if a == b:
            return a
    elif isinstance(r, Repeat):
        a = r.arg
        if isinstance(a, (Null, Eps, KleeneStar)):
            return a
        if r.count == 1:
            return a
    elif isinstance(r, RepeatAtLeast):
        a = r.arg
        if isinstance(a, (Null, Eps, KleeneStar)):
            return a
        if isinstance(a, Optional):
            return KleeneStar(a.arg)
    elif isinstance(r, RepeatRange):
        a = r.arg
        if isinstance(a, (Null, Eps, KleeneStar)):
            return a
        if r.lo == r.hi:
            return Repeat(a, r.lo)
    return None


@lru_cache(maxsize=65536)
def simplify(r: Regex) -> Regex:
    """Language-preserving shrink: collapse null/eps/everything patterns.

    Used on pruning approximations so that structurally different candidates
    share automata; never applied to synthesis results, whose sketch
    membership is a syntactic property.
    """
    if isinstance(r, (Cls, Eps, Null)):
        return r
    out: Regex
    if isinstance(r, (Concat, Or, And)):
        out = type(r)(simplify(r.left), simplify(r.right))
    elif isinstance(r, (Repeat, RepeatAtLeast)):
        out = type(r)(simplify(r.arg), r.count)
    elif isinstance(r, RepeatRange):
        out = RepeatRange(simplify(r.arg), r.lo, r.hi)
    else:
        out = type(r)(simplify(r.arg))  # type: ignore[attr-defined,call-arg]
    while (nxt := _rewrite(out)) is not None:
        out = nxt
    return out


def match(r: Regex, s: str) -> bool:
    """Whole-string membership test.

    Delegates to the compiled automaton; if compilation exceeds the state
    budget, falls back to direct evaluation of the matching semantics.
    """
    from . import automaton

    try:
        return automaton.accepts(r, s)
    except automaton.StateLimitError:
        return _dp_match(r, s)


def _dp_match(r: Regex, s: str) -> bool:
    """Memoized evaluation of the matching semantics over substring spans."""
    memo: dict[tuple[int, int, int, int], bool] = {}

    def m(node: Regex, i: int, j: int) -> bool:
        key = (id(node), 0, i, j)
        hit = memo.get(key)
        if hit is not None:
            return hit
        memo[key] = out = _eval(node, i, j)
        return out

    def _eval(node: Regex, i: int, j: int) -> bool:
        if isinstance(node, Cls):
            return j - i == 1 and node.cc.matches(s[i])
        if isinstance(node, Eps):
            return i == j
        if isinstance(node, Null):
            return False
        if isinstance(node, StartsWith):
            return any(m(node.arg, i, k) for k in range(i, j + 1))
        if isinstance(node, EndsWith):
            return any(m(node.arg, k, j) for k in range(i, j + 1))
        if isinstance(node, Contains):
            return any(
                m(node.arg, a, b) for a in range(i, j + 1) for b in range(a, j + 1)
            )
        if isinstance(node, Not):
            return not m(node.arg, i, j)
        if isinstance(node, Optional):
            return i == j or m(node.arg, i, j)
        if isinstance(node, KleeneStar):
            return star(node.arg, i, j)
        if isinstance(node, Concat):
            return any(m(node.left, i, k) and m(node.right, k, j) for k in range(i, j + 1))
        if isinstance(node, Or):
            return m(node.left, i, j) or m(node.right, i, j)
        if isinstance(node, And):
            return m(node.left, i, j) and m(node.right, i, j)
        if isinstance(node, Repeat):
            return exact(node.arg, node.count, i, j)
        if isinstance(node, RepeatAtLeast):
            return any(
                exact(node.arg, node.count, i, k) and star(node.arg, k, j)
                for k in range(i, j + 1)
            )
        if isinstance(node, RepeatRange):
            return any(exact(node.arg, k, i, j) for k in range(node.lo, node.hi + 1))
        raise TypeError(f"unknown node {node!r}")

    def star(node: Regex, i: int, j: int) -> bool:
        # splits must consume at least one char, so recursion shrinks the span
        key = (id(node), 1, i, j)
        hit = memo.get(key)
        if hit is not None:
            return hit
        out = i == j or any(m(node, i, k) and star(node, k, j) for k in range(i + 1, j + 1))
        memo[key] = out
        return out

    def exact(node: Regex, k: int, i: int, j: int) -> bool:
        key = (id(node), 2 + k, i, j)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if k == 0:
            out = i == j
        else:
            out = any(m(node, i, mid) and exact(node, k - 1, mid, j) for mid in range(i, j + 1))
        memo[key] = out
        return out

    return m(r, 0, len(s))
