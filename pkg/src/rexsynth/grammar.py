"""Rule grammars for the natural-language front end.

A grammar file is line oriented; each rule reads

    $TARGET -> pattern items :: SemanticFn(args)   # comment

Pattern items starting with ``$`` are category slots filled by child
derivations; all other items are terminals matched against utterance
tokens. Two special terminals exist: ``@number`` matches any digit token
and ``@quoted`` matches a token the user wrote in quotes. The semantic
function builds the rule's denotation (a regex, a sketch, or an integer)
from the slot denotations.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .chars import NAMED_CLASSES, literal, named
from .regex import (
    And,
    Cls,
    Concat,
    Contains,
    EndsWith,
    KleeneStar,
    Not,
    Optional,
    Or,
    Regex,
    Repeat,
    RepeatAtLeast,
    RepeatRange,
    StartsWith,
)
from .sketch import HSketch, SConcrete, SHole, SOp, SRep, sketch_of_regex

ROOT_CATEGORY = "$ROOT"
NUMBER_TERMINAL = "@number"
QUOTED_TERMINAL = "@quoted"

# denotations: Regex | HSketch | int


class GrammarError(ValueError):
    """A malformed grammar file or rule."""


class DenotationError(ValueError):
    """A semantic function rejected its children (e.g. Repeat count 0)."""


@dataclass(frozen=True, slots=True)
class GrammarRule:
    id: str
    target: str
    pattern: tuple[str, ...]
    fn: str
    fn_args: tuple[str, ...] = ()

    @property
    def kind(self) -> str:
        return "compositional" if self.slots else "lexical"

    @property
    def slots(self) -> tuple[str, ...]:
        """Category items of the pattern, in order."""
        return tuple(it for it in self.pattern if it.startswith("$"))

    def __str__(self) -> str:
        args = f"({','.join(self.fn_args)})" if self.fn_args else ""
        return f"{self.target} -> {' '.join(self.pattern)} :: {self.fn}{args}"


@dataclass(frozen=True, slots=True)
class Grammar:
    rules: tuple[GrammarRule, ...]

    def root_rules(self) -> tuple[GrammarRule, ...]:
        return tuple(r for r in self.rules if r.target == ROOT_CATEGORY)


# semantic fn -> (min category slots, max or None for variadic)
_FN_ARITY: dict[str, tuple[int, int | None]] = {
    "IdentityFn": (1, 1),
    "IntFn": (0, 0),
    "CharClassFn": (0, 0),
    "SketchFn": (1, None),
    "SeparatedConcatFn": (3, 3),
    "ConcatFn": (2, 2),
    "OrFn": (2, 2),
    "AndFn": (2, 2),
    "NotFn": (1, 1),
    "OptionalFn": (1, 1),
    "KleeneStarFn": (1, 1),
    "ContainsFn": (1, 1),
    "StartsWithFn": (1, 1),
    "EndsWithFn": (1, 1),
    "RepeatFn": (2, 2),
    "RepeatAtLeastFn": (2, 2),
    "RepeatRangeFn": (2, 3),
}

_ITEM_RE = re.compile(r'"[^"]*"|\'[^\']*\'|\S+')
_FN_RE = re.compile(r"([A-Za-z]+)(?:\((.*)\))?$")
_ARG_RE = re.compile(r'"[^"]*"|\'[^\']*\'|[^,]+')


def _strip_comment(line: str) -> str:
    # a '#' starts a comment unless it sits inside quotes
    quote = ""
    for pos, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = ""
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:pos]
    return line


def _unquote(item: str) -> str | None:
    if len(item) >= 2 and item[0] == item[-1] and item[0] in "\"'":
        return item[1:-1]
    return None


def parse_grammar(text: str) -> Grammar:
    rules: list[GrammarRule] = []
    counters = {"lexical": 0, "compositional": 0}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue

        def fail(msg: str):
            raise GrammarError(f"line {lineno}: {msg}")

        if "->" not in line:
            fail("expected 'TARGET -> pattern :: Fn'")
        target, _, rest = line.partition("->")
        body, sep, fn_part = rest.partition("::")
        if not sep:
            fail("missing ':: SemanticFn'")
        target = target.strip()
        if not target.startswith("$"):
            fail(f"target category must start with '$', got {target!r}")
        pattern = tuple(_ITEM_RE.findall(body.strip()))
        if not pattern:
            fail("empty pattern")
        m = _FN_RE.match(fn_part.strip())
        if not m:
            fail(f"malformed semantic function {fn_part.strip()!r}")
        fn, arg_body = m.group(1), m.group(2)
        if fn not in _FN_ARITY:
            fail(f"unknown semantic function {fn!r}")
        fn_args = ()
        if arg_body:
            fn_args = tuple(a.strip() for a in _ARG_RE.findall(arg_body))

        slots = tuple(it for it in pattern if it.startswith("$"))
        lo, hi = _FN_ARITY[fn]
        if len(slots) < lo or (hi is not None and len(slots) > hi):
            want = f"{lo}" if hi == lo else f"{lo}..{hi if hi is not None else 'n'}"
            fail(f"{fn} expects {want} category slot(s), pattern has {len(slots)}")
        _validate_args(fn, fn_args, pattern, fail)

        kind = "compositional" if slots else "lexical"
        counters[kind] += 1
        rid = ("C" if slots else "L") + str(counters[kind])
        rules.append(GrammarRule(rid, target, pattern, fn, fn_args))
    return Grammar(tuple(rules))


def _validate_args(fn: str, args: tuple[str, ...], pattern: tuple[str, ...], fail) -> None:
    if fn == "CharClassFn":
        if len(args) > 1:
            fail("CharClassFn takes at most one argument")
        if args:
            name = _unquote(args[0])
            name = args[0] if name is None else name
            if name not in NAMED_CLASSES and len(name) != 1:
                fail(f"CharClassFn argument {args[0]!r} is neither a class name nor a char")
        elif QUOTED_TERMINAL not in pattern:
            fail("argument-less CharClassFn needs an @quoted terminal")
    elif fn == "IntFn":
        if args and not args[0].isdigit():
            fail("IntFn argument must be an integer")
        if not args and NUMBER_TERMINAL not in pattern:
            fail("argument-less IntFn needs an @number terminal")
    elif fn == "RepeatRangeFn":
        slots = sum(1 for it in pattern if it.startswith("$"))
        if slots == 2 and (len(args) != 1 or not args[0].isdigit()):
            fail("RepeatRangeFn with two slots needs an integer lower-bound argument")
        if slots == 3 and args:
            fail("RepeatRangeFn with three slots takes no argument")
    elif args:
        fail(f"{fn} takes no arguments")


def load_grammar(path: str | Path) -> Grammar:
    return parse_grammar(Path(path).read_text(encoding="utf-8"))


def demo_grammar_path() -> Path:
    from importlib.resources import files

    return Path(str(files("rexsynth").joinpath("data/grammar.txt")))


def demo_grammar() -> Grammar:
    return load_grammar(demo_grammar_path())


# ---------------------------------------------------------------------------
# Semantic functions
# ---------------------------------------------------------------------------

def as_sketch(x) -> HSketch:
    if isinstance(x, HSketch):
        return x
    if isinstance(x, Regex):
        return SConcrete(x)
    raise DenotationError(f"expected a regex or sketch, got {x!r}")


def to_sketch(denotation) -> HSketch | None:
    """Root denotation as a sketch; None when it is not sketch-shaped."""
    if isinstance(denotation, HSketch):
        return denotation
    if isinstance(denotation, Regex):
        return sketch_of_regex(denotation)
    return None


_UNARY_BUILDERS = {
    "NotFn": ("Not", Not),
    "OptionalFn": ("Optional", Optional),
    "KleeneStarFn": ("KleeneStar", KleeneStar),
    "ContainsFn": ("Contains", Contains),
    "StartsWithFn": ("StartsWith", StartsWith),
    "EndsWithFn": ("EndsWith", EndsWith),
}

_BINARY_BUILDERS = {
    "ConcatFn": ("Concat", Concat),
    "OrFn": ("Or", Or),
    "AndFn": ("And", And),
}

_REPEAT_BUILDERS = {
    "RepeatFn": ("Repeat", Repeat, 1),
    "RepeatAtLeastFn": ("RepeatAtLeast", RepeatAtLeast, 1),
    "RepeatRangeFn": ("RepeatRange", RepeatRange, 2),
}


def _class_of(text: str) -> Regex:
    if text in NAMED_CLASSES:
        return Cls(named(text))
    if len(text) == 1:
        return Cls(literal(text))
    if not text:
        raise DenotationError("empty literal")
    out: Regex = Cls(literal(text[0]))
    for ch in text[1:]:
        out = Concat(out, Cls(literal(ch)))
    return out


def _terminal_text(rule: GrammarRule, terminals: tuple[str, ...], special: str) -> str:
    items = [it for it in rule.pattern if not it.startswith("$")]
    for item, text in zip(items, terminals):
        if item == special:
            return text
    raise DenotationError(f"rule {rule.id} has no {special} terminal")


def apply_fn(rule: GrammarRule, children: list, terminals: tuple[str, ...]):
    """Denotation of one rule application; raises DenotationError on bad input."""
    fn = rule.fn
    try:
        if fn == "IdentityFn":
            return children[0]
        if fn == "IntFn":
            text = rule.fn_args[0] if rule.fn_args else _terminal_text(rule, terminals, NUMBER_TERMINAL)
            return int(text)
        if fn == "CharClassFn":
            if rule.fn_args:
                arg = _unquote(rule.fn_args[0])
                arg = rule.fn_args[0] if arg is None else arg
            else:
                arg = _terminal_text(rule, terminals, QUOTED_TERMINAL)
            return _class_of(arg)
        if fn == "SketchFn":
            return SHole(None, tuple(as_sketch(c) for c in children))
        if fn == "SeparatedConcatFn":
            a, sep, b = (as_sketch(c) for c in children)
            return SOp("Concat", (SHole(None, (a, sep)), SHole(None, (b, sep))))
        if fn in _UNARY_BUILDERS:
            name, ctor = _UNARY_BUILDERS[fn]
            (x,) = children
            if isinstance(x, Regex):
                return ctor(x)
            return SOp(name, (as_sketch(x),))
        if fn in _BINARY_BUILDERS:
            name, ctor = _BINARY_BUILDERS[fn]
            a, b = children
            if isinstance(a, Regex) and isinstance(b, Regex):
                return ctor(a, b)
            return SOp(name, (as_sketch(a), as_sketch(b)))
        if fn in _REPEAT_BUILDERS:
            name, ctor, n_ints = _REPEAT_BUILDERS[fn]
            ints = [c for c in children if isinstance(c, int)]
            rest = [c for c in children if not isinstance(c, int)]
            if rule.fn_args:  # pinned lower bound
                ints = [int(rule.fn_args[0])] + ints
            if len(ints) != n_ints or len(rest) != 1:
                raise DenotationError(f"{fn} got ints={ints} children={rest}")
            if n_ints == 2 and ints[0] > ints[1]:
                raise DenotationError(f"range {ints[0]}..{ints[1]} is empty")
            arg = rest[0]
            if isinstance(arg, Regex):
                return ctor(arg, *ints)
            return SRep(name, as_sketch(arg), tuple(ints))
    except DenotationError:
        raise
    except (ValueError, TypeError) as exc:
        raise DenotationError(str(exc)) from exc
    raise DenotationError(f"unknown semantic function {fn!r}")
