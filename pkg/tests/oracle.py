"""Independent reference semantics the tests check the engine against.

Membership is decided by naive denotational recursion over the AST: every
operator is interpreted directly by enumerating split points, with no
automata, no bitmask tables, and no desugaring shared with the package.
A second lane translates the Not/And-free fragment to Python's ``re`` for
cross-checking, and a brute-force evaluator interprets solver formulas by
enumerating bound variables over a finite domain.
"""
from __future__ import annotations

import itertools
import re
import string
from functools import lru_cache

from rexsynth.regex import (
    And,
    Cls,
    Concat,
    Contains,
    EndsWith,
    Eps,
    KleeneStar,
    Not,
    Null,
    Optional,
    Or,
    Regex,
    Repeat,
    RepeatAtLeast,
    RepeatRange,
    StartsWith,
)
from rexsynth.constraints import AndF, Cmp, Exists, FalseF, Formula, OrF, Term, TrueF

# class membership re-derived from the documented DSL, not from chars.py
CLASS_CHARS: dict[str, frozenset[str]] = {
    "num": frozenset(string.digits),
    "let": frozenset(string.ascii_letters),
    "cap": frozenset(string.ascii_uppercase),
    "low": frozenset(string.ascii_lowercase),
    "any": frozenset(chr(i) for i in range(128)),
    "alphanum": frozenset(string.digits + string.ascii_letters),
    "hex": frozenset(string.digits + "abcdefABCDEF"),
}


def class_members(cc) -> frozenset[str]:
    if cc.kind == "literal":
        return frozenset(cc.char)
    return CLASS_CHARS[cc.kind]


def omatch(r: Regex, s: str) -> bool:
    """Whole-string membership by direct recursion."""
    return _om(r, s)


@lru_cache(maxsize=1_000_000)
def _om(r: Regex, s: str) -> bool:
    n = len(s)
    if isinstance(r, Cls):
        return n == 1 and s in class_members(r.cc)
    if isinstance(r, Eps):
        return n == 0
    if isinstance(r, Null):
        return False
    if isinstance(r, StartsWith):
        return any(_om(r.arg, s[:i]) for i in range(n + 1))
    if isinstance(r, EndsWith):
        return any(_om(r.arg, s[i:]) for i in range(n + 1))
    if isinstance(r, Contains):
        return any(
            _om(r.arg, s[i:j]) for i in range(n + 1) for j in range(i, n + 1)
        )
    if isinstance(r, Not):
        return not _om(r.arg, s)
    if isinstance(r, Optional):
        return n == 0 or _om(r.arg, s)
    if isinstance(r, KleeneStar):
        if n == 0:
            return True
        return any(_om(r.arg, s[:i]) and _om(r, s[i:]) for i in range(1, n + 1))
    if isinstance(r, Concat):
        return any(_om(r.left, s[:i]) and _om(r.right, s[i:]) for i in range(n + 1))
    if isinstance(r, Or):
        return _om(r.left, s) or _om(r.right, s)
    if isinstance(r, And):
        return _om(r.left, s) and _om(r.right, s)
    if isinstance(r, Repeat):
        if r.count == 1:
            return _om(r.arg, s)
        rest = Repeat(r.arg, r.count - 1)
        return any(_om(r.arg, s[:i]) and _om(rest, s[i:]) for i in range(n + 1))
    if isinstance(r, RepeatAtLeast):
        return any(
            _om(Repeat(r.arg, r.count), s[:i]) and _om(KleeneStar(r.arg), s[i:])
            for i in range(n + 1)
        )
    if isinstance(r, RepeatRange):
        return any(_om(Repeat(r.arg, k), s) for k in range(r.lo, r.hi + 1))
    raise TypeError(f"unknown regex node {r!r}")


def clear_memo() -> None:
    _om.cache_clear()


# ---------------------------------------------------------------------------
# re-translation lane (fragment without Not/And)
# ---------------------------------------------------------------------------

_ANY = r"[\x00-\x7f]"
_RE_CLASS = {
    "num": "[0-9]",
    "let": "[A-Za-z]",
    "cap": "[A-Z]",
    "low": "[a-z]",
    "any": _ANY,
    "alphanum": "[0-9A-Za-z]",
    "hex": "[0-9a-fA-F]",
}


def to_python_re(r: Regex) -> str | None:
    """Pattern equivalent under re.fullmatch, or None outside the fragment."""
    if isinstance(r, Cls):
        if r.cc.kind == "literal":
            return re.escape(r.cc.char)
        return _RE_CLASS[r.cc.kind]
    if isinstance(r, Eps):
        return "(?:)"
    if isinstance(r, Null):
        return "(?!x)x"
    if isinstance(r, (Not, And)):
        return None
    sub = [to_python_re(a) for a in _args(r)]
    if any(p is None for p in sub):
        return None
    if isinstance(r, StartsWith):
        return f"(?:{sub[0]}){_ANY}*"
    if isinstance(r, EndsWith):
        return f"{_ANY}*(?:{sub[0]})"
    if isinstance(r, Contains):
        return f"{_ANY}*(?:{sub[0]}){_ANY}*"
    if isinstance(r, Optional):
        return f"(?:{sub[0]})?"
    if isinstance(r, KleeneStar):
        return f"(?:{sub[0]})*"
    if isinstance(r, Concat):
        return f"(?:{sub[0]})(?:{sub[1]})"
    if isinstance(r, Or):
        return f"(?:{sub[0]}|{sub[1]})"
    if isinstance(r, Repeat):
        return f"(?:{sub[0]}){{{r.count}}}"
    if isinstance(r, RepeatAtLeast):
        return f"(?:{sub[0]}){{{r.count},}}"
    if isinstance(r, RepeatRange):
        return f"(?:{sub[0]}){{{r.lo},{r.hi}}}"
    raise TypeError(f"unknown regex node {r!r}")


def _args(r: Regex) -> tuple[Regex, ...]:
    if isinstance(r, (StartsWith, EndsWith, Contains, Not, Optional, KleeneStar)):
        return (r.arg,)
    if isinstance(r, (Concat, Or, And)):
        return (r.left, r.right)
    if isinstance(r, (Repeat, RepeatAtLeast, RepeatRange)):
        return (r.arg,)
    return ()


def re_match(r: Regex, s: str) -> bool | None:
    pattern = to_python_re(r)
    if pattern is None:
        return None
    return re.fullmatch(pattern, s) is not None


# ---------------------------------------------------------------------------
# Bounded string universes
# ---------------------------------------------------------------------------

def universe(alphabet: str, max_len: int) -> list[str]:
    out = [""]
    for n in range(1, max_len + 1):
        out.extend("".join(t) for t in itertools.product(alphabet, repeat=n))
    return out


def shortest_difference(r1: Regex, r2: Regex, alphabet: str, max_len: int) -> str | None:
    """First string in shortlex order on which the two languages disagree."""
    for s in universe(alphabet, max_len):
        if _om(r1, s) != _om(r2, s):
            return s
    return None


# ---------------------------------------------------------------------------
# Brute-force formula evaluation
# ---------------------------------------------------------------------------

def eval_term(t: Term, env: dict) -> int:
    total = t.const
    for v, c in t.linear:
        total += c * env[v]
    for a, b, c in t.bilinear:
        total += c * env[a] * env[b]
    return total


_CMP = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


def feval(f: Formula, env: dict, hi: int) -> bool:
    """Evaluate with bound variables enumerated over 0..hi."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, FalseF):
        return False
    if isinstance(f, Cmp):
        return _CMP[f.op](eval_term(f.lhs, env), eval_term(f.rhs, env))
    if isinstance(f, AndF):
        return all(feval(a, env, hi) for a in f.args)
    if isinstance(f, OrF):
        return any(feval(a, env, hi) for a in f.args)
    if isinstance(f, Exists):
        for values in itertools.product(range(hi + 1), repeat=len(f.bound)):
            inner = {**env, **dict(zip(f.bound, values))}
            if feval(f.body, inner, hi):
                return True
        return False
    raise TypeError(f"unknown formula node {f!r}")
