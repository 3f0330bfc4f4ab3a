"""Direct whole-string matching without automaton construction.

For one candidate checked against a handful of short examples, building an
NFA costs far more than the check itself. This backend computes, per regex
node and start position, the bitmask of reachable end positions; membership
is one bit test. Equivalent to the automaton semantics on every node.
"""
from __future__ import annotations

from .regex import (
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


def quick_match(r: Regex, s: str) -> bool:
    """Whole-string membership, same language as automaton-backed match."""
    n = len(s)
    ends = _Ends(s)
    return bool(ends.of(r, 0) >> n & 1)


class _Ends:
    """end-position sets as bitmasks; bit j of of(r, i) means s[i:j] in L(r)"""

    __slots__ = ("s", "n", "codes", "memo", "all_from")

    def __init__(self, s: str) -> None:
        self.s = s
        self.n = len(s)
        self.codes = [ord(c) for c in s]
        self.memo: dict[tuple[int, int], int] = {}
        # all_from[i] = bits i..n set
        full = (1 << (self.n + 1)) - 1
        self.all_from = [full ^ ((1 << i) - 1) for i in range(self.n + 1)]

    def of(self, r: Regex, i: int) -> int:
        key = (id(r), i)
        hit = self.memo.get(key)
        if hit is None:
            self.memo[key] = hit = self._compute(r, i)
        return hit

    def _compute(self, r: Regex, i: int) -> int:
        n = self.n
        if isinstance(r, Cls):
            if i < n and r.cc.mask >> self.codes[i] & 1:
                return 1 << (i + 1)
            return 0
        if isinstance(r, Eps):
            return 1 << i
        if isinstance(r, Null):
            return 0
        if isinstance(r, Concat):
            left = self.of(r.left, i)
            out = 0
            for j in _bits(left):
                out |= self.of(r.right, j)
            return out
        if isinstance(r, Or):
            return self.of(r.left, i) | self.of(r.right, i)
        if isinstance(r, And):
            return self.of(r.left, i) & self.of(r.right, i)
        if isinstance(r, Not):
            return self.all_from[i] & ~self.of(r.arg, i)
        if isinstance(r, Optional):
            return (1 << i) | self.of(r.arg, i)
        if isinstance(r, KleeneStar):
            out = 1 << i
            frontier = out
            while True:
                new = 0
                for j in _bits(frontier):
                    new |= self.of(r.arg, j)
                new &= ~out
                if not new:
                    return out
                out |= new
                frontier = new
        if isinstance(r, Repeat):
            return self._power(r.arg, i, r.count, r.count)
        if isinstance(r, RepeatAtLeast):
            # exactly count copies, then the star closure of further copies
            out = self._power(r.arg, i, r.count, r.count)
            frontier = out
            while frontier:
                new = 0
                for j in _bits(frontier):
                    new |= self.of(r.arg, j)
                frontier = new & ~out
                out |= frontier
            return out
        if isinstance(r, RepeatRange):
            return self._power(r.arg, i, r.lo, r.hi)
        if isinstance(r, StartsWith):
            some = self.of(r.arg, i)
            if not some:
                return 0
            lowest = (some & -some).bit_length() - 1
            return self.all_from[lowest]
        if isinstance(r, EndsWith):
            out = 0
            for mid in range(i, n + 1):
                out |= self.of(r.arg, mid)
            return out
        if isinstance(r, Contains):
            some = 0
            for mid in range(i, n + 1):
                some |= self.of(r.arg, mid)
            if not some:
                return 0
            lowest = (some & -some).bit_length() - 1
            return self.all_from[lowest]
        raise TypeError(f"unknown regex node {r!r}")

    def _power(self, arg: Regex, i: int, lo: int, hi: int) -> int:
        """Ends of the lo..hi-fold concatenation of arg starting at i."""
        frontier = 1 << i
        out = 0
        for k in range(1, hi + 1):
            new = 0
            for j in _bits(frontier):
                new |= self.of(arg, j)
            frontier = new
            if k >= lo:
                out |= frontier
            if not frontier:
                break
        return out


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low
