"""Finite-automaton backend for the regex DSL.

Compilation is Thompson-style NFA construction over character-set masks,
with determinization where boolean structure demands it (complement for
``Not``, product for ``And``). The alphabet is partitioned on the fly into
the minterms of the masks that actually occur, so transitions stay compact.

All constructions share a state budget (default 50,000 states, overridable
via the ``REGEL_MAX_STATES`` env var); exceeding it raises
:class:`StateLimitError`, which callers treat as a soft failure.
"""
from __future__ import annotations

import os
from collections import deque
from functools import lru_cache
from typing import Iterable, Iterator

from .chars import FULL_MASK
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

DEFAULT_STATE_CAP = 50_000
STATE_CAP_ENV = "REGEL_MAX_STATES"


class StateLimitError(RuntimeError):
    """Construction would exceed the configured automaton state budget."""


def state_cap() -> int:
    raw = os.environ.get(STATE_CAP_ENV)
    if raw:
        try:
            cap = int(raw)
            if cap > 0:
                return cap
        except ValueError:
            pass
    return DEFAULT_STATE_CAP


class _Budget:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n

    def take(self, n: int = 1) -> None:
        self.left -= n
        if self.left < 0:
            raise StateLimitError(f"automaton state budget exceeded (cap {state_cap()})")


def minterms(masks: Iterable[int]) -> list[int]:
    """Partition the alphabet into the atoms generated by the given masks."""
    atoms = [FULL_MASK]
    for m in masks:
        split: list[int] = []
        for a in atoms:
            inside = a & m
            outside = a & ~m
            if inside:
                split.append(inside)
            if outside:
                split.append(outside)
        atoms = split
    return atoms


def _min_char(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


class Dfa:
    """Deterministic automaton; missing transitions go to an implicit sink."""

    __slots__ = ("n", "start", "accepting", "trans")

    def __init__(
        self,
        n: int,
        start: int,
        accepting: frozenset[int],
        trans: tuple[tuple[tuple[int, int], ...], ...],
    ):
        self.n = n
        self.start = start
        self.accepting = accepting
        self.trans = trans

    def step(self, state: int, ch: str) -> int | None:
        code = ord(ch)
        if code >= 128:
            return None
        bit = 1 << code
        for mask, dst in self.trans[state]:
            if mask & bit:
                return dst
        return None

    def accepts(self, s: str) -> bool:
        state: int | None = self.start
        for ch in s:
            state = self.step(state, ch)
            if state is None:
                return False
        return state in self.accepting

    def reachable(self) -> list[int]:
        seen = [False] * self.n
        seen[self.start] = True
        order = [self.start]
        queue = deque([self.start])
        while queue:
            q = queue.popleft()
            for _, dst in self.trans[q]:
                if not seen[dst]:
                    seen[dst] = True
                    order.append(dst)
                    queue.append(dst)
        return order


# ---------------------------------------------------------------------------
# NFA construction
# ---------------------------------------------------------------------------

class _Builder:
    """Grows one NFA; states are integers, fragments are (start, accepts)."""

    def __init__(self, budget: _Budget):
        self.budget = budget
        self.trans: list[list[tuple[int, int]]] = []
        self.eps: list[list[int]] = []

    def state(self) -> int:
        self.budget.take()
        self.trans.append([])
        self.eps.append([])
        return len(self.trans) - 1

    def edge(self, src: int, mask: int, dst: int) -> None:
        self.trans[src].append((mask, dst))

    def link(self, src: int, dst: int) -> None:
        self.eps[src].append(dst)

    def build(self, r: Regex) -> tuple[int, list[int]]:
        if isinstance(r, Cls):
            s, t = self.state(), self.state()
            self.edge(s, r.cc.mask, t)
            return s, [t]
        if isinstance(r, Eps):
            s = self.state()
            return s, [s]
        if isinstance(r, Null):
            return self.state(), []
        if isinstance(r, Concat):
            s1, a1 = self.build(r.left)
            s2, a2 = self.build(r.right)
            for q in a1:
                self.link(q, s2)
            return s1, a2
        if isinstance(r, Or):
            s = self.state()
            s1, a1 = self.build(r.left)
            s2, a2 = self.build(r.right)
            self.link(s, s1)
            self.link(s, s2)
            return s, a1 + a2
        if isinstance(r, Optional):
            s = self.state()
            s1, a1 = self.build(r.arg)
            self.link(s, s1)
            return s, [s] + a1
        if isinstance(r, KleeneStar):
            s = self.state()
            s1, a1 = self.build(r.arg)
            self.link(s, s1)
            for q in a1:
                self.link(q, s)
            return s, [s]
        if isinstance(r, Repeat):
            return self._chain(r.arg, r.count)
        if isinstance(r, RepeatAtLeast):
            s, acc = self._chain(r.arg, r.count)
            ls = self.state()
            ls1, la = self.build(r.arg)
            self.link(ls, ls1)
            for q in la:
                self.link(q, ls)
            for q in acc:
                self.link(q, ls)
            return s, [ls]
        if isinstance(r, RepeatRange):
            s, acc = self._chain(r.arg, r.lo)
            for _ in range(r.hi - r.lo):
                s2, a2 = self.build(r.arg)
                for q in acc:
                    self.link(q, s2)
                acc = acc + a2
            return s, acc
        if isinstance(r, StartsWith):
            s, acc = self.build(r.arg)
            t = self._any_loop()
            for q in acc:
                self.link(q, t)
            return s, [t]
        if isinstance(r, EndsWith):
            t = self._any_loop()
            s, acc = self.build(r.arg)
            self.link(t, s)
            return t, acc
        if isinstance(r, Contains):
            h = self._any_loop()
            s, acc = self.build(r.arg)
            t = self._any_loop()
            self.link(h, s)
            for q in acc:
                self.link(q, t)
            return h, [t]
        if isinstance(r, Not):
            dfa = _determinize_fragment(self, *self.build(r.arg))
            return self._embed(_complement(dfa, self.budget))
        if isinstance(r, And):
            d1 = _determinize_fragment(self, *self.build(r.left))
            d2 = _determinize_fragment(self, *self.build(r.right))
            return self._embed(_intersect(d1, d2, self.budget))
        raise TypeError(f"cannot compile {r!r}")

    def _chain(self, arg: Regex, k: int) -> tuple[int, list[int]]:
        start, acc = self.build(arg)
        for _ in range(k - 1):
            s2, a2 = self.build(arg)
            for q in acc:
                self.link(q, s2)
            acc = a2
        return start, acc

    def _any_loop(self) -> int:
        s = self.state()
        self.edge(s, FULL_MASK, s)
        return s

    def _embed(self, dfa: Dfa) -> tuple[int, list[int]]:
        base = len(self.trans)
        for q in range(dfa.n):
            self.state()
        for q in range(dfa.n):
            for mask, dst in dfa.trans[q]:
                self.edge(base + q, mask, base + dst)
        return base + dfa.start, [base + q for q in dfa.accepting]


def _eps_closure(builder: _Builder, states: Iterable[int]) -> frozenset[int]:
    out = set(states)
    stack = list(out)
    while stack:
        q = stack.pop()
        for nxt in builder.eps[q]:
            if nxt not in out:
                out.add(nxt)
                stack.append(nxt)
    return frozenset(out)


def _determinize_fragment(builder: _Builder, start: int, accepts: list[int]) -> Dfa:
    accept_set = set(accepts)
    budget = builder.budget
    init = _eps_closure(builder, [start])
    ids: dict[frozenset[int], int] = {init: 0}
    budget.take()
    order = [init]
    trans: list[tuple[tuple[int, int], ...]] = []
    i = 0
    while i < len(order):
        subset = order[i]
        i += 1
        moves: list[tuple[int, int]] = []
        for q in sorted(subset):
            moves.extend(builder.trans[q])
        row: dict[int, int] = {}
        for atom in minterms(m for m, _ in moves):
            targets = [dst for mask, dst in moves if mask & atom]
            if not targets:
                continue
            closure = _eps_closure(builder, targets)
            nid = ids.get(closure)
            if nid is None:
                budget.take()
                nid = len(order)
                ids[closure] = nid
                order.append(closure)
            row[atom] = nid
        merged: dict[int, int] = {}
        for atom, dst in row.items():
            merged[dst] = merged.get(dst, 0) | atom
        trans.append(tuple((mask, dst) for dst, mask in sorted(merged.items())))
    accepting = frozenset(i for i, subset in enumerate(order) if subset & accept_set)
    return Dfa(len(order), 0, accepting, trans)


def _complement(dfa: Dfa, budget: _Budget) -> Dfa:
    # totalize with an explicit sink, then flip acceptance
    budget.take()
    sink = dfa.n
    trans = []
    for q in range(dfa.n):
        row = list(dfa.trans[q])
        rest = FULL_MASK
        for mask, _ in row:
            rest &= ~mask
        if rest:
            row.append((rest, sink))
        trans.append(tuple(row))
    trans.append(((FULL_MASK, sink),))
    accepting = frozenset(q for q in range(dfa.n + 1) if q not in dfa.accepting)
    return Dfa(dfa.n + 1, dfa.start, accepting, tuple(trans))


def _intersect(d1: Dfa, d2: Dfa, budget: _Budget) -> Dfa:
    ids: dict[tuple[int, int], int] = {(d1.start, d2.start): 0}
    budget.take()
    order = [(d1.start, d2.start)]
    trans: list[tuple[tuple[int, int], ...]] = []
    i = 0
    while i < len(order):
        q1, q2 = order[i]
        i += 1
        row: dict[int, int] = {}
        pairs = list(d1.trans[q1]) + list(d2.trans[q2])
        for atom in minterms(m for m, _ in pairs):
            n1 = next((dst for mask, dst in d1.trans[q1] if mask & atom), None)
            n2 = next((dst for mask, dst in d2.trans[q2] if mask & atom), None)
            if n1 is None or n2 is None:
                continue
            key = (n1, n2)
            nid = ids.get(key)
            if nid is None:
                budget.take()
                nid = len(order)
                ids[key] = nid
                order.append(key)
            row[atom] = nid
        merged: dict[int, int] = {}
        for atom, dst in row.items():
            merged[dst] = merged.get(dst, 0) | atom
        trans.append(tuple((mask, dst) for dst, mask in sorted(merged.items())))
    accepting = frozenset(
        i for i, (q1, q2) in enumerate(order) if q1 in d1.accepting and q2 in d2.accepting
    )
    return Dfa(len(order), 0, accepting, tuple(trans))


class Nfa:
    """ε-eliminated simulation form: closure bitmasks plus per-state char edges."""

    __slots__ = ("closure", "edges", "start", "accept_mask")

    def __init__(
        self,
        closure: tuple[int, ...],
        edges: tuple[tuple[tuple[int, int], ...], ...],
        start: int,
        accept_mask: int,
    ):
        self.closure = closure
        self.edges = edges
        self.start = start
        self.accept_mask = accept_mask

    def accepts(self, s: str) -> bool:
        closure = self.closure
        edges = self.edges
        cur = closure[self.start]
        for ch in s:
            code = ord(ch)
            if code >= 128:
                return False
            bit = 1 << code
            nxt = 0
            m = cur
            while m:
                q = (m & -m).bit_length() - 1
                m &= m - 1
                for mask, dst in edges[q]:
                    if mask & bit:
                        nxt |= closure[dst]
            if not nxt:
                return False
            cur = nxt
        return bool(cur & self.accept_mask)


def _nfa_of(builder: _Builder, start: int, accepts: list[int]) -> Nfa:
    n = len(builder.trans)
    closure = [0] * n
    for q in range(n):
        seen = 1 << q
        stack = [q]
        while stack:
            x = stack.pop()
            for y in builder.eps[x]:
                b = 1 << y
                if not seen & b:
                    seen |= b
                    stack.append(y)
        closure[q] = seen
    accept_mask = 0
    for q in accepts:
        accept_mask |= 1 << q
    edges = tuple(tuple(row) for row in builder.trans)
    return Nfa(tuple(closure), edges, start, accept_mask)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32768)
def _nfa_cached(r: Regex, cap: int) -> Nfa:
    budget = _Budget(cap)
    builder = _Builder(budget)
    start, acc = builder.build(r)
    return _nfa_of(builder, start, acc)


def accepts(r: Regex, s: str) -> bool:
    """Decide whole-string membership by NFA simulation (no determinization)."""
    return _nfa_cached(r, state_cap()).accepts(s)


@lru_cache(maxsize=16384)
def _compile_cached(r: Regex, cap: int) -> Dfa:
    budget = _Budget(cap)
    builder = _Builder(budget)
    return _determinize_fragment(builder, *builder.build(r))


def compile(r: Regex) -> Dfa:  # noqa: A001 - deliberate module-level name
    """Compile a regex to a DFA deciding whole-string membership."""
    return _compile_cached(r, state_cap())


def is_empty(dfa: Dfa) -> bool:
    return not any(q in dfa.accepting for q in dfa.reachable())


def minimize(dfa: Dfa) -> Dfa:
    """Hopcroft partition refinement (on the totalized automaton)."""
    budget = _Budget(state_cap())
    total = _complement(_complement(dfa, budget), budget)  # totalize without flipping
    reach = total.reachable()
    remap = {q: i for i, q in enumerate(reach)}
    n = len(reach)
    atoms = minterms({m for q in reach for m, _ in total.trans[q]})
    delta: list[list[int]] = [[0] * len(atoms) for _ in range(n)]
    for q in reach:
        for ai, atom in enumerate(atoms):
            dst = next(dst for mask, dst in total.trans[q] if mask & atom)
            delta[remap[q]][ai] = remap[dst]
    inverse: list[list[list[int]]] = [[[] for _ in range(n)] for _ in atoms]
    for q in range(n):
        for ai in range(len(atoms)):
            inverse[ai][delta[q][ai]].append(q)

    accepting = {remap[q] for q in reach if q in total.accepting}
    partition: list[set[int]] = []
    for block in (accepting, set(range(n)) - accepting):
        if block:
            partition.append(block)
    block_of = [0] * n
    for bi, block in enumerate(partition):
        for q in block:
            block_of[q] = bi
    work = deque((bi, ai) for bi in range(len(partition)) for ai in range(len(atoms)))
    while work:
        bi, ai = work.popleft()
        splitter = partition[bi]
        preimage: set[int] = set()
        for q in splitter:
            preimage.update(inverse[ai][q])
        touched: dict[int, set[int]] = {}
        for q in preimage:
            touched.setdefault(block_of[q], set()).add(q)
        for tb, inside in touched.items():
            block = partition[tb]
            if len(inside) == len(block):
                continue
            rest = block - inside
            small, large = (inside, rest) if len(inside) <= len(rest) else (rest, inside)
            partition[tb] = large
            nb = len(partition)
            partition.append(small)
            for q in small:
                block_of[q] = nb
            for a2 in range(len(atoms)):
                work.append((nb, a2))

    start_block = block_of[remap[total.start]]
    trans: list[tuple[tuple[int, int], ...]] = []
    for bi, block in enumerate(partition):
        rep = next(iter(block))
        merged: dict[int, int] = {}
        for ai, atom in enumerate(atoms):
            dst = block_of[delta[rep][ai]]
            merged[dst] = merged.get(dst, 0) | atom
        trans.append(tuple((mask, dst) for dst, mask in sorted(merged.items())))
    acc_blocks = frozenset(block_of[q] for q in accepting)
    out = Dfa(len(partition), start_block, acc_blocks, tuple(trans))
    return _strip_sink(out)


def _strip_sink(dfa: Dfa) -> Dfa:
    """Drop transitions into a non-accepting all-self-loop sink, if present."""
    sink = None
    for q in range(dfa.n):
        if q in dfa.accepting:
            continue
        row = dfa.trans[q]
        if len(row) == 1 and row[0] == (FULL_MASK, q):
            sink = q
            break
    if sink is None or sink == dfa.start:
        return dfa
    trans = tuple(
        tuple((m, d) for m, d in dfa.trans[q] if d != sink) for q in range(dfa.n)
    )
    return Dfa(dfa.n, dfa.start, dfa.accepting, trans)


def _diff_search(d1: Dfa, d2: Dfa, limit: int) -> Iterator[str]:
    """Shortest strings on which d1 and d2 disagree, lexicographic by code."""
    start = (d1.start, d2.start)
    parent: dict[tuple[int | None, int | None], tuple[tuple[int | None, int | None], str] | None] = {
        start: None
    }
    queue: deque[tuple[int | None, int | None]] = deque([start])
    found = 0

    def accepts(pair: tuple[int | None, int | None]) -> tuple[bool, bool]:
        q1, q2 = pair
        return (q1 in d1.accepting if q1 is not None else False,
                q2 in d2.accepting if q2 is not None else False)

    def rebuild(pair: tuple[int | None, int | None]) -> str:
        parts: list[str] = []
        cur = pair
        while parent[cur] is not None:
            cur, ch = parent[cur]  # type: ignore[misc]
            parts.append(ch)
        return "".join(reversed(parts))

    while queue and found < limit:
        pair = queue.popleft()
        a1, a2 = accepts(pair)
        if a1 != a2:
            found += 1
            yield rebuild(pair)
            # keep expanding: later mismatches may only be reachable through here
        q1, q2 = pair
        masks = []
        if q1 is not None:
            masks.extend(m for m, _ in d1.trans[q1])
        if q2 is not None:
            masks.extend(m for m, _ in d2.trans[q2])
        atoms = sorted(minterms(masks), key=_min_char)
        for atom in atoms:
            n1 = None
            if q1 is not None:
                n1 = next((dst for mask, dst in d1.trans[q1] if mask & atom), None)
            n2 = None
            if q2 is not None:
                n2 = next((dst for mask, dst in d2.trans[q2] if mask & atom), None)
            if n1 is None and n2 is None:
                continue
            nxt = (n1, n2)
            if nxt not in parent:
                parent[nxt] = (pair, chr(_min_char(atom)))
                queue.append(nxt)


def distinguishing_strings(r1: Regex, r2: Regex, limit: int) -> list[str]:
    """Up to ``limit`` shortest strings in the symmetric difference of the languages."""
    d1 = minimize(compile(r1))
    d2 = minimize(compile(r2))
    return list(_diff_search(d1, d2, limit))


def distinguishing_string(r1: Regex, r2: Regex) -> str | None:
    out = distinguishing_strings(r1, r2, 1)
    return out[0] if out else None


def equivalent(r1: Regex, r2: Regex) -> bool:
    return distinguishing_string(r1, r2) is None
