"""Worklist synthesis: sketch + examples -> ranked consistent regexes.

Candidates are explored cheapest-first, where cost counts search decisions:
every operator and leaf placement is one unit, so a composite hint taken
verbatim is as cheap as a single character class. Successors that merely fill
a leaf keep their parent's cost and are chased depth-first at once; operator
expansions re-enter the priority queue. Concrete candidates are checked
against the examples directly; open ones are expanded one hole at a time,
with successors pruned when their approximation contradicts an example.

Constant inference for one symbolic candidate can enumerate thousands of
instantiations, so inference runs as resumable streams on a second lane:
each symbolic candidate gets a small inline probe when first popped, then
rejoins a rotation of continuations that is capped to a share of the wall
time. A stream that just produced a consistent regex stays hot and is served
ahead of the rotation, since top-k bounds the total take.
"""
from __future__ import annotations

import heapq
import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator

from . import automaton
from .chars import ClassInventory, FULL_INVENTORY
from .constraints import infer_stream
from .matcher import quick_match
from .partial import (
    PNode,
    approximate,
    expand,
    find_open,
    is_concrete,
    is_symbolic,
    materialize,
    search_cost,
    to_regex,
)
from .regex import Contains, EndsWith, Regex, RepeatAtLeast, StartsWith, match
from .sketch import (
    HSketch,
    SConcrete,
    SHole,
    SOp,
    SRep,
    parse_sketch,
    resolve_depth,
)

DEFAULT_DEPTH = 3
DEFAULT_TOP_K = 5

# lane scheduling quanta; model counts keep the schedule deterministic,
# the wall-clock cap only backstops pathologically slow models
PROBE_MODELS = 16
SLICE_MODELS = 192
SLICE_SECONDS = 0.6
EXPANSIONS_PER_SLICE = 24
LANE_B_SHARE = 0.5  # cold continuations never eat more than half the wall time


@dataclass(frozen=True, slots=True)
class ExampleSet:
    positives: tuple[str, ...]
    negatives: tuple[str, ...]

    def __post_init__(self) -> None:
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            raise ValueError(f"contradictory examples: {sorted(overlap)!r}")

    @staticmethod
    def of(positives, negatives) -> "ExampleSet":
        return ExampleSet(tuple(positives), tuple(negatives))

    def extended(self, positives=(), negatives=()) -> "ExampleSet":
        return ExampleSet.of(
            self.positives + tuple(p for p in positives if p not in self.positives),
            self.negatives + tuple(n for n in negatives if n not in self.negatives),
        )


@dataclass(slots=True)
class SynthesisConfig:
    depth: int = DEFAULT_DEPTH
    top_k: int = DEFAULT_TOP_K
    timeout_s: float | None = None
    prune: bool = True
    subsumption: bool = True
    canonical_commutative: bool = True
    max_int: int | None = None  # default: longest example's length
    inventory: ClassInventory | None = None  # default: from examples and hints


@dataclass(slots=True)
class SynthesisResult:
    regexes: list[Regex] = field(default_factory=list)
    timed_out: bool = False
    explored: int = 0
    warnings: list[str] = field(default_factory=list)


class MatchMemo:
    """Per-run memo of whole-string membership checks.

    Approximations of different partials collapse onto few distinct regexes,
    and every candidate is checked against the same handful of examples, so
    most lookups repeat.
    """

    __slots__ = ("memo",)

    def __init__(self) -> None:
        self.memo: dict[tuple[Regex, str], bool] = {}

    def __call__(self, r: Regex, s: str) -> bool:
        key = (r, s)
        hit = self.memo.get(key)
        if hit is None:
            self.memo[key] = hit = quick_match(r, s)
        return hit


class MembershipCache:
    """Per-run cache of failed positive checks, with subsumption closure.

    Contains(r) rejecting s forces StartsWith(r)/EndsWith(r) to reject s;
    RepeatAtLeast(r, c) rejecting s forces every higher count to reject it.
    """

    __slots__ = ("failed", "atleast", "matcher")

    def __init__(self, matcher: Callable[[Regex, str], bool] = match) -> None:
        self.failed: set[tuple[Regex, str]] = set()
        self.atleast: dict[tuple[Regex, str], int] = {}
        self.matcher = matcher

    def accepts_positive(self, r: Regex, s: str) -> bool:
        if (r, s) in self.failed:
            return False
        if isinstance(r, RepeatAtLeast):
            c0 = self.atleast.get((r.arg, s))
            if c0 is not None and r.count >= c0:
                return False
        ok = self.matcher(r, s)
        if not ok:
            self.record_failure(r, s)
        return ok

    def record_failure(self, r: Regex, s: str) -> None:
        self.failed.add((r, s))
        if isinstance(r, Contains):
            self.failed.add((StartsWith(r.arg), s))
            self.failed.add((EndsWith(r.arg), s))
        elif isinstance(r, RepeatAtLeast):
            key = (r.arg, s)
            if r.count < self.atleast.get(key, r.count + 1):
                self.atleast[key] = r.count


def is_correct(r: Regex, examples: ExampleSet,
               cache: MembershipCache | None = None,
               matcher: Callable[[Regex, str], bool] = match) -> bool:
    check = cache.accepts_positive if cache is not None else matcher
    return all(check(r, s) for s in examples.positives) and not any(
        matcher(r, s) for s in examples.negatives
    )


def infeasible(p: PNode, examples: ExampleSet,
               inventory: ClassInventory = FULL_INVENTORY,
               cache: MembershipCache | None = None,
               approx_cache: dict[PNode, tuple[Regex, Regex]] | None = None,
               matcher: Callable[[Regex, str], bool] = match) -> bool:
    """Can no completion of p be consistent with the examples?"""
    over, under = approximate(p, inventory, approx_cache)
    check = cache.accepts_positive if cache is not None else matcher
    if any(not check(over, s) for s in examples.positives):
        return True
    return any(matcher(under, s) for s in examples.negatives)


def default_inventory(examples: ExampleSet, sketch: HSketch) -> ClassInventory:
    """Literal classes worth trying: characters seen in examples or hints."""
    chars = {c for s in examples.positives + examples.negatives for c in s}
    chars.update(_sketch_literals(sketch))
    return ClassInventory.from_literals(sorted(c for c in chars if ord(c) < 128))


def _sketch_literals(s: HSketch) -> set[str]:
    from .regex import literals_in

    if isinstance(s, SConcrete):
        return literals_in(s.regex)
    if isinstance(s, SHole):
        out: set[str] = set()
        for h in s.hints:
            out |= _sketch_literals(h)
        return out
    if isinstance(s, SOp):
        out = set()
        for a in s.args:
            out |= _sketch_literals(a)
        return out
    if isinstance(s, SRep):
        return _sketch_literals(s.arg)
    return set()


class _KillFirst:
    """Example checking for inferred models, cheapest rejection first.

    Sibling instantiations die on the same example, so whichever string
    last rejected a model moves to the front of its list.
    """

    __slots__ = ("pos", "neg")

    def __init__(self, examples: ExampleSet) -> None:
        self.pos = list(examples.positives)
        self.neg = list(examples.negatives)

    def __call__(self, r: Regex) -> bool:
        pos = self.pos
        for i, s in enumerate(pos):
            if not quick_match(r, s):
                if i:
                    pos.insert(0, pos.pop(i))
                return False
        neg = self.neg
        for i, s in enumerate(neg):
            if quick_match(r, s):
                if i:
                    neg.insert(0, neg.pop(i))
                return False
        return True


def synthesize(
    sketch: HSketch | str,
    examples: ExampleSet,
    config: SynthesisConfig | None = None,
) -> SynthesisResult:
    cfg = config or SynthesisConfig()
    if isinstance(sketch, str):
        sketch = parse_sketch(sketch)
    sketch = resolve_depth(sketch, cfg.depth)

    inventory = cfg.inventory or default_inventory(examples, sketch)
    all_lengths = [len(s) for s in examples.positives + examples.negatives]
    max_int = cfg.max_int or max(all_lengths, default=1) or 1
    matcher = MatchMemo()
    cache = MembershipCache(matcher) if cfg.subsumption else None
    approx_cache: dict[PNode, tuple[Regex, Regex]] = {}
    deadline = time.monotonic() + cfg.timeout_s if cfg.timeout_s is not None else None
    check_model = _KillFirst(examples)

    result = SynthesisResult()
    seq = itertools.count()
    heap: list[tuple[int, int, PNode]] = []
    root = materialize(sketch)
    heapq.heappush(heap, (search_cost(root), next(seq), root))
    # leaf fills keep the priority unchanged, so they are chased depth-first
    # instead of queueing behind every earlier item of the same cost
    stack: list[tuple[int, PNode]] = []
    streams: deque[Iterator[PNode]] = deque()
    hot: deque[Iterator[PNode]] = deque()  # streams whose last slice scored
    started = time.monotonic()
    lane_b_spent = 0.0

    def push_result(r: Regex) -> None:
        if cfg.top_k <= 5:
            if any(automaton.equivalent(r, prev) for prev in result.regexes):
                return
        elif any(str(r) == str(prev) for prev in result.regexes):
            return
        result.regexes.append(r)

    def over_deadline() -> bool:
        return deadline is not None and time.monotonic() > deadline

    def run_slice(stream: Iterator[PNode], budget: int) -> tuple[bool, bool]:
        """Advance one inference stream; returns (finished, fertile)."""
        produced = 0
        fertile = False
        slice_end = time.monotonic() + SLICE_SECONDS
        for cand in stream:
            r = to_regex(cand)
            if check_model(r):
                push_result(r)
                fertile = True
                if len(result.regexes) >= cfg.top_k:
                    return False, fertile
                produced = 0  # fertile: keep this stream hot
                slice_end = time.monotonic() + SLICE_SECONDS
                continue
            produced += 1
            if produced >= budget:
                return False, fertile
            if produced % 32 == 0:
                if over_deadline() or time.monotonic() > slice_end:
                    return False, fertile
        return True, fertile

    def visit_stream(stream: Iterator[PNode], budget: int) -> None:
        nonlocal lane_b_spent
        t0 = time.monotonic()
        finished, fertile = run_slice(stream, budget)
        lane_b_spent += time.monotonic() - t0
        if not finished and len(result.regexes) < cfg.top_k:
            (hot if fertile else streams).append(stream)

    pops_since_slice = 0
    while (stack or heap or streams or hot) and len(result.regexes) < cfg.top_k:
        if over_deadline():
            result.timed_out = True
            break

        if hot or streams:
            lane_a_empty = not heap and not stack
            if pops_since_slice >= EXPANSIONS_PER_SLICE or lane_a_empty:
                # fertile streams always get served; cold rotation only while
                # it has not outspent its share of the elapsed wall time
                if hot or lane_a_empty or lane_b_spent < LANE_B_SHARE * (time.monotonic() - started):
                    pops_since_slice = 0
                    visit_stream(hot.popleft() if hot else streams.popleft(), SLICE_MODELS)
                    continue

        if stack:
            cost, p = stack.pop()
        else:
            cost, _, p = heapq.heappop(heap)
        result.explored += 1
        pops_since_slice += 1

        if is_concrete(p):
            try:
                r = to_regex(p)
            except ValueError:
                continue
            if is_correct(r, examples, cache, matcher):
                push_result(r)
            continue

        if is_symbolic(p):
            fn = None
            if cfg.prune:
                fn = lambda q: infeasible(q, examples, inventory, cache, approx_cache, matcher)
            visit_stream(infer_stream(p, examples.positives, max_int, fn), PROBE_MODELS)
            continue

        path = find_open(p)
        assert path is not None
        chained: list[tuple[int, PNode]] = []
        for succ in expand(p, path, inventory, cfg.canonical_commutative):
            if cfg.prune and infeasible(succ, examples, inventory, cache, approx_cache, matcher):
                continue
            c = search_cost(succ)
            if c == cost:
                chained.append((c, succ))
            else:
                heapq.heappush(heap, (c, next(seq), succ))
        stack.extend(reversed(chained))

    return result
