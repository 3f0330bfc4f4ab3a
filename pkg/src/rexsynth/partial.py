"""Partial regexes: worklist items for sketch-guided synthesis.

A partial is a regex AST whose leaves may additionally be unexpanded holes
(:class:`POpen`) or symbolic integers (:class:`PSym`). Expansion replaces the
leftmost open hole with every one-step refinement; approximation brackets a
partial's possible languages between an over- and an under-approximating
concrete regex, which is what makes early pruning sound.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

from .chars import ClassInventory, FULL_INVENTORY
from .regex import (
    And,
    BINARY_OPS,
    Cls,
    Eps,
    KleeneStar,
    Not,
    Null,
    Or,
    Regex,
    REPEAT_ARITY,
    REPEAT_OPS,
    RepeatAtLeast,
    UNARY_OPS,
    NOT_WEIGHT,
    named,
    node_count as regex_node_count,
    simplify,
)
from .sketch import (
    BINARY_F,
    HSketch,
    REPEAT_G,
    SConcrete,
    SHole,
    SOp,
    SRep,
    SymInt,
    UNARY_F,
    fresh_uid,
)

Path = tuple[int, ...]


class PNode:
    """Base class for partial-regex nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return print_partial(self)


@dataclass(frozen=True)
class PLeaf(PNode):
    regex: Regex  # fully concrete subtree


@dataclass(frozen=True)
class PInt(PNode):
    value: int


@dataclass(frozen=True)
class PSym(PNode):
    sym: SymInt


@dataclass(frozen=True)
class POpen(PNode):
    hole: SHole


@dataclass(frozen=True)
class POp(PNode):
    name: str
    args: tuple[PNode, ...]


def _pnode_hash(self: PNode) -> int:
    # partials key the shared approximation cache; hash each subtree once
    d = self.__dict__
    h = d.get("_h")
    if h is None:
        cls = self.__class__
        h = hash((cls, *[getattr(self, f) for f in cls._hash_fields]))
        d["_h"] = h
    return h


for _cls in (PLeaf, PInt, PSym, POpen, POp):
    _cls._hash_fields = tuple(_cls.__dataclass_fields__)  # type: ignore[attr-defined]
    _cls.__hash__ = _pnode_hash  # type: ignore[assignment]
del _cls


TOP = KleeneStar(Cls(named("any")))  # accepts every string


def print_partial(p: PNode) -> str:
    if isinstance(p, PLeaf):
        return str(p.regex)
    if isinstance(p, PInt):
        return str(p.value)
    if isinstance(p, PSym):
        return p.sym.name()
    if isinstance(p, POpen):
        from .sketch import print_sketch

        return print_sketch(p.hole)
    if isinstance(p, POp):
        return f"{p.name}({','.join(print_partial(a) for a in p.args)})"
    raise TypeError(f"unknown partial node {p!r}")


def children(p: PNode) -> tuple[PNode, ...]:
    return p.args if isinstance(p, POp) else ()


def iter_nodes(p: PNode) -> Iterator[PNode]:
    stack = [p]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def node_count(p: PNode) -> int:
    """AST vertex count; integer slots (concrete or symbolic) are attributes."""
    total = 0
    for node in iter_nodes(p):
        if isinstance(node, (PInt, PSym)):
            continue
        total += regex_node_count(node.regex) if isinstance(node, PLeaf) else 1
    return total


def search_cost(p: PNode) -> int:
    """Worklist priority: one unit per search decision, negations surcharged.

    A concrete leaf is one decision regardless of its internal size: leaves
    only ever enter a partial whole, as sketch fragments or hole hints, so
    their mass was authored by the user rather than searched for. Operators
    count one each (NOT_WEIGHT for Not); integer slots are attributes of
    their operator.
    """
    total = 0
    for node in iter_nodes(p):
        if isinstance(node, (PInt, PSym)):
            continue
        if isinstance(node, PLeaf):
            total += _leaf_cost(node.regex)
        elif isinstance(node, POp) and node.name == "Not":
            total += NOT_WEIGHT
        else:
            total += 1
    return total


def _leaf_cost(r: Regex) -> int:
    # negations are surcharged even when they arrive pre-built inside a hint
    return 1 + (NOT_WEIGHT - 1) * _count_nots(r)


def _count_nots(r: Regex) -> int:
    total = 1 if isinstance(r, Not) else 0
    for name in ("arg", "left", "right"):
        sub = getattr(r, name, None)
        if sub is not None:
            total += _count_nots(sub)
    return total


def is_concrete(p: PNode) -> bool:
    return all(not isinstance(n, (POpen, PSym)) for n in iter_nodes(p))


def is_symbolic(p: PNode) -> bool:
    has_sym = False
    for n in iter_nodes(p):
        if isinstance(n, POpen):
            return False
        if isinstance(n, PSym):
            has_sym = True
    return has_sym


def all_syms(p: PNode) -> list[SymInt]:
    return [n.sym for n in iter_nodes(p) if isinstance(n, PSym)]


def to_regex(p: PNode) -> Regex:
    if isinstance(p, PLeaf):
        return p.regex
    if isinstance(p, POp):
        if p.name in UNARY_OPS:
            return UNARY_OPS[p.name](to_regex(p.args[0]))
        if p.name in BINARY_OPS:
            return BINARY_OPS[p.name](to_regex(p.args[0]), to_regex(p.args[1]))
        if p.name in REPEAT_OPS:
            ints = []
            for a in p.args[1:]:
                if not isinstance(a, PInt):
                    raise ValueError(f"symbolic slot in {p.name}; not concrete")
                ints.append(a.value)
            return REPEAT_OPS[p.name](to_regex(p.args[0]), *ints)
        raise ValueError(f"unknown operator {p.name!r}")
    raise ValueError(f"{type(p).__name__} has no concrete regex")


def find_open(p: PNode) -> Path | None:
    """Path of the leftmost open hole in preorder, or None."""
    if isinstance(p, POpen):
        return ()
    if isinstance(p, POp):
        for i, a in enumerate(p.args):
            sub = find_open(a)
            if sub is not None:
                return (i, *sub)
    return None


def find_sym(p: PNode) -> SymInt | None:
    """The leftmost symbolic integer in preorder, or None."""
    for n in iter_nodes(p):
        if isinstance(n, PSym):
            return n.sym
    return None


def get_at(p: PNode, path: Path) -> PNode:
    for i in path:
        p = p.args[i]  # type: ignore[union-attr]
    return p


def substitute(p: PNode, path: Path, repl: PNode) -> PNode:
    if not path:
        return repl
    assert isinstance(p, POp)
    i, rest = path[0], path[1:]
    args = tuple(
        substitute(a, rest, repl) if j == i else a for j, a in enumerate(p.args)
    )
    return POp(p.name, args)


def substitute_sym(p: PNode, sym: SymInt, value: int) -> PNode:
    if isinstance(p, PSym) and p.sym == sym:
        return PInt(value)
    if isinstance(p, POp):
        return POp(p.name, tuple(substitute_sym(a, sym, value) for a in p.args))
    return p


def from_regex(r: Regex) -> PNode:
    """Concrete regex as a partial with operator structure exposed."""
    if isinstance(r, (Cls, Eps, Null)):
        return PLeaf(r)
    name = type(r).__name__
    if name in BINARY_OPS:
        return POp(name, (from_regex(r.left), from_regex(r.right)))  # type: ignore[attr-defined]
    if name in REPEAT_OPS:
        ints = (r.lo, r.hi) if name == "RepeatRange" else (r.count,)  # type: ignore[attr-defined]
        return POp(name, (from_regex(r.arg), *(PInt(v) for v in ints)))  # type: ignore[attr-defined]
    return POp(name, (from_regex(r.arg),))  # type: ignore[attr-defined]


def unify(p: PNode) -> PNode:
    """Push concrete leaves down to atoms so every operator is a POp."""
    if isinstance(p, PLeaf):
        return from_regex(p.regex)
    if isinstance(p, POp):
        return POp(p.name, tuple(unify(a) for a in p.args))
    return p


def materialize(s: HSketch) -> PNode:
    """Turn a sketch into a partial; symbolic ints are freshened per call."""
    fresh: dict[int, SymInt] = {}

    def go(node: HSketch) -> PNode:
        if isinstance(node, SConcrete):
            return PLeaf(node.regex)
        if isinstance(node, SHole):
            return POpen(node)
        if isinstance(node, SOp):
            return POp(node.name, tuple(go(a) for a in node.args))
        if isinstance(node, SRep):
            slots: list[PNode] = []
            for sl in node.slots:
                if isinstance(sl, int):
                    slots.append(PInt(sl))
                else:
                    if sl.uid not in fresh:
                        fresh[sl.uid] = SymInt(fresh_uid())
                    slots.append(PSym(fresh[sl.uid]))
            return POp(node.name, (go(node.arg), *slots))
        raise TypeError(f"unknown sketch node {node!r}")

    return go(s)


# wrapper pairs whose composition never changes any completion's language
# (e.g. a prefix that contains x is the same as containing x); the collapsed
# form is always derivable elsewhere in the search space, so re-deriving it
# through the stacked wrapper only duplicates work
_REDUNDANT_UNDER: dict[str, frozenset[str]] = {
    "Optional": frozenset({"Optional", "KleeneStar"}),
    "KleeneStar": frozenset({"Optional", "KleeneStar"}),
    "StartsWith": frozenset({"StartsWith", "EndsWith", "Contains"}),
    "EndsWith": frozenset({"StartsWith", "EndsWith", "Contains"}),
    "Contains": frozenset({"StartsWith", "EndsWith", "Contains"}),
    "Not": frozenset({"Not"}),
}
# under these, an Optional/KleeneStar child accepts the empty affix, so the
# wrapper matches everything; KleeneStar over the any-class covers that
# language whenever the hole can draw on the class inventory
_TOP_COLLAPSING = frozenset({"StartsWith", "EndsWith", "Contains"})
_EMPTYISH = frozenset({"Optional", "KleeneStar"})


def expand(
    p: PNode,
    path: Path,
    inventory: ClassInventory = FULL_INVENTORY,
    canonical_commutative: bool = False,
) -> list[PNode]:
    """One-step refinements of the open hole at ``path``.

    A depth-1 hole yields one successor per hint (plus one per inventory class
    when the hole carries the class marker). A deeper hole additionally yields
    every operator application whose designated child is a depth d-1 hole;
    sibling positions get the hint set widened with the class marker, and
    repetition slots get fresh symbolic integers. With
    ``canonical_commutative`` the designated child is only placed in the first
    position of Or/And, since the mirrored successor covers the same programs.
    Wrapper applications that provably duplicate an already-reachable language
    (see _REDUNDANT_UNDER) are skipped.
    """
    node = get_at(p, path)
    assert isinstance(node, POpen), "expansion target must be an open hole"
    hole = node.hole
    if hole.depth is None:
        raise ValueError("hole depth unresolved; call resolve_depth first")

    skip: frozenset[str] = frozenset()
    parent = get_at(p, path[:-1]) if path else None
    if isinstance(parent, POp):
        skip = _REDUNDANT_UNDER.get(parent.name, frozenset())
        if parent.name in _TOP_COLLAPSING and hole.with_classes:
            skip = skip | _EMPTYISH

    repls: list[PNode] = []
    for hint in hole.hints:
        repls.append(materialize(hint))
    if hole.with_classes:
        repls.extend(PLeaf(Cls(cc)) for cc in inventory.classes)

    if hole.depth > 1:
        child = POpen(SHole(hole.depth - 1, hole.hints, hole.with_classes))
        sibling = POpen(SHole(hole.depth - 1, hole.hints, True))
        for f in UNARY_F:
            if f in skip:
                continue
            repls.append(POp(f, (child,)))
        for f in BINARY_F:
            repls.append(POp(f, (child, sibling)))
            # the mirror is a distinct tree only while the designated child
            # carries a tighter hint set than its sibling
            if sibling == child:
                continue
            if not (canonical_commutative and f in ("Or", "And")):
                repls.append(POp(f, (sibling, child)))
        for g in REPEAT_G:
            slots = tuple(PSym(SymInt(fresh_uid())) for _ in range(REPEAT_ARITY[g]))
            repls.append(POp(g, (child, *slots)))

    # a hint that is itself a class would otherwise appear twice in a
    # class-widened hole; the result is a set, so drop repeats
    return [substitute(p, path, r) for r in dict.fromkeys(repls)]


# ---------------------------------------------------------------------------
# Approximation
# ---------------------------------------------------------------------------

def approximate(
    p: PNode,
    inventory: ClassInventory = FULL_INVENTORY,
    cache: dict[PNode, tuple[Regex, Regex]] | None = None,
) -> tuple[Regex, Regex]:
    """Bracket the partial: (over, under) concrete regexes.

    Every completion's language sits between the two: the over-approximation
    accepts every string some completion accepts a superset of, the
    under-approximation only strings every completion accepts.

    Candidates produced by expanding one hole share all their other subtrees,
    so callers in a search loop should pass one ``cache`` dict for the whole
    run (valid only while ``inventory`` stays fixed).
    """
    if cache is None:
        cache = {}

    def go(node: PNode) -> tuple[Regex, Regex]:
        hit = cache.get(node)
        if hit is not None:
            return hit
        o, u = _approx(node)
        # collapsing eps/null/everything patterns funnels the many junk-shaped
        # approximations onto a few shared automata
        cache[node] = out = (simplify(o), simplify(u))
        return out

    def _approx(node: PNode) -> tuple[Regex, Regex]:
        if isinstance(node, PLeaf):
            return node.regex, node.regex
        if isinstance(node, POpen):
            hole = node.hole
            if hole.depth is not None and hole.depth > 1:
                return TOP, Null()
            pairs = [go(materialize(h)) for h in hole.hints]
            overs = [o for o, _ in pairs]
            unders = [u for _, u in pairs]
            if hole.with_classes:
                overs.append(Cls(named("any")))
                # every single class is a completion; their intersection is
                # empty whenever the inventory holds two disjoint classes
                inter = _mask_intersection(inventory)
                unders.append(inter if inter is not None else Null())
            over = _fold(Or, overs) if overs else TOP
            under = _fold(And, unders) if unders else Null()
            return over, under
        if isinstance(node, POp):
            name = node.name
            if name == "Not":
                o, u = go(node.args[0])
                return Not(u), Not(o)
            if name in UNARY_OPS:
                o, u = go(node.args[0])
                ctor = UNARY_OPS[name]
                return ctor(o), ctor(u)
            if name in BINARY_OPS:
                o1, u1 = go(node.args[0])
                o2, u2 = go(node.args[1])
                ctor = BINARY_OPS[name]
                return ctor(o1, o2), ctor(u1, u2)
            if name in REPEAT_OPS:
                o1, u1 = go(node.args[0])
                slots = node.args[1:]
                if all(isinstance(s, PInt) for s in slots):
                    ints = [s.value for s in slots]  # type: ignore[union-attr]
                    if name == "RepeatRange" and ints[0] > ints[1]:
                        # crossed bounds denote no regex at all
                        return Null(), Null()
                    ctor = REPEAT_OPS[name]
                    return ctor(o1, *ints), ctor(u1, *ints)
                # unknown counts: some repetition of the body, nothing certain
                return RepeatAtLeast(o1, 1), Null()
        raise TypeError(f"cannot approximate {node!r}")

    return go(p)


def _fold(ctor: Callable[[Regex, Regex], Regex], items: list[Regex]) -> Regex:
    out = items[-1]
    for r in reversed(items[:-1]):
        out = ctor(r, out)
    return out


def _mask_intersection(inventory: ClassInventory) -> Regex | None:
    mask = ~0
    for cc in inventory.classes:
        mask &= cc.mask
    if mask == 0:
        return None
    # keep a concrete witness class only when one class equals the intersection
    for cc in inventory.classes:
        if cc.mask == mask:
            return Cls(cc)
    return None
