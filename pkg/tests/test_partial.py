import pytest

import oracle
from rexsynth import automaton
from rexsynth.chars import ClassInventory
from rexsynth.partial import (
    PInt,
    PLeaf,
    POp,
    POpen,
    PSym,
    approximate,
    expand,
    find_open,
    is_concrete,
    materialize,
    to_regex,
)
from rexsynth.regex import Null, parse_regex
from rexsynth.sketch import SHole, SymInt, parse_sketch

NUM = parse_regex("<num>")
COMMA = parse_regex("<,>")
RR13 = parse_regex("RepeatRange(<num>,1,3)")

SMALL_INV = ClassInventory.from_literals(",1")


def hole(depth, *hint_texts, with_classes=False):
    hints = tuple(parse_sketch(t) for t in hint_texts)
    return SHole(depth, hints, with_classes)


class TestApproximationFixture:
    def test_expanded_partial_brackets(self):
        # Concat(<num>, Not(?1{<,>, RepeatRange(<num>,1,3)}))
        p = POp("Concat", (PLeaf(NUM), POp("Not", (POpen(hole(1, "<,>", "RepeatRange(<num>,1,3)")),))))
        over, under = approximate(p)
        assert automaton.equivalent(over, parse_regex("Concat(<num>,KleeneStar(<any>))"))
        assert automaton.equivalent(under, parse_regex("Concat(<num>,Not(Or(<,>,RepeatRange(<num>,1,3))))"))

    def test_concrete_is_its_own_bracket(self):
        r = parse_regex("Concat(<num>,Optional(<let>))")
        over, under = approximate(PLeaf(r))
        assert automaton.equivalent(over, r)
        assert automaton.equivalent(under, r)

    def test_deep_hole_is_top_bottom(self):
        over, under = approximate(POpen(hole(2, "<num>")))
        assert automaton.equivalent(over, parse_regex("KleeneStar(<any>)"))
        assert automaton.equivalent(under, Null())

    def test_depth_one_hole_is_or_of_hints(self):
        over, under = approximate(POpen(hole(1, "<num>", "<,>")))
        assert automaton.equivalent(over, parse_regex("Or(<num>,<,>)"))
        # no string is matched by both completions
        assert automaton.equivalent(under, Null())

    def test_symbolic_counts_widen_to_at_least_one(self):
        p = POp("Repeat", (PLeaf(NUM), PSym(SymInt(900001))))
        over, under = approximate(p)
        assert automaton.equivalent(over, parse_regex("RepeatAtLeast(<num>,1)"))
        assert automaton.equivalent(under, Null())


class TestExpand:
    def test_depth_one_yields_exactly_the_hints(self):
        p = POpen(hole(1, "<num>", "<,>"))
        succs = expand(p, (), SMALL_INV)
        texts = sorted(str(to_regex(s)) for s in succs if is_concrete(s))
        assert texts == ["<,>", "<num>"]
        assert len(succs) == 2

    def test_class_marker_adds_inventory(self):
        p = POpen(hole(1, "<num>", with_classes=True))
        succs = expand(p, (), SMALL_INV)
        texts = {str(to_regex(s)) for s in succs if is_concrete(s)}
        assert "<num>" in texts and "<,>" in texts and "<1>" in texts
        assert len(succs) == len(SMALL_INV.classes)  # hint is itself a class: deduped

    def test_deeper_hole_wraps_operators(self):
        p = POpen(hole(2, "<num>"))
        succs = expand(p, (), SMALL_INV)
        names = {s.name for s in succs if isinstance(s, POp)}
        assert {"Not", "Concat", "Or", "And", "Repeat", "RepeatAtLeast", "RepeatRange"} <= names
        # operator successors keep a depth-1 hole at the designated child
        opened = [s for s in succs if isinstance(s, POp) and find_open(s)]
        assert opened, "operator expansions must stay partial"

    def test_expansion_decrements_depth(self):
        p = POpen(hole(3, "<num>"))
        succ = next(s for s in expand(p, (), SMALL_INV) if isinstance(s, POp) and s.name == "Optional")
        child = succ.args[0]
        assert isinstance(child, POpen) and child.hole.depth == 2


class TestBracketProperty:
    # a miniature of the acceptance-suite property: every completion's
    # language sits between under and over
    def test_small_partial_bracket(self):
        p = POp("Concat", (PLeaf(COMMA), POpen(hole(1, "<num>", "RepeatRange(<num>,1,3)"))))
        over, under = approximate(p, SMALL_INV)
        completions = [s for s in expand(p, (1,), SMALL_INV) if is_concrete(s)]
        assert completions
        for c in completions:
            r = to_regex(c)
            for s in oracle.universe(",1a", 4):
                if oracle.omatch(under, s):
                    assert oracle.omatch(r, s)
                if oracle.omatch(r, s):
                    assert oracle.omatch(over, s)


class TestMaterialize:
    def test_symbolic_slots_freshened(self):
        sk = parse_sketch("RepeatRange(?{<num>},2,4)")
        p = materialize(sk)
        assert isinstance(p, POp) and p.name == "RepeatRange"
        assert isinstance(p.args[1], PInt) and p.args[1].value == 2
        assert isinstance(p.args[2], PInt) and p.args[2].value == 4

    def test_concrete_sketch_is_leaf(self):
        p = materialize(parse_sketch("Concat(<let>,<num>)"))
        assert is_concrete(p)
        assert str(to_regex(p)) == "Concat(<let>,<num>)"
