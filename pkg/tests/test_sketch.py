import pytest
from hypothesis import given

from conftest import regexes
from rexsynth.regex import RegexSyntaxError, parse_regex
from rexsynth.sketch import (
    CLASS_MARKER,
    SConcrete,
    SHole,
    SOp,
    SRep,
    normalize,
    parse_sketch,
    print_sketch,
    sketch_of_regex,
)


class TestSyntax:
    @pytest.mark.parametrize(
        "text",
        [
            "?{<num>}",
            "?2{<num>,<,>}",
            "Concat(?{<num>,<,>},?{RepeatRange(<num>,1,3),<,>})",
            "Not(?1{<,>,RepeatRange(<num>,1,3)})",
            "Repeat(?{<num>},3)",
            "?{Concat(<let>,<num>)}",
            "?3{@classes}",
            "?2{@classes,<num>}",
            "Or(<num>,?{<let>})",
        ],
    )
    def test_round_trip(self, text):
        assert print_sketch(parse_sketch(text)) == text

    def test_concrete_regex_is_a_sketch(self):
        s = parse_sketch("Repeat(<num>,3)")
        assert isinstance(s, (SConcrete, SRep))
        assert print_sketch(s) == "Repeat(<num>,3)"

    def test_depth_omitted_means_default(self):
        s = parse_sketch("?{<num>}")
        assert isinstance(s, SHole) and s.depth is None
        s2 = parse_sketch("?4{<num>}")
        assert isinstance(s2, SHole) and s2.depth == 4

    def test_class_marker(self):
        s = parse_sketch("?2{<num>,@classes}")
        assert isinstance(s, SHole) and s.with_classes
        assert CLASS_MARKER == "@classes"

    @pytest.mark.parametrize(
        "bad",
        ["?{}", "?0{<num>}", "?2{<num>", "Concat(?{<num>})", "Repeat(?{<num>})",
         "?x{<num>}", "Quux(?{<num>})"],
    )
    def test_rejects_malformed(self, bad):
        with pytest.raises((RegexSyntaxError, ValueError)):
            parse_sketch(bad)

    def test_error_position(self):
        with pytest.raises(RegexSyntaxError, match="position"):
            parse_sketch("?2{<num>")


class TestNodes:
    def test_hints_dedupe_preserving_order(self):
        a, b = SConcrete(parse_regex("<num>")), SConcrete(parse_regex("<,>"))
        hole = SHole(2, (a, b, a))
        assert hole.hints == (a, b)

    def test_empty_hole_rejected(self):
        with pytest.raises(ValueError):
            SHole(2, ())

    def test_classes_only_hole_allowed(self):
        hole = SHole(1, (), with_classes=True)
        assert print_sketch(hole) == "?1{@classes}"

    def test_arity_checked(self):
        num = SConcrete(parse_regex("<num>"))
        with pytest.raises(ValueError):
            SOp("Concat", (num,))
        with pytest.raises(ValueError):
            SOp("Repeat", (num, num))  # repetition goes through SRep
        with pytest.raises(ValueError):
            SRep("Repeat", num, (1, 2))
        with pytest.raises(ValueError):
            SRep("RepeatRange", num, (0, 2))


class TestNormalize:
    def test_orders_hints_by_printed_text(self):
        s1 = parse_sketch("?{<num>,<,>}")
        s2 = parse_sketch("?{<,>,<num>}")
        assert print_sketch(s1) != print_sketch(s2)  # insertion order preserved
        assert print_sketch(normalize(s1)) == print_sketch(normalize(s2))

    def test_normalize_recurses(self):
        s1 = parse_sketch("Concat(?{<let>,<num>},?{<,>,<.>})")
        s2 = parse_sketch("Concat(?{<num>,<let>},?{<.>,<,>})")
        assert normalize(s1) == normalize(s2)


class TestOfRegex:
    @given(regexes)
    def test_sketch_of_regex_round_trips(self, r):
        s = sketch_of_regex(r)
        assert parse_sketch(print_sketch(s)) == s
        assert print_sketch(s) == str(r)
