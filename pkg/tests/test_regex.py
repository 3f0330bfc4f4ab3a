import pytest
from hypothesis import given

import oracle
from conftest import re_fragment, regexes, short_strings
from rexsynth.chars import named
from rexsynth.regex import (
    Cls,
    KleeneStar,
    Optional,
    RegexSyntaxError,
    desugar,
    iter_nodes,
    match,
    parse_regex,
    print_regex,
    simplify,
)


class TestConcreteSyntax:
    def test_round_trip_fixed(self):
        texts = [
            "<num>",
            "<,>",
            "< >",
            "Concat(RepeatRange(<num>,1,15),Optional(Concat(<.>,RepeatRange(<num>,1,3))))",
            "Not(Or(<,>,RepeatRange(<num>,1,3)))",
            "And(StartsWith(<cap>),EndsWith(<low>))",
            "eps",
            "null",
        ]
        for text in texts:
            assert print_regex(parse_regex(text)) == text

    @given(regexes)
    def test_round_trip_random(self, r):
        assert parse_regex(print_regex(r)) == r

    def test_literal_classes(self):
        r = parse_regex("<(>")
        assert isinstance(r, Cls) and r.cc.char == "("

    @pytest.mark.parametrize(
        "bad",
        ["", "Concat(<num>)", "Repeat(<num>,0)", "RepeatRange(<num>,3,1)",
         "Foo(<num>)", "Concat(<num>,<num>", "<num> trailing"],
    )
    def test_rejects_malformed(self, bad):
        with pytest.raises(RegexSyntaxError):
            parse_regex(bad)

    def test_error_carries_position(self):
        with pytest.raises(RegexSyntaxError, match="position"):
            parse_regex("Concat(<num>,")


class TestMatchSemantics:
    def test_basics(self):
        assert match(parse_regex("Repeat(<num>,3)"), "123")
        assert not match(parse_regex("Repeat(<num>,3)"), "12")
        assert match(parse_regex("eps"), "")
        assert not match(parse_regex("null"), "")
        assert match(parse_regex("Not(<num>)"), "xy")
        assert match(parse_regex("StartsWith(<cap>)"), "Abc")
        assert not match(parse_regex("StartsWith(<cap>)"), "abc")
        assert match(parse_regex("Contains(<.>)"), "1.2")
        assert match(parse_regex("And(<hex>,<let>)"), "f")
        assert not match(parse_regex("And(<hex>,<let>)"), "5")

    def test_ascii_bounds(self):
        any_one = parse_regex("<any>")
        assert match(any_one, "\x00") and match(any_one, "\x7f")
        assert not match(any_one, "é")

    @given(regexes, short_strings)
    def test_matches_oracle(self, r, s):
        assert match(r, s) == oracle.omatch(r, s)

    @given(re_fragment, short_strings)
    def test_matches_python_re(self, r, s):
        expected = oracle.re_match(r, s)
        assert expected is not None
        assert match(r, s) == expected


class TestRewrites:
    @given(regexes, short_strings)
    def test_desugar_preserves_language(self, r, s):
        assert oracle.omatch(desugar(r), s) == oracle.omatch(r, s)

    @given(regexes, short_strings)
    def test_simplify_preserves_language(self, r, s):
        assert oracle.omatch(simplify(r), s) == oracle.omatch(r, s)

    def test_desugar_removes_sugar(self):
        r = desugar(Optional(KleeneStar(Cls(named("num")))))
        names = {type(n).__name__ for n in iter_nodes(r)}
        assert "Optional" not in names and "KleeneStar" not in names
