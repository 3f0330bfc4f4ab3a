import pytest

import oracle
from rexsynth.chars import ClassInventory
from rexsynth.regex import match, parse_regex, print_regex
from rexsynth.sketch import parse_sketch
from rexsynth.synthesis import ExampleSet, SynthesisConfig, synthesize


def texts(result):
    return [print_regex(r) for r in result.regexes]


class TestExampleSet:
    def test_contradiction_rejected(self):
        with pytest.raises(ValueError, match="contradictory"):
            ExampleSet.of(["a", "b"], ["b"])

    def test_extended_grows_monotonically(self):
        ex = ExampleSet.of(["1"], ["a"])
        ex2 = ex.extended(positives=["22"], negatives=["bb"])
        assert set(ex.positives) <= set(ex2.positives)
        assert set(ex.negatives) <= set(ex2.negatives)

    def test_extended_dedupes(self):
        ex = ExampleSet.of(["1"], []).extended(positives=["1", "2"])
        assert ex.positives == ("1", "2")

    def test_extension_may_not_contradict(self):
        ex = ExampleSet.of(["1"], [])
        with pytest.raises(ValueError):
            ex.extended(negatives=["1"])


class TestSynthesize:
    def test_consistent_concrete_sketch_returns_itself(self):
        res = synthesize("Repeat(<num>,3)", ExampleSet.of(["123"], ["12"]))
        assert texts(res) == ["Repeat(<num>,3)"]

    def test_inconsistent_concrete_sketch_returns_nothing(self):
        res = synthesize("Repeat(<num>,3)", ExampleSet.of(["12"], []))
        assert res.regexes == []

    def test_results_are_consistent_with_examples(self):
        ex = ExampleSet.of(["12", "123"], ["1", "a2"])
        res = synthesize("?2{<num>}", ex, SynthesisConfig(top_k=8))
        assert res.regexes
        for r in res.regexes:
            for s in ex.positives:
                assert oracle.omatch(r, s), (print_regex(r), s)
            for s in ex.negatives:
                assert not oracle.omatch(r, s), (print_regex(r), s)

    def test_accepts_sketch_objects(self):
        sk = parse_sketch("?2{<num>}")
        ex = ExampleSet.of(["12"], ["1"])
        assert texts(synthesize(sk, ex)) == texts(synthesize("?2{<num>}", ex))

    def test_top_k_bounds_results(self):
        ex = ExampleSet.of(["12"], [])
        res = synthesize("?3{<num>}", ex, SynthesisConfig(top_k=3))
        assert len(res.regexes) == 3

    def test_deterministic_across_runs(self):
        ex = ExampleSet.of(["1,2"], ["12"])
        cfg = SynthesisConfig(top_k=5)
        a = texts(synthesize("?3{<,>,@classes}", ex, cfg))
        b = texts(synthesize("?3{<,>,@classes}", ex, cfg))
        assert a == b and a

    def test_symbolic_counts_resolved_from_examples(self):
        ex = ExampleSet.of(["1111"], ["111", "11111"])
        res = synthesize("Repeat(?{<num>},4)", ex)
        assert "Repeat(<num>,4)" in texts(res)

    def test_timeout_zero_times_out_empty(self):
        ex = ExampleSet.of(["12,34"], ["1"])
        res = synthesize("?3{<num>,@classes}", ex, SynthesisConfig(timeout_s=0.0))
        assert res.timed_out and res.regexes == []

    def test_hole_depth_none_uses_config_depth(self):
        ex = ExampleSet.of(["111111"], [""])
        # depth 1: the bare hint <num> is the only fill, which cannot match
        res1 = synthesize("?{<num>}", ex, SynthesisConfig(depth=1))
        assert res1.regexes == []
        res2 = synthesize("?{<num>}", ex, SynthesisConfig(depth=2))
        assert res2.regexes


class TestPruning:
    CASES = [
        ("?2{<num>}", ["12"], ["1", "123"]),
        ("Concat(?2{<let>},?2{<num>})", ["ab12"], ["ab", "12"]),
        ("?2{<,>,@classes}", ["1,2"], ["12"]),
    ]

    @pytest.mark.parametrize("sketch,pos,neg", CASES)
    def test_pruning_preserves_results_and_explores_less(self, sketch, pos, neg):
        ex = ExampleSet.of(pos, neg)
        inv = ClassInventory.from_literals(",.1a")
        on = synthesize(sketch, ex, SynthesisConfig(prune=True, inventory=inv))
        off = synthesize(sketch, ex, SynthesisConfig(prune=False, inventory=inv))
        assert texts(on) == texts(off)
        assert on.explored <= off.explored

    def test_subsumption_flag_keeps_results(self):
        ex = ExampleSet.of(["1,2"], ["12"])
        on = synthesize("?2{<,>,@classes}", ex, SynthesisConfig(subsumption=True))
        off = synthesize("?2{<,>,@classes}", ex, SynthesisConfig(subsumption=False))
        assert texts(on) == texts(off)

    def test_canonical_commutative_keeps_languages(self):
        from rexsynth import automaton

        ex = ExampleSet.of(["1", "a"], [""])
        inv = ClassInventory.from_literals("1a")
        on = synthesize("?2{@classes}", ex, SynthesisConfig(canonical_commutative=True, inventory=inv, top_k=4))
        off = synthesize("?2{@classes}", ex, SynthesisConfig(canonical_commutative=False, inventory=inv, top_k=4))
        assert len(on.regexes) == len(off.regexes)
        for a, b in zip(on.regexes, off.regexes):
            assert automaton.equivalent(a, b)


class TestConfig:
    def test_max_int_defaults_to_longest_example(self):
        ex = ExampleSet.of(["11111"], [])  # longest length 5
        res = synthesize("RepeatAtLeast(?{<num>},1)", ex, SynthesisConfig(top_k=50))
        counts = [r.count for r in res.regexes if hasattr(r, "count")]
        assert counts and max(counts) <= 5

    def test_explicit_max_int_widens(self):
        ex = ExampleSet.of(["111"], ["11"])
        res = synthesize("Repeat(?{<num>},3)", ex, SynthesisConfig(max_int=10))
        assert "Repeat(<num>,3)" in texts(res)
