"""Chart parser over token spans, feature extraction, and model training."""
import math

import pytest

from rexsynth.grammar import DenotationError, apply_fn, demo_grammar, parse_grammar, to_sketch
from rexsynth.nlparser import (
    ModelParams,
    extract_features,
    load_dataset,
    load_model,
    parse_derivations,
    parse_to_sketches,
    save_model,
    sketch_key,
    tokenize_utterance,
    train,
)
from rexsynth.sketch import parse_sketch

DESK_UTT = (
    "the max number of digits before comma is 15 then accept at max 3 numbers"
)
DESK_SKETCH = "Concat(?{<num>,<,>},?{RepeatRange(<num>,1,3),<,>})"
DESK_ALT = "Concat(?{<num>},?{<,>,Repeat(<num>,3)})"

# two-derivation grammar used for the hand-checked training example
TINY_TEXT = """
$PROGRAM -> digit :: CharClassFn(num)
$PROGRAM -> exactly $INT $PROGRAM :: RepeatFn
$INT -> @number :: IntFn
$ROOT -> $PROGRAM :: IdentityFn
"""

# hand-derived feature vectors for "exactly 3 digit" under TINY_TEXT
PHI_LABEL = {
    "rule:C2": 1, "rule:C1": 1, "rule:L2": 1, "rule:L1": 1,
    "span:$ROOT:len3": 1, "span:$PROGRAM:len3": 1,
    "span:$INT:len1": 1, "span:$PROGRAM:len1": 1,
}
PHI_OTHER = {
    "rule:C2": 1, "rule:L1": 1,
    "span:$ROOT:len1": 1, "span:$PROGRAM:len1": 1,
}


class TestTokenizer:
    def test_words_lowercased_punctuation_split(self):
        toks = tokenize_utterance("Match 12 Dots, then stop.")
        assert [t.text for t in toks] == [
            "match", "12", "dots", ",", "then", "stop", ".",
        ]
        assert not any(t.quoted for t in toks)

    def test_quoted_literals_kept_verbatim(self):
        toks = tokenize_utterance('starts with "A-B" or \'x,y\'')
        assert [(t.text, t.quoted) for t in toks] == [
            ("starts", False), ("with", False), ("A-B", True),
            ("or", False), ("x,y", True),
        ]

    def test_underscores_stay_in_words(self):
        assert [t.text for t in tokenize_utterance("foo_bar baz")] == ["foo_bar", "baz"]


class TestTinyGrammarOracle:
    """A grammar small enough to check every derivation by hand."""

    def test_two_roots_with_expected_features(self):
        g = parse_grammar(TINY_TEXT)
        roots = parse_derivations("exactly 3 digit", g)
        assert len(roots) == 2
        by_span = {d.span: extract_features(d) for d in roots}
        assert by_span[(0, 3)] == PHI_LABEL
        assert by_span[(2, 3)] == PHI_OTHER
        assert all(d.rule_id == "C2" for d in roots)

    def test_uniform_probability_before_training(self):
        g = parse_grammar(TINY_TEXT)
        roots = parse_derivations("exactly 3 digit", g)
        assert [d.prob for d in roots] == [0.5, 0.5]

    def test_training_concentrates_mass_on_label(self):
        g = parse_grammar(TINY_TEXT)
        res = train([("exactly 3 digit", "Repeat(<num>,3)")], g, epochs=50)
        assert res.skipped == 0
        assert len(res.epoch_losses) == 50
        assert res.epoch_losses[-1] < res.epoch_losses[0]
        probs = {
            sketch_key(sk): p
            for sk, p in parse_to_sketches("exactly 3 digit", g, res.params)
        }
        label = sketch_key(parse_sketch("Repeat(<num>,3)"))
        assert probs[label] == pytest.approx(0.966074, abs=1e-6)

    def test_skips_items_whose_label_is_unreachable(self):
        g = parse_grammar(TINY_TEXT)
        res = train(
            [
                ("exactly 3 digit", "Repeat(<num>,3)"),
                ("exactly 3 digit", "<let>"),  # parseable utterance, wrong label
            ],
            g,
            epochs=3,
        )
        assert res.skipped == 1
        assert len(res.epoch_losses) == 3

    def test_raises_when_nothing_is_trainable(self):
        g = parse_grammar(TINY_TEXT)
        with pytest.raises(ValueError, match="no trainable item"):
            train([("colorless green ideas", "<num>")], g, epochs=2)


# ---------------------------------------------------------------------------
# Differential check: the chart equals a direct recursive enumeration
# ---------------------------------------------------------------------------

SEARCH_TEXT = """
$ROOT -> $P :: IdentityFn
$P -> digit :: CharClassFn(num)
$P -> letter :: CharClassFn(let)
$P -> $P then $P :: ConcatFn
$P -> $P or $P :: OrFn
$P -> exactly $N $P :: RepeatFn
$N -> @number :: IntFn
"""


def _tok_ok(item: str, tok) -> bool:
    if item == "@number":
        return tok.text.isdigit()
    return tok.text == item


def _span_trees(cat, i, j, g, tokens, memo):
    """Every derivation of `cat` covering exactly tokens[i:j], by brute force."""
    key = (cat, i, j)
    if key in memo:
        return memo[key]
    # seed the cell as empty: SEARCH_TEXT has no same-span cycles, so a
    # re-query while the cell is in flight can only come from a tree that
    # would have to contain itself
    memo[key] = []
    out = []
    for rule in g.rules:
        if rule.target != cat:
            continue
        for kids, terms in _arrangements(rule.pattern, 0, i, i, j, g, tokens, memo):
            try:
                den = apply_fn(rule, [k for k, _ in kids], terms)
            except DenotationError:
                continue
            out.append((den, rule.id))
    memo[key] = out
    return out


def _arrangements(items, idx, pos, i, j, g, tokens, memo):
    """(children, terminals) fillings of items[idx:]; first item anchored at i,
    the last one ending at j, tokens between items skipped for free."""
    if idx == len(items):
        if pos == j:
            yield (), ()
        return
    item = items[idx]
    starts = (i,) if idx == 0 else range(pos, j)
    for s in starts:
        if item.startswith("$"):
            for e in range(s + 1, j + 1):
                for sub in _span_trees(item, s, e, g, tokens, memo):
                    for kids, terms in _arrangements(items, idx + 1, e, i, j, g, tokens, memo):
                        yield (sub,) + kids, terms
        elif s < j and _tok_ok(item, tokens[s]):
            for kids, terms in _arrangements(items, idx + 1, s + 1, i, j, g, tokens, memo):
                yield kids, (tokens[s].text,) + terms


class TestChartAgainstBruteForce:
    @pytest.mark.parametrize(
        "utt",
        [
            "digit",
            "exactly 2 digit",
            "digit then letter or digit",
            "exactly 2 digit then letter or digit",
        ],
    )
    def test_same_derivations_without_beam(self, utt):
        g = parse_grammar(SEARCH_TEXT)
        tokens = tokenize_utterance(utt)
        memo = {}
        expected = []
        for i in range(len(tokens)):
            for j in range(i + 1, len(tokens) + 1):
                expected.extend(_span_trees("$ROOT", i, j, g, tokens, memo))
        got = parse_derivations(utt, g, beam=None, limit=None)
        assert len(got) == len(expected)
        want_keys = sorted(sketch_key(to_sketch(den)) for den, _ in expected)
        got_keys = sorted(sketch_key(to_sketch(d.denotation)) for d in got)
        assert got_keys == want_keys

    def test_beam_prunes_monotonically(self):
        g = parse_grammar(SEARCH_TEXT)
        utt = "exactly 2 digit then letter or digit"
        full = parse_derivations(utt, g, beam=None, limit=None)
        narrow = parse_derivations(utt, g, beam=1, limit=None)
        assert 0 < len(narrow) <= len(full)


class TestDeskUtterance:
    def test_uniform_probabilities_without_model(self):
        g = demo_grammar()
        roots = parse_derivations(DESK_UTT, g)
        assert len(roots) == 403
        assert all(d.prob == pytest.approx(1 / 403) for d in roots)

    def test_sketch_marginals(self):
        g = demo_grammar()
        ranked = parse_to_sketches(DESK_UTT, g)
        assert len(ranked) == 190
        assert sum(p for _, p in ranked) == pytest.approx(1.0)
        assert all(a >= b for (_, a), (_, b) in zip(ranked, ranked[1:]))

    def test_both_known_readings_rank_in_the_pool(self):
        g = demo_grammar()
        keys = [sketch_key(sk) for sk, _ in parse_to_sketches(DESK_UTT, g)]
        assert keys.index(sketch_key(parse_sketch(DESK_SKETCH))) + 1 == 19
        assert keys.index(sketch_key(parse_sketch(DESK_ALT))) + 1 == 35


class TestToyDataset:
    def test_losses_and_top1(self):
        from rexsynth.nlparser import default_model_path

        g = demo_grammar()
        items = load_dataset(default_model_path().parent / "toyset.txt")
        assert len(items) == 10
        res = train(items, g, epochs=5)
        assert res.skipped == 0
        assert res.epoch_losses == pytest.approx(
            [1.8603, 1.3151, 1.0439, 0.8675, 0.7397], abs=5e-5
        )
        hits = 0
        for utt, label in items:
            ranked = parse_to_sketches(utt, g, res.params)
            hits += bool(
                ranked and sketch_key(ranked[0][0]) == sketch_key(parse_sketch(label))
            )
        assert hits == 10

    def test_shipped_model_matches_retraining(self, tmp_path):
        from rexsynth.nlparser import default_model_path

        g = demo_grammar()
        items = load_dataset(default_model_path().parent / "toyset.txt")
        res = train(items, g, epochs=5)
        out = tmp_path / "model.txt"
        save_model(res.params, out)
        assert out.read_text() == default_model_path().read_text()


class TestModelSerialization:
    def test_round_trip(self, tmp_path):
        params = ModelParams({"rule:L1": -0.25, "span:$ROOT:len4+": 1.5e-3})
        path = tmp_path / "m.txt"
        save_model(params, path)
        assert path.read_text().startswith("version\t1\n")
        assert load_model(path).weights == params.weights

    def test_rejects_missing_header(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("rule:L1\t0.5\n")
        with pytest.raises(ValueError, match="version header"):
            load_model(path)

    def test_rejects_unknown_version(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("version\t99\nrule:L1\t0.5\n")
        with pytest.raises(ValueError, match="unsupported model version"):
            load_model(path)

    def test_rejects_untabbed_line(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("version\t1\nrule:L1 0.5\n")
        with pytest.raises(ValueError, match=":3|expected"):
            load_model(path)


class TestDatasetFile:
    def test_loads_and_skips_comments(self, tmp_path):
        path = tmp_path / "ds.txt"
        path.write_text("# header\n\nexactly 3 digits\tRepeat(<num>,3)\n")
        assert load_dataset(path) == [("exactly 3 digits", "Repeat(<num>,3)")]

    def test_rejects_line_without_tab(self, tmp_path):
        path = tmp_path / "ds.txt"
        path.write_text("exactly 3 digits Repeat(<num>,3)\n")
        with pytest.raises(ValueError, match="expected 'utterance<TAB>sketch'"):
            load_dataset(path)
