import hypothesis
from hypothesis import strategies as st

from rexsynth.chars import literal, named
from rexsynth.regex import (
    And,
    Cls,
    Concat,
    Contains,
    EndsWith,
    Eps,
    KleeneStar,
    Not,
    Optional,
    Or,
    Repeat,
    RepeatAtLeast,
    RepeatRange,
    StartsWith,
)

hypothesis.settings.register_profile(
    "suite", deadline=None, max_examples=60, print_blob=True
)
hypothesis.settings.load_profile("suite")

# small alphabet shared by the differential tests; covers a digit, letters of
# both cases, and the punctuation the desk fixtures lean on
ALPHABET = "1aA,."

leaf_classes = st.sampled_from(
    [Cls(named(k)) for k in ("num", "let", "cap", "low", "hex")]
    + [Cls(literal(c)) for c in ALPHABET]
    + [Eps()]
)


def _extend(children):
    unary = st.sampled_from([StartsWith, EndsWith, Contains, Not, Optional, KleeneStar])
    binary = st.sampled_from([Concat, Or, And])
    counts = st.integers(min_value=1, max_value=3)
    return st.one_of(
        st.builds(lambda f, a: f(a), unary, children),
        st.builds(lambda f, a, b: f(a, b), binary, children, children),
        st.builds(Repeat, children, counts),
        st.builds(RepeatAtLeast, children, counts),
        st.builds(
            lambda a, lo, extra: RepeatRange(a, lo, lo + extra),
            children,
            counts,
            st.integers(min_value=0, max_value=2),
        ),
    )


regexes = st.recursive(leaf_classes, _extend, max_leaves=6)

# the fragment Python's re can express directly (no complement/intersection)
re_fragment = st.recursive(
    leaf_classes,
    lambda children: st.one_of(
        st.builds(lambda f, a: f(a), st.sampled_from([StartsWith, EndsWith, Contains, Optional, KleeneStar]), children),
        st.builds(lambda f, a, b: f(a, b), st.sampled_from([Concat, Or]), children, children),
        st.builds(Repeat, children, st.integers(min_value=1, max_value=3)),
    ),
    max_leaves=6,
)

short_strings = st.text(alphabet=ALPHABET, max_size=6)
