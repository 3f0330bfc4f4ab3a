"""Semantic parsing of English descriptions into ranked h-sketches.

A bottom-up chart over token spans: a rule matches inside a span with its
first item anchored at the span start and its last item ending at the span
end, and tokens between items are skipped for free. Each (span, category)
cell keeps only the top-m derivations by linear score theta . phi, where
phi counts rule firings and bucketed span lengths. Root derivations are
ranked by softmax probability; sketches marginalize the probability of
every derivation that denotes them.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .grammar import (
    DenotationError,
    Grammar,
    GrammarError,
    GrammarRule,
    ROOT_CATEGORY,
    NUMBER_TERMINAL,
    QUOTED_TERMINAL,
    apply_fn,
    to_sketch,
)
from .sketch import HSketch, normalize, parse_sketch, print_sketch

DEFAULT_BEAM = 500
DEFAULT_LIMIT = 500
TOP_SKETCHES = 25  # forwarded to synthesis by the end-to-end pipeline


@dataclass(frozen=True, slots=True)
class Tok:
    text: str
    quoted: bool = False


_TOKEN_RE = re.compile(r'"([^"]*)"|\'([^\']*)\'|[A-Za-z0-9_]+|[^\sA-Za-z0-9_]')


def tokenize_utterance(text: str) -> list[Tok]:
    """Lowercased words and punctuation marks; quoted literals kept verbatim."""
    toks: list[Tok] = []
    for m in _TOKEN_RE.finditer(text):
        if m.group(1) is not None or m.group(2) is not None:
            inner = m.group(1) if m.group(1) is not None else m.group(2)
            toks.append(Tok(inner, quoted=True))
        else:
            toks.append(Tok(m.group(0).lower()))
    return toks


@dataclass(slots=True)
class Derivation:
    span: tuple[int, int]
    category: str
    rule: GrammarRule
    children: tuple["Derivation", ...]
    denotation: object  # Regex | HSketch | int
    features: dict[str, int]
    score: float
    index: int  # construction order, breaks score ties
    prob: float = 0.0

    @property
    def rule_id(self) -> str:
        return self.rule.id


def extract_features(d: Derivation) -> dict[str, int]:
    return dict(d.features)


def _span_feature(category: str, length: int) -> str:
    bucket = str(length) if length <= 3 else "4+"
    return f"span:{category}:len{bucket}"


def _token_matches(item: str, tok: Tok) -> bool:
    if item == NUMBER_TERMINAL:
        return not tok.quoted and tok.text.isdigit()
    if item == QUOTED_TERMINAL:
        return tok.quoted
    if len(item) >= 2 and item[0] == item[-1] and item[0] in "\"'":
        return tok.quoted and tok.text == item[1:-1]
    return not tok.quoted and tok.text == item


def _build_chart(
    tokens: list[Tok],
    grammar: Grammar,
    theta: dict[str, float],
    beam: int | None,
) -> dict[tuple[int, int, str], list[Derivation]]:
    n = len(tokens)
    chart: dict[tuple[int, int, str], list[Derivation]] = {}
    counter = itertools.count()

    def make(rule: GrammarRule, i: int, j: int,
             children: tuple[Derivation, ...], terminals: tuple[str, ...]):
        try:
            denot = apply_fn(rule, [c.denotation for c in children], terminals)
        except DenotationError:
            return None
        feats: dict[str, int] = {}
        for c in children:
            for f, v in c.features.items():
                feats[f] = feats.get(f, 0) + v
        for f in (f"rule:{rule.id}", _span_feature(rule.target, j - i)):
            feats[f] = feats.get(f, 0) + 1
        extra = theta.get(f"rule:{rule.id}", 0.0) + theta.get(
            _span_feature(rule.target, j - i), 0.0
        )
        score = sum(c.score for c in children) + extra
        return Derivation((i, j), rule.target, rule, children, denot,
                          feats, score, next(counter))

    def matches(items: tuple[str, ...], i: int, j: int):
        """All anchored matches: (children, terminal texts)."""

        def go(idx: int, pos: int):
            if idx == len(items):
                if pos == j:
                    yield (), ()
                return
            item = items[idx]
            starts = (i,) if idx == 0 else range(pos, j)
            for s in starts:
                if item.startswith("$"):
                    for e in range(s + 1, j + 1):
                        for child in chart.get((s, e, item), ()):
                            for rc, rt in go(idx + 1, e):
                                yield (child,) + rc, rt
                elif s < j and _token_matches(item, tokens[s]):
                    for rc, rt in go(idx + 1, s + 1):
                        yield rc, (tokens[s].text,) + rt

        return go(0, i)

    unary = [r for r in grammar.rules
             if len(r.pattern) == 1 and r.pattern[0].startswith("$")]
    general = [r for r in grammar.rules if not (
        len(r.pattern) == 1 and r.pattern[0].startswith("$"))]

    for length in range(1, n + 1):
        for i in range(0, n - length + 1):
            j = i + length
            fresh: dict[str, list[Derivation]] = {}
            for rule in general:
                for children, terminals in matches(rule.pattern, i, j):
                    d = make(rule, i, j, children, terminals)
                    if d is not None:
                        fresh.setdefault(rule.target, []).append(d)
            # unary rules consume the whole span, so close over fresh entries;
            # the pass cap breaks category cycles like $A -> $B -> $A
            applied: set[tuple[str, int]] = set()
            for _ in range(len(unary) + 1):
                added = False
                for rule in unary:
                    for child in list(fresh.get(rule.pattern[0], ())):
                        key = (rule.id, child.index)
                        if key in applied:
                            continue
                        applied.add(key)
                        d = make(rule, i, j, (child,), ())
                        if d is not None:
                            fresh.setdefault(rule.target, []).append(d)
                            added = True
                if not added:
                    break
            for cat, ds in fresh.items():
                ds.sort(key=lambda d: (-d.score, d.index))
                chart[(i, j, cat)] = ds if beam is None else ds[:beam]
    return chart


def parse_derivations(
    utterance: str,
    grammar: Grammar,
    model: "ModelParams | None" = None,
    beam: int | None = DEFAULT_BEAM,
    limit: int | None = DEFAULT_LIMIT,
) -> list[Derivation]:
    """Root derivations ranked by softmax probability over the survivors."""
    if not grammar.root_rules():
        raise GrammarError("grammar has no $ROOT rule")
    theta = model.weights if model is not None else {}
    tokens = tokenize_utterance(utterance)
    chart = _build_chart(tokens, grammar, theta, beam)
    roots: list[Derivation] = []
    for (_, _, cat), ds in chart.items():
        if cat == ROOT_CATEGORY:
            roots.extend(ds)
    roots.sort(key=lambda d: (-d.score, d.index))
    if limit is not None:
        roots = roots[:limit]
    if roots:
        zmax = max(d.score for d in roots)
        mass = [math.exp(d.score - zmax) for d in roots]
        total = sum(mass)
        for d, m in zip(roots, mass):
            d.prob = m / total
    return roots


def sketch_key(s: HSketch) -> str:
    return print_sketch(normalize(s))


def parse_to_sketches(
    utterance: str,
    grammar: Grammar,
    model: "ModelParams | None" = None,
    beam: int | None = DEFAULT_BEAM,
    limit: int | None = DEFAULT_LIMIT,
) -> list[tuple[HSketch, float]]:
    """Distinct sketches with marginal probability, most probable first.

    Empty when no root derivation exists; callers fall back to a bare hole.
    """
    ranked: dict[str, list] = {}  # key -> [sketch, prob, first index]
    for d in parse_derivations(utterance, grammar, model, beam, limit):
        sk = to_sketch(d.denotation)
        if sk is None:
            continue
        entry = ranked.get(sketch_key(sk))
        if entry is None:
            ranked[sketch_key(sk)] = [sk, d.prob, d.index]
        else:
            entry[1] += d.prob
    out = sorted(ranked.values(), key=lambda e: (-e[1], e[2]))
    return [(sk, prob) for sk, prob, _ in out]


# ---------------------------------------------------------------------------
# Log-linear model: serialization and training
# ---------------------------------------------------------------------------

MODEL_FORMAT_VERSION = 1


@dataclass(slots=True)
class ModelParams:
    weights: dict[str, float] = field(default_factory=dict)


def save_model(model: ModelParams, path: str | Path) -> None:
    lines = [f"version\t{MODEL_FORMAT_VERSION}"]
    for feat in sorted(model.weights):
        lines.append(f"{feat}\t{model.weights[feat]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def default_model_path() -> Path:
    """Path of the model shipped with the package (trained on the toy set)."""
    from importlib.resources import files

    return Path(str(files("rexsynth").joinpath("data/model.txt")))


def load_model(path: str | Path) -> ModelParams:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("version\t"):
        raise ValueError(f"{path}: not a model file (missing version header)")
    version = lines[0].split("\t", 1)[1]
    if version != str(MODEL_FORMAT_VERSION):
        raise ValueError(f"{path}: unsupported model version {version!r}")
    weights: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        feat, sep, value = line.partition("\t")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'feature<TAB>weight'")
        weights[feat] = float(value)
    return ModelParams(weights)


@dataclass(slots=True)
class TrainResult:
    params: ModelParams
    epoch_losses: list[float]
    skipped: int  # dataset items whose label was never reachable


def train(
    dataset: list[tuple[str, HSketch | str]],
    grammar: Grammar,
    epochs: int = 5,
    beam: int | None = DEFAULT_BEAM,
    lr: float = 0.1,
    limit: int | None = DEFAULT_LIMIT,
) -> TrainResult:
    """SGD ascent on the beam-restricted log-likelihood of the labeled sketch."""
    items: list[tuple[str, str]] = []
    for utterance, label in dataset:
        sk = parse_sketch(label) if isinstance(label, str) else label
        items.append((utterance, sketch_key(sk)))

    theta: dict[str, float] = {}
    model = ModelParams(theta)
    losses: list[float] = []
    unreachable: set[int] = set()
    for epoch in range(epochs):
        epoch_loss = 0.0
        trained = 0
        for idx, (utterance, label_key) in enumerate(items):
            derivs = parse_derivations(utterance, grammar, model, beam, limit)
            matched = [d for d in derivs
                       if (sk := to_sketch(d.denotation)) is not None
                       and sketch_key(sk) == label_key]
            if not matched:
                unreachable.add(idx)
                continue
            p_label = sum(d.prob for d in matched)
            epoch_loss += -math.log(max(p_label, 1e-300))
            trained += 1
            grad: dict[str, float] = {}
            for d in matched:
                w = d.prob / p_label
                for f, v in d.features.items():
                    grad[f] = grad.get(f, 0.0) + w * v
            for d in derivs:
                for f, v in d.features.items():
                    grad[f] = grad.get(f, 0.0) - d.prob * v
            for f, g in grad.items():
                theta[f] = theta.get(f, 0.0) + lr * g
        if epoch == 0 and trained == 0:
            raise ValueError("no trainable item: every label is unreachable")
        losses.append(epoch_loss / trained if trained else 0.0)
    return TrainResult(ModelParams(dict(theta)), losses, len(unreachable))


def load_dataset(path: str | Path) -> list[tuple[str, str]]:
    """Training items, one 'utterance<TAB>sketch' per line; # comments."""
    items: list[tuple[str, str]] = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        utterance, sep, sketch_text = line.partition("\t")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'utterance<TAB>sketch'")
        items.append((utterance.strip(), sketch_text.strip()))
    return items
