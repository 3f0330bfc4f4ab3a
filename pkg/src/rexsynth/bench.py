"""Benchmark harness: end-to-end pipeline and interactive-protocol simulation.

A benchmark is one JSON document (id, optional description, examples,
optional ground-truth regex, optional sketches). The harness replays the
refinement loop a user would drive: synthesize, compare the candidates to
the ground truth by language equivalence, and if the truth is absent add
up to two distinguishing strings against the best wrong candidate, labeled
positive or negative by ground-truth membership, then rerun.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .automaton import distinguishing_strings, equivalent
from .grammar import Grammar, demo_grammar
from .nlparser import ModelParams, TOP_SKETCHES, parse_to_sketches
from .regex import Regex, match, parse_regex, print_regex
from .sketch import HSketch, parse_sketch, print_sketch
from .synthesis import ExampleSet, SynthesisConfig, synthesize

DEFAULT_ITERATIONS = 4
DEFAULT_EXAMPLES_PER_ITERATION = 2
FALLBACK_SKETCH = "?{<any>}"


@dataclass(frozen=True, slots=True)
class Benchmark:
    id: str
    positives: tuple[str, ...]
    negatives: tuple[str, ...]
    description: str | None = None
    ground_truth: str | None = None
    sketches: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.description and not self.sketches:
            raise ValueError(f"benchmark {self.id}: needs a description or sketches")
        ExampleSet.of(self.positives, self.negatives)  # rejects contradictions


def load_benchmark(path: str | Path) -> Benchmark:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return Benchmark(
        id=doc["id"],
        positives=tuple(doc.get("positives", ())),
        negatives=tuple(doc.get("negatives", ())),
        description=doc.get("description"),
        ground_truth=doc.get("ground_truth"),
        sketches=tuple(doc["sketches"]) if doc.get("sketches") else None,
    )


def load_benchmarks(directory: str | Path) -> list[Benchmark]:
    return [load_benchmark(p) for p in sorted(Path(directory).glob("*.json"))]


# ---------------------------------------------------------------------------
# End-to-end: description -> sketches -> parallel synthesis
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class E2EResult:
    results: list[tuple[str, str]] = field(default_factory=list)  # (regex, sketch)
    fell_back: bool = False
    sketch_count: int = 0


def _sketch_candidates(
    description: str,
    grammar: Grammar,
    model: ModelParams | None,
    top_sketches: int,
) -> tuple[list[HSketch], bool]:
    ranked = parse_to_sketches(description, grammar, model)
    if not ranked:
        return [parse_sketch(FALLBACK_SKETCH)], True
    return [sk for sk, _ in ranked[:top_sketches]], False


def e2e_synthesize(
    description: str,
    examples: ExampleSet,
    grammar: Grammar | None = None,
    model: ModelParams | None = None,
    top_sketches: int = TOP_SKETCHES,
    parallel: int = 4,
    timeout_s: float = 20.0,
    config: SynthesisConfig | None = None,
) -> E2EResult:
    """Synthesize from a description: one instance per sketch, pooled top-k.

    Results keep sketch rank order and are deduplicated by printed text, so
    a single worker and a pool agree whenever the budget is not binding.
    """
    base = config or SynthesisConfig()
    grammar = grammar or demo_grammar()
    sketches, fell_back = _sketch_candidates(description, grammar, model, top_sketches)
    out = E2EResult(fell_back=fell_back, sketch_count=len(sketches))
    if timeout_s <= 0:
        return out

    def run(sk: HSketch, budget: float):
        cfg = SynthesisConfig(
            depth=base.depth, top_k=base.top_k, timeout_s=budget,
            prune=base.prune, subsumption=base.subsumption,
            canonical_commutative=base.canonical_commutative,
            max_int=base.max_int, inventory=base.inventory,
        )
        return synthesize(sk, examples, cfg)

    if parallel <= 1:
        per_sketch: list = [None] * len(sketches)
        deadline = time.monotonic() + timeout_s
        found = 0
        for pos, sk in enumerate(sketches):
            budget = deadline - time.monotonic()
            if found >= base.top_k or budget <= 0:
                break
            per_sketch[pos] = run(sk, budget)
            found += len(per_sketch[pos].regexes)
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            futures = [pool.submit(run, sk, timeout_s) for sk in sketches]
            per_sketch = [f.result() for f in futures]

    seen: set[str] = set()
    for sk, res in zip(sketches, per_sketch):
        if res is None:
            continue
        for r in res.regexes:
            text = print_regex(r)
            if text not in seen:
                seen.add(text)
                out.results.append((text, print_sketch(sk)))
            if len(out.results) >= base.top_k:
                return out
    return out


# ---------------------------------------------------------------------------
# Interactive-protocol simulation
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class BenchmarkRun:
    id: str
    solved: bool = False
    solved_at: int | None = None  # 0-based iteration of the winning run
    iterations_used: int = 0
    wall_time_s: float = 0.0
    winner: str | None = None
    added: list[dict] = field(default_factory=list)  # per refinement step
    skipped: bool = False
    warning: str | None = None


@dataclass(slots=True)
class RunReport:
    iterations: int
    runs: list[BenchmarkRun] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def solved_per_iteration(self) -> list[int]:
        # cumulative: a benchmark solved at iteration 0 counts everywhere
        return [
            sum(1 for r in self.runs if r.solved and r.solved_at <= i)
            for i in range(self.iterations)
        ]

    @property
    def mean_time_solved_s(self) -> float:
        times = [r.wall_time_s for r in self.runs if r.solved]
        return sum(times) / len(times) if times else 0.0


def _benchmark_candidates(b: Benchmark, examples: ExampleSet,
                          config: SynthesisConfig) -> list[Regex]:
    seen: set[str] = set()
    out: list[Regex] = []
    for text in b.sketches or ():
        res = synthesize(text, examples, config)
        for r in res.regexes:
            if (p := print_regex(r)) not in seen:
                seen.add(p)
                out.append(r)
        if len(out) >= config.top_k:
            return out[: config.top_k]
    if not b.sketches and b.description:
        e2e = e2e_synthesize(b.description, examples, parallel=1,
                             timeout_s=config.timeout_s or 20.0, config=config)
        out = [parse_regex(text) for text, _ in e2e.results]
    return out[: config.top_k]


def run_benchmark(
    b: Benchmark,
    iterations: int = DEFAULT_ITERATIONS,
    examples_per_iteration: int = DEFAULT_EXAMPLES_PER_ITERATION,
    config: SynthesisConfig | None = None,
) -> BenchmarkRun:
    run = BenchmarkRun(id=b.id)
    if not b.ground_truth:
        run.skipped = True
        run.warning = f"{b.id}: no ground truth, skipped"
        return run
    truth = parse_regex(b.ground_truth)
    cfg = config or SynthesisConfig()
    examples = ExampleSet.of(b.positives, b.negatives)
    started = time.perf_counter()
    for it in range(iterations):
        run.iterations_used = it + 1
        candidates = _benchmark_candidates(b, examples, cfg)
        hit = next((c for c in candidates if equivalent(c, truth)), None)
        if hit is not None:
            run.solved = True
            run.solved_at = it
            run.winner = print_regex(hit)
            break
        if not candidates:
            break  # nothing to reject, so no counterexamples to offer
        rejected = candidates[0]
        strings = distinguishing_strings(rejected, truth, examples_per_iteration)
        if not strings:
            break
        new_pos = [s for s in strings if match(truth, s)]
        new_neg = [s for s in strings if not match(truth, s)]
        examples = examples.extended(new_pos, new_neg)
        run.added.append({
            "rejected": print_regex(rejected),
            "positives": new_pos,
            "negatives": new_neg,
        })
    run.wall_time_s = time.perf_counter() - started
    return run


def run_suite(
    benchmarks: list[Benchmark],
    iterations: int = DEFAULT_ITERATIONS,
    examples_per_iteration: int = DEFAULT_EXAMPLES_PER_ITERATION,
    config: SynthesisConfig | None = None,
) -> RunReport:
    report = RunReport(iterations=iterations)
    for b in benchmarks:
        run = run_benchmark(b, iterations, examples_per_iteration, config)
        report.runs.append(run)
        if run.warning:
            report.warnings.append(run.warning)
    return report


def report_to_dict(report: RunReport) -> dict:
    return {
        "benchmarks": [
            {
                "id": r.id,
                "solved": r.solved,
                "solved_at": r.solved_at,
                "iterations_used": r.iterations_used,
                "wall_time_s": round(r.wall_time_s, 3),
                "winner": r.winner,
                "added": r.added,
                "skipped": r.skipped,
            }
            for r in report.runs
        ],
        "aggregate": {
            "iterations": report.iterations,
            "solved_per_iteration": report.solved_per_iteration,
            "mean_time_solved_s": round(report.mean_time_solved_s, 3),
            "total": len(report.runs),
            "skipped": sum(1 for r in report.runs if r.skipped),
        },
        "warnings": report.warnings,
    }


def report_to_json(report: RunReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)
