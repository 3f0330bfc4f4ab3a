"""Command-line front end.

Subcommands: synth (sketch + examples), e2e (description + examples),
bench (interactive-protocol simulation over a benchmark directory),
train (fit the parser's ranking model), parse (description -> sketches),
match (regex vs strings), serve (HTTP API). Exit codes: 0 success with
results, 1 no results, 2 bad input. The REGEL_MAX_STATES environment
variable caps automaton sizes during equivalence checks.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bench import (
    DEFAULT_EXAMPLES_PER_ITERATION,
    DEFAULT_ITERATIONS,
    e2e_synthesize,
    load_benchmarks,
    report_to_json,
    run_suite,
)
from .grammar import Grammar, GrammarError, demo_grammar, load_grammar
from .nlparser import (
    ModelParams,
    TOP_SKETCHES,
    default_model_path,
    load_dataset,
    load_model,
    parse_to_sketches,
    save_model,
)
from .nlparser import train as train_model
from .regex import RegexSyntaxError, parse_regex, print_regex
from .regex import match as match_regex
from .synthesis import DEFAULT_DEPTH, DEFAULT_TOP_K, ExampleSet, SynthesisConfig, synthesize


def _fail(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(2)


def _example_set(pos: tuple[str, ...], neg: tuple[str, ...], examples_file: str | None) -> ExampleSet:
    positives, negatives = list(pos), list(neg)
    if examples_file:
        try:
            doc = json.loads(Path(examples_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise _fail(f"cannot read examples file: {exc}")
        positives += doc.get("positives", [])
        negatives += doc.get("negatives", [])
    try:
        return ExampleSet.of(positives, negatives)
    except ValueError as exc:
        raise _fail(str(exc))


def _sketch_text(arg: str) -> str:
    path = Path(arg)
    if path.is_file():
        return path.read_text(encoding="utf-8").strip()
    return arg


def _grammar(path: str | None) -> Grammar:
    try:
        return load_grammar(path) if path else demo_grammar()
    except (OSError, GrammarError) as exc:
        raise _fail(f"cannot load grammar: {exc}")


def _model(path: str | None) -> ModelParams | None:
    try:
        if path:
            return load_model(path)
        default = default_model_path()
        return load_model(default) if default.is_file() else None
    except (OSError, ValueError) as exc:
        raise _fail(f"cannot load model: {exc}")


@click.group()
@click.version_option()
def main() -> None:
    """Regex synthesis from natural language, sketches, and examples."""


@main.command()
@click.argument("sketch")
@click.option("--pos", "-p", multiple=True, help="Positive example (repeatable).")
@click.option("--neg", "-n", multiple=True, help="Negative example (repeatable).")
@click.option("--examples", type=click.Path(), help="JSON file with positives/negatives.")
@click.option("--depth", default=DEFAULT_DEPTH, show_default=True, help="Default hole depth.")
@click.option("--timeout", default=20.0, show_default=True, help="Budget in seconds.")
@click.option("--top-k", default=DEFAULT_TOP_K, show_default=True)
@click.option("--no-prune", is_flag=True, help="Disable feasibility pruning.")
def synth(sketch, pos, neg, examples, depth, timeout, top_k, no_prune) -> None:
    """Synthesize regexes from SKETCH (literal text or a file path)."""
    example_set = _example_set(pos, neg, examples)
    try:
        parsed = _sketch_text(sketch)
        cfg = SynthesisConfig(depth=depth, top_k=top_k, timeout_s=timeout, prune=not no_prune)
        result = synthesize(parsed, example_set, cfg)
    except (RegexSyntaxError, ValueError) as exc:
        raise _fail(str(exc))
    for r in result.regexes:
        click.echo(print_regex(r))
    if result.timed_out:
        click.echo("note: budget exhausted", err=True)
    sys.exit(0 if result.regexes else 1)


@main.command()
@click.argument("description")
@click.option("--pos", "-p", multiple=True)
@click.option("--neg", "-n", multiple=True)
@click.option("--examples", type=click.Path())
@click.option("--parallel", default=4, show_default=True, help="Synthesis workers.")
@click.option("--top-sketches", default=TOP_SKETCHES, show_default=True)
@click.option("--timeout", default=20.0, show_default=True)
@click.option("--top-k", default=DEFAULT_TOP_K, show_default=True)
@click.option("--depth", default=DEFAULT_DEPTH, show_default=True)
@click.option("--grammar", "grammar_path", type=click.Path())
@click.option("--model", "model_path", type=click.Path())
def e2e(description, pos, neg, examples, parallel, top_sketches, timeout,
        top_k, depth, grammar_path, model_path) -> None:
    """Parse DESCRIPTION into sketches and synthesize from each."""
    example_set = _example_set(pos, neg, examples)
    grammar = _grammar(grammar_path)
    model = _model(model_path)
    cfg = SynthesisConfig(depth=depth, top_k=top_k)
    out = e2e_synthesize(description, example_set, grammar, model,
                         top_sketches=top_sketches, parallel=parallel,
                         timeout_s=timeout, config=cfg)
    if out.fell_back:
        click.echo("note: parser produced no sketch; falling back to ?{<any>}", err=True)
    for regex_text, sketch in out.results:
        click.echo(f"{regex_text}\t<= {sketch}")
    sys.exit(0 if out.results else 1)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--iterations", default=DEFAULT_ITERATIONS, show_default=True)
@click.option("--examples-per-iteration", default=DEFAULT_EXAMPLES_PER_ITERATION,
              show_default=True)
@click.option("--depth", default=DEFAULT_DEPTH, show_default=True)
@click.option("--timeout", default=10.0, show_default=True, help="Budget per synthesis run.")
@click.option("--top-k", default=DEFAULT_TOP_K, show_default=True)
@click.option("--json", "json_out", type=click.Path(), help="Write the JSON report here.")
def bench(directory, iterations, examples_per_iteration, depth, timeout, top_k, json_out) -> None:
    """Simulate the interactive protocol over DIRECTORY's benchmarks."""
    benchmarks = load_benchmarks(directory)
    if not benchmarks:
        raise _fail(f"no benchmark files in {directory}")
    cfg = SynthesisConfig(depth=depth, top_k=top_k, timeout_s=timeout)
    report = run_suite(benchmarks, iterations, examples_per_iteration, cfg)
    width = max(len(r.id) for r in report.runs)
    for r in report.runs:
        if r.skipped:
            status = "SKIP"
        else:
            status = f"solved@{r.solved_at}" if r.solved else "unsolved"
        click.echo(f"{r.id:<{width}}  {status:<10} iters={r.iterations_used} "
                   f"time={r.wall_time_s:.2f}s  {r.winner or ''}")
    click.echo(f"solved per iteration: {report.solved_per_iteration}  "
               f"mean time (solved): {report.mean_time_solved_s:.2f}s")
    for w in report.warnings:
        click.echo(f"warning: {w}", err=True)
    if json_out:
        Path(json_out).write_text(report_to_json(report) + "\n", encoding="utf-8")
        click.echo(f"report written to {json_out}", err=True)


@main.command()
@click.argument("dataset", type=click.Path())
@click.option("--grammar", "grammar_path", type=click.Path())
@click.option("--epochs", default=5, show_default=True)
@click.option("--beam", default=500, show_default=True)
@click.option("--lr", default=0.1, show_default=True)
@click.option("--output", "-o", default="model.txt", show_default=True,
              type=click.Path(), help="Model file to write.")
def train(dataset, grammar_path, epochs, beam, lr, output) -> None:
    """Fit the ranking model on DATASET (utterance<TAB>sketch lines)."""
    grammar = _grammar(grammar_path)
    try:
        items = load_dataset(dataset)
    except (OSError, ValueError) as exc:
        raise _fail(f"cannot read dataset: {exc}")
    try:
        result = train_model(items, grammar, epochs=epochs, beam=beam, lr=lr)
    except ValueError as exc:
        raise _fail(str(exc))
    for epoch, loss in enumerate(result.epoch_losses, start=1):
        click.echo(f"epoch {epoch}: loss {loss:.4f}")
    if result.skipped:
        click.echo(f"warning: {result.skipped} item(s) had unreachable labels", err=True)
    save_model(result.params, output)
    click.echo(f"model written to {output}")


@main.command()
@click.argument("utterance")
@click.option("--grammar", "grammar_path", type=click.Path())
@click.option("--model", "model_path", type=click.Path())
@click.option("--top", default=TOP_SKETCHES, show_default=True)
def parse(utterance, grammar_path, model_path, top) -> None:
    """Rank sketches for UTTERANCE."""
    grammar = _grammar(grammar_path)
    model = _model(model_path)
    ranked = parse_to_sketches(utterance, grammar, model)
    for sk, prob in ranked[:top]:
        click.echo(f"{prob:.4f}\t{sk}")
    sys.exit(0 if ranked else 1)


@main.command()
@click.argument("regex")
@click.argument("strings", nargs=-1)
def match(regex, strings) -> None:
    """Check which STRINGS the regex matches (whole-string)."""
    try:
        r = parse_regex(regex)
    except RegexSyntaxError as exc:
        raise _fail(str(exc))
    all_ok = True
    for s in strings:
        ok = match_regex(r, s)
        all_ok &= ok
        click.echo(f"{'match' if ok else 'no-match'}\t{s}")
    sys.exit(0 if all_ok else 1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
