"""rexsynth: multi-modal regex synthesis from language, sketches, and examples."""

from .regex import Regex, parse_regex, print_regex, desugar, match
from .chars import CharClass, ClassInventory
from .sketch import HSketch, parse_sketch, print_sketch, sketch_of_regex
from .automaton import distinguishing_string, distinguishing_strings, equivalent
from .synthesis import ExampleSet, SynthesisConfig, SynthesisResult, synthesize
from .grammar import Grammar, GrammarError, demo_grammar, load_grammar
from .nlparser import ModelParams, TrainResult, parse_to_sketches, train
from .bench import e2e_synthesize, load_benchmarks, run_suite

__all__ = [
    "Regex",
    "parse_regex",
    "print_regex",
    "desugar",
    "match",
    "CharClass",
    "ClassInventory",
    "HSketch",
    "parse_sketch",
    "print_sketch",
    "sketch_of_regex",
    "equivalent",
    "distinguishing_string",
    "distinguishing_strings",
    "ExampleSet",
    "SynthesisConfig",
    "SynthesisResult",
    "synthesize",
    "Grammar",
    "GrammarError",
    "demo_grammar",
    "load_grammar",
    "ModelParams",
    "TrainResult",
    "parse_to_sketches",
    "train",
    "e2e_synthesize",
    "load_benchmarks",
    "run_suite",
]

__version__ = "0.1.0"
