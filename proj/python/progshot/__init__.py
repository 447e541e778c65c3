"""Retrieval-augmented program prompting for math word problems."""

from ._core import (
    DEFAULT_STEP_BUDGET,
    Error,
    VectorIndex,
    annotate,
    answers_match,
    builtin_names,
    cosine,
    default_stop_sequences,
    embed,
    evaluate,
    export,
    index,
    jaccard,
    load_corpus,
    math_names,
    normalize_indentation,
    parse_gold_answer,
    render_stub,
    run_program,
    truncate_at_stop,
    verify,
)

__all__ = [
    "DEFAULT_STEP_BUDGET",
    "Error",
    "VectorIndex",
    "annotate",
    "answers_match",
    "builtin_names",
    "cosine",
    "default_stop_sequences",
    "embed",
    "evaluate",
    "export",
    "index",
    "jaccard",
    "load_corpus",
    "math_names",
    "normalize_indentation",
    "parse_gold_answer",
    "render_stub",
    "run_program",
    "truncate_at_stop",
    "verify",
]
