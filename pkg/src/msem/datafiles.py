"""Paths to the bundled toy fixtures (corpus, triples, rulebases, pool)."""

from __future__ import annotations

from importlib.resources import files

BUNDLED = (
    "classifier_rules.json",
    "evo_rules.json",
    "toy_corpus.jsonl",
    "toy_external.jsonl",
    "toy_kg.jsonl",
    "toy_labeled.jsonl",
    "toy_planted.jsonl",
    "toy_pool.jsonl",
    "toy_triples.tsv",
)


def bundled_path(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled fixture named {name!r}")
    return str(files("msem").joinpath("data", name))
