"""Multilayer service-ecosystem modeling toolkit.

A four-layer temporal graph over stakeholders, service features, events,
and domains, populated from structured triples and news titles, with a
CRF-based joint event extractor, pool-based active learning, rule-driven
evolutionary relations, and snapshot analytics on top.
"""

from .active import AlConfig, CostReport, CostRow, Pool, make_oracle, run_loop
from .encoding import EncoderConfig, HashedNgramEncoder, tokenize
from .evolution import (
    EvolutionReport,
    analyze_evolution,
    build_snapshots,
    detect_communities,
    render_timeline,
    storyline,
)
from .extractor import (
    ExtractionResult,
    ExtractorConfig,
    JointExtractor,
    ModelParams,
    TrainingSample,
    extract,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
    save_dataset,
)
from .fusion import FileKgClient, Fuser, FusionReport, HttpKgClient
from .model import (
    EcosystemModel,
    Entity,
    EntityKind,
    Event,
    EvolutionaryRelation,
    Layer,
    ModelError,
    StructuralKind,
)
from .pipeline import PipelineConfig, PipelineReport, run_pipeline
from .rules import CoverageReport, Rule, apply_rules, load_rulebase, save_rulebase
from .skg import Rulebase, ingest_triples, parse_triples_jsonl, parse_triples_tsv
from .tags import ARGUMENT_TYPES, NUM_TAGS, RELATION_LABELS, Span, annotation_set

__version__ = "0.1.0"

__all__ = [
    "AlConfig",
    "ARGUMENT_TYPES",
    "CostReport",
    "CostRow",
    "CoverageReport",
    "EcosystemModel",
    "EncoderConfig",
    "Entity",
    "EntityKind",
    "Event",
    "EvolutionReport",
    "EvolutionaryRelation",
    "ExtractionResult",
    "ExtractorConfig",
    "FileKgClient",
    "Fuser",
    "FusionReport",
    "HashedNgramEncoder",
    "HttpKgClient",
    "JointExtractor",
    "Layer",
    "ModelError",
    "ModelParams",
    "NUM_TAGS",
    "PipelineConfig",
    "PipelineReport",
    "Pool",
    "RELATION_LABELS",
    "Rule",
    "Rulebase",
    "Span",
    "StructuralKind",
    "TrainingSample",
    "annotation_set",
    "analyze_evolution",
    "apply_rules",
    "build_snapshots",
    "detect_communities",
    "extract",
    "ingest_triples",
    "load_checkpoint",
    "load_dataset",
    "load_rulebase",
    "make_oracle",
    "parse_triples_jsonl",
    "parse_triples_tsv",
    "render_timeline",
    "run_loop",
    "run_pipeline",
    "save_checkpoint",
    "save_dataset",
    "save_rulebase",
    "storyline",
    "tokenize",
]
