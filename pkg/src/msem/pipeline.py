"""End-to-end pipeline: structural part, extraction, fusion, rules, analytics.

Stages run in a fixed order over one config: (1) build the structural part
from triples and external records, (2) load or train the extractor, (3)
extract events from corpus title pairs, (4) link components, (5) apply the
evolutionary rulebase, (6) optional snapshot analytics.  Given one seed the
whole run is deterministic, down to byte-identical model exports.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
from dataclasses import dataclass, field
from typing import Optional

from . import skg
from .active import AlConfig
from .encoding import EncoderConfig
from .evolution import EvolutionReport, analyze_evolution
from .extractor import (
    ExtractorConfig,
    JointExtractor,
    ModelParams,
    extract,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
)
from .fusion import FileKgClient, Fuser, FusionReport
from .model import ComponentRef, EcosystemModel, Event, ModelError, to_utc
from .rules import CoverageReport, apply_rules, load_rulebase


class PipelineError(Exception):
    def __init__(self, stage: str, message: str, doc_id: Optional[str] = None):
        where = f"stage {stage}" + (f", doc {doc_id}" if doc_id else "")
        super().__init__(f"{where}: {message}")
        self.stage = stage
        self.doc_id = doc_id


@dataclass(frozen=True)
class CorpusDoc:
    id: str
    title: str
    published_at: str
    source: str


def read_corpus(path: str) -> tuple[list[CorpusDoc], int]:
    """Parse corpus JSONL; corrupt or duplicate lines are counted, not fatal."""
    docs: list[CorpusDoc] = []
    seen: set[str] = set()
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                doc = CorpusDoc(
                    id=str(obj["id"]),
                    title=str(obj["title"]),
                    published_at=str(obj["published_at"]),
                    source=str(obj.get("source", "")),
                )
                to_utc(doc.published_at)  # must parse
            except (json.JSONDecodeError, KeyError, TypeError, ModelError):
                skipped += 1
                continue
            if not doc.title.strip() or doc.id in seen:
                skipped += 1
                continue
            seen.add(doc.id)
            docs.append(doc)
    return docs, skipped


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?;])\s+")


def split_sentences(title: str) -> list[str]:
    parts = [p.strip().rstrip(".!?;").strip() for p in _SENTENCE_SPLIT.split(title.strip())]
    return [p for p in parts if p]


def sentence_pairs(title: str) -> list[tuple[str, str]]:
    """Adjacent-sentence pairs; a lone sentence pairs with a blank."""
    sentences = split_sentences(title)
    if not sentences:
        return []
    if len(sentences) == 1:
        return [(sentences[0], "")]
    return list(zip(sentences, sentences[1:]))


@dataclass
class PipelineConfig:
    corpus_path: str
    output_dir: str
    triples_path: Optional[str] = None
    classifier_rules_path: Optional[str] = None
    external_records_path: Optional[str] = None
    kg_records_path: Optional[str] = None
    evo_rules_path: Optional[str] = None
    dataset_path: Optional[str] = None
    checkpoint_path: Optional[str] = None
    extractor: ExtractorConfig = field(default_factory=ExtractorConfig)
    al: AlConfig = field(default_factory=AlConfig)
    snapshot_times: tuple[str, ...] = ()
    server_port: int = 8077
    seed: int = 0

    def __post_init__(self) -> None:
        for name in (
            "corpus_path",
            "triples_path",
            "classifier_rules_path",
            "external_records_path",
            "kg_records_path",
            "evo_rules_path",
            "dataset_path",
        ):
            value = getattr(self, name)
            if value is not None and not os.path.exists(value):
                raise PipelineError("config", f"{name} does not exist: {value}")

    @classmethod
    def from_json(cls, path: str) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        extractor_cfg = obj.pop("extractor", None)
        al_cfg = obj.pop("al", None)
        kwargs = dict(obj)
        if extractor_cfg is not None:
            enc = extractor_cfg.pop("encoder", None) or {}
            if "ngram_orders" in enc:
                enc["ngram_orders"] = tuple(enc["ngram_orders"])
            kwargs["extractor"] = ExtractorConfig(encoder=EncoderConfig(**enc), **extractor_cfg)
        if al_cfg is not None:
            kwargs["al"] = AlConfig(**al_cfg)
        if "snapshot_times" in kwargs:
            kwargs["snapshot_times"] = tuple(kwargs["snapshot_times"])
        return cls(**kwargs)


@dataclass
class PipelineReport:
    corpus_docs: int = 0
    corrupt_lines: int = 0
    ingest: Optional[skg.IngestReport] = None
    merge: Optional[skg.MergeReport] = None
    events_recorded: int = 0
    links_added: int = 0
    skipped_events: int = 0
    fusion: Optional[FusionReport] = None
    coverage: Optional[CoverageReport] = None
    evolution: Optional[EvolutionReport] = None
    model_counts: dict = field(default_factory=dict)
    export_path: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "corpusDocs": self.corpus_docs,
            "corruptLines": self.corrupt_lines,
            "ingest": dataclasses.asdict(self.ingest) if self.ingest else None,
            "merge": {
                "merged": self.merge.merged,
                "created": self.merge.created,
                "conflicts": list(self.merge.conflicts),
            }
            if self.merge
            else None,
            "eventsRecorded": self.events_recorded,
            "linksAdded": self.links_added,
            "skippedEvents": self.skipped_events,
            "fusion": {
                "outcomes": dict(self.fusion.outcomes),
                "edgesAdded": self.fusion.edges_added,
            }
            if self.fusion
            else None,
            "coverage": self.coverage.to_json() if self.coverage else None,
            "modelCounts": dict(self.model_counts),
            "export": self.export_path,
        }


def _stage(name: str, doc_id: Optional[str] = None):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, str(exc), doc_id) from exc
            return False

    return _Ctx()


def build_structural_part(
    model: EcosystemModel, config: PipelineConfig
) -> tuple[Optional[skg.IngestReport], Optional[skg.MergeReport]]:
    ingest_report = None
    merge_report = None
    if config.triples_path and config.classifier_rules_path:
        rulebase = skg.Rulebase.from_json(config.classifier_rules_path)
        with open(config.triples_path, "r", encoding="utf-8") as fh:
            if config.triples_path.endswith(".jsonl"):
                triples = list(skg.parse_triples_jsonl(fh))
            else:
                triples = list(skg.parse_triples_tsv(fh))
        ingest_report = skg.ingest_triples(model, triples, rulebase)
    if config.external_records_path:
        with open(config.external_records_path, "r", encoding="utf-8") as fh:
            records = list(skg.read_external_jsonl(fh))
        merge_report = skg.merge_external(model, records)
    return ingest_report, merge_report


def obtain_params(config: PipelineConfig) -> tuple[ModelParams, ExtractorConfig]:
    """Load the checkpoint if present, otherwise train and save one."""
    if config.checkpoint_path and os.path.exists(config.checkpoint_path):
        return load_checkpoint(config.checkpoint_path)
    if not config.dataset_path:
        raise PipelineError("train", "no checkpoint and no dataset to train from")
    samples = load_dataset(config.dataset_path)
    result = JointExtractor(config.extractor).train(samples)
    if config.checkpoint_path:
        parent = os.path.dirname(config.checkpoint_path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        save_checkpoint(config.checkpoint_path, result.params, config.extractor)
    return result.params, config.extractor


def extract_events(
    model: EcosystemModel,
    docs: list[CorpusDoc],
    params: ModelParams,
    ex_config: ExtractorConfig,
    report: PipelineReport,
) -> list[Event]:
    recorded: list[Event] = []
    for doc in docs:
        with _stage("extract", doc.id):
            published = to_utc(doc.published_at)
            for s1, s2 in sentence_pairs(doc.title):
                result = extract(s1, s2, params, ex_config, published_at=doc.published_at)
                event_ids: list[Optional[str]] = []
                for ev in result.events:
                    if not ev.action:
                        report.skipped_events += 1
                        event_ids.append(None)
                        continue
                    try:
                        when = to_utc(ev.time) if ev.time else published
                    except ModelError:
                        when = published
                    event = Event(
                        action=ev.action,
                        time=when,
                        source_doc_id=doc.id,
                        actor=ComponentRef(ev.actor) if ev.actor else None,
                        recipient=ComponentRef(ev.recipient) if ev.recipient else None,
                        object=ComponentRef(ev.object) if ev.object else None,
                        attribute=ev.attribute,
                        title=doc.title,
                    )
                    eid = model.record_event(event)
                    event_ids.append(eid)
                    recorded.append(model.event(eid))
                    report.events_recorded += 1
                if result.link is not None:
                    src_id = event_ids[result.link[0]]
                    dst_id = event_ids[result.link[1]]
                    if src_id and dst_id and src_id != dst_id:
                        try:
                            model.add_sequential(src_id, dst_id)
                            report.links_added += 1
                        except ModelError:
                            report.skipped_events += 1
    return recorded


def run_pipeline(config: PipelineConfig) -> tuple[EcosystemModel, PipelineReport]:
    report = PipelineReport()
    model = EcosystemModel()

    with _stage("corpus"):
        docs, skipped = read_corpus(config.corpus_path)
        report.corpus_docs = len(docs)
        report.corrupt_lines = skipped

    with _stage("skg"):
        report.ingest, report.merge = build_structural_part(model, config)

    with _stage("train"):
        params, ex_config = obtain_params(config)

    events = extract_events(model, docs, params, ex_config, report)

    with _stage("fuse"):
        client = (
            FileKgClient.from_jsonl(config.kg_records_path) if config.kg_records_path else None
        )
        fuser = Fuser(model, client=client)
        report.fusion = fuser.fuse_all(events)

    if config.evo_rules_path:
        with _stage("rules"):
            rulebase = load_rulebase(config.evo_rules_path)
            report.coverage, _ = apply_rules(model, rulebase, events)

    if config.snapshot_times:
        with _stage("evolve"):
            report.evolution = analyze_evolution(
                model, list(config.snapshot_times), seed=config.seed
            )

    with _stage("export"):
        os.makedirs(config.output_dir, exist_ok=True)
        export_path = os.path.join(config.output_dir, "model.json")
        model.export_json(export_path)
        report.export_path = export_path
        report.model_counts = model.counts()
        with open(os.path.join(config.output_dir, "report.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")

    return model, report
