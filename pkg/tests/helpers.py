"""Shared builders for the test suite.

The gold-event model mirrors the pipeline's ingestion but takes component
spans from the generator's ground truth instead of a trained extractor, so
tests that exercise fusion, rules, and analytics stay training-free.
"""

from __future__ import annotations

from msem import skg
from msem.datafiles import bundled_path
from msem.extractor import gold_events
from msem.fusion import FileKgClient, Fuser
from msem.model import ComponentRef, EcosystemModel, Event, ModelError, to_utc
from msem.synth import SynthSample, generate


def build_structural(model: EcosystemModel) -> None:
    rulebase = skg.Rulebase.from_json(bundled_path("classifier_rules.json"))
    with open(bundled_path("toy_triples.tsv"), "r", encoding="utf-8") as fh:
        skg.ingest_triples(model, list(skg.parse_triples_tsv(fh)), rulebase)
    with open(bundled_path("toy_external.jsonl"), "r", encoding="utf-8") as fh:
        skg.merge_external(model, list(skg.read_external_jsonl(fh)))


def record_gold_events(model: EcosystemModel, docs: list[SynthSample]) -> list[Event]:
    recorded = []
    for doc in docs:
        events, link = gold_events(doc.sample, doc.published_at)
        ids = []
        for ev in events:
            if not ev.action:
                ids.append(None)
                continue
            try:
                when = to_utc(ev.time) if ev.time else to_utc(doc.published_at)
            except ModelError:
                when = to_utc(doc.published_at)
            event = Event(
                action=ev.action,
                time=when,
                source_doc_id=doc.sample.id,
                actor=ComponentRef(ev.actor) if ev.actor else None,
                recipient=ComponentRef(ev.recipient) if ev.recipient else None,
                object=ComponentRef(ev.object) if ev.object else None,
                attribute=ev.attribute,
                title=doc.title,
            )
            eid = model.record_event(event)
            ids.append(eid)
            recorded.append(model.event(eid))
        if link is not None and ids[link[0]] and ids[link[1]]:
            model.add_sequential(ids[link[0]], ids[link[1]])
    return recorded


def build_gold_model(n_docs: int = 60, seed: int = 23) -> tuple[EcosystemModel, list[Event]]:
    """Structural part + gold events + fusion over the bundled fixtures."""
    model = EcosystemModel()
    build_structural(model)
    docs = generate(n_docs, seed=seed, id_prefix="d")
    events = record_gold_events(model, docs)
    fuser = Fuser(model, client=FileKgClient.from_jsonl(bundled_path("toy_kg.jsonl")))
    fuser.fuse_all(events)
    return model, events


def quintuple_view(model: EcosystemModel) -> list[dict]:
    """Name-keyed, sorted projection of the evolutionary edges."""
    rows = []
    for rel in model.evolutionary():
        rows.append(
            {
                "src": model.entity(rel.source).canonical_name,
                "dst": model.entity(rel.destination).canonical_name,
                "rel": rel.relation,
                "date": rel.timestamp.date().isoformat(),
                "attrs": rel.attributes_dict(),
                "event_doc": model.event(rel.event_id).source_doc_id,
            }
        )
    rows.sort(key=lambda r: (r["event_doc"], r["rel"], r["src"], r["dst"], sorted(r["attrs"].items())))
    return rows
