#!/usr/bin/env python3
"""Build the four-layer ecosystem graph from structured inputs.

Walks the structural-part construction end to end: parse subject-predicate-
object triples, classify each name into an entity kind with the priority
rulebase, ingest nodes and typed edges, then reconcile an external record
dump into the same graph.  Finishes with a per-layer census and a snapshot.
"""

from msem import skg
from msem.datafiles import bundled_path
from msem.model import EcosystemModel, Layer, layer_of


def main() -> None:
    model = EcosystemModel()
    rulebase = skg.Rulebase.from_json(bundled_path("classifier_rules.json"))

    with open(bundled_path("toy_triples.tsv"), encoding="utf-8") as fh:
        triples = list(skg.parse_triples_tsv(fh))
    report = skg.ingest_triples(model, triples, rulebase)
    print("== ingest ==")
    print(f"  triples processed : {report.processed}")
    print(f"  entities touched  : {report.entities_touched}")
    print(f"  edges added       : {report.edges_added}")
    print(f"  attributes added  : {report.attributes_added}")

    with open(bundled_path("toy_external.jsonl"), encoding="utf-8") as fh:
        records = list(skg.read_external_jsonl(fh))
    merge = skg.merge_external(model, records)
    print("== external merge ==")
    print(f"  merged into existing entities: {merge.merged}")
    print(f"  created fresh                : {merge.created}")
    for conflict in merge.conflicts:
        print(f"  kind conflict: {conflict}")

    print("== layers ==")
    by_layer: dict[Layer, list[str]] = {}
    for entity in model.entities():
        by_layer.setdefault(layer_of(entity.kind), []).append(entity.canonical_name)
    for layer in Layer:
        names = sorted(by_layer.get(layer, []))
        preview = ", ".join(names[:4]) + (" ..." if len(names) > 4 else "")
        print(f"  {layer.value:<14} {len(names):>3}  {preview}")

    stats = skg.skg_stats(model)
    print("== stats ==")
    print(f"  entity-entity links: {stats.links}")

    snap = model.snapshot_at("2020-01-01")
    print("== snapshot at 2020-01-01 ==")
    print(f"  entities {len(snap.entities)}, structural {len(snap.structural)}, "
          f"evolutionary {len(snap.evolutionary)}")


if __name__ == "__main__":
    main()
