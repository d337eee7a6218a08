"""Regenerate the bundled fixtures under src/msem/data/.

Everything is derived from the seeded synthetic generator, so rerunning
this script reproduces the shipped files byte for byte.
"""

from __future__ import annotations

import json
import os

from msem import synth
from msem.active import Pool, UnlabeledPair
from msem.extractor import save_dataset

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.normpath(os.path.join(HERE, "..", "src", "msem", "data"))


def write_jsonl(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def write_json(path: str, obj: object) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def main() -> None:
    os.makedirs(DATA, exist_ok=True)

    # training corpus: canonical 200-sample world, train split bundled
    world = synth.generate(200, seed=7)
    save_dataset([d.sample for d in world[:150]], os.path.join(DATA, "toy_labeled.jsonl"))

    # planted-pattern corpus (rigid templates); consumers split 150/50
    planted = synth.generate_planted(200, seed=5)
    save_dataset([d.sample for d in planted], os.path.join(DATA, "toy_planted.jsonl"))

    # news corpus for the pipeline
    docs = synth.corpus_docs(synth.generate(60, seed=23, id_prefix="d"), source="toy")
    write_jsonl(os.path.join(DATA, "toy_corpus.jsonl"), docs)

    # annotation pool: small labeled seed plus a common-heavy unlabeled pool
    seed_labeled = [d.sample for d in synth.generate(20, seed=1000, vocab="common", id_prefix="i")]
    common = [d.sample for d in synth.generate(300, seed=2000, vocab="common", id_prefix="c")]
    rare = [d.sample for d in synth.generate(100, seed=3000, vocab="rare", id_prefix="r")]
    pool = Pool(
        {s.id: s for s in seed_labeled},
        {s.id: UnlabeledPair(s.id, s.x1, s.x2) for s in common + rare},
    )
    pool.save(os.path.join(DATA, "toy_pool.jsonl"))

    # structured triples about the synthetic ecosystem
    triples = [
        ("Arvon Group", "industry", "Fintech"),
        ("Boreal Systems", "industry", "Cloud"),
        ("Cindra Systems", "industry", "Commerce"),
        ("Quanta Labs", "industry", "Fintech"),
        ("Rivel Networks", "industry", "Media"),
        ("Sorel Partners", "industry", "Health"),
        ("Paylink Service", "belongs_to", "Fintech"),
        ("Cloudnest Platform", "belongs_to", "Cloud"),
        ("Streamhub App", "belongs_to", "Media"),
        ("Shopcore Platform", "belongs_to", "Commerce"),
        ("Medtrack App", "belongs_to", "Health"),
        ("Paylink Service", "includes", "Checkout"),
        ("Paylink Service", "includes", "Billing"),
        ("Shopcore Platform", "includes", "Checkout"),
        ("Streamhub App", "includes", "Search"),
        ("Cloudnest Platform", "equivalent_to", "Cloudnest Service"),
        ("Shopcore Platform", "overlaps", "Streamhub App"),
        ("Arvon Group", "founded", "2004"),
    ]
    with open(os.path.join(DATA, "toy_triples.tsv"), "w", encoding="utf-8") as fh:
        for s, p, o in triples:
            fh.write(f"{s}\t{p}\t{o}\n")

    # layer classifier: name suffixes first, then feature names, then
    # predicate-context fallbacks for bare domain names
    write_json(
        os.path.join(DATA, "classifier_rules.json"),
        [
            {
                "pattern": "(Group|Systems|Holdings|Labs|Networks|Partners)$",
                "target": "Organization",
                "priority": 10,
            },
            {"pattern": "(Service|Platform|App)$", "target": "Service", "priority": 20},
            {
                "pattern": "^(Checkout|Billing|Search|Alerts)$",
                "target": "FunctionalFeature",
                "priority": 25,
            },
            {"pattern": "^(industry|belongs_to)$", "target": "Domain", "priority": 30},
        ],
    )

    # external catalog merged during structural construction
    write_jsonl(
        os.path.join(DATA, "toy_external.jsonl"),
        [
            {"kind": "Organization", "name": "Arvon Group", "aliases": ["Arvon"]},
            {"kind": "Organization", "name": "Quanta Labs", "aliases": ["Quanta"]},
            {"kind": "Organization", "name": "Boreal Systems", "aliases": ["Boreal"]},
            {"kind": "Service", "name": "Paylink Service", "aliases": ["Paylink"]},
            {"kind": "Service", "name": "Cloudnest Platform", "aliases": ["Cloudnest"]},
            {"kind": "Service", "name": "Shopcore Platform", "aliases": ["Shopcore"]},
            {"kind": "Organization", "name": "Nordwind Group", "aliases": []},
        ],
    )

    # remote knowledge-graph records served by the file-backed lookup client
    kg = []
    for first, suffix in [
        ("Cindra", "Systems"), ("Dovex", "Holdings"), ("Elmira", "Group"),
        ("Fintor", "Group"), ("Galven", "Systems"), ("Hexor", "Holdings"),
        ("Iklon", "Group"), ("Jorvik", "Systems"),
    ]:
        kg.append({"kind": "Organization", "name": f"{first} {suffix}", "aliases": [first]})
    for first, suffix in [
        ("Rivel", "Networks"), ("Sorel", "Partners"), ("Tavex", "Labs"),
        ("Umbra", "Networks"), ("Vortal", "Partners"), ("Wexford", "Labs"),
        ("Xylem", "Networks"), ("Yonder", "Partners"),
    ]:
        kg.append({"kind": "Organization", "name": f"{first} {suffix}", "aliases": [first]})
    for first, suffix in [
        ("Streamhub", "App"), ("Dataforge", "Service"), ("Ridelink", "Platform"),
        ("Medtrack", "App"), ("Agrisense", "Service"), ("Edulight", "Platform"),
    ]:
        kg.append({"kind": "Service", "name": f"{first} {suffix}", "aliases": [first]})
    write_jsonl(os.path.join(DATA, "toy_kg.jsonl"), kg)

    # evolutionary-relation rules over the synthetic verb families
    write_json(
        os.path.join(DATA, "evo_rules.json"),
        [
            {
                "id": "acquire-org",
                "twords": ["acquires", "absorbs", "acquired", "absorbed"],
                "components": ["Actor", "Recipient", "Time"],
                "edges": [{"src": "Actor", "dst": "Recipient", "rel": "acquire", "ts": "Time"}],
            },
            {
                "id": "launch-offer",
                "twords": ["launches", "releases", "launched", "released"],
                "components": ["Actor", "Object", "Time"],
                "edges": [{"src": "Actor", "dst": "Object", "rel": "offer", "ts": "Time"}],
            },
            {
                "id": "launch-mode",
                "twords": ["launches", "releases", "launched", "released"],
                "components": ["Actor", "Object", "Attribute", "Time"],
                "edges": [
                    {
                        "src": "Object",
                        "dst": "Actor",
                        "rel": "offeredBy",
                        "ts": "Time",
                        "attrs": {"mode": "Attribute"},
                    }
                ],
            },
            {
                "id": "update-feature",
                "twords": ["updates", "upgrades", "updated", "upgraded"],
                "components": ["Actor", "Object", "Time"],
                "edges": [{"src": "Actor", "dst": "Object", "rel": "update", "ts": "Time"}],
            },
            {
                "id": "close-feature",
                "twords": ["discontinues", "retires", "discontinued", "retired"],
                "components": ["Actor", "Object", "Time"],
                "edges": [{"src": "Actor", "dst": "Object", "rel": "close", "ts": "Time"}],
            },
            {
                "id": "bankrupt-exit",
                "twords": ["bankrupt"],
                "components": ["Actor", "Time"],
                "edges": [{"src": "Actor", "dst": "Actor", "rel": "exit", "ts": "Time"}],
            },
        ],
    )
    print(f"fixtures written to {DATA}")


if __name__ == "__main__":
    main()
