"""Regenerate tests/fixtures/annotation_parity.json.

The browser client previews annotation cost locally; the gateway recomputes
it server side from the same triple encoding.  This script freezes reference
outputs of the server implementation (span decoding, triple sets, symmetric
difference costs) so the TypeScript mirror can be held to exact agreement.

Run from the repository root:

    python3 frontend/tools/make_parity_fixture.py
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from msem.active import annotation_cost
from msem.tags import (
    ARGUMENT_TYPES,
    NUM_TAGS,
    RELATION_LABELS,
    Span,
    annotation_set,
    spans_from_tags,
    tag_name,
    tags_from_spans,
)

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "annotation_parity.json"

rng = random.Random(823)


def names(tags):
    return [tag_name(t) for t in tags]


def random_valid(n):
    spans = []
    pos = 0
    while pos < n:
        if rng.random() < 0.55:
            length = rng.randint(1, min(3, n - pos))
            spans.append(Span(pos, pos + length, rng.choice(ARGUMENT_TYPES)))
            pos += length + rng.randint(0, 2)
        else:
            pos += 1
    return tags_from_spans(spans, n)


def random_wild(n):
    # uniform over the model tag range 0..12; exercises dangling-I repair
    return [rng.randrange(13) for _ in range(n)]


def perturb(tags):
    out = list(tags)
    for _ in range(rng.randint(1, 3)):
        if not out:
            break
        out[rng.randrange(len(out))] = rng.randrange(13)
    return out


def pair_case(y1p, y2p, cp, y1g, y2g, cg):
    tp = annotation_set(y1p, y2p, cp)
    tr = annotation_set(y1g, y2g, cg)
    return {
        "pre": {"y1": names(y1p), "y2": names(y2p), "c": cp},
        "gold": {"y1": names(y1g), "y2": names(y2g), "c": cg},
        "preTriples": sorted([s, e, a] for (s, e, a) in tp),
        "goldTriples": sorted([s, e, a] for (s, e, a) in tr),
        "cost": annotation_cost(tp, tr),
        "trLen": len(tr),
    }


def main() -> None:
    pairs = []

    # valid BIO on both sides, sentence 2 sometimes empty
    for _ in range(25):
        n1 = rng.randint(3, 9)
        n2 = 0 if rng.random() < 0.25 else rng.randint(3, 9)
        y1p, y2p = random_valid(n1), random_valid(n2)
        cp = rng.randrange(len(RELATION_LABELS))
        if rng.random() < 0.3:
            y1g, y2g, cg = list(y1p), list(y2p), cp  # occasional perfect proposal
        else:
            y1g, y2g = perturb(y1p), perturb(y2p)
            cg = rng.randrange(len(RELATION_LABELS))
        pairs.append(pair_case(y1p, y2p, cp, y1g, y2g, cg))

    # wild sequences: dangling I- and B/I churn must decode identically
    for _ in range(15):
        n1 = rng.randint(2, 8)
        n2 = rng.randint(0, 8)
        pairs.append(
            pair_case(
                random_wild(n1),
                random_wild(n2),
                rng.randrange(len(RELATION_LABELS)),
                random_wild(n1),
                random_wild(n2),
                rng.randrange(len(RELATION_LABELS)),
            )
        )

    # pinned edges
    y1 = tags_from_spans([Span(0, 2, "Actor"), Span(2, 3, "Action")], 5)
    y2 = tags_from_spans([Span(1, 2, "Object")], 4)
    pairs.append(pair_case(y1, y2, 0, y1, y2, 0))  # identity, cost 0
    pairs.append(pair_case(y1, y2, 0, y1, y2, 3))  # relation-only change, cost 2
    pairs.append(pair_case(y1, [], 3, y1, [], 3))  # single sentence
    pairs.append(pair_case([0] * 4, [], 2, [0] * 4, [], 2))  # no spans at all

    # raw span decoding, specials included (they close spans, same as O)
    spans = []
    for _ in range(24):
        tags = [rng.randrange(NUM_TAGS) for _ in range(rng.randint(1, 9))]
        spans.append(
            {
                "tags": tags,
                "spans": [[s.start, s.end, s.argument] for s in spans_from_tags(tags)],
            }
        )
    for tags in ([], [2], [2, 2], [1, 2, 4], [0, 0, 0], [13, 2, 14]):
        spans.append(
            {
                "tags": list(tags),
                "spans": [[s.start, s.end, s.argument] for s in spans_from_tags(tags)],
            }
        )

    OUT.write_text(
        json.dumps(
            {
                "note": "generated by tools/make_parity_fixture.py; do not edit by hand",
                "pairs": pairs,
                "spanCases": spans,
            },
            indent=1,
        )
        + "\n"
    )
    print(f"wrote {OUT} ({len(pairs)} pair cases, {len(spans)} span cases)")


if __name__ == "__main__":
    main()
