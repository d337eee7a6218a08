#!/usr/bin/env python3
"""Train the joint extractor and decode a few news titles.

Trains the chain-CRF tagger and relation head from scratch on a slice of the
bundled synthetic corpus (a few seconds on a laptop), then shows what the
decoder does with single events, sequential pairs, and a split headline
whose two sentences describe one event.
"""

import tempfile

from msem.extractor import (
    JointExtractor,
    evaluate,
    extract,
    load_checkpoint,
    save_checkpoint,
)
from msem.synth import generate_planted, toy_extractor_config
from msem.tags import RELATION_LABELS

TITLES = [
    ("Arvon acquires Vortal today", ""),
    ("At first , Boreal updates Shopcore yesterday",
     "Soon afterwards , Dovex updates Streamhub yesterday"),
    ("Only now , Arvon acquires Vortal today",
     "Just beforehand , Boreal discontinues Cloudnest yesterday"),
    ("Arvon releases", "More precisely , Dataforge today"),
]


def main() -> None:
    samples = [s.sample for s in generate_planted(50, seed=5)]
    config = toy_extractor_config(epochs=20, seed=0)
    print(f"training on {len(samples)} samples ...")
    result = JointExtractor(config).train(samples)
    print(f"  loss {result.loss_trace[0]:.3f} -> {result.loss_trace[-1]:.3f} "
          f"over {len(result.loss_trace)} epochs")
    metrics = evaluate(samples, result.params, config)
    print(f"  fit: token {metrics['token_accuracy']:.3f}, "
          f"relation {metrics['relation_accuracy']:.3f}, "
          f"exact-event {metrics['exact_event_accuracy']:.3f}")

    for title1, title2 in TITLES:
        res = extract(title1, title2, result.params, config, published_at="2020-03-04")
        shown = f"{title1} | {title2}" if title2 else title1
        print(f"\n>> {shown}")
        print(f"   relation: {RELATION_LABELS[res.relation]}"
              + (f", link {res.link}" if res.link else ""))
        for event in res.events:
            print(f"   event: actor={event.actor!r} action={event.action!r} "
                  f"recipient={event.recipient!r} object={event.object!r} "
                  f"time={event.time!r}")

    direct = extract(TITLES[0][0], "", result.params, config, published_at="2020-03-04")
    with tempfile.NamedTemporaryFile(suffix=".npz") as tmp:
        save_checkpoint(tmp.name, result.params, config)
        params, config_back = load_checkpoint(tmp.name)
        again = extract(TITLES[0][0], "", params, config_back, published_at="2020-03-04")
    same = again.events[0].as_tuple() == direct.events[0].as_tuple()
    print(f"\ncheckpoint round trip decodes identically: {same}")


if __name__ == "__main__":
    main()
