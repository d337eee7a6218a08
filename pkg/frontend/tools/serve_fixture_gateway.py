#!/usr/bin/env python3
"""Serve a gateway seeded with synthetic data, for exercising the annotator UI.

Run from the ``frontend/`` directory (the parent package must be installed):

    python3 tools/serve_fixture_gateway.py --port 8077 --token dev

then point ``index.html`` (or ``tools/live_check.mjs``) at it.  The pool has
a handful of labeled pairs to train from plus a small unlabeled frontier, and
the extractor is configured tiny so /al/train answers in a few seconds.
"""

from __future__ import annotations

import argparse

from msem.active import AlConfig, Pool, UnlabeledPair
from msem.encoding import EncoderConfig
from msem.extractor import ExtractorConfig
from msem.service import GatewayState, serve
from msem.synth import generate


def seeded_state(args: argparse.Namespace) -> GatewayState:
    labeled = [s.sample for s in generate(args.labeled, seed=50, vocab="common", id_prefix="L")]
    raw = [s.sample for s in generate(args.unlabeled, seed=51, vocab="common", id_prefix="U")]
    pool = Pool(
        labeled={s.id: s for s in labeled},
        unlabeled={s.id: UnlabeledPair(s.id, s.x1, s.x2) for s in raw},
    )
    config = ExtractorConfig(
        encoder=EncoderConfig(d=8, hash_buckets=64, seed=0),
        epochs=2,
        learning_rate=1e-2,
        logit_potentials=True,
    )
    return GatewayState(
        extractor_config=config,
        al_config=AlConfig(strategy="ltp", batch_size=args.batch, seed=3),
        pool=pool,
        auth_token=args.token,
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8077)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--token", default=None)
    parser.add_argument("--labeled", type=int, default=6)
    parser.add_argument("--unlabeled", type=int, default=8)
    parser.add_argument("--batch", type=int, default=3)
    args = parser.parse_args()
    serve(seeded_state(args), port=args.port, host=args.host)


if __name__ == "__main__":
    main()
