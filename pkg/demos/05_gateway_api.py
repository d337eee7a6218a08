#!/usr/bin/env python3
"""Drive the HTTP gateway in-process: train, query, label, extract.

Exercises the annotation-loop contract over real HTTP semantics without
binding a port: query a pre-annotated batch, post back corrected labels
(here the corrections come from a gold table), and watch the per-iteration
cost report grow.  To serve the same API on a socket, run `msem serve`.
"""

from fastapi.testclient import TestClient

from msem.active import AlConfig, Pool, UnlabeledPair
from msem.service import GatewayState, create_app
from msem.synth import generate, toy_extractor_config


def main() -> None:
    labeled = [s.sample for s in generate(10, seed=600, vocab="common", id_prefix="L")]
    raw = [s.sample for s in generate(30, seed=601, vocab="common", id_prefix="U")]
    gold = {s.id: s for s in raw}
    state = GatewayState(
        extractor_config=toy_extractor_config(epochs=10, seed=0),
        al_config=AlConfig(strategy="ltp", batch_size=5),
        pool=Pool(
            labeled={s.id: s for s in labeled},
            unlabeled={s.id: UnlabeledPair(s.id, s.x1, s.x2) for s in raw},
        ),
    )
    client = TestClient(create_app(state))

    print("GET  /healthz           ->", client.get("/healthz").json())
    print("POST /al/train          ->", client.post("/al/train").json())

    for _ in range(2):
        batch = client.get("/al/next", params={"batch": 5}).json()
        ids = [s["id"] for s in batch["samples"]]
        print(f"GET  /al/next           -> iteration {batch['iteration']}, ids {ids}")
        corrected = [gold[sid].to_json() for sid in ids]
        done = client.post("/al/label", json={"samples": corrected}).json()
        print(f"POST /al/label          -> mean cost {done['mean_cost']:.2f}, "
              f"{done['labeled']} labeled / {done['unlabeled']} unlabeled")

    print("GET  /al/cost           ->", client.get("/al/cost").json())

    seen_title = " ".join(labeled[0].x1)
    extracted = client.post(
        "/extract", json={"title1": seen_title, "published_at": "2020-05-06"}
    ).json()
    print(f"POST /extract ({seen_title!r})")
    print("                        ->", extracted["events"])


if __name__ == "__main__":
    main()
