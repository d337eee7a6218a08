"""HTTP gateway serving extraction, the model, and the annotation loop.

The active-learning endpoints implement the suspended-iteration contract:
``/al/next`` proposes a pre-annotated batch without touching the pool, and
only a complete, id-matching ``/al/label`` post absorbs it, retrains, and
appends a cost row.  A crash between the two leaves the pool untouched.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import Depends, FastAPI, HTTPException, Query, Request
from pydantic import BaseModel

from .active import (
    AlConfig,
    CostReport,
    CostRow,
    Pool,
    annotation_cost,
    preannotate,
    score_pool,
    select_batch,
)
from .evolution import render_timeline, storyline, storyline_json
from .extractor import (
    ExtractorConfig,
    JointExtractor,
    ModelParams,
    TrainingSample,
    extract,
)
from .model import EcosystemModel, ModelError, UnknownNodeError
from .tags import annotation_set


@dataclass
class GatewayState:
    extractor_config: ExtractorConfig = field(default_factory=ExtractorConfig)
    al_config: AlConfig = field(default_factory=AlConfig)
    pool: Pool = field(default_factory=Pool)
    model: EcosystemModel = field(default_factory=EcosystemModel)
    params: Optional[ModelParams] = None
    cost_report: CostReport = field(default_factory=CostReport)
    iteration: int = 0
    auth_token: Optional[str] = None
    pool_state_path: Optional[str] = None
    outstanding: Optional[dict] = None  # {"ids": [...], "pre": [...]}
    lock: threading.Lock = field(default_factory=threading.Lock)

    def extractor(self) -> JointExtractor:
        return JointExtractor(self.extractor_config)


class LabelBatch(BaseModel):
    samples: list[dict]


class ExtractRequest(BaseModel):
    title1: str
    title2: str = ""
    published_at: Optional[str] = None


def create_app(state: GatewayState) -> FastAPI:
    app = FastAPI(title="service-ecosystem gateway")
    app.state.gateway = state

    def authorized(request: Request) -> None:
        if state.auth_token is None or request.url.path == "/healthz":
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {state.auth_token}":
            raise HTTPException(status_code=401, detail="missing or bad token")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/al/train", dependencies=[Depends(authorized)])
    def al_train() -> dict:
        with state.lock:
            if not state.pool.labeled:
                raise HTTPException(status_code=409, detail="labeled pool is empty")
            ordered = [state.pool.labeled[sid] for sid in sorted(state.pool.labeled)]
            result = state.extractor().train(ordered)
            state.params = result.params
            return {
                "trained_on": len(ordered),
                "final_loss": result.loss_trace[-1],
                "epochs": len(result.loss_trace),
            }

    @app.get("/al/next", dependencies=[Depends(authorized)])
    def al_next(batch: Optional[int] = Query(default=None, ge=1)) -> dict:
        with state.lock:
            if state.params is None:
                raise HTTPException(status_code=409, detail="train first")
            if not state.pool.unlabeled:
                return {"iteration": state.iteration, "samples": [], "exhausted": True}
            size = batch or state.al_config.batch_size
            rng = np.random.default_rng((state.al_config.seed, state.iteration))
            scores = score_pool(
                state.pool, state.extractor(), state.params, state.al_config.strategy, rng
            )
            ids = select_batch(scores, size)
            pre = preannotate(state.pool, state.extractor(), state.params, ids, scores)
            state.outstanding = {"ids": sorted(ids), "pre": pre}
            return {
                "iteration": state.iteration,
                "strategy": state.al_config.strategy,
                "samples": [p.to_json() for p in pre],
                "exhausted": False,
            }

    @app.post("/al/label", dependencies=[Depends(authorized)])
    def al_label(batch: LabelBatch) -> dict:
        with state.lock:
            if state.outstanding is None:
                raise HTTPException(status_code=409, detail="no outstanding batch")
            try:
                samples = [TrainingSample.from_json(obj) for obj in batch.samples]
            except Exception as exc:
                raise HTTPException(status_code=400, detail=f"bad sample: {exc}") from exc
            got = sorted(s.id for s in samples)
            if got != state.outstanding["ids"]:
                raise HTTPException(status_code=400, detail="sample ids do not match the batch")
            by_id = {s.id: s for s in samples}
            costs, tr_lens = [], []
            for p in state.outstanding["pre"]:
                gold = by_id[p.id]
                tp = annotation_set(p.y1, p.y2, p.c)
                tr = annotation_set(gold.y1, gold.y2, gold.c)
                costs.append(annotation_cost(tp, tr))
                tr_lens.append(len(tr))
            state.pool.absorb(samples)
            row = CostRow(state.iteration, float(np.mean(costs)), float(np.mean(tr_lens)))
            state.cost_report.rows.append(row)
            state.iteration += 1
            state.outstanding = None
            ordered = [state.pool.labeled[sid] for sid in sorted(state.pool.labeled)]
            state.params = state.extractor().train(ordered).params
            if state.pool_state_path:
                state.pool.save(state.pool_state_path)
            return {
                "iteration": row.iteration,
                "mean_cost": row.mean_cost,
                "mean_tr_len": row.mean_tr_len,
                "labeled": len(state.pool.labeled),
                "unlabeled": len(state.pool.unlabeled),
            }

    @app.get("/al/cost", dependencies=[Depends(authorized)])
    def al_cost() -> dict:
        return {
            "rows": [
                {
                    "iteration": r.iteration,
                    "mean_cost": r.mean_cost,
                    "mean_tr_len": r.mean_tr_len,
                }
                for r in state.cost_report.rows
            ]
        }

    @app.get("/model/storyline", dependencies=[Depends(authorized)])
    def model_storyline(
        stakeholder: str,
        feature: Optional[str] = None,
        render: bool = False,
    ) -> dict:
        try:
            entries = storyline(state.model, stakeholder, feature)
        except UnknownNodeError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        payload: dict = {"entries": storyline_json(entries)}
        if render:
            name = state.model.entity(stakeholder).canonical_name
            payload["rendered"] = render_timeline(entries, heading=name)
        return payload

    @app.get("/model/snapshot", dependencies=[Depends(authorized)])
    def model_snapshot(at: str) -> dict:
        try:
            snap = state.model.snapshot_at(at)
        except ModelError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {
            "at": snap.at.isoformat(),
            "entities": len(snap.entities),
            "structural": len(snap.structural),
            "evolutionary": [
                {
                    "id": r.id,
                    "src": r.source,
                    "dst": r.destination,
                    "rel": r.relation,
                    "ts": r.timestamp.isoformat(),
                    "attrs": r.attributes_dict(),
                    "event": r.event_id,
                }
                for r in snap.evolutionary
            ],
        }

    @app.get("/model/export", dependencies=[Depends(authorized)])
    def model_export() -> dict:
        return state.model.to_dict()

    @app.post("/extract", dependencies=[Depends(authorized)])
    def extract_pair(req: ExtractRequest) -> dict:
        if state.params is None:
            raise HTTPException(status_code=409, detail="train first")
        if not req.title1.strip():
            raise HTTPException(status_code=400, detail="title1 must be non-empty")
        result = extract(
            req.title1, req.title2, state.params, state.extractor_config, req.published_at
        )
        return {
            "relation": result.relation,
            "relation_probs": [float(p) for p in result.relation_probs],
            "link": list(result.link) if result.link else None,
            "events": [
                {
                    "actor": e.actor,
                    "action": e.action,
                    "recipient": e.recipient,
                    "object": e.object,
                    "attribute": e.attribute,
                    "time": e.time,
                }
                for e in result.events
            ],
            "diagnostics": result.diagnostics,
        }

    return app


def serve(state: GatewayState, port: int = 8077, host: str = "127.0.0.1") -> None:
    import uvicorn

    uvicorn.run(create_app(state), host=host, port=port)
