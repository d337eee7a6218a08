"""Command-line interface over the library pipeline."""

from __future__ import annotations

import json
import sys
from typing import Optional

import click

from . import skg
from .active import AlConfig, Pool, make_oracle, run_loop
from .encoding import EncoderConfig
from .evolution import (
    align_communities,
    analyze_evolution,
    build_snapshots,
    classify_events,
    detect_communities,
    render_timeline,
    storyline,
    storyline_json,
)
from .extractor import (
    ExtractorConfig,
    JointExtractor,
    extract,
    load_checkpoint,
    load_dataset,
    save_checkpoint,
)
from .fusion import FileKgClient, Fuser
from .model import EcosystemModel
from .pipeline import PipelineConfig, run_pipeline
from .rules import apply_rules, load_rulebase
from .service import GatewayState, serve


def _extractor_config(path: Optional[str]) -> ExtractorConfig:
    if not path:
        return ExtractorConfig()
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    enc = obj.pop("encoder", None) or {}
    if "ngram_orders" in enc:
        enc["ngram_orders"] = tuple(enc["ngram_orders"])
    return ExtractorConfig(encoder=EncoderConfig(**enc), **obj)


@click.group()
def main() -> None:
    """Service-ecosystem model toolkit."""


@main.group(name="skg")
def skg_group() -> None:
    """Structural-part construction."""


@skg_group.command(name="build")
@click.option("--triples", required=True, type=click.Path(exists=True))
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True))
@click.option("--external", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def skg_build(triples: str, rules_path: str, external: Optional[str], out: str) -> None:
    """Ingest triples (and external records) into a fresh model export."""
    model = EcosystemModel()
    rulebase = skg.Rulebase.from_json(rules_path)
    with open(triples, "r", encoding="utf-8") as fh:
        parsed = (
            list(skg.parse_triples_jsonl(fh))
            if triples.endswith(".jsonl")
            else list(skg.parse_triples_tsv(fh))
        )
    report = skg.ingest_triples(model, parsed, rulebase)
    if external:
        with open(external, "r", encoding="utf-8") as fh:
            skg.merge_external(model, list(skg.read_external_jsonl(fh)))
    model.export_json(out)
    stats = skg.skg_stats(model)
    click.echo(json.dumps({"ingest": report.__dict__, "stats": stats.__dict__}, indent=2))


@main.group(name="extract")
def extract_group() -> None:
    """Joint event extraction."""


@extract_group.command(name="train")
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def extract_train(dataset: str, out: str, config_path: Optional[str]) -> None:
    config = _extractor_config(config_path)
    samples = load_dataset(dataset)
    result = JointExtractor(config).train(samples)
    save_checkpoint(out, result.params, config)
    click.echo(
        json.dumps(
            {"samples": len(samples), "epochs": len(result.loss_trace),
             "final_loss": result.loss_trace[-1], "checkpoint": out}
        )
    )


@extract_group.command(name="run")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--title1", required=True)
@click.option("--title2", default="")
@click.option("--published-at")
def extract_run(checkpoint: str, title1: str, title2: str, published_at: Optional[str]) -> None:
    params, config = load_checkpoint(checkpoint)
    result = extract(title1, title2, params, config, published_at)
    click.echo(
        json.dumps(
            {
                "relation": result.relation,
                "link": list(result.link) if result.link else None,
                "events": [e.__dict__ for e in result.events],
                "diagnostics": result.diagnostics,
            },
            ensure_ascii=False,
            indent=2,
        )
    )


@main.group(name="al")
def al_group() -> None:
    """Pool-based active learning."""


@al_group.command(name="loop")
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True))
@click.option("--oracle", required=True, type=click.Path(exists=True),
              help="Labeled dataset JSONL supplying gold labels by sample id.")
@click.option("--strategy", type=click.Choice(["ltp", "mtp", "lc", "random"]), default="ltp")
@click.option("--batch", default=50, show_default=True)
@click.option("--iterations", default=17, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--cost-out", type=click.Path(), default="cost.csv", show_default=True)
@click.option("--pool-out", type=click.Path(), help="Where to save the final pool state.")
@click.option("--seed", default=0, show_default=True)
def al_loop(
    pool_path: str,
    oracle: str,
    strategy: str,
    batch: int,
    iterations: int,
    config_path: Optional[str],
    cost_out: str,
    pool_out: Optional[str],
    seed: int,
) -> None:
    """Run the simulated-oracle loop; for human annotation use `serve`."""
    pool = Pool.load(pool_path)
    gold = {s.id: s for s in load_dataset(oracle)}
    config = AlConfig(strategy=strategy, batch_size=batch, iterations=iterations, seed=seed)
    extractor = JointExtractor(_extractor_config(config_path))
    report, outcomes = run_loop(pool, extractor, make_oracle(gold), config)
    report.write_csv(cost_out)
    if pool_out:
        pool.save(pool_out)
    click.echo(
        json.dumps(
            {
                "iterations": len(outcomes),
                "labeled": len(pool.labeled),
                "unlabeled": len(pool.unlabeled),
                "cost_csv": cost_out,
            }
        )
    )


@main.command(name="fuse")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--kg", "kg_path", type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def fuse_cmd(model_path: str, kg_path: Optional[str], out: str) -> None:
    """Link every event's components to entities, writing the model back."""
    model = EcosystemModel.import_json(model_path)
    client = FileKgClient.from_jsonl(kg_path) if kg_path else None
    report = Fuser(model, client=client).fuse_all()
    model.export_json(out)
    click.echo(json.dumps({"outcomes": report.outcomes, "edgesAdded": report.edges_added}))


@main.group(name="rules")
def rules_group() -> None:
    """Evolutionary-relation rule engine."""


@rules_group.command(name="apply")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--coverage-out", type=click.Path())
def rules_apply(model_path: str, rules_path: str, out: str, coverage_out: Optional[str]) -> None:
    model = EcosystemModel.import_json(model_path)
    rulebase = load_rulebase(rules_path)
    coverage, _ = apply_rules(model, rulebase)
    model.export_json(out)
    payload = coverage.to_json()
    if coverage_out:
        with open(coverage_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    click.echo(json.dumps(payload))


@main.group(name="evolve")
def evolve_group() -> None:
    """Snapshot and community analytics."""


def _times(raw: str) -> list[str]:
    return [t.strip() for t in raw.split(",") if t.strip()]


@evolve_group.command(name="snapshots")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--times", required=True, help="Comma-separated ISO timestamps.")
def evolve_snapshots(model_path: str, times: str) -> None:
    model = EcosystemModel.import_json(model_path)
    snaps = build_snapshots(model, _times(times))
    click.echo(
        json.dumps(
            [
                {"at": s.at.isoformat(), "entities": len(s.entities),
                 "structural": len(s.structural), "evolutionary": len(s.evolutionary)}
                for s in snaps
            ],
            indent=2,
        )
    )


@evolve_group.command(name="communities")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--times", required=True)
@click.option("--seed", default=0, show_default=True)
def evolve_communities(model_path: str, times: str, seed: int) -> None:
    model = EcosystemModel.import_json(model_path)
    payload = {}
    for snap in build_snapshots(model, _times(times)):
        comms = detect_communities(snap, seed=seed)
        payload[snap.at.isoformat()] = [
            {"id": c.id, "members": sorted(c.members), "keyNodes": list(c.key_nodes)}
            for c in comms
        ]
    click.echo(json.dumps(payload, indent=2))


@evolve_group.command(name="events")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--times", required=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--theta", default=0.3, show_default=True)
def evolve_events(model_path: str, times: str, seed: int, theta: float) -> None:
    model = EcosystemModel.import_json(model_path)
    report = analyze_evolution(model, _times(times), seed=seed, theta=theta)
    click.echo(json.dumps(report.to_json()["events"], indent=2))


@main.command(name="storyline")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--stakeholder", required=True, help="Entity id or canonical name.")
@click.option("--feature", help="Entity id or canonical name of a feature filter.")
@click.option("--as-json", is_flag=True, default=False)
def storyline_cmd(model_path: str, stakeholder: str, feature: Optional[str], as_json: bool) -> None:
    model = EcosystemModel.import_json(model_path)

    def resolve(ref: str) -> str:
        if ref in {e.id for e in model.entities()}:
            return ref
        matches = model.find_entity_by_name(ref)
        if not matches:
            raise click.ClickException(f"no entity named {ref!r}")
        return matches[0]

    sid = resolve(stakeholder)
    fid = resolve(feature) if feature else None
    entries = storyline(model, sid, fid)
    if as_json:
        click.echo(json.dumps(storyline_json(entries), ensure_ascii=False, indent=2))
    else:
        click.echo(render_timeline(entries, heading=model.entity(sid).canonical_name))


@main.group(name="pipeline")
def pipeline_group() -> None:
    """Full multi-stage runs."""


@pipeline_group.command(name="run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def pipeline_run(config_path: str) -> None:
    config = PipelineConfig.from_json(config_path)
    _, report = run_pipeline(config)
    click.echo(json.dumps(report.to_json(), ensure_ascii=False, indent=2))


@main.command(name="serve")
@click.option("--port", default=8077, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--pool", "pool_path", type=click.Path(exists=True))
@click.option("--model", "model_path", type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--strategy", type=click.Choice(["ltp", "mtp", "lc", "random"]), default="ltp")
@click.option("--batch", default=50, show_default=True)
@click.option("--token", help="Require this bearer token on every endpoint but /healthz.")
def serve_cmd(
    port: int,
    host: str,
    pool_path: Optional[str],
    model_path: Optional[str],
    config_path: Optional[str],
    strategy: str,
    batch: int,
    token: Optional[str],
) -> None:
    state = GatewayState(
        extractor_config=_extractor_config(config_path),
        al_config=AlConfig(strategy=strategy, batch_size=batch),
        auth_token=token,
        pool_state_path=pool_path,
    )
    if pool_path:
        state.pool = Pool.load(pool_path)
    if model_path:
        state.model = EcosystemModel.import_json(model_path)
    serve(state, port=port, host=host)


if __name__ == "__main__":
    main()
