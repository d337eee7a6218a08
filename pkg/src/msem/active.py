"""Pool-based active learning over the joint extractor.

Each iteration trains on the labeled set, scores the unlabeled pool with an
uncertainty strategy, queries an annotator for the top batch, and moves the
freshly labeled samples across.  The annotation-cost metric counts the
manual edits needed to turn the model's pre-annotation into the reference.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .extractor import JointExtractor, ModelParams, PairPrediction, TrainingSample
from .tags import annotation_set, tag_name

STRATEGIES = ("ltp", "mtp", "lc", "random")


class ActiveLearningError(Exception):
    pass


class AnnotatorError(ActiveLearningError):
    """Raised by an annotator callback; the iteration rolls back."""


@dataclass
class UnlabeledPair:
    id: str
    x1: list[str]
    x2: list[str]


@dataclass
class PreAnnotatedSample:
    """Model's proposal for one queried pair: predicted tags + relation."""

    id: str
    x1: list[str]
    x2: list[str]
    y1: list[int]
    y2: list[int]
    c: int
    phi: float

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "x1": self.x1,
            "x2": self.x2,
            "y1": [tag_name(t) for t in self.y1],
            "y2": [tag_name(t) for t in self.y2],
            "c": self.c,
            "phi": self.phi,
        }


Annotator = Callable[[list[PreAnnotatedSample]], list[TrainingSample]]
Trainer = Callable[[Sequence[TrainingSample]], ModelParams]


# ---------------- selection strategies ----------------


def score_ltp(pred: PairPrediction) -> float:
    """1 minus the lowest best-path tag probability anywhere in the pair."""
    lows = [
        min(float(sp.h[i, t]) for i, t in enumerate(sp.tags)) for sp in pred.sentences()
    ]
    if not lows:
        raise ActiveLearningError("empty sentence pair")
    return 1.0 - min(lows)


def score_mtp(pred: PairPrediction) -> float:
    """1 minus the lowest positionwise-max tag probability (ignores paths)."""
    lows = [float(sp.h.max(axis=1).min()) for sp in pred.sentences()]
    if not lows:
        raise ActiveLearningError("empty sentence pair")
    return 1.0 - min(lows)


def score_lc(pred: PairPrediction) -> float:
    """1 minus the Viterbi path probability; pairs take the less confident side."""
    phis = [1.0 - float(np.exp(sp.path_log_prob)) for sp in pred.sentences()]
    if not phis:
        raise ActiveLearningError("empty sentence pair")
    return max(phis)


# ---------------- pool ----------------


@dataclass
class Pool:
    labeled: dict[str, TrainingSample] = field(default_factory=dict)
    unlabeled: dict[str, UnlabeledPair] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._check_disjoint()

    def _check_disjoint(self) -> None:
        both = self.labeled.keys() & self.unlabeled.keys()
        if both:
            raise ActiveLearningError(f"ids in both pools: {sorted(both)[:5]}")

    def size(self) -> tuple[int, int]:
        return len(self.labeled), len(self.unlabeled)

    def absorb(self, samples: Iterable[TrainingSample]) -> None:
        """Move freshly labeled samples from the unlabeled to the labeled side."""
        samples = list(samples)
        for s in samples:
            if s.id not in self.unlabeled:
                raise ActiveLearningError(f"sample {s.id} not in unlabeled pool")
        for s in samples:
            del self.unlabeled[s.id]
            self.labeled[s.id] = s

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for sid in sorted(self.labeled):
                fh.write(
                    json.dumps(
                        {"id": sid, "status": "labeled", "sample": self.labeled[sid].to_json()},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
            for sid in sorted(self.unlabeled):
                pair = self.unlabeled[sid]
                fh.write(
                    json.dumps(
                        {"id": sid, "status": "unlabeled", "sample": {"x1": pair.x1, "x2": pair.x2}},
                        ensure_ascii=False,
                    )
                    + "\n"
                )

    @classmethod
    def load(cls, path: str) -> "Pool":
        pool = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                sid = str(obj["id"])
                if obj["status"] == "labeled":
                    pool.labeled[sid] = TrainingSample.from_json(obj["sample"], fallback_id=sid)
                elif obj["status"] == "unlabeled":
                    raw = obj["sample"]
                    pool.unlabeled[sid] = UnlabeledPair(sid, list(raw["x1"]), list(raw["x2"]))
                else:
                    raise ActiveLearningError(f"bad pool status {obj['status']!r}")
        pool._check_disjoint()
        return pool


# ---------------- scoring and selection ----------------


def score_pool(
    pool: Pool,
    extractor: JointExtractor,
    params: ModelParams,
    strategy: str,
    rng: Optional[np.random.Generator] = None,
) -> dict[str, float]:
    if strategy not in STRATEGIES:
        raise ActiveLearningError(f"unknown strategy {strategy!r}")
    scores: dict[str, float] = {}
    for sid in sorted(pool.unlabeled):
        pair = pool.unlabeled[sid]
        if strategy == "random":
            if rng is None:
                raise ActiveLearningError("random strategy needs an rng")
            scores[sid] = float(rng.random())
            continue
        pred = extractor.predict_pair(pair.x1, pair.x2, params)
        scores[sid] = {"ltp": score_ltp, "mtp": score_mtp, "lc": score_lc}[strategy](pred)
    return scores


def select_batch(scores: dict[str, float], batch_size: int) -> list[str]:
    """Top batch by descending phi; ties resolve by ascending sample id."""
    if not scores:
        raise ActiveLearningError("empty unlabeled pool")
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [sid for sid, _ in ranked[: min(batch_size, len(ranked))]]


def annotation_cost(tp: frozenset, tr: frozenset) -> int:
    """|Tp ∪ Tr| − |Tp ∩ Tr|: edits to turn the prediction into the reference."""
    return len(tp.symmetric_difference(tr))


# ---------------- iteration driver ----------------


@dataclass
class CostRow:
    iteration: int
    mean_cost: float
    mean_tr_len: float


@dataclass
class CostReport:
    rows: list[CostRow] = field(default_factory=list)

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "mean_cost", "mean_tr_len"])
            for row in self.rows:
                writer.writerow([row.iteration, f"{row.mean_cost:.6g}", f"{row.mean_tr_len:.6g}"])

    @classmethod
    def read_csv(cls, path: str) -> "CostReport":
        report = cls()
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for rec in csv.DictReader(fh):
                report.rows.append(
                    CostRow(int(rec["iteration"]), float(rec["mean_cost"]), float(rec["mean_tr_len"]))
                )
        return report


@dataclass
class AlConfig:
    strategy: str = "ltp"
    batch_size: int = 50
    iterations: int = 17
    cost_threshold: Optional[float] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.batch_size < 1 or self.iterations < 1:
            raise ValueError("batch_size and iterations must be >= 1")


@dataclass
class IterationOutcome:
    iteration: int
    params: ModelParams
    selected: list[str]
    preannotations: list[PreAnnotatedSample]
    cost_row: CostRow


def preannotate(
    pool: Pool,
    extractor: JointExtractor,
    params: ModelParams,
    ids: Sequence[str],
    scores: dict[str, float],
) -> list[PreAnnotatedSample]:
    out = []
    for sid in ids:
        pair = pool.unlabeled[sid]
        pred = extractor.predict_pair(pair.x1, pair.x2, params)
        out.append(
            PreAnnotatedSample(
                id=sid,
                x1=pair.x1,
                x2=pair.x2,
                y1=pred.s1.tags if pred.s1 else [],
                y2=pred.s2.tags if pred.s2 else [],
                c=pred.relation,
                phi=scores.get(sid, 0.0),
            )
        )
    return out


def run_iteration(
    pool: Pool,
    extractor: JointExtractor,
    annotator: Annotator,
    config: AlConfig,
    iteration: int,
    trainer: Optional[Trainer] = None,
) -> IterationOutcome:
    """One full loop pass.  The pool mutates only after the annotator succeeds
    and returns exactly the queried ids; any failure leaves it untouched."""
    if not pool.labeled:
        raise ActiveLearningError("labeled seed set is empty; train requires labels")
    if not pool.unlabeled:
        raise ActiveLearningError("unlabeled pool exhausted")
    if trainer is None:
        trainer = lambda samples: extractor.train(samples).params
    ordered = [pool.labeled[sid] for sid in sorted(pool.labeled)]
    params = trainer(ordered)
    rng = np.random.default_rng((config.seed, iteration))
    scores = score_pool(pool, extractor, params, config.strategy, rng)
    selected = select_batch(scores, config.batch_size)
    pre = preannotate(pool, extractor, params, selected, scores)

    labeled = annotator(list(pre))
    got_ids = sorted(s.id for s in labeled)
    if got_ids != sorted(selected):
        raise AnnotatorError(f"annotator returned ids {got_ids[:5]}..., wanted {sorted(selected)[:5]}...")
    by_id = {s.id: s for s in labeled}

    costs = []
    tr_lens = []
    for p in pre:
        gold = by_id[p.id]
        tp = annotation_set(p.y1, p.y2, p.c)
        tr = annotation_set(gold.y1, gold.y2, gold.c)
        costs.append(annotation_cost(tp, tr))
        tr_lens.append(len(tr))
    pool.absorb(labeled)
    row = CostRow(iteration, float(np.mean(costs)), float(np.mean(tr_lens)))
    return IterationOutcome(iteration, params, selected, pre, row)


def run_loop(
    pool: Pool,
    extractor: JointExtractor,
    annotator: Annotator,
    config: AlConfig,
    trainer: Optional[Trainer] = None,
) -> tuple[CostReport, list[IterationOutcome]]:
    """Iterate until the budget, pool exhaustion, or the cost threshold stops it."""
    report = CostReport()
    outcomes: list[IterationOutcome] = []
    for it in range(config.iterations):
        if not pool.unlabeled:
            break
        outcome = run_iteration(pool, extractor, annotator, config, it, trainer)
        outcomes.append(outcome)
        report.rows.append(outcome.cost_row)
        if config.cost_threshold is not None and outcome.cost_row.mean_cost < config.cost_threshold:
            break
    return report, outcomes


def make_oracle(gold: dict[str, TrainingSample]) -> Annotator:
    """Annotator backed by a fixed gold table, for tests and simulations."""

    def annotate(batch: list[PreAnnotatedSample]) -> list[TrainingSample]:
        missing = [p.id for p in batch if p.id not in gold]
        if missing:
            raise AnnotatorError(f"oracle has no labels for {missing[:5]}")
        return [gold[p.id] for p in batch]

    return annotate
