"""Joint event extraction and event-relation identification.

One model handles both tasks over a tokenized sentence pair: a per-token
emission head feeds a linear-chain CRF for BIO tagging (each sentence is
its own chain), and a relation head classifies the pair from the two
sentence vectors.  Training minimizes the weighted sum of the two losses.

Decoded tag sequences become event sextuples (Actor, Action, Recipient,
Object, Attribute, Time); the predicted relation decides whether the two
events link sequentially, merge into one, or stay unrelated.
"""

from __future__ import annotations

import dataclasses
import io
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import crf, tags as tagmod
from .encoding import EncodeCache, EncoderConfig, EncoderOutput, HashedNgramEncoder, tokenize
from .tags import (
    NUM_TAGS,
    RELATION_LABELS,
    SPECIAL_TAGS,
    Span,
    allowed_tags,
    annotation_set,
    spans_from_tags,
    start_tags,
    tag_index,
    tag_name,
    tags_from_spans,
    transition_mask,
)


class ExtractorError(Exception):
    pass


class TrainingDivergedError(ExtractorError):
    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class ExtractorConfig:
    encoder: EncoderConfig = EncoderConfig()
    learning_rate: float = 2e-5
    batch_size: int = 32
    epochs: int = 40
    max_seq_length: int = 128
    dropout: float = 0.25
    omega1: float = 1.0
    omega2: float = 1.0
    seed: int = 0
    logit_potentials: bool = False  # default: probabilities enter the CRF
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.omega1 < 0 or self.omega2 < 0:
            raise ValueError("loss weights must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.max_seq_length < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("max_seq_length, epochs, batch_size must be >= 1")


@dataclass
class TrainingSample:
    """One annotated pair: relation label c plus tagged token sequences."""

    id: str
    c: int
    x1: list[str]
    x2: list[str]
    y1: list[int]
    y2: list[int]

    def __post_init__(self) -> None:
        if len(self.x1) != len(self.y1) or len(self.x2) != len(self.y2):
            raise ExtractorError(f"sample {self.id}: |x| != |y|")
        if not 0 <= self.c < len(RELATION_LABELS):
            raise ExtractorError(f"sample {self.id}: bad relation {self.c}")
        if not self.x1:
            raise ExtractorError(f"sample {self.id}: empty first sentence")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "c": RELATION_LABELS[self.c],
            "x1": self.x1,
            "x2": self.x2,
            "y1": [tag_name(t) for t in self.y1],
            "y2": [tag_name(t) for t in self.y2],
        }

    @classmethod
    def from_json(cls, obj: dict, fallback_id: str = "") -> "TrainingSample":
        def to_tags(raw: Sequence) -> list[int]:
            return [t if isinstance(t, int) else tag_index(t) for t in raw]

        c = obj["c"]
        if not isinstance(c, int):
            c = RELATION_LABELS.index(c)
        x1, y1 = _strip_specials(list(obj["x1"]), to_tags(obj["y1"]))
        x2, y2 = _strip_specials(list(obj["x2"]), to_tags(obj["y2"]))
        return cls(str(obj.get("id", fallback_id)), c, x1, x2, y1, y2)


def _strip_specials(tokens: list[str], tags: list[int]) -> tuple[list[str], list[int]]:
    """Drop padded/boundary positions; the chain model never sees specials."""
    kept = [(tok, t) for tok, t in zip(tokens, tags) if t not in SPECIAL_TAGS]
    if not kept:
        return [], []
    toks, ts = zip(*kept)
    return list(toks), list(ts)


def load_dataset(path: str) -> list[TrainingSample]:
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            samples.append(TrainingSample.from_json(json.loads(line), fallback_id=f"s{lineno}"))
    return samples


def save_dataset(samples: Sequence[TrainingSample], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_json(), ensure_ascii=False) + "\n")


@dataclass
class ModelParams:
    E: np.ndarray  # encoder embedding table
    W: np.ndarray  # emission head (d, K)
    b: np.ndarray  # (K,)
    A: np.ndarray  # transfer matrix (K, K)
    Wr: np.ndarray  # relation head (2d, M)
    br: np.ndarray  # (M,)

    def copy(self) -> "ModelParams":
        return ModelParams(*(getattr(self, f.name).copy() for f in dataclasses.fields(self)))

    def zeros_like(self) -> "ModelParams":
        return ModelParams(
            *(np.zeros_like(getattr(self, f.name)) for f in dataclasses.fields(self))
        )


def init_params(config: ExtractorConfig) -> ModelParams:
    """Fresh parameters: random embeddings, zeroed heads, masked transitions.

    The heads start at exactly zero so that the argmax orderings the decoder
    relies on are set entirely by accumulated updates rather than by init
    noise; this keeps small-learning-rate runs decodable from the first
    correct displacement.
    """
    encoder = HashedNgramEncoder(config.encoder)
    rng = np.random.default_rng(config.seed)
    d = config.encoder.d
    return ModelParams(
        E=encoder.init_params(rng),
        W=np.zeros((d, NUM_TAGS)),
        b=np.zeros(NUM_TAGS),
        A=transition_mask(),
        Wr=np.zeros((2 * d, len(RELATION_LABELS))),
        br=np.zeros(len(RELATION_LABELS)),
    )


def softmax_rows(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def emissions(token_vectors: np.ndarray, W: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-token logits z and row-stochastic probabilities h."""
    if token_vectors.shape[1] != W.shape[0]:
        raise ExtractorError(
            f"token dim {token_vectors.shape[1]} != head dim {W.shape[0]}"
        )
    z = token_vectors @ W + b
    return z, softmax_rows(z)


def relation_forward(
    u1: np.ndarray, u2: np.ndarray, Wr: np.ndarray, br: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Relation logits and distribution from the concatenated sentence pair."""
    x = np.concatenate([u1, u2])
    if x.shape[0] != Wr.shape[0]:
        raise ExtractorError(f"relation input dim {x.shape[0]} != {Wr.shape[0]}")
    logits = x @ Wr + br
    return logits, softmax_rows(logits)


def relation_loss(c_hat: np.ndarray, c: int) -> tuple[float, bool]:
    """Cross entropy -log c_hat[c]; zero probability clamps at 1e-12."""
    p = float(c_hat[c])
    clamped = p < 1e-12
    return -float(np.log(max(p, 1e-12))), clamped


def joint_loss(l1: float, l2: float, omega1: float, omega2: float) -> float:
    return omega1 * l1 + omega2 * l2


@dataclass
class SentencePrediction:
    tokens: list[str]
    tags: list[int]
    h: np.ndarray  # (n, K) probabilities, for confidence scoring
    path_log_prob: float  # log P(y* | x) under the CRF


@dataclass
class PairPrediction:
    s1: Optional[SentencePrediction]
    s2: Optional[SentencePrediction]
    relation: int
    relation_probs: np.ndarray

    def sentences(self) -> list[SentencePrediction]:
        return [s for s in (self.s1, self.s2) if s is not None]


class JointExtractor:
    """Stateless-parameter model: all state lives in ModelParams."""

    def __init__(self, config: ExtractorConfig):
        self.config = config
        self.encoder = HashedNgramEncoder(config.encoder)
        self._allowed = allowed_tags()
        self._starts = start_tags()

    # ---------------- forward / backward ----------------

    def _sentence_forward(
        self,
        tokens: list[str],
        params: ModelParams,
        drop_rng: Optional[np.random.Generator],
    ) -> dict:
        out, cache = self.encoder.encode_with_cache(tokens, params.E)
        V = out.token_vectors
        if drop_rng is not None and self.config.dropout > 0.0 and len(tokens):
            keep = 1.0 - self.config.dropout
            mask = (drop_rng.random(V.shape) < keep) / keep
            Vd = V * mask
        else:
            mask = None
            Vd = V
        if len(tokens):
            z, h = emissions(Vd, params.W, params.b)
        else:
            z = np.zeros((0, NUM_TAGS))
            h = np.zeros((0, NUM_TAGS))
        pot = z if self.config.logit_potentials else h
        return {
            "out": out,
            "cache": cache,
            "V": V,
            "Vd": Vd,
            "mask": mask,
            "z": z,
            "h": h,
            "pot": pot,
        }

    def _emission_backward(
        self, fwd: dict, d_pot: np.ndarray, params: ModelParams, grads: ModelParams
    ) -> np.ndarray:
        """Potential gradient -> head grads; returns gradient on token vectors."""
        if self.config.logit_potentials:
            dz = d_pot
        else:
            h = fwd["h"]
            dz = h * (d_pot - (d_pot * h).sum(axis=1, keepdims=True))
        grads.W += fwd["Vd"].T @ dz
        grads.b += dz.sum(axis=0)
        dVd = dz @ params.W.T
        if fwd["mask"] is not None:
            dVd = dVd * fwd["mask"]
        return dVd

    def _sample_loss_and_grads(
        self,
        sample: TrainingSample,
        params: ModelParams,
        grads: ModelParams,
        drop_rng: Optional[np.random.Generator],
    ) -> tuple[float, float, float, bool]:
        """Returns (crf_nll, relation_ce, joint, clamped); accumulates grads."""
        cfg = self.config
        x1 = sample.x1[: cfg.max_seq_length]
        y1 = sample.y1[: cfg.max_seq_length]
        x2 = sample.x2[: cfg.max_seq_length]
        y2 = sample.y2[: cfg.max_seq_length]

        f1 = self._sentence_forward(x1, params, drop_rng)
        f2 = self._sentence_forward(x2, params, drop_rng)

        nll_total = 0.0
        d_tokvecs: list[Optional[np.ndarray]] = [None, None]
        for idx, (fwd, gold) in enumerate(((f1, y1), (f2, y2))):
            if not gold:
                continue
            nll, dh, dA = crf.nll_and_grad(
                fwd["pot"], params.A, gold, self._allowed, self._starts
            )
            nll_total += nll
            grads.A += cfg.omega1 * dA
            d_tokvecs[idx] = self._emission_backward(
                fwd, cfg.omega1 * dh, params, grads
            )

        u1 = f1["out"].sentence_vector
        u2 = f2["out"].sentence_vector
        logits, c_hat = relation_forward(u1, u2, params.Wr, params.br)
        ce, clamped = relation_loss(c_hat, sample.c)
        d_logits = c_hat.copy()
        d_logits[sample.c] -= 1.0
        d_logits *= cfg.omega2
        x_cat = np.concatenate([u1, u2])
        grads.Wr += np.outer(x_cat, d_logits)
        grads.br += d_logits
        dx = params.Wr @ d_logits
        d = cfg.encoder.d
        du1, du2 = dx[:d], dx[d:]

        for fwd, d_tok, du in ((f1, d_tokvecs[0], du1), (f2, d_tokvecs[1], du2)):
            self.encoder.backward(fwd["cache"], d_tok, du, grads.E)

        return nll_total, ce, joint_loss(nll_total, ce, cfg.omega1, cfg.omega2), clamped

    # ---------------- training ----------------

    def train(
        self,
        samples: Sequence[TrainingSample],
        initial: Optional[ModelParams] = None,
    ) -> "TrainResult":
        """Deterministic mini-batch training with adaptive moment estimation."""
        if not samples:
            raise ExtractorError("cannot train on an empty labeled set")
        cfg = self.config
        params = initial.copy() if initial is not None else init_params(cfg)
        rng = np.random.default_rng(cfg.seed)
        adam = _Adam(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps, params)
        trace: list[float] = []
        clamp_events = 0
        for epoch in range(cfg.epochs):
            order = rng.permutation(len(samples))
            epoch_loss = 0.0
            for start in range(0, len(order), cfg.batch_size):
                batch = [samples[i] for i in order[start : start + cfg.batch_size]]
                grads = params.zeros_like()
                batch_loss = 0.0
                for sample in batch:
                    _, _, loss, clamped = self._sample_loss_and_grads(
                        sample, params, grads, rng
                    )
                    batch_loss += loss
                    clamp_events += int(clamped)
                if not np.isfinite(batch_loss):
                    raise TrainingDivergedError(
                        "non-finite loss",
                        {"epoch": epoch, "batch_start": int(start), "loss_trace": trace},
                    )
                scale = 1.0 / len(batch)
                for name in ("E", "W", "b", "A", "Wr", "br"):
                    getattr(grads, name)[...] *= scale
                adam.step(params, grads)
                epoch_loss += batch_loss
            trace.append(epoch_loss / len(samples))
        return TrainResult(params, trace, {"relation_clamp_events": clamp_events})

    # ---------------- inference ----------------

    def predict_pair(
        self, x1: Sequence[str], x2: Sequence[str], params: ModelParams
    ) -> PairPrediction:
        cfg = self.config
        x1 = list(x1)[: cfg.max_seq_length]
        x2 = list(x2)[: cfg.max_seq_length]
        if not x1 and not x2:
            raise ExtractorError("empty sentence pair")
        preds: list[Optional[SentencePrediction]] = []
        outs: list[EncoderOutput] = []
        for tokens in (x1, x2):
            fwd = self._sentence_forward(tokens, params, None)
            outs.append(fwd["out"])
            if not tokens:
                preds.append(None)
                continue
            path, score = crf.viterbi(fwd["pot"], params.A, self._allowed, self._starts)
            log_z = crf.log_partition(fwd["pot"], params.A, self._allowed, self._starts)
            preds.append(
                SentencePrediction(tokens, path, fwd["h"], float(score - log_z))
            )
        _, c_hat = relation_forward(
            outs[0].sentence_vector, outs[1].sentence_vector, params.Wr, params.br
        )
        return PairPrediction(preds[0], preds[1], int(np.argmax(c_hat)), c_hat)


@dataclass
class TrainResult:
    params: ModelParams
    loss_trace: list[float]
    diagnostics: dict


class _Adam:
    """Adaptive moment estimation over the named tensors of ModelParams."""

    def __init__(self, lr: float, beta1: float, beta2: float, eps: float, like: ModelParams):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = like.zeros_like()
        self.v = like.zeros_like()

    def step(self, params: ModelParams, grads: ModelParams) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for f in dataclasses.fields(ModelParams):
            g = getattr(grads, f.name)
            m = getattr(self.m, f.name)
            v = getattr(self.v, f.name)
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            getattr(params, f.name)[...] -= (
                self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
            )


# ---------------- decoding into events ----------------


@dataclass
class ExtractedEvent:
    """Event sextuple with raw component texts (entity linking happens later)."""

    actor: Optional[str] = None
    action: Optional[str] = None
    recipient: Optional[str] = None
    object: Optional[str] = None
    attribute: Optional[str] = None
    time: Optional[str] = None

    def as_tuple(self) -> tuple:
        return (self.actor, self.action, self.recipient, self.object, self.attribute, self.time)


@dataclass
class ExtractionResult:
    events: list[ExtractedEvent]
    relation: int
    relation_probs: np.ndarray
    link: Optional[tuple[int, int]]  # (src index, dst index) into events
    prediction: PairPrediction
    diagnostics: list[dict] = field(default_factory=list)


def _component_texts(tokens: Sequence[str], spans: Sequence[Span]) -> dict[str, list[str]]:
    by_arg: dict[str, list[str]] = {}
    for span in spans:
        text = " ".join(tokens[span.start : span.end])
        by_arg.setdefault(span.argument, []).append(text)
    return by_arg


def _event_from(parts: dict[str, list[str]], fallback_time: Optional[str]) -> ExtractedEvent:
    def get(arg: str) -> Optional[str]:
        texts = parts.get(arg)
        return " ".join(texts) if texts else None

    return ExtractedEvent(
        actor=get("Actor"),
        action=get("Action"),
        recipient=get("Recipient"),
        object=get("Object"),
        attribute=get("Attribute"),
        time=get("Time") or fallback_time,
    )


def extract(
    title1: str,
    title2: str,
    params: ModelParams,
    config: ExtractorConfig,
    published_at: Optional[str] = None,
) -> ExtractionResult:
    """Decode a title pair into events plus a sequential-link decision.

    The second title may be blank.  Relation semantics: JointEvent merges
    the two sentences' spans into one event (reading order); SingleSentence
    keeps only the first sentence's event; Sequential links e1 -> e2;
    ReverseSequential swaps the events then links; Unrelated links nothing.
    A missing Time component falls back to the document publication date.
    """
    if not title1.strip():
        raise ExtractorError("first title must be non-empty")
    model = JointExtractor(config)
    pred = model.predict_pair(tokenize(title1), tokenize(title2 or ""), params)
    diagnostics: list[dict] = []

    sentence_parts: list[dict[str, list[str]]] = []
    for pos, sp in ((1, pred.s1), (2, pred.s2)):
        if sp is None:
            sentence_parts.append({})
            continue
        spans = spans_from_tags(sp.tags)
        if tags_from_spans(spans, len(sp.tags)) != list(sp.tags):
            diagnostics.append({"kind": "bio_repair", "sentence": pos, "tags": [tag_name(t) for t in sp.tags]})
        sentence_parts.append(_component_texts(sp.tokens, spans))

    rel = pred.relation
    label = RELATION_LABELS[rel]
    events: list[ExtractedEvent] = []
    link: Optional[tuple[int, int]] = None

    if label == "JointEvent":
        merged: dict[str, list[str]] = {}
        for parts in sentence_parts:
            for arg, texts in parts.items():
                merged.setdefault(arg, []).extend(texts)
        events.append(_event_from(merged, published_at))
    elif label == "SingleSentence" or pred.s2 is None:
        events.append(_event_from(sentence_parts[0], published_at))
    else:
        e1 = _event_from(sentence_parts[0], published_at)
        e2 = _event_from(sentence_parts[1], published_at)
        if label == "ReverseSequential":
            events = [e2, e1]  # swap into true temporal order
            link = (0, 1)
        else:
            events = [e1, e2]
            if label == "Sequential":
                link = (0, 1)
    return ExtractionResult(events, rel, pred.relation_probs, link, pred, diagnostics)


# ---------------- evaluation ----------------


def gold_events(sample: TrainingSample, published_at: Optional[str] = None) -> tuple[list[ExtractedEvent], Optional[tuple[int, int]]]:
    """Events implied by a sample's gold tags and relation."""
    parts1 = _component_texts(sample.x1, spans_from_tags(sample.y1))
    parts2 = _component_texts(sample.x2, spans_from_tags(sample.y2))
    label = RELATION_LABELS[sample.c]
    if label == "JointEvent":
        merged: dict[str, list[str]] = {}
        for parts in (parts1, parts2):
            for arg, texts in parts.items():
                merged.setdefault(arg, []).extend(texts)
        return [_event_from(merged, published_at)], None
    if label == "SingleSentence" or not sample.x2:
        return [_event_from(parts1, published_at)], None
    e1 = _event_from(parts1, published_at)
    e2 = _event_from(parts2, published_at)
    if label == "ReverseSequential":
        return [e2, e1], (0, 1)
    if label == "Sequential":
        return [e1, e2], (0, 1)
    return [e1, e2], None


def evaluate(
    samples: Sequence[TrainingSample], params: ModelParams, config: ExtractorConfig
) -> dict:
    """Token, relation, and exact-event accuracy over a labeled set."""
    model = JointExtractor(config)
    tok_hit = tok_total = 0
    rel_hit = 0
    event_hit = 0
    for sample in samples:
        pred = model.predict_pair(sample.x1, sample.x2, params)
        for sp, gold in ((pred.s1, sample.y1), (pred.s2, sample.y2)):
            if sp is None:
                continue
            for a, b in zip(sp.tags, gold):
                tok_hit += int(a == b)
                tok_total += 1
        rel_hit += int(pred.relation == sample.c)

        title1 = " ".join(sample.x1)
        title2 = " ".join(sample.x2)
        result = extract(title1, title2, params, config)
        want_events, want_link = gold_events(sample)
        got = [e.as_tuple() for e in result.events]
        want = [e.as_tuple() for e in want_events]
        event_hit += int(got == want and result.link == want_link)
    n = len(samples)
    return {
        "token_accuracy": tok_hit / tok_total if tok_total else 0.0,
        "relation_accuracy": rel_hit / n if n else 0.0,
        "exact_event_accuracy": event_hit / n if n else 0.0,
    }


# ---------------- checkpoints ----------------


def save_checkpoint(path: str, params: ModelParams, config: ExtractorConfig) -> None:
    cfg = dataclasses.asdict(config)
    buf = io.BytesIO()
    np.savez(
        buf,
        config=np.frombuffer(json.dumps(cfg).encode("utf-8"), dtype=np.uint8),
        E=params.E,
        W=params.W,
        b=params.b,
        A=params.A,
        Wr=params.Wr,
        br=params.br,
    )
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path: str) -> tuple[ModelParams, ExtractorConfig]:
    with np.load(path) as data:
        cfg = json.loads(bytes(data["config"]).decode("utf-8"))
        enc = cfg.pop("encoder")
        enc["ngram_orders"] = tuple(enc["ngram_orders"])
        config = ExtractorConfig(encoder=EncoderConfig(**enc), **cfg)
        params = ModelParams(
            E=data["E"].copy(),
            W=data["W"].copy(),
            b=data["b"].copy(),
            A=data["A"].copy(),
            Wr=data["Wr"].copy(),
            br=data["br"].copy(),
        )
    return params, config
