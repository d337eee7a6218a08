"""Deterministic synthetic corpus generator for tests and demos.

Titles come from templates over role-disjoint vocabulary pools: a token
type appears in exactly one component role, so the planted tags are
learnable from token identity alone.  Templates vary sentence shape
(active, passive, time-fronted; optional name suffixes and attributes) so
no single tag sequence dominates and the transfer matrix cannot shortcut
the emission signal.  The second sentence opens with a relation-specific
marker clause, so the pair label is learnable from the sentence vectors.
Everything derives from one seeded generator: any (n, seed, vocab) triple
always yields the same corpus.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .extractor import TrainingSample
from .tags import O_TAG, RELATION_LABELS, b_tag, i_tag

ACTOR_FIRST = [
    "Arvon", "Boreal", "Cindra", "Dovex",
    "Elmira", "Fintor", "Galven", "Hexor",
    "Iklon", "Jorvik", "Kalpen", "Lumet",
]
ACTOR_SUFFIX = ["Group", "Systems", "Holdings"]
RECIPIENT_FIRST = [
    "Quanta", "Rivel", "Sorel", "Tavex",
    "Umbra", "Vortal", "Wexford", "Xylem",
    "Yonder", "Zephyr", "Nubis", "Ostrel",
]
RECIPIENT_SUFFIX = ["Labs", "Networks", "Partners"]
OBJECT_FIRST = [
    "Paylink", "Cloudnest", "Streamhub", "Dataforge",
    "Ridelink", "Shopcore", "Medtrack", "Agrisense",
    "Edulight", "Securemesh", "Voyagebase", "Chatgrid",
]
OBJECT_SUFFIX = ["Service", "Platform", "App"]
VERBS = {
    "acquire": ["acquires", "absorbs"],
    "launch": ["launches", "releases"],
    "update": ["updates", "upgrades"],
    "close": ["discontinues", "retires"],
}
# passive participles, index-aligned with VERBS
PARTICIPLES = {
    "acquire": ["acquired", "absorbed"],
    "launch": ["launched", "released"],
    "update": ["updated", "upgraded"],
    "close": ["discontinued", "retired"],
}
ATTRIBUTES = ["nationwide", "overseas", "officially", "quietly"]
TIMES = [["yesterday"], ["today"], ["this", "week"], ["last", "month"], ["on", "Friday"]]
# pairwise token-disjoint marker clauses; every marker token is tagged O
MARKERS = {
    "Sequential": ["Soon", "afterwards", ","],
    "ReverseSequential": ["Just", "beforehand", ","],
    "Unrelated": ["Meanwhile", "elsewhere", ","],
    "JointEvent": ["More", "precisely", ","],
}

EVENT_KINDS = ("acquire", "launch", "update", "close")


def toy_extractor_config(epochs: int = 40, seed: int = 0) -> "ExtractorConfig":
    """Profile that reliably fits the synthetic corpus.

    Keeps the stock batch size, dropout, and loss weights but swaps in
    logit potentials and a learning rate sized for training the hashing
    encoder's heads from scratch; the stock rate assumes a pretrained
    encoder that only needs nudging.
    """
    from .encoding import EncoderConfig
    from .extractor import ExtractorConfig

    return ExtractorConfig(
        encoder=EncoderConfig(),
        learning_rate=1e-2,
        epochs=epochs,
        logit_potentials=True,
        seed=seed,
    )


@dataclass
class Vocab:
    actor_first: list[str]
    actor_suffix: list[str]
    recipient_first: list[str]
    recipient_suffix: list[str]
    object_first: list[str]
    object_suffix: list[str]
    verbs: dict[str, list[str]]
    participles: dict[str, list[str]]
    attributes: list[str]
    times: list[list[str]]


def vocab_slice(name: str) -> Vocab:
    """'full', 'common' (small core subset), or 'rare' (the complement)."""
    if name == "full":
        return Vocab(
            ACTOR_FIRST, ACTOR_SUFFIX,
            RECIPIENT_FIRST, RECIPIENT_SUFFIX,
            OBJECT_FIRST, OBJECT_SUFFIX,
            VERBS, PARTICIPLES, ATTRIBUTES, TIMES,
        )
    if name == "common":
        return Vocab(
            ACTOR_FIRST[:4], ACTOR_SUFFIX[:1],
            RECIPIENT_FIRST[:4], RECIPIENT_SUFFIX[:1],
            OBJECT_FIRST[:4], OBJECT_SUFFIX[:1],
            {k: v[:1] for k, v in VERBS.items()},
            {k: v[:1] for k, v in PARTICIPLES.items()},
            ATTRIBUTES[:2],
            TIMES[:3],
        )
    if name == "rare":
        return Vocab(
            ACTOR_FIRST[4:], ACTOR_SUFFIX[1:],
            RECIPIENT_FIRST[4:], RECIPIENT_SUFFIX[1:],
            OBJECT_FIRST[4:], OBJECT_SUFFIX[1:],
            {k: v[1:] for k, v in VERBS.items()},
            {k: v[1:] for k, v in PARTICIPLES.items()},
            ATTRIBUTES[2:],
            TIMES[3:],
        )
    raise ValueError(f"unknown vocab slice {name!r}")


@dataclass
class SynthSample:
    sample: TrainingSample
    title: str
    published_at: str  # ISO date


def _pick(rng: np.random.Generator, items: list) -> object:
    return items[int(rng.integers(len(items)))]


def _span(tokens: list[str], argument: str) -> tuple[list[str], list[int]]:
    tags = [b_tag(argument)] + [i_tag(argument)] * (len(tokens) - 1)
    return tokens, tags


def _name(
    rng: np.random.Generator, first: list[str], suffix: list[str]
) -> list[str]:
    # one- or two-token names keep I- tags from being positionally fixed
    parts = [str(_pick(rng, first))]
    if rng.random() < 0.6:
        parts.append(str(_pick(rng, suffix)))
    return parts


def _theme(
    rng: np.random.Generator, vocab: Vocab, kind: str
) -> tuple[list[str], str]:
    """The verb's second argument: recipient for acquisitions, else object."""
    if kind == "acquire":
        return _name(rng, vocab.recipient_first, vocab.recipient_suffix), "Recipient"
    return _name(rng, vocab.object_first, vocab.object_suffix), "Object"


def _event_sentence(
    rng: np.random.Generator, vocab: Vocab, kind: str
) -> tuple[list[str], list[int]]:
    actor = _name(rng, vocab.actor_first, vocab.actor_suffix)
    theme, theme_arg = _theme(rng, vocab, kind)
    time = list(_pick(rng, vocab.times)) if rng.random() < 0.85 else []
    attr = (
        [str(_pick(rng, vocab.attributes))]
        if kind in ("launch", "update") and rng.random() < 0.5
        else []
    )

    parts: list[tuple[list[str], str]] = []
    form = rng.random()
    if form < 0.5:
        # active: Actor verb Theme [attr] [time]
        parts.append((actor, "Actor"))
        parts.append(([str(_pick(rng, vocab.verbs[kind]))], "Action"))
        parts.append((theme, theme_arg))
        if attr:
            parts.append((attr, "Attribute"))
        if time:
            parts.append((time, "Time"))
    elif form < 0.75 and time:
        # time-fronted: Time , Actor verb Theme [attr]
        parts.append((time, "Time"))
        parts.append(([","], "O"))
        parts.append((actor, "Actor"))
        parts.append(([str(_pick(rng, vocab.verbs[kind]))], "Action"))
        parts.append((theme, theme_arg))
        if attr:
            parts.append((attr, "Attribute"))
    else:
        # passive: Theme is verbed by Actor [time]
        parts.append((theme, theme_arg))
        parts.append((["is"], "O"))
        parts.append(([str(_pick(rng, vocab.participles[kind]))], "Action"))
        parts.append((["by"], "O"))
        parts.append((actor, "Actor"))
        if time:
            parts.append((time, "Time"))

    tokens: list[str] = []
    tags: list[int] = []
    for toks, arg in parts:
        if arg == "O":
            tokens += toks
            tags += [O_TAG] * len(toks)
        else:
            t, g = _span(toks, arg)
            tokens += t
            tags += g
    return tokens, tags


def _joint_parts(
    rng: np.random.Generator, vocab: Vocab
) -> tuple[tuple[list[str], list[int]], tuple[list[str], list[int]]]:
    """One event split across two sentences: agent clause, then detail clause."""
    actor = _name(rng, vocab.actor_first, vocab.actor_suffix)
    verb = [str(_pick(rng, vocab.verbs["launch"]))]
    tokens1, tags1 = [], []
    for part, arg in ((actor, "Actor"), (verb, "Action")):
        t, g = _span(part, arg)
        tokens1 += t
        tags1 += g
    obj = _name(rng, vocab.object_first, vocab.object_suffix)
    attr = [str(_pick(rng, vocab.attributes))] if rng.random() < 0.5 else []
    time = list(_pick(rng, vocab.times))
    detail: list[tuple[list[str], str]] = [(obj, "Object")]
    if attr:
        detail.append((attr, "Attribute"))
    detail.append((time, "Time"))
    if rng.random() < 0.5:
        detail.reverse()
    tokens2, tags2 = [], []
    for part, arg in detail:
        t, g = _span(part, arg)
        tokens2 += t
        tags2 += g
    return (tokens1, tags1), (tokens2, tags2)


def make_sample(
    rng: np.random.Generator, idx: int, relation: str, vocab: Vocab, id_prefix: str = "t"
) -> SynthSample:
    if relation == "JointEvent":
        (x1, y1), (x2, y2) = _joint_parts(rng, vocab)
        marker = MARKERS[relation]
        x2 = marker + x2
        y2 = [O_TAG] * len(marker) + y2
    elif relation == "SingleSentence":
        x1, y1 = _event_sentence(rng, vocab, str(_pick(rng, list(EVENT_KINDS))))
        x2, y2 = [], []
    else:
        x1, y1 = _event_sentence(rng, vocab, str(_pick(rng, list(EVENT_KINDS))))
        x2, y2 = _event_sentence(rng, vocab, str(_pick(rng, list(EVENT_KINDS))))
        marker = MARKERS[relation]
        x2 = marker + x2
        y2 = [O_TAG] * len(marker) + y2
    sample = TrainingSample(
        id=f"{id_prefix}{idx:04d}",
        c=RELATION_LABELS.index(relation),
        x1=x1,
        x2=x2,
        y1=y1,
        y2=y2,
    )
    published = date(2019, 1, 1) + timedelta(days=int(rng.integers(0, 360)))
    title = " ".join(x1) + (f". {' '.join(x2)}" if x2 else "")
    return SynthSample(sample, title, published.isoformat())


def generate(
    n: int, seed: int = 7, vocab: str = "full", id_prefix: str = "t"
) -> list[SynthSample]:
    """n samples cycling through the five relation classes."""
    rng = np.random.default_rng(seed)
    voc = vocab_slice(vocab)
    order = ("SingleSentence", "Sequential", "ReverseSequential", "Unrelated", "JointEvent")
    return [
        make_sample(rng, i, order[i % len(order)], voc, id_prefix=id_prefix)
        for i in range(n)
    ]


# sentence-1 lead-ins for the two-event classes, token-disjoint from MARKERS
PLANTED_LEADS = {
    "Sequential": ["At", "first", ","],
    "ReverseSequential": ["Only", "now", ","],
    "Unrelated": ["Quite", "separately", ","],
}
_PLANTED_TIMES = ["yesterday", "today"]
# launch verbs are reserved for the joint-event template so a lone launch
# sentence cannot shadow the joint pattern
_PLANTED_KINDS = ("acquire", "update", "close")


def _planted_event(rng: np.random.Generator, kind: str) -> tuple[list[str], list[int]]:
    # single-token slots; every event sentence is Actor verb Theme Time
    actor = [str(_pick(rng, ACTOR_FIRST[:6]))]
    if kind == "acquire":
        theme, theme_arg = [str(_pick(rng, RECIPIENT_FIRST[:6]))], "Recipient"
    else:
        theme, theme_arg = [str(_pick(rng, OBJECT_FIRST[:6]))], "Object"
    verb = [str(_pick(rng, VERBS[kind]))]
    time = [str(_pick(rng, _PLANTED_TIMES))]
    tokens: list[str] = []
    tags: list[int] = []
    for part, arg in ((actor, "Actor"), (verb, "Action"), (theme, theme_arg), (time, "Time")):
        t, g = _span(part, arg)
        tokens += t
        tags += g
    return tokens, tags


def make_planted(
    rng: np.random.Generator, idx: int, relation: str, id_prefix: str = "p"
) -> SynthSample:
    """Planted-pattern sample: one rigid template per relation class."""
    if relation == "JointEvent":
        x1, y1 = [], []
        for part, arg in (([str(_pick(rng, ACTOR_FIRST[:6]))], "Actor"),
                          ([str(_pick(rng, VERBS["launch"]))], "Action")):
            t, g = _span(part, arg)
            x1 += t
            y1 += g
        marker = MARKERS[relation]
        x2, y2 = list(marker), [O_TAG] * len(marker)
        for part, arg in (([str(_pick(rng, OBJECT_FIRST[:6]))], "Object"),
                          ([str(_pick(rng, _PLANTED_TIMES))], "Time")):
            t, g = _span(part, arg)
            x2 += t
            y2 += g
    elif relation == "SingleSentence":
        x1, y1 = _planted_event(rng, str(_pick(rng, list(_PLANTED_KINDS))))
        x2, y2 = [], []
    else:
        lead = PLANTED_LEADS[relation]
        body, ybody = _planted_event(rng, str(_pick(rng, list(_PLANTED_KINDS))))
        x1 = list(lead) + body
        y1 = [O_TAG] * len(lead) + ybody
        rest, yrest = _planted_event(rng, str(_pick(rng, list(_PLANTED_KINDS))))
        marker = MARKERS[relation]
        x2 = list(marker) + rest
        y2 = [O_TAG] * len(marker) + yrest
    sample = TrainingSample(
        id=f"{id_prefix}{idx:04d}",
        c=RELATION_LABELS.index(relation),
        x1=x1,
        x2=x2,
        y1=y1,
        y2=y2,
    )
    published = date(2019, 1, 1) + timedelta(days=int(rng.integers(0, 360)))
    title = " ".join(x1) + (f". {' '.join(x2)}" if x2 else "")
    return SynthSample(sample, title, published.isoformat())


def generate_planted(n: int, seed: int = 11, id_prefix: str = "p") -> list[SynthSample]:
    """n planted-pattern samples cycling through the five relation classes."""
    rng = np.random.default_rng(seed)
    order = ("SingleSentence", "Sequential", "ReverseSequential", "Unrelated", "JointEvent")
    return [make_planted(rng, i, order[i % len(order)], id_prefix=id_prefix) for i in range(n)]


def corpus_docs(samples: list[SynthSample], source: str = "synth") -> list[dict]:
    """Corpus-format JSONL records for a generated batch."""
    return [
        {
            "id": s.sample.id,
            "title": s.title,
            "published_at": s.published_at,
            "source": source,
        }
        for s in samples
    ]
