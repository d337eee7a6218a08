"""Tag vocabulary, BIO span handling, and annotation-set encoding.

The tag space covers six argument types under a BIO scheme plus three
special tags.  Specials never enter the sequence model's label space; they
exist so that padded/boundary positions have a stable encoding in datasets
and on the wire.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

ARGUMENT_TYPES: tuple[str, ...] = (
    "Actor",
    "Action",
    "Recipient",
    "Object",
    "Attribute",
    "Time",
)

RELATION_LABELS: tuple[str, ...] = (
    "Sequential",
    "ReverseSequential",
    "Unrelated",
    "SingleSentence",
    "JointEvent",
)

O_TAG = 0
CLS_TAG = 13
SEP_TAG = 14
PAD_TAG = 15
NUM_TAGS = 16
SPECIAL_TAGS = frozenset({CLS_TAG, SEP_TAG, PAD_TAG})

# Sentinel span marking a relation-label triple in an annotation set.
RELATION_SPAN = (-1, -1)


def tag_name(index: int) -> str:
    if index == O_TAG:
        return "O"
    if index == CLS_TAG:
        return "CLS"
    if index == SEP_TAG:
        return "SEP"
    if index == PAD_TAG:
        return "PAD"
    if 1 <= index <= 12:
        arg = ARGUMENT_TYPES[(index - 1) // 2]
        return ("B-" if index % 2 == 1 else "I-") + arg
    raise ValueError(f"unknown tag index {index}")


def tag_index(name: str) -> int:
    try:
        return _NAME_TO_INDEX[name]
    except KeyError:
        raise ValueError(f"unknown tag name {name!r}") from None


_NAME_TO_INDEX = {tag_name(i): i for i in range(NUM_TAGS)}


def b_tag(argument: str) -> int:
    return 1 + 2 * ARGUMENT_TYPES.index(argument)


def i_tag(argument: str) -> int:
    return 2 + 2 * ARGUMENT_TYPES.index(argument)


def argument_of(index: int) -> str:
    if not 1 <= index <= 12:
        raise ValueError(f"tag {index} carries no argument type")
    return ARGUMENT_TYPES[(index - 1) // 2]


def transition_mask(invalid_score: float = -10000.0) -> "np.ndarray":
    """Additive K x K mask: 0 for BIO-legal transitions, invalid_score else.

    I-X is only reachable from B-X or I-X.  Specials are fully blocked in
    and out; the sequence model never scores them.
    """
    import numpy as np

    mask = np.zeros((NUM_TAGS, NUM_TAGS))
    for src in range(NUM_TAGS):
        for dst in range(NUM_TAGS):
            if src in SPECIAL_TAGS or dst in SPECIAL_TAGS:
                mask[src, dst] = invalid_score
            elif 1 <= dst <= 12 and dst % 2 == 0:  # dst is I-X
                if src not in (dst - 1, dst):  # only B-X or I-X may precede
                    mask[src, dst] = invalid_score
    return mask


def allowed_tags() -> list[int]:
    """Tag indices the sequence model may emit (everything but specials)."""
    return [t for t in range(NUM_TAGS) if t not in SPECIAL_TAGS]


def start_tags() -> list[int]:
    """Tags legal at position 0: O and the B- family, never I-."""
    return [O_TAG] + [b_tag(arg) for arg in ARGUMENT_TYPES]


@dataclass(frozen=True, order=True)
class Span:
    start: int  # inclusive token index
    end: int  # exclusive token index
    argument: str

    def __post_init__(self) -> None:
        if not (self.start == -1 and self.end == -1):
            if self.start < 0 or self.end <= self.start:
                raise ValueError(f"bad span [{self.start}, {self.end})")


def spans_from_tags(tags: Sequence[int]) -> list[Span]:
    """Decode BIO tags into spans.

    A dangling I-X (no matching B-X/I-X before it) is repaired by promoting
    it to B-X, so any tag sequence decodes to a well-formed span set.
    """
    spans: list[Span] = []
    start = -1
    current = ""
    for pos, tag in enumerate(tags):
        if tag in SPECIAL_TAGS or tag == O_TAG:
            if start >= 0:
                spans.append(Span(start, pos, current))
                start = -1
            continue
        arg = argument_of(tag)
        begins = tag % 2 == 1 or arg != current or start < 0
        if begins:
            if start >= 0:
                spans.append(Span(start, pos, current))
            start, current = pos, arg
    if start >= 0:
        spans.append(Span(start, len(tags), current))
    return spans


def tags_from_spans(spans: Iterable[Span], length: int) -> list[int]:
    tags = [O_TAG] * length
    for span in sorted(spans):
        if span.start == -1:
            continue
        if span.end > length:
            raise ValueError(f"span {span} exceeds length {length}")
        tags[span.start] = b_tag(span.argument)
        for pos in range(span.start + 1, span.end):
            tags[pos] = i_tag(span.argument)
    return tags


def annotation_set(
    tags1: Sequence[int],
    tags2: Sequence[int],
    relation: int,
) -> frozenset[tuple[int, int, str]]:
    """Canonical <start, end, label> triple set for one annotated pair.

    Sentence-2 spans shift by len(sentence-1) so the two sentences share one
    coordinate axis; the relation label rides on a (-1, -1) sentinel span.
    The symmetric-difference cardinality of two such sets is the annotation
    cost of correcting one into the other.
    """
    triples: set[tuple[int, int, str]] = set()
    for span in spans_from_tags(tags1):
        triples.add((span.start, span.end, span.argument))
    offset = len(tags1)
    for span in spans_from_tags(tags2):
        triples.add((span.start + offset, span.end + offset, span.argument))
    triples.add((*RELATION_SPAN, RELATION_LABELS[relation]))
    return frozenset(triples)
