"""Tag vocabulary, BIO span codec, and annotation-set encoding."""

from __future__ import annotations

import numpy as np
import pytest

from msem.tags import (
    ARGUMENT_TYPES,
    CLS_TAG,
    NUM_TAGS,
    O_TAG,
    PAD_TAG,
    RELATION_LABELS,
    RELATION_SPAN,
    SEP_TAG,
    Span,
    allowed_tags,
    annotation_set,
    argument_of,
    b_tag,
    i_tag,
    spans_from_tags,
    start_tags,
    tag_index,
    tag_name,
    tags_from_spans,
    transition_mask,
)


def random_span_set(rng: np.random.Generator, length: int) -> list[Span]:
    """Non-overlapping spans over [0, length) with random argument types."""
    spans = []
    pos = 0
    while pos < length:
        if rng.random() < 0.4:
            width = int(rng.integers(1, min(4, length - pos) + 1))
            arg = ARGUMENT_TYPES[int(rng.integers(len(ARGUMENT_TYPES)))]
            spans.append(Span(pos, pos + width, arg))
            pos += width
        else:
            pos += 1
    return spans


class TestVocabulary:
    def test_name_index_round_trip(self):
        """tag_name and tag_index are inverse over the full tag space."""
        for idx in range(NUM_TAGS):
            assert tag_index(tag_name(idx)) == idx
        names = {tag_name(i) for i in range(NUM_TAGS)}
        assert len(names) == NUM_TAGS

    def test_b_i_tags_cover_all_arguments(self):
        seen = set()
        for arg in ARGUMENT_TYPES:
            b, i = b_tag(arg), i_tag(arg)
            assert i == b + 1
            assert argument_of(b) == argument_of(i) == arg
            seen.update((b, i))
        assert seen == set(range(1, 13))

    def test_unknown_lookups_raise(self):
        with pytest.raises(ValueError):
            tag_name(99)
        with pytest.raises(ValueError):
            tag_index("B-Bogus")
        with pytest.raises(ValueError):
            argument_of(O_TAG)

    def test_allowed_and_start_sets(self):
        """Model emits O and B/I only; position 0 additionally bans I-."""
        assert allowed_tags() == list(range(13))
        starts = start_tags()
        assert O_TAG in starts
        assert all(t == O_TAG or t % 2 == 1 for t in starts)
        assert len(starts) == 1 + len(ARGUMENT_TYPES)

    def test_transition_mask_legality(self):
        mask = transition_mask()
        for src in range(NUM_TAGS):
            for dst in range(NUM_TAGS):
                if src in (CLS_TAG, SEP_TAG, PAD_TAG) or dst in (CLS_TAG, SEP_TAG, PAD_TAG):
                    assert mask[src, dst] == -10000.0
                elif 1 <= dst <= 12 and dst % 2 == 0:
                    legal = src in (dst - 1, dst)
                    assert (mask[src, dst] == 0.0) == legal
                else:
                    assert mask[src, dst] == 0.0


class TestSpanCodec:
    def test_round_trip_random_span_sets(self):
        """tags_from_spans then spans_from_tags recovers the span set exactly."""
        rng = np.random.default_rng(0)
        for _ in range(300):
            length = int(rng.integers(1, 15))
            spans = random_span_set(rng, length)
            tags = tags_from_spans(spans, length)
            assert spans_from_tags(tags) == spans

    def test_adjacent_same_type_spans_stay_separate(self):
        """B-X starts a fresh span even directly after another X span."""
        spans = [Span(0, 2, "Actor"), Span(2, 3, "Actor")]
        tags = tags_from_spans(spans, 3)
        assert tags == [b_tag("Actor"), i_tag("Actor"), b_tag("Actor")]
        assert spans_from_tags(tags) == spans

    def test_dangling_i_promoted_to_begin(self):
        """An I-X with no head decodes as if it were B-X."""
        tags = [O_TAG, i_tag("Time"), i_tag("Time"), O_TAG]
        assert spans_from_tags(tags) == [Span(1, 3, "Time")]
        # type switch mid-run also forces a new span
        tags = [b_tag("Actor"), i_tag("Object")]
        assert spans_from_tags(tags) == [Span(0, 1, "Actor"), Span(1, 2, "Object")]

    def test_decode_is_idempotent_on_arbitrary_tags(self):
        """Decoding repairs any sequence; re-encoding then decoding is stable."""
        rng = np.random.default_rng(1)
        for _ in range(300):
            length = int(rng.integers(1, 12))
            raw = [int(t) for t in rng.integers(0, 13, size=length)]
            spans = spans_from_tags(raw)
            again = spans_from_tags(tags_from_spans(spans, length))
            assert again == spans

    def test_specials_break_spans(self):
        tags = [b_tag("Actor"), SEP_TAG, i_tag("Actor")]
        assert spans_from_tags(tags) == [Span(0, 1, "Actor"), Span(2, 3, "Actor")]

    def test_span_validation(self):
        with pytest.raises(ValueError):
            Span(2, 2, "Actor")
        with pytest.raises(ValueError):
            Span(-3, 1, "Actor")
        Span(-1, -1, "Sequential")  # sentinel form is allowed
        with pytest.raises(ValueError):
            tags_from_spans([Span(0, 5, "Actor")], 3)


class TestAnnotationSet:
    def test_offsets_and_sentinel(self):
        """Sentence-2 spans shift by len(sentence 1); relation rides (-1, -1)."""
        y1 = tags_from_spans([Span(0, 1, "Actor")], 3)
        y2 = tags_from_spans([Span(1, 2, "Time")], 4)
        triples = annotation_set(y1, y2, 0)
        assert (0, 1, "Actor") in triples
        assert (4, 5, "Time") in triples
        assert (*RELATION_SPAN, RELATION_LABELS[0]) in triples
        assert len(triples) == 3

    def test_relation_always_contributes_exactly_one_triple(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            n1, n2 = int(rng.integers(1, 8)), int(rng.integers(0, 8))
            y1 = tags_from_spans(random_span_set(rng, n1), n1)
            y2 = tags_from_spans(random_span_set(rng, n2), n2)
            c = int(rng.integers(len(RELATION_LABELS)))
            triples = annotation_set(y1, y2, c)
            rels = [t for t in triples if t[:2] == RELATION_SPAN]
            assert rels == [(*RELATION_SPAN, RELATION_LABELS[c])]

    def test_symmetric_difference_counts_edits(self):
        """Fixing one wrong span costs 2 triples; a wrong relation costs 2."""
        y1 = tags_from_spans([Span(0, 1, "Actor"), Span(2, 3, "Action")], 4)
        good = annotation_set(y1, [], 3)
        bad_span = annotation_set(
            tags_from_spans([Span(0, 2, "Actor"), Span(2, 3, "Action")], 4), [], 3
        )
        assert len(good ^ bad_span) == 2
        bad_rel = annotation_set(y1, [], 2)
        assert len(good ^ bad_rel) == 2
        assert len(good ^ good) == 0
