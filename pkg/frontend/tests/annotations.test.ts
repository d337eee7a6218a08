import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import {
  annotationCost,
  annotationTriples,
  spansFromTags,
  tagsFromSpans,
  type Triple,
} from "../src/annotations.js";
import { tagIndex } from "../src/tags.js";

interface FixtureSide {
  y1: string[];
  y2: string[];
  c: number;
}

interface PairCase {
  pre: FixtureSide;
  gold: FixtureSide;
  preTriples: [number, number, string][];
  goldTriples: [number, number, string][];
  cost: number;
  trLen: number;
}

interface SpanCase {
  tags: number[];
  spans: [number, number, string][];
}

const here = dirname(fileURLToPath(import.meta.url));
const fixture = JSON.parse(
  readFileSync(join(here, "fixtures", "annotation_parity.json"), "utf8"),
) as { pairs: PairCase[]; spanCases: SpanCase[] };

function triplesOf(side: FixtureSide): Triple[] {
  return annotationTriples(side.y1.map(tagIndex), side.y2.map(tagIndex), side.c);
}

describe("server parity", () => {
  // The fixture freezes reference outputs of the gateway's own encoder;
  // exact agreement here is what makes the client-side cost preview
  // trustworthy.
  it("reproduces every frozen triple set", () => {
    for (const pair of fixture.pairs) {
      expect(triplesOf(pair.pre)).toEqual(pair.preTriples);
      expect(triplesOf(pair.gold)).toEqual(pair.goldTriples);
    }
  });

  it("reproduces every frozen cost and reference size", () => {
    for (const pair of fixture.pairs) {
      const tp = triplesOf(pair.pre);
      const tr = triplesOf(pair.gold);
      expect(annotationCost(tp, tr)).toBe(pair.cost);
      expect(tr).toHaveLength(pair.trLen);
    }
  });

  it("decodes every frozen raw tag sequence to the same spans", () => {
    for (const c of fixture.spanCases) {
      const got = spansFromTags(c.tags).map((s) => [s.start, s.end, s.argument]);
      expect(got).toEqual(c.spans);
    }
  });

  it("covers both agreement and heavy-edit cases", () => {
    // guard against a degenerate fixture
    const costs = fixture.pairs.map((p) => p.cost);
    expect(costs.some((c) => c === 0)).toBe(true);
    expect(costs.some((c) => c >= 10)).toBe(true);
    expect(fixture.pairs.some((p) => p.pre.y2.length === 0)).toBe(true);
  });
});

describe("triple encoding", () => {
  const y1 = ["B-Actor", "I-Actor", "O", "B-Action"].map(tagIndex);
  const y2 = ["O", "B-Object", "I-Object"].map(tagIndex);

  it("offsets sentence-2 spans by the length of sentence 1", () => {
    const triples = annotationTriples(y1, y2, 0);
    expect(triples).toContainEqual([0, 2, "Actor"]);
    expect(triples).toContainEqual([3, 4, "Action"]);
    // Object span starts at token 1 of sentence 2, shifted by 4
    expect(triples).toContainEqual([5, 7, "Object"]);
  });

  it("rides the relation on the (-1, -1) sentinel", () => {
    expect(annotationTriples(y1, y2, 4)).toContainEqual([-1, -1, "JointEvent"]);
    expect(annotationTriples([], [], 2)).toEqual([[-1, -1, "Unrelated"]]);
  });

  it("rejects an out-of-range relation index", () => {
    expect(() => annotationTriples(y1, y2, 5)).toThrow(/unknown relation index/);
    expect(() => annotationTriples(y1, y2, -1)).toThrow(/unknown relation index/);
  });

  it("sorts triples for stable display", () => {
    const triples = annotationTriples(y1, y2, 0);
    const sorted = [...triples].sort(
      (a, b) => a[0] - b[0] || a[1] - b[1] || a[2].localeCompare(b[2]),
    );
    expect(triples).toEqual(sorted);
  });
});

describe("annotationCost", () => {
  // B-Actor I-Actor O: one Actor span [0, 2), relation Sequential
  const base = annotationTriples([1, 2, 0], [], 0);

  it("is zero on identical annotations", () => {
    expect(annotationCost(base, base)).toBe(0);
  });

  it("charges two edits for a relation-only change", () => {
    // one triple removed, one added
    const other = annotationTriples([1, 2, 0], [], 3);
    expect(annotationCost(base, other)).toBe(2);
  });

  it("charges one edit for an added span", () => {
    // same Actor span plus B-Time at token 2
    const more = annotationTriples([1, 2, 11], [], 0);
    expect(annotationCost(base, more)).toBe(1);
  });

  it("charges two edits for a moved span boundary", () => {
    // Actor span grows to [0, 3): the old triple leaves, the new one enters
    const grown = annotationTriples([1, 2, 2], [], 0);
    expect(annotationCost(base, grown)).toBe(2);
  });

  it("is symmetric", () => {
    const other = annotationTriples([1, 2, 0, 7], [3], 1);
    expect(annotationCost(base, other)).toBe(annotationCost(other, base));
  });
});

describe("span codec", () => {
  it("round trips spans through tags", () => {
    const spans = [
      { start: 0, end: 2, argument: "Actor" },
      { start: 3, end: 4, argument: "Time" },
    ];
    const tags = tagsFromSpans(spans, 5);
    expect(tags).toEqual([1, 2, 0, 11, 0]);
    expect(spansFromTags(tags)).toEqual(spans);
  });

  it("rejects spans outside the sentence", () => {
    expect(() => tagsFromSpans([{ start: 2, end: 6, argument: "Actor" }], 5)).toThrow(/bad span/);
    expect(() => tagsFromSpans([{ start: 2, end: 2, argument: "Actor" }], 5)).toThrow(/bad span/);
    expect(() => tagsFromSpans([{ start: 0, end: 1, argument: "Widget" }], 2)).toThrow(
      /unknown argument/,
    );
  });

  it("promotes a dangling I tag to a span start", () => {
    // I-Actor at position 0 decodes as if it were B-Actor
    expect(spansFromTags([2, 2, 0])).toEqual([{ start: 0, end: 2, argument: "Actor" }]);
  });
});
