import { beforeEach, describe, expect, it } from "vitest";

import type { WireSample } from "../src/api.js";
import { GatewayClient } from "../src/api.js";
import { AnnotationSession, SessionError } from "../src/session.js";

/**
 * In-memory gateway double.  It only checks the transport-level contract
 * (routes, id matching) and records what was sent; cost arithmetic parity
 * with the real server lives in the frozen fixture tests.
 */
function fakeGateway(samples: WireSample[], options: { exhausted?: boolean } = {}) {
  const calls: { method: string; path: string; body?: unknown }[] = [];
  const submitted: { samples: Record<string, unknown>[] }[] = [];
  let iteration = 0;

  const respond = (body: unknown, status = 200) =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });

  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = new URL(String(input));
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ method, path: url.pathname, body });

    if (method === "GET" && url.pathname === "/al/next") {
      if (options.exhausted) {
        return respond({ iteration, samples: [], exhausted: true });
      }
      const limit = url.searchParams.get("batch");
      const batch = limit ? samples.slice(0, Number(limit)) : samples;
      return respond({ iteration, strategy: "ltp", samples: batch, exhausted: false });
    }
    if (method === "POST" && url.pathname === "/al/label") {
      const got = (body as { samples: { id: string }[] }).samples.map((s) => s.id).sort();
      const want = samples.map((s) => s.id).sort();
      if (JSON.stringify(got) !== JSON.stringify(want)) {
        return respond({ detail: "sample ids do not match the batch" }, 400);
      }
      submitted.push(body as { samples: Record<string, unknown>[] });
      const ack = {
        iteration,
        mean_cost: 1.5,
        mean_tr_len: 4.0,
        labeled: 10,
        unlabeled: 2,
      };
      iteration += 1;
      return respond(ack);
    }
    if (method === "GET" && url.pathname === "/al/cost") {
      return respond({ rows: [] });
    }
    return respond({ detail: `unexpected ${method} ${url.pathname}` }, 404);
  }) as typeof fetch;

  return { fetchFn, calls, submitted };
}

const SAMPLES: WireSample[] = [
  {
    id: "a1",
    x1: ["Acme", "Corp", "launches", "Pay"],
    x2: [],
    y1: ["B-Actor", "I-Actor", "B-Action", "B-Object"],
    y2: [],
    c: 3,
    phi: 0.9,
  },
  {
    id: "a2",
    x1: ["Beta", "updates", "app"],
    x2: ["Later", "today"],
    y1: ["B-Actor", "B-Action", "B-Object"],
    y2: ["O", "B-Time"],
    c: 0,
    phi: 0.4,
  },
];

function freshSession(options: { exhausted?: boolean } = {}) {
  const gateway = fakeGateway(structuredClone(SAMPLES), options);
  const client = new GatewayClient("http://gw", { fetchFn: gateway.fetchFn });
  return { session: new AnnotationSession(client), gateway };
}

describe("pulling a batch", () => {
  it("decodes wire tag names into indices and freezes the proposal", async () => {
    const { session } = freshSession();
    expect(await session.pull()).toBe(2);
    const a1 = session.sample("a1");
    expect(a1.y1).toEqual([1, 2, 3, 7]);
    expect(a1.pre.y1).toEqual([1, 2, 3, 7]);
    a1.y1[0] = 0;
    expect(a1.pre.y1[0]).toBe(1); // proposal untouched by working edits
  });

  it("passes the batch size through and reports the iteration", async () => {
    const { session, gateway } = freshSession();
    await session.pull(1);
    expect(gateway.calls[0]?.path).toBe("/al/next");
    expect(session.samples).toHaveLength(1);
    expect(session.iteration).toBe(0);
  });

  it("handles an exhausted pool", async () => {
    const { session } = freshSession({ exhausted: true });
    expect(await session.pull()).toBe(0);
    expect(session.exhausted).toBe(true);
    expect(session.active).toBe(false);
  });

  it("rejects lookups of unknown sample ids", async () => {
    const { session } = freshSession();
    await session.pull();
    expect(() => session.sample("nope")).toThrow(SessionError);
  });
});

describe("span editing by token range", () => {
  let session: AnnotationSession;

  beforeEach(async () => {
    session = freshSession().session;
    await session.pull();
  });

  it("starts with a zero-cost preview on the untouched proposal", () => {
    expect(session.costPreview("a1")).toBe(0);
    expect(session.costPreview("a2")).toBe(0);
    expect(session.totalCost()).toBe(0);
  });

  it("replaces overlapping spans when a range is labeled", () => {
    // [1, 3) overlaps Actor [0, 2) and Action [2, 3); both go, Object stays
    session.applySpan("a1", 1, 1, 3, "Recipient");
    expect(session.sample("a1").y1).toEqual([0, 5, 6, 7]);
    expect(session.spans("a1", 1)).toEqual([
      { start: 1, end: 3, argument: "Recipient" },
      { start: 3, end: 4, argument: "Object" },
    ]);
    // removed Actor and Action, added Recipient: three triple edits
    expect(session.costPreview("a1")).toBe(3);
  });

  it("edits sentence 2 with the shared-axis offset visible in triples", () => {
    session.applySpan("a2", 2, 0, 2, "Time");
    // sentence 1 has 3 tokens, so the Time span lands at [3, 5)
    expect(session.triples("a2")).toContainEqual([3, 5, "Time"]);
    // old [4, 5) Time out, new [3, 5) Time in
    expect(session.costPreview("a2")).toBe(2);
  });

  it("clears ranges back to O", () => {
    session.clearRange("a2", 2, 0, 2);
    expect(session.sample("a2").y2).toEqual([0, 0]);
    expect(session.costPreview("a2")).toBe(1); // one span removed
  });

  it("prices a relation change at two edits", () => {
    session.setRelation("a1", "JointEvent");
    expect(session.costPreview("a1")).toBe(2);
    session.setRelation("a1", 3); // back to SingleSentence by index
    expect(session.costPreview("a1")).toBe(0);
  });

  it("rejects bad ranges and empty sentences", () => {
    expect(() => session.applySpan("a1", 1, 2, 2, "Actor")).toThrow(/token range/);
    expect(() => session.applySpan("a1", 1, 0, 9, "Actor")).toThrow(/token range/);
    expect(() => session.applySpan("a1", 2, 0, 1, "Actor")).toThrow(/no sentence 2/);
    expect(() => session.setRelation("a1", 7)).toThrow(/out of range/);
  });

  it("resets a sample to the machine proposal", () => {
    session.applySpan("a1", 1, 0, 4, "Time");
    session.setRelation("a1", 0);
    expect(session.costPreview("a1")).toBeGreaterThan(0);
    session.resetSample("a1");
    expect(session.costPreview("a1")).toBe(0);
    expect(session.sample("a1").y1).toEqual([1, 2, 3, 7]);
  });
});

describe("BIO validity gating", () => {
  it("range edits alone can never invalidate a sample", async () => {
    const { session } = freshSession();
    await session.pull();
    session.applySpan("a1", 1, 1, 4, "Attribute");
    session.clearRange("a1", 1, 0, 1);
    session.applySpan("a2", 2, 1, 2, "Object");
    for (const sample of session.samples) {
      expect(session.violations(sample.id)).toEqual([]);
    }
    expect(session.submittable).toBe(true);
  });

  it("flags raw tag sequences that break the scheme", async () => {
    const { session } = freshSession();
    await session.pull();
    // I-Actor cannot open a sentence
    session.setTags("a2", 1, ["I-Actor", "B-Action", "B-Object"]);
    const problems = session.violations("a2");
    expect(problems).toHaveLength(1);
    expect(problems[0]).toMatch(/sentence 1, position 0: I-Actor at sentence start/);
    expect(session.submittable).toBe(false);
    expect(session.blockers[0]).toMatch(/^a2: /);
  });

  it("rejects raw tags that break token alignment", async () => {
    const { session } = freshSession();
    await session.pull();
    expect(() => session.setTags("a2", 1, ["O", "O"])).toThrow(/3 tokens but 2 tags/);
    expect(session.sample("a2").y1).toEqual([1, 3, 7]); // unchanged
  });
});

describe("all-or-nothing submission", () => {
  it("sends the whole batch in one request with names on the wire", async () => {
    const { session, gateway } = freshSession();
    await session.pull();
    session.setRelation("a1", "JointEvent");
    const ack = await session.submit();

    expect(ack.mean_cost).toBe(1.5);
    expect(gateway.submitted).toHaveLength(1);
    const sent = gateway.submitted[0]!.samples;
    expect(sent.map((s) => s.id).sort()).toEqual(["a1", "a2"]);
    const a1 = sent.find((s) => s.id === "a1")!;
    expect(a1.y1).toEqual(["B-Actor", "I-Actor", "B-Action", "B-Object"]);
    expect(a1.c).toBe("JointEvent");
    const a2 = sent.find((s) => s.id === "a2")!;
    expect(a2.y2).toEqual(["O", "B-Time"]);
    expect(a2.c).toBe("Sequential");
  });

  it("clears the batch only after the gateway accepts", async () => {
    const { session } = freshSession();
    await session.pull();
    await session.submit();
    expect(session.active).toBe(false);
    expect(session.samples).toHaveLength(0);
    expect(session.iteration).toBe(1);
  });

  it("refuses to send anything while a sample is invalid", async () => {
    const { session, gateway } = freshSession();
    await session.pull();
    session.setTags("a1", 1, ["I-Time", "O", "O", "O"]);
    await expect(session.submit()).rejects.toThrow(/nothing was sent/);
    const labelCalls = gateway.calls.filter((c) => c.path === "/al/label");
    expect(labelCalls).toHaveLength(0);
    expect(session.active).toBe(true); // batch kept for fixing

    // fixing the one bad sample unblocks the whole batch
    session.resetSample("a1");
    await session.submit();
    expect(gateway.calls.filter((c) => c.path === "/al/label")).toHaveLength(1);
  });

  it("throws when no batch is loaded", async () => {
    const { session } = freshSession();
    await expect(session.submit()).rejects.toThrow(/no batch/);
  });
});

describe("predicted acknowledgement", () => {
  it("averages per-sample cost and reference size over the batch", async () => {
    const { session } = freshSession();
    await session.pull();
    session.setRelation("a1", "JointEvent"); // cost 2 on a1, 0 on a2
    const predicted = session.predictedAck();
    expect(predicted.meanCost).toBeCloseTo(1.0, 12);
    // a1 submits 3 spans + relation = 4 triples; a2 submits 4 spans + relation = 5
    expect(predicted.meanTrLen).toBeCloseTo(4.5, 12);
  });

  it("is all zeros with no batch", () => {
    const { session } = freshSession();
    expect(session.predictedAck()).toEqual({ meanCost: 0, meanTrLen: 0 });
  });
});
