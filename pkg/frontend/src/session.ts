/**
 * Editing session for one pre-annotated batch.
 *
 * The gateway proposes labels for a batch of sentence pairs; the annotator
 * corrects them here by token range and submits the whole batch back in a
 * single request.  Three invariants are enforced client side:
 *
 * - the machine proposal stays frozen, so the live cost preview (edits the
 *   annotator made, counted in the server's own triple encoding) always
 *   matches what the gateway will charge for the submission;
 * - a sample with BIO violations or a broken token/tag alignment blocks
 *   the whole batch: submission is all-or-nothing, matching the gateway's
 *   requirement that exactly the outstanding ids come back together;
 * - span edits go through the same span/tag codec the server uses, so
 *   range edits can never produce an invalid sequence by themselves.
 */

import { annotationCost, annotationTriples, spansFromTags, tagsFromSpans } from "./annotations.js";
import type { Span, Triple } from "./annotations.js";
import { GatewayClient, type LabelAck, type SubmittedSample } from "./api.js";
import {
  RELATION_LABELS,
  bioViolations,
  relationIndex,
  tagIndex,
  tagName,
  type ArgumentType,
} from "./tags.js";

export type SentenceIndex = 1 | 2;

export interface WorkingSample {
  id: string;
  x1: string[];
  x2: string[];
  phi: number;
  /** Machine proposal as served; never mutated after pull. */
  pre: { y1: number[]; y2: number[]; c: number };
  y1: number[];
  y2: number[];
  c: number;
}

export class SessionError extends Error {
  constructor(
    message: string,
    readonly blockers: string[] = [],
  ) {
    super(message);
    this.name = "SessionError";
  }
}

export class AnnotationSession {
  private batch: WorkingSample[] = [];
  private batchIteration = -1;
  private exhaustedFlag = false;

  constructor(private readonly client: GatewayClient) {}

  get samples(): readonly WorkingSample[] {
    return this.batch;
  }

  get iteration(): number {
    return this.batchIteration;
  }

  get exhausted(): boolean {
    return this.exhaustedFlag;
  }

  get active(): boolean {
    return this.batch.length > 0;
  }

  /**
   * Fetch the next batch, replacing any unsubmitted one.  The gateway
   * likewise replaces its outstanding batch on a repeat request, so local
   * edits to an abandoned batch are simply dropped.
   */
  async pull(batch?: number): Promise<number> {
    const response = await this.client.nextBatch(batch);
    this.batchIteration = response.iteration;
    this.exhaustedFlag = response.exhausted === true;
    this.batch = response.samples.map((s) => {
      const y1 = s.y1.map(tagIndex);
      const y2 = s.y2.map(tagIndex);
      return {
        id: s.id,
        x1: [...s.x1],
        x2: [...s.x2],
        phi: s.phi,
        pre: { y1: [...y1], y2: [...y2], c: s.c },
        y1,
        y2,
        c: s.c,
      };
    });
    return this.batch.length;
  }

  sample(id: string): WorkingSample {
    const found = this.batch.find((s) => s.id === id);
    if (!found) throw new SessionError(`no sample ${JSON.stringify(id)} in the batch`);
    return found;
  }

  spans(id: string, sentence: SentenceIndex): Span[] {
    return spansFromTags(this.tagsOf(this.sample(id), sentence));
  }

  /**
   * Label tokens [start, end) of one sentence as a span of the given
   * argument type.  Any existing span overlapping the range is removed
   * first, so the edit reads as "this range, this label, nothing else".
   */
  applySpan(
    id: string,
    sentence: SentenceIndex,
    start: number,
    end: number,
    argument: ArgumentType,
  ): void {
    const sample = this.sample(id);
    const tags = this.tagsOf(sample, sentence);
    this.checkRange(sample, sentence, start, end, tags.length);
    const kept = spansFromTags(tags).filter((s) => s.end <= start || s.start >= end);
    kept.push({ start, end, argument });
    this.setTagArray(sample, sentence, tagsFromSpans(kept, tags.length));
  }

  /** Clear every span overlapping tokens [start, end) back to O. */
  clearRange(id: string, sentence: SentenceIndex, start: number, end: number): void {
    const sample = this.sample(id);
    const tags = this.tagsOf(sample, sentence);
    this.checkRange(sample, sentence, start, end, tags.length);
    const kept = spansFromTags(tags).filter((s) => s.end <= start || s.start >= end);
    this.setTagArray(sample, sentence, tagsFromSpans(kept, tags.length));
  }

  setRelation(id: string, relation: number | string): void {
    const sample = this.sample(id);
    const index = typeof relation === "number" ? relation : relationIndex(relation);
    if (!Number.isInteger(index) || index < 0 || index >= RELATION_LABELS.length) {
      throw new SessionError(`relation index ${index} out of range`);
    }
    sample.c = index;
  }

  /**
   * Replace a sentence's tags wholesale from tag names.  This is the raw
   * path (paste, bulk edit); it may leave the sample invalid, in which
   * case violations() reports it and submission stays blocked.
   */
  setTags(id: string, sentence: SentenceIndex, names: readonly string[]): void {
    const sample = this.sample(id);
    const tokens = sentence === 1 ? sample.x1 : sample.x2;
    if (names.length !== tokens.length) {
      throw new SessionError(
        `sentence ${sentence} has ${tokens.length} tokens but ${names.length} tags were given`,
      );
    }
    this.setTagArray(sample, sentence, names.map(tagIndex));
  }

  resetSample(id: string): void {
    const sample = this.sample(id);
    sample.y1 = [...sample.pre.y1];
    sample.y2 = [...sample.pre.y2];
    sample.c = sample.pre.c;
  }

  /** Everything that would make the gateway (or the model) reject this sample. */
  violations(id: string): string[] {
    const sample = this.sample(id);
    const problems: string[] = [];
    if (sample.y1.length !== sample.x1.length) {
      problems.push(`sentence 1: ${sample.y1.length} tags for ${sample.x1.length} tokens`);
    }
    if (sample.y2.length !== sample.x2.length) {
      problems.push(`sentence 2: ${sample.y2.length} tags for ${sample.x2.length} tokens`);
    }
    for (const message of bioViolations(sample.y1)) problems.push(`sentence 1, ${message}`);
    for (const message of bioViolations(sample.y2)) problems.push(`sentence 2, ${message}`);
    if (!Number.isInteger(sample.c) || sample.c < 0 || sample.c >= RELATION_LABELS.length) {
      problems.push(`relation index ${sample.c} out of range`);
    }
    return problems;
  }

  /** Triple set of the current working annotation, offsets included. */
  triples(id: string): Triple[] {
    const sample = this.sample(id);
    return annotationTriples(sample.y1, sample.y2, sample.c);
  }

  /**
   * Edits made so far on one sample, in server units: the symmetric
   * difference between the machine proposal's triple set and the working
   * annotation's.  Submitting now makes the gateway charge exactly this.
   */
  costPreview(id: string): number {
    const sample = this.sample(id);
    const proposal = annotationTriples(sample.pre.y1, sample.pre.y2, sample.pre.c);
    return annotationCost(proposal, this.triples(id));
  }

  totalCost(): number {
    return this.batch.reduce((acc, s) => acc + this.costPreview(s.id), 0);
  }

  /** The mean_cost / mean_tr_len the gateway will report for this submission. */
  predictedAck(): { meanCost: number; meanTrLen: number } {
    if (this.batch.length === 0) return { meanCost: 0, meanTrLen: 0 };
    let cost = 0;
    let trLen = 0;
    for (const sample of this.batch) {
      cost += this.costPreview(sample.id);
      trLen += this.triples(sample.id).length;
    }
    return { meanCost: cost / this.batch.length, meanTrLen: trLen / this.batch.length };
  }

  /** Batch-wide submit blockers, prefixed with the offending sample id. */
  get blockers(): string[] {
    const all: string[] = [];
    for (const sample of this.batch) {
      for (const problem of this.violations(sample.id)) {
        all.push(`${sample.id}: ${problem}`);
      }
    }
    return all;
  }

  get submittable(): boolean {
    return this.batch.length > 0 && this.blockers.length === 0;
  }

  /**
   * Submit every sample of the batch in one request.  Refuses to send
   * anything while any sample is invalid; on success the batch is cleared
   * and the gateway's acknowledgement returned.
   */
  async submit(): Promise<LabelAck> {
    if (this.batch.length === 0) {
      throw new SessionError("no batch to submit");
    }
    const blockers = this.blockers;
    if (blockers.length > 0) {
      throw new SessionError(
        `batch has ${blockers.length} blocking problem(s); nothing was sent`,
        blockers,
      );
    }
    const payload: SubmittedSample[] = this.batch.map((s) => {
      const label = RELATION_LABELS[s.c];
      if (label === undefined) throw new SessionError(`relation index ${s.c} out of range`);
      return {
        id: s.id,
        x1: [...s.x1],
        x2: [...s.x2],
        y1: s.y1.map(tagName),
        y2: s.y2.map(tagName),
        c: label,
      };
    });
    const ack = await this.client.submitLabels(payload);
    this.batch = [];
    this.batchIteration = ack.iteration + 1;
    return ack;
  }

  private tagsOf(sample: WorkingSample, sentence: SentenceIndex): number[] {
    return sentence === 1 ? sample.y1 : sample.y2;
  }

  private setTagArray(sample: WorkingSample, sentence: SentenceIndex, tags: number[]): void {
    if (sentence === 1) sample.y1 = tags;
    else sample.y2 = tags;
  }

  private checkRange(
    sample: WorkingSample,
    sentence: SentenceIndex,
    start: number,
    end: number,
    length: number,
  ): void {
    if (length === 0) {
      throw new SessionError(`sample ${sample.id} has no sentence ${sentence}`);
    }
    if (!Number.isInteger(start) || !Number.isInteger(end) || start < 0 || end > length || end <= start) {
      throw new SessionError(
        `token range [${start}, ${end}) invalid for sentence of length ${length}`,
      );
    }
  }
}
