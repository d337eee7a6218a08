/**
 * Tag vocabulary shared with the gateway.
 *
 * The sequence model labels tokens with a BIO scheme over six argument
 * types; three special tags exist only for padded/boundary positions and
 * never appear on the wire.  Index arithmetic here must stay in lockstep
 * with the server: B-arg = 1 + 2*argIndex, I-arg = B + 1.
 */

export const ARGUMENT_TYPES = [
  "Actor",
  "Action",
  "Recipient",
  "Object",
  "Attribute",
  "Time",
] as const;

export type ArgumentType = (typeof ARGUMENT_TYPES)[number];

export const RELATION_LABELS = [
  "Sequential",
  "ReverseSequential",
  "Unrelated",
  "SingleSentence",
  "JointEvent",
] as const;

export type RelationLabel = (typeof RELATION_LABELS)[number];

export const O_TAG = 0;
export const CLS_TAG = 13;
export const SEP_TAG = 14;
export const PAD_TAG = 15;
export const NUM_TAGS = 16;

const SPECIAL_TAGS = new Set([CLS_TAG, SEP_TAG, PAD_TAG]);

export function isSpecial(index: number): boolean {
  return SPECIAL_TAGS.has(index);
}

export function bTag(argument: ArgumentType): number {
  return 1 + 2 * ARGUMENT_TYPES.indexOf(argument);
}

export function iTag(argument: ArgumentType): number {
  return 2 + 2 * ARGUMENT_TYPES.indexOf(argument);
}

export function argumentOf(index: number): ArgumentType {
  if (index < 1 || index > 12) {
    throw new Error(`tag ${index} carries no argument type`);
  }
  const arg = ARGUMENT_TYPES[(index - 1) >> 1];
  if (arg === undefined) throw new Error(`tag ${index} carries no argument type`);
  return arg;
}

export function tagName(index: number): string {
  if (index === O_TAG) return "O";
  if (index === CLS_TAG) return "CLS";
  if (index === SEP_TAG) return "SEP";
  if (index === PAD_TAG) return "PAD";
  if (index >= 1 && index <= 12) {
    return (index % 2 === 1 ? "B-" : "I-") + argumentOf(index);
  }
  throw new Error(`unknown tag index ${index}`);
}

const NAME_TO_INDEX: Map<string, number> = new Map();
for (let i = 0; i < NUM_TAGS; i++) NAME_TO_INDEX.set(tagName(i), i);

export function tagIndex(name: string): number {
  const idx = NAME_TO_INDEX.get(name);
  if (idx === undefined) throw new Error(`unknown tag name ${JSON.stringify(name)}`);
  return idx;
}

export function relationIndex(label: string): number {
  const idx = (RELATION_LABELS as readonly string[]).indexOf(label);
  if (idx < 0) throw new Error(`unknown relation label ${JSON.stringify(label)}`);
  return idx;
}

/**
 * BIO violations for a submitted tag sequence.
 *
 * The gateway's sequence model can only emit tags 0..12 with I-X directly
 * after B-X or I-X; anything else in a submission is an annotation error,
 * so the UI refuses to send it.  Returns one message per offending
 * position; an empty list means the sequence is clean.
 */
export function bioViolations(tags: readonly number[]): string[] {
  const problems: string[] = [];
  for (let pos = 0; pos < tags.length; pos++) {
    const tag = tags[pos];
    if (tag === undefined || !Number.isInteger(tag) || tag < 0 || tag > 12) {
      problems.push(`position ${pos}: tag ${tag} outside the model range 0..12`);
      continue;
    }
    if (tag >= 1 && tag % 2 === 0) {
      // I-X needs B-X or I-X immediately before it
      const prev = pos > 0 ? tags[pos - 1] : undefined;
      if (prev !== tag && prev !== tag - 1) {
        const where = pos === 0 ? "at sentence start" : `after ${describeTag(prev)}`;
        problems.push(`position ${pos}: ${tagName(tag)} ${where}`);
      }
    }
  }
  return problems;
}

function describeTag(index: number | undefined): string {
  if (index === undefined) return "nothing";
  try {
    return tagName(index);
  } catch {
    return `tag ${index}`;
  }
}

export function isValidBio(tags: readonly number[]): boolean {
  return bioViolations(tags).length === 0;
}
