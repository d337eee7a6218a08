/**
 * Browser entry point: wires the annotation session to the page.
 *
 * Interaction model, following common span annotators: click a token to
 * anchor a selection, click another token in the same sentence to extend
 * it, then press an argument button to label the range (or Clear to wipe
 * it).  Every sample card shows the live edit cost; the footer shows the
 * predicted batch means and refuses submission while any sample is
 * blocked.
 */

import { Chart } from "chart.js/auto";

import { GatewayClient, GatewayError } from "./api.js";
import { costChartConfig } from "./chart.js";
import { AnnotationSession, SessionError, type SentenceIndex, type WorkingSample } from "./session.js";
import { ARGUMENT_TYPES, RELATION_LABELS, tagName, type ArgumentType } from "./tags.js";

const ARGUMENT_COLORS: Record<string, string> = {
  Actor: "#BBDEFB",
  Action: "#C8E6C9",
  Recipient: "#FFE0B2",
  Object: "#F8BBD0",
  Attribute: "#D1C4E9",
  Time: "#B2EBF2",
};

interface Selection {
  sampleId: string;
  sentence: SentenceIndex;
  anchor: number;
  head: number;
}

let client: GatewayClient | null = null;
let session: AnnotationSession | null = null;
let selection: Selection | null = null;
let chart: Chart | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(message: string, kind: "ok" | "error" = "ok"): void {
  const status = el<HTMLDivElement>("status");
  status.textContent = message;
  status.className = kind === "error" ? "status error" : "status";
}

function connect(): GatewayClient {
  const baseUrl = el<HTMLInputElement>("base-url").value.replace(/\/+$/, "");
  const token = el<HTMLInputElement>("token").value.trim();
  client = new GatewayClient(baseUrl, token ? { token } : {});
  session = new AnnotationSession(client);
  return client;
}

function requireSession(): AnnotationSession {
  if (!session) connect();
  if (!session) throw new Error("no session");
  return session;
}

async function onHealth(): Promise<void> {
  try {
    const ack = await connect().healthz();
    setStatus(`gateway is ${ack.status}`);
  } catch (error) {
    setStatus(describeError(error), "error");
  }
}

async function onTrain(): Promise<void> {
  try {
    setStatus("training...");
    const ack = await (client ?? connect()).train();
    setStatus(
      `trained on ${ack.trained_on} samples, ${ack.epochs} epochs, final loss ${ack.final_loss.toFixed(4)}`,
    );
  } catch (error) {
    setStatus(describeError(error), "error");
  }
}

async function onNextBatch(): Promise<void> {
  try {
    const size = Number.parseInt(el<HTMLInputElement>("batch-size").value, 10);
    const count = await requireSession().pull(Number.isFinite(size) && size > 0 ? size : undefined);
    selection = null;
    if (count === 0 && requireSession().exhausted) {
      setStatus("unlabeled pool is exhausted");
    } else {
      setStatus(`pulled ${count} samples (iteration ${requireSession().iteration})`);
    }
    renderBatch();
  } catch (error) {
    setStatus(describeError(error), "error");
  }
}

async function onSubmit(): Promise<void> {
  const s = requireSession();
  try {
    const predicted = s.predictedAck();
    const ack = await s.submit();
    selection = null;
    const match =
      Math.abs(ack.mean_cost - predicted.meanCost) < 1e-9 ? "matches preview" : "PREVIEW MISMATCH";
    setStatus(
      `iteration ${ack.iteration} accepted: mean cost ${ack.mean_cost.toFixed(2)} (${match}), ` +
        `pool now ${ack.labeled} labeled / ${ack.unlabeled} unlabeled`,
    );
    renderBatch();
    await refreshChart();
  } catch (error) {
    if (error instanceof SessionError && error.blockers.length > 0) {
      setStatus(`${error.message}: ${error.blockers.join("; ")}`, "error");
    } else {
      setStatus(describeError(error), "error");
    }
  }
}

async function refreshChart(): Promise<void> {
  if (!client) return;
  const rows = await client.costRows();
  const canvas = el<HTMLCanvasElement>("cost-chart");
  chart?.destroy();
  chart = new Chart(canvas, costChartConfig(rows));
}

function describeError(error: unknown): string {
  if (error instanceof GatewayError) return `gateway ${error.status}: ${error.message}`;
  if (error instanceof Error) return error.message;
  return String(error);
}

// ---------------- rendering ----------------

function renderBatch(): void {
  const s = requireSession();
  const container = el<HTMLDivElement>("batch");
  container.innerHTML = "";
  for (const sample of s.samples) container.appendChild(renderSample(sample));
  renderFooter();
}

function renderSample(sample: WorkingSample): HTMLElement {
  const s = requireSession();
  const card = document.createElement("div");
  card.className = "sample";
  card.dataset.id = sample.id;

  const head = document.createElement("div");
  head.className = "sample-head";
  head.textContent = `${sample.id}  (phi ${sample.phi.toFixed(3)})`;
  const cost = document.createElement("span");
  cost.className = "cost-badge";
  cost.textContent = `cost ${s.costPreview(sample.id)}`;
  head.appendChild(cost);
  card.appendChild(head);

  card.appendChild(renderSentence(sample, 1));
  if (sample.x2.length > 0) card.appendChild(renderSentence(sample, 2));

  const controls = document.createElement("div");
  controls.className = "controls";
  for (const argument of ARGUMENT_TYPES) {
    const button = document.createElement("button");
    button.textContent = argument;
    button.style.backgroundColor = ARGUMENT_COLORS[argument] ?? "#eee";
    button.addEventListener("click", () => applyLabel(sample.id, argument));
    controls.appendChild(button);
  }
  const clear = document.createElement("button");
  clear.textContent = "Clear";
  clear.addEventListener("click", () => applyLabel(sample.id, null));
  controls.appendChild(clear);

  const relation = document.createElement("select");
  for (let i = 0; i < RELATION_LABELS.length; i++) {
    const option = document.createElement("option");
    option.value = String(i);
    option.textContent = RELATION_LABELS[i] ?? "";
    if (i === sample.c) option.selected = true;
    relation.appendChild(option);
  }
  relation.addEventListener("change", () => {
    requireSession().setRelation(sample.id, Number.parseInt(relation.value, 10));
    renderBatch();
  });
  controls.appendChild(relation);

  const reset = document.createElement("button");
  reset.textContent = "Reset";
  reset.addEventListener("click", () => {
    requireSession().resetSample(sample.id);
    selection = null;
    renderBatch();
  });
  controls.appendChild(reset);
  card.appendChild(controls);

  const problems = s.violations(sample.id);
  if (problems.length > 0) {
    const list = document.createElement("div");
    list.className = "violations";
    list.textContent = problems.join("; ");
    card.appendChild(list);
  }

  const raw = document.createElement("details");
  raw.className = "raw";
  const summary = document.createElement("summary");
  summary.textContent = "raw tags";
  raw.appendChild(summary);
  raw.appendChild(renderRawEditor(sample, 1));
  if (sample.x2.length > 0) raw.appendChild(renderRawEditor(sample, 2));
  card.appendChild(raw);

  return card;
}

function renderSentence(sample: WorkingSample, sentence: SentenceIndex): HTMLElement {
  const s = requireSession();
  const tokens = sentence === 1 ? sample.x1 : sample.x2;
  const tags = sentence === 1 ? sample.y1 : sample.y2;
  const spans = s.spans(sample.id, sentence);

  const row = document.createElement("div");
  row.className = "sentence";
  for (let i = 0; i < tokens.length; i++) {
    const chip = document.createElement("span");
    chip.className = "token";
    chip.textContent = tokens[i] ?? "";
    const covering = spans.find((sp) => sp.start <= i && i < sp.end);
    if (covering) {
      chip.style.backgroundColor = ARGUMENT_COLORS[covering.argument] ?? "#eee";
      chip.title = covering.argument;
    }
    if (
      selection &&
      selection.sampleId === sample.id &&
      selection.sentence === sentence &&
      i >= Math.min(selection.anchor, selection.head) &&
      i <= Math.max(selection.anchor, selection.head)
    ) {
      chip.classList.add("selecting");
    }
    chip.addEventListener("click", () => onTokenClick(sample.id, sentence, i));
    row.appendChild(chip);
    const tag = tags[i];
    if (tag !== undefined && tag !== 0) {
      const sub = document.createElement("sub");
      sub.className = "tag-name";
      sub.textContent = tagName(tag);
      row.appendChild(sub);
    }
  }
  return row;
}

function renderRawEditor(sample: WorkingSample, sentence: SentenceIndex): HTMLElement {
  const tags = sentence === 1 ? sample.y1 : sample.y2;
  const wrapper = document.createElement("div");
  const input = document.createElement("input");
  input.value = tags.map(tagName).join(" ");
  input.className = "raw-input";
  const apply = document.createElement("button");
  apply.textContent = `set s${sentence}`;
  apply.addEventListener("click", () => {
    try {
      requireSession().setTags(sample.id, sentence, input.value.trim().split(/\s+/));
      renderBatch();
    } catch (error) {
      setStatus(describeError(error), "error");
    }
  });
  wrapper.appendChild(input);
  wrapper.appendChild(apply);
  return wrapper;
}

function renderFooter(): void {
  const s = requireSession();
  const footer = el<HTMLDivElement>("batch-footer");
  const submit = el<HTMLButtonElement>("submit");
  if (!s.active) {
    footer.textContent = s.exhausted ? "pool exhausted" : "no batch loaded";
    submit.disabled = true;
    return;
  }
  const predicted = s.predictedAck();
  footer.textContent =
    `${s.samples.length} samples, total cost ${s.totalCost()}, ` +
    `predicted mean cost ${predicted.meanCost.toFixed(2)}, ` +
    `predicted mean reference size ${predicted.meanTrLen.toFixed(2)}`;
  const blockers = s.blockers;
  submit.disabled = blockers.length > 0;
  submit.title = blockers.length > 0 ? blockers.join("\n") : "submit the whole batch";
}

function onTokenClick(sampleId: string, sentence: SentenceIndex, index: number): void {
  if (selection && selection.sampleId === sampleId && selection.sentence === sentence) {
    selection.head = index;
  } else {
    selection = { sampleId, sentence, anchor: index, head: index };
  }
  renderBatch();
}

function applyLabel(sampleId: string, argument: ArgumentType | null): void {
  if (!selection || selection.sampleId !== sampleId) {
    setStatus("select a token range first", "error");
    return;
  }
  const start = Math.min(selection.anchor, selection.head);
  const end = Math.max(selection.anchor, selection.head) + 1;
  try {
    if (argument === null) {
      requireSession().clearRange(sampleId, selection.sentence, start, end);
    } else {
      requireSession().applySpan(sampleId, selection.sentence, start, end, argument);
    }
    selection = null;
    renderBatch();
  } catch (error) {
    setStatus(describeError(error), "error");
  }
}

document.addEventListener("DOMContentLoaded", () => {
  el<HTMLButtonElement>("health").addEventListener("click", () => void onHealth());
  el<HTMLButtonElement>("train").addEventListener("click", () => void onTrain());
  el<HTMLButtonElement>("next-batch").addEventListener("click", () => void onNextBatch());
  el<HTMLButtonElement>("submit").addEventListener("click", () => void onSubmit());
  el<HTMLButtonElement>("refresh-chart").addEventListener("click", () => void refreshChart());
  renderFooter();
});
