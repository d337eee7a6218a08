/**
 * Typed client for the annotation gateway.
 *
 * Thin fetch wrapper plus zod validation of every response body, so a
 * mismatched server build fails loudly at the boundary instead of deep in
 * the editor.  A custom fetch function can be injected for tests.
 */

import { z } from "zod";

const wireSample = z.object({
  id: z.string(),
  x1: z.array(z.string()),
  x2: z.array(z.string()),
  y1: z.array(z.string()),
  y2: z.array(z.string()),
  c: z.number().int().min(0),
  phi: z.number(),
});

export type WireSample = z.infer<typeof wireSample>;

const trainAck = z.object({
  trained_on: z.number().int(),
  final_loss: z.number(),
  epochs: z.number().int(),
});

const nextBatch = z.object({
  iteration: z.number().int(),
  strategy: z.string().optional(),
  samples: z.array(wireSample),
  exhausted: z.boolean().optional(),
});

const labelAck = z.object({
  iteration: z.number().int(),
  mean_cost: z.number(),
  mean_tr_len: z.number(),
  labeled: z.number().int(),
  unlabeled: z.number().int(),
});

const costRow = z.object({
  iteration: z.number().int(),
  mean_cost: z.number(),
  mean_tr_len: z.number(),
});

const costRows = z.object({ rows: z.array(costRow) });

export type TrainAck = z.infer<typeof trainAck>;
export type NextBatch = z.infer<typeof nextBatch>;
export type LabelAck = z.infer<typeof labelAck>;
export type CostRow = z.infer<typeof costRow>;

/** One corrected sample, in the shape the gateway's label endpoint accepts. */
export interface SubmittedSample {
  id: string;
  x1: string[];
  x2: string[];
  y1: string[];
  y2: string[];
  c: string;
}

export class GatewayError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "GatewayError";
  }
}

export interface GatewayClientOptions {
  token?: string;
  fetchFn?: typeof fetch;
}

export class GatewayClient {
  private readonly fetchFn: typeof fetch;

  constructor(
    private readonly baseUrl: string,
    private readonly options: GatewayClientOptions = {},
  ) {
    this.fetchFn = options.fetchFn ?? fetch;
  }

  async healthz(): Promise<{ status: string }> {
    return z.object({ status: z.string() }).parse(await this.request("GET", "/healthz"));
  }

  async train(): Promise<TrainAck> {
    return trainAck.parse(await this.request("POST", "/al/train"));
  }

  async nextBatch(batch?: number): Promise<NextBatch> {
    const query = batch === undefined ? "" : `?batch=${batch}`;
    return nextBatch.parse(await this.request("GET", `/al/next${query}`));
  }

  async submitLabels(samples: SubmittedSample[]): Promise<LabelAck> {
    return labelAck.parse(await this.request("POST", "/al/label", { samples }));
  }

  async costRows(): Promise<CostRow[]> {
    return costRows.parse(await this.request("GET", "/al/cost")).rows;
  }

  async extract(title1: string, title2 = "", publishedAt?: string): Promise<unknown> {
    const body: Record<string, unknown> = { title1, title2 };
    if (publishedAt !== undefined) body.published_at = publishedAt;
    return this.request("POST", "/extract", body);
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.options.token) headers.authorization = `Bearer ${this.options.token}`;
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw new GatewayError(await errorDetail(response), response.status);
    }
    return response.json();
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const payload = (await response.json()) as { detail?: unknown };
    if (typeof payload.detail === "string") return payload.detail;
    return JSON.stringify(payload);
  } catch {
    return `${response.status} ${response.statusText}`;
  }
}
