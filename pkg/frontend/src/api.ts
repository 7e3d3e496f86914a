// Typed client for the labeling service. The server is the single source of
// truth; this module only shuttles JSON and maps status codes to outcomes.

export interface SessionConfig {
  strategy: 'choice_perceptron' | 'machop';
  normalization?: string;
  eta?: number;
  T?: number;
  selection?: string;
  seed?: number;
  puzzles?: string[];
  eval_puzzle?: string;
}

export interface FactRef {
  var: number[];
  val: number | boolean;
}

export interface GroupRef {
  id: number;
  category: string;
  cells?: number[][];
}

export interface StepPayload {
  kind: string;
  size?: number;
  grid?: number[][];
  target: FactRef;
  facts: FactRef[];
  groups: GroupRef[];
  features: number[];
}

export interface QueryPayload {
  t: number;
  T: number;
  left: StepPayload;
  right: StepPayload;
}

export interface LabelResult {
  t: number;
  weights: number[];
}

export interface EvalPair {
  index: number;
  left: StepPayload;
  right: StepPayload;
}

export interface EvalPayload {
  checkpoint: number;
  pairs: EvalPair[];
}

export interface EvalResult {
  learned: number;
  ses: number;
  indifferent: number;
}

export type Choice = 'left' | 'right' | 'indifferent';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function parseOrThrow<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === 'string') detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class Client {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  async createSession(config: SessionConfig): Promise<string> {
    const resp = await fetch(this.url('/sessions'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(config),
    });
    const body = await parseOrThrow<{ session_id: string }>(resp);
    return body.session_id;
  }

  /** Current pair, or null once the training budget is spent (410). */
  async getQuery(sessionId: string): Promise<QueryPayload | null> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/query`));
    if (resp.status === 410) return null;
    return parseOrThrow<QueryPayload>(resp);
  }

  async postLabel(sessionId: string, choice: Choice): Promise<LabelResult> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/label`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ choice }),
    });
    return parseOrThrow<LabelResult>(resp);
  }

  /** Evaluation pairs for a checkpoint, or null if not reached yet (404). */
  async getEvaluation(
    sessionId: string,
    checkpoint: number
  ): Promise<EvalPayload | null> {
    const resp = await fetch(
      this.url(`/sessions/${sessionId}/evaluation?checkpoint=${checkpoint}`)
    );
    if (resp.status === 404) return null;
    return parseOrThrow<EvalPayload>(resp);
  }

  async postEvaluationLabels(
    sessionId: string,
    checkpoint: number,
    labels: Choice[]
  ): Promise<EvalResult> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/evaluation`), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ checkpoint, labels }),
    });
    return parseOrThrow<EvalResult>(resp);
  }
}
