// Session flow: create -> training loop -> evaluation checkpoints -> done.
// All state lives on the server; the app only tracks what to render next.

import { ApiError, Client, type Choice, type EvalPayload, type SessionConfig } from './api.js';
import {
  renderDone,
  renderEvaluationPair,
  renderTrainingPair,
} from './render.js';

export const CHECKPOINTS = [10, 30, 50];

export type Phase = 'training' | 'evaluation' | 'done';

export interface View {
  phase: Phase;
  html: string;
}

export class App {
  private sessionId = '';
  private labels = 0;
  private evaluation: EvalPayload | null = null;
  private evalIndex = 0;
  private evalLabels: Choice[] = [];
  private submitting = false;

  constructor(
    private readonly client: Client,
    private readonly config: SessionConfig
  ) {}

  async start(): Promise<View> {
    this.sessionId = await this.client.createSession(this.config);
    return this.currentView();
  }

  /** Re-fetches the current state; safe to call after a network failure
   * because the query GET is idempotent. */
  async currentView(): Promise<View> {
    if (this.evaluation) {
      return this.evaluationView();
    }
    const query = await this.client.getQuery(this.sessionId);
    if (query === null) {
      return this.enterEvaluation(finalCheckpoint(this.config.T ?? 50));
    }
    return { phase: 'training', html: renderTrainingPair(query) };
  }

  /** Handles one click on left / right / no preference. */
  async choose(choice: Choice): Promise<View> {
    if (this.submitting) return this.currentView(); // double-click guard
    this.submitting = true;
    try {
      if (this.evaluation) {
        return await this.chooseEvaluation(choice);
      }
      return await this.chooseTraining(choice);
    } finally {
      this.submitting = false;
    }
  }

  private async chooseTraining(choice: Choice): Promise<View> {
    try {
      await this.client.postLabel(this.sessionId, choice);
      this.labels += 1;
    } catch (err) {
      // 409 = this label already landed (e.g. a retried request); move on
      if (!(err instanceof ApiError && err.status === 409)) throw err;
    }
    if (CHECKPOINTS.includes(this.labels)) {
      return this.enterEvaluation(this.labels);
    }
    return this.currentView();
  }

  private async enterEvaluation(checkpoint: number): Promise<View> {
    const payload = await this.client.getEvaluation(this.sessionId, checkpoint);
    if (payload === null || payload.pairs.length === 0) {
      return { phase: 'done', html: renderDone({ learned: 0, ses: 0, indifferent: 0 }) };
    }
    this.evaluation = payload;
    this.evalIndex = 0;
    this.evalLabels = [];
    return this.evaluationView();
  }

  private evaluationView(): View {
    const pairs = this.evaluation!.pairs;
    return {
      phase: 'evaluation',
      html: renderEvaluationPair(pairs[this.evalIndex], this.evalIndex, pairs.length),
    };
  }

  private async chooseEvaluation(choice: Choice): Promise<View> {
    const payload = this.evaluation!;
    this.evalLabels.push(choice);
    this.evalIndex += 1;
    if (this.evalIndex < payload.pairs.length) {
      return this.evaluationView();
    }
    const result = await this.client.postEvaluationLabels(
      this.sessionId,
      payload.checkpoint,
      this.evalLabels
    );
    this.evaluation = null;
    const budget = this.config.T ?? 50;
    if (this.labels >= budget || payload.checkpoint === finalCheckpoint(budget)) {
      return { phase: 'done', html: renderDone(result) };
    }
    return this.currentView();
  }
}

export function finalCheckpoint(budget: number): number {
  const reachable = CHECKPOINTS.filter((c) => c <= budget);
  return reachable.length > 0 ? reachable[reachable.length - 1] : CHECKPOINTS[0];
}
