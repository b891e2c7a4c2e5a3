// Session view-model: what the screen shows and the in-flight guard that
// keeps one mutation at a time on the wire.

import { DuelSpec, HistoryEntry, SessionApi, SessionState, WinnerSpec } from "./api.js";

export type Phase = "loading" | "dueling" | "error";

export interface ViewModel {
  phase: Phase;
  duel: DuelSpec | null;
  winner: WinnerSpec | null;
  history: HistoryEntry[];
  size: number;
  busy: boolean;
  errorMessage: string | null;
  domain: SessionState["domain"] | null;
}

export class SessionController {
  readonly model: ViewModel = {
    phase: "loading",
    duel: null,
    winner: null,
    history: [],
    size: 0,
    busy: false,
    errorMessage: null,
    domain: null,
  };

  private listeners: Array<(m: ViewModel) => void> = [];

  constructor(
    private api: SessionApi,
    readonly sessionId: string,
  ) {}

  subscribe(fn: (m: ViewModel) => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.model);
  }

  /** Initial load: session state, a duel proposal, and the winner if any. */
  async init(): Promise<void> {
    try {
      const state = await this.api.state(this.sessionId);
      this.model.domain = state.domain;
      this.model.history = state.history;
      this.model.size = state.size;
      this.model.duel = state.pending ?? (await this.api.nextDuel(this.sessionId));
      if (state.size > 0) {
        this.model.winner = await this.api.winner(this.sessionId);
      }
      this.model.phase = "dueling";
      this.model.errorMessage = null;
    } catch (err) {
      this.model.phase = "error";
      this.model.errorMessage = String(err);
    }
    this.emit();
  }

  /**
   * Record the user's preference for one side of the pending duel.
   * Ignored while a previous submission is still in flight, so double
   * clicks cannot record twice.
   */
  async answer(side: "left" | "right"): Promise<boolean> {
    if (this.model.busy || this.model.duel === null) return false;
    this.model.busy = true;
    this.emit();
    try {
      const y = side === "left" ? 1 : 0;
      const answered = this.model.duel;
      const { size } = await this.api.submitOutcome(this.sessionId, y);
      this.model.size = size;
      this.model.history = [...this.model.history, { left: answered.left, right: answered.right, y }];
      this.model.duel = await this.api.nextDuel(this.sessionId);
      this.model.winner = await this.api.winner(this.sessionId);
      this.model.errorMessage = null;
      return true;
    } catch (err) {
      this.model.errorMessage = String(err);
      return false;
    } finally {
      this.model.busy = false;
      this.emit();
    }
  }

  /** Poll-driven refresh of the winner surface; never mutates the session. */
  async refreshWinner(): Promise<void> {
    if (this.model.size < 1) return;
    try {
      this.model.winner = await this.api.winner(this.sessionId);
      this.emit();
    } catch {
      // transient; the next poll retries
    }
  }
}

export function formatPoint(point: number[]): string {
  return point.map((v) => v.toFixed(4)).join(", ");
}
