import { CONDITIONS, conditionIndex, TRIALS_PER_SESSION } from "./conditions.js";

export type TrialPhase = "idle" | "presenting" | "awaiting_response";

export interface RecordedResponse {
  trialIndex: number;
  presented: string;
  perceived: string;
}

/**
 * Client-side view of one live session. Holds no authority of its own:
 * progress comes from server acks, and the running confusion counts are
 * derived purely from the responses this client submitted.
 */
export class SessionState {
  readonly sessionId: string;
  readonly participantId: string;
  readonly total = TRIALS_PER_SESSION;
  done: number;
  phase: TrialPhase = "idle";
  presented: string | null = null;
  trialIndex: number | null = null;
  readonly responses: RecordedResponse[] = [];

  constructor(sessionId: string, participantId: string, done = 0) {
    this.sessionId = sessionId;
    this.participantId = participantId;
    this.done = done;
  }

  get complete(): boolean {
    return this.done >= this.total;
  }

  /** idle -> presenting: a next-trial request is in flight / stimulus starting. */
  beginPresenting(): void {
    if (this.phase !== "idle") {
      throw new Error(`cannot present from phase ${this.phase}`);
    }
    this.phase = "presenting";
  }

  /** presenting -> awaiting_response: the stimulus is live, grid is hot. */
  trialPresented(trialIndex: number, presented: string): void {
    if (this.phase !== "presenting") {
      throw new Error(`unexpected trial in phase ${this.phase}`);
    }
    conditionIndex(presented); // validate the label early
    this.trialIndex = trialIndex;
    this.presented = presented;
    this.phase = "awaiting_response";
  }

  /** awaiting_response -> idle, recording what the participant perceived. */
  responseRecorded(perceived: string, cursor: number): void {
    if (this.phase !== "awaiting_response" || this.presented === null || this.trialIndex === null) {
      throw new Error(`no trial awaits a response (phase ${this.phase})`);
    }
    if (cursor > this.total) {
      throw new Error(`cursor ${cursor} exceeds ${this.total}`);
    }
    this.responses.push({
      trialIndex: this.trialIndex,
      presented: this.presented,
      perceived,
    });
    this.done = cursor;
    this.presented = null;
    this.trialIndex = null;
    this.phase = "idle";
  }

  /** drop back to idle after a failed present request so it can be retried */
  presentFailed(): void {
    if (this.phase === "presenting") {
      this.phase = "idle";
    }
  }

  /** Running confusion counts over this client's own submitted responses. */
  confusionCounts(): number[][] {
    const n = CONDITIONS.length;
    const counts: number[][] = Array.from({ length: n }, () => Array<number>(n).fill(0));
    for (const response of this.responses) {
      const row = counts[conditionIndex(response.presented)]!;
      row[conditionIndex(response.perceived)]! += 1;
    }
    return counts;
  }
}
