import { beforeEach, describe, expect, it } from "vitest";

import {
  NextTrial,
  ResponseAck,
  SessionInfo,
  SessionResults,
  StudyApi,
} from "../src/api.js";
import { CONDITIONS, CONDITION_LABELS } from "../src/conditions.js";
import { StudyApp } from "../src/app.js";

/** In-memory stand-in mirroring the service's session semantics. */
class FakeApi implements StudyApi {
  sessions = new Map<string, { plan: string[]; cursor: number; pending: boolean; rows: number[][] }>();
  played: string[] = [];
  failNext = false;
  private counter = 0;

  private check(): void {
    if (this.failNext) {
      this.failNext = false;
      throw new Error("injected network failure");
    }
  }

  async createSession(participantId: string, seed: number): Promise<SessionInfo> {
    this.check();
    const sessionId = `fake-${this.counter++}`;
    const plan = Array.from({ length: 50 }, (_, i) => CONDITIONS[(i + seed) % 10]!.label);
    this.sessions.set(sessionId, {
      plan,
      cursor: 0,
      pending: false,
      rows: Array.from({ length: 10 }, () => Array<number>(10).fill(0)),
    });
    return { session_id: sessionId, participant_id: participantId, seed, cursor: 0, status: "active" };
  }

  async nextTrial(sessionId: string): Promise<NextTrial> {
    this.check();
    const session = this.sessions.get(sessionId)!;
    session.pending = true;
    return { trial_index: session.cursor, presented: session.plan[session.cursor]!, experimenter_only: true };
  }

  async postResponse(sessionId: string, trialIndex: number, perceived: string): Promise<ResponseAck> {
    this.check();
    const session = this.sessions.get(sessionId)!;
    if (!session.pending || trialIndex !== session.cursor) {
      throw new Error("protocol violation");
    }
    const row = CONDITION_LABELS.indexOf(session.plan[trialIndex]!);
    const col = CONDITION_LABELS.indexOf(perceived);
    session.rows[row]![col]! += 1;
    session.cursor += 1;
    session.pending = false;
    return { ack: true, duplicate: false, cursor: session.cursor };
  }

  async results(sessionId: string): Promise<SessionResults> {
    this.check();
    const session = this.sessions.get(sessionId)!;
    return {
      session_id: sessionId,
      participant_id: "P01",
      seed: 0,
      cursor: session.cursor,
      status: session.cursor >= 50 ? "complete" : "active",
      labels: [...CONDITION_LABELS],
      counts: session.rows.map((r) => [...r]),
      proportions: null,
      summary:
        session.cursor >= 50
          ? { mean_diagonal: 1, best_label: "WC-h", best_value: 1, worst_label: "FR-c", worst_value: 1 }
          : null,
    };
  }

  async play(pattern: string): Promise<void> {
    this.check();
    this.played.push(pattern);
  }
}

describe("StudyApp", () => {
  let root: HTMLElement;
  let api: FakeApi;
  let app: StudyApp;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app")!;
    api = new FakeApi();
    app = new StudyApp(root, api);
  });

  it("starts a session at progress 0/50", async () => {
    await app.startSession("P01", 1);
    expect(root.dataset["phase"]).toBe("idle");
    expect(root.querySelector(".progress")!.textContent).toBe("0/50");
  });

  it("duplicate starts produce independent sessions", async () => {
    await app.startSession("P01", 1);
    const first = app.state.session!.sessionId;
    await app.startSession("P01", 1);
    expect(app.state.session!.sessionId).not.toBe(first);
  });

  it("present then respond advances progress and re-idles", async () => {
    await app.startSession("P01", 1);
    await app.presentNext();
    expect(root.dataset["phase"]).toBe("awaiting_response");
    const grid = root.querySelector(".response-grid")!;
    expect(grid.getAttribute("data-enabled")).toBe("true");
    const reveal = root.querySelector(".reveal-condition")!.textContent;
    (grid.querySelector(`button[data-condition="${reveal}"]`) as HTMLButtonElement).click();
    await Promise.resolve(); // let the async respond handler settle
    await new Promise((r) => setTimeout(r, 0));
    expect(root.dataset["phase"]).toBe("idle");
    expect(root.querySelector(".progress")!.textContent).toBe("1/50");
    expect(root.querySelector(".reveal-condition")!.textContent).toBe("—");
  });

  it("live counts reflect the client's own responses", async () => {
    await app.startSession("P01", 0);
    await app.presentNext();
    await app.respond("GT-h"); // presented was WC-h (seed 0 plan), perceived GT-h
    const cell = root.querySelector('td[data-row="0"][data-col="1"]')!;
    expect(cell.textContent).toBe("1");
  });

  it("errors surface in the banner and retry succeeds", async () => {
    api.failNext = true;
    await app.startSession("P01", 1);
    const banner = root.querySelector(".error-banner")!;
    expect(banner.classList.contains("hidden")).toBe(false);
    expect(banner.textContent).toContain("start session failed");
    (root.querySelector(".retry-button") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 0));
    expect(banner.classList.contains("hidden")).toBe(true);
    expect(app.state.session).not.toBeNull();
  });

  it("failed presentation returns to idle so it can be retried", async () => {
    await app.startSession("P01", 1);
    api.failNext = true;
    await app.presentNext();
    expect(root.dataset["phase"]).toBe("idle");
    await app.presentNext();
    expect(root.dataset["phase"]).toBe("awaiting_response");
  });

  it("training replays each of the five patterns three times", async () => {
    await app.runTraining();
    expect(api.played).toHaveLength(15);
    for (const pattern of ["WC", "GT", "WS", "FR", "MW"]) {
      expect(api.played.filter((p) => p === pattern)).toHaveLength(3);
    }
  });

  it("completing 50 trials shows the results matrix", async () => {
    await app.startSession("P01", 1);
    for (let i = 0; i < 50; i += 1) {
      await app.presentNext();
      await app.respond(app.state.session!.presented!);
    }
    expect(root.dataset["phase"]).toBe("complete");
    const completion = root.querySelector(".completion-panel")!;
    expect(completion.classList.contains("hidden")).toBe(false);
    expect(completion.querySelectorAll(".results-matrix tr")).toHaveLength(11);
  });

  it("keyboard number keys drive the grid", async () => {
    await app.startSession("P01", 1);
    await app.presentNext();
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "1", bubbles: true }));
    await new Promise((r) => setTimeout(r, 0));
    expect(app.state.session!.responses[0]!.perceived).toBe("WC-h");
  });
});
