import { StudyApi, SessionResults } from "./api.js";
import { CONDITIONS, CONDITION_LABELS, VIBRATIONS } from "./conditions.js";
import { createResponseGrid, ResponseGrid } from "./grid.js";
import { attachKeyboard } from "./keyboard.js";
import { SessionState } from "./state.js";

const TRAINING_REPS = 3;

/**
 * Experimenter-facing single-page app. All session state lives on the
 * server; this client only mirrors it (progress from acks, live confusion
 * counts from its own submitted responses).
 */
export class StudyApp {
  readonly state: { session: SessionState | null } = { session: null };
  private grid!: ResponseGrid;
  private detachKeyboard: (() => void) | null = null;
  private lastFailed: (() => Promise<void>) | null = null;

  private el: Record<string, HTMLElement> = {};

  constructor(
    private readonly root: HTMLElement,
    private readonly api: StudyApi,
    private readonly doc: Document = root.ownerDocument,
  ) {
    this.render();
  }

  // -- DOM construction ------------------------------------------------------

  private h(tag: string, className: string, text = ""): HTMLElement {
    const node = this.doc.createElement(tag);
    node.className = className;
    if (text) node.textContent = text;
    return node;
  }

  private render(): void {
    this.root.innerHTML = "";
    this.root.dataset["phase"] = "setup";

    const banner = this.h("div", "error-banner hidden");
    banner.appendChild(this.h("span", "error-text"));
    const retry = this.h("button", "retry-button", "Retry") as HTMLButtonElement;
    retry.addEventListener("click", () => void this.retryLast());
    banner.appendChild(retry);

    const setup = this.h("form", "setup-panel") as HTMLFormElement;
    const participant = this.h("input", "participant-input") as HTMLInputElement;
    participant.placeholder = "participant id";
    participant.value = "P01";
    const seed = this.h("input", "seed-input") as HTMLInputElement;
    seed.type = "number";
    seed.value = "1";
    const start = this.h("button", "start-button", "Start session") as HTMLButtonElement;
    start.type = "submit";
    const training = this.h("button", "training-button", "Training (3x each pattern)") as HTMLButtonElement;
    training.type = "button";
    training.addEventListener("click", () => void this.runTraining());
    setup.append(participant, seed, start, training);
    setup.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.startSession(participant.value.trim(), Number(seed.value));
    });

    const session = this.h("section", "session-panel hidden");
    const progress = this.h("div", "progress", "0/50");
    const present = this.h("button", "present-button", "Present next") as HTMLButtonElement;
    present.addEventListener("click", () => void this.presentNext());
    const reveal = this.h("details", "reveal-panel");
    reveal.appendChild(this.h("summary", "", "Experimenter reveal"));
    reveal.appendChild(this.h("div", "reveal-condition", "—"));
    this.grid = createResponseGrid(this.doc, (label) => void this.respond(label));
    const counts = this.h("table", "live-counts");
    const status = this.h("div", "status-line");
    session.append(progress, present, reveal, this.grid.element, counts, status);

    const completion = this.h("section", "completion-panel hidden");

    this.root.append(banner, setup, session, completion);
    this.el = {
      banner,
      errorText: banner.querySelector(".error-text") as HTMLElement,
      setup,
      session,
      progress,
      present,
      reveal: reveal.querySelector(".reveal-condition") as HTMLElement,
      counts,
      status,
      completion,
    };

    this.detachKeyboard?.();
    this.detachKeyboard = attachKeyboard(this.doc, (index) => this.grid.select(index));
  }

  // -- actions ---------------------------------------------------------------

  async startSession(participantId: string, seed: number): Promise<void> {
    await this.guarded(async () => {
      const info = await this.api.createSession(participantId, seed);
      this.state.session = new SessionState(info.session_id, info.participant_id, info.cursor);
      this.el["setup"]!.classList.add("hidden");
      this.el["session"]!.classList.remove("hidden");
      this.el["completion"]!.classList.add("hidden");
      this.setStatus(`session ${info.session_id} started`);
      this.sync();
    }, "start session");
  }

  async presentNext(): Promise<void> {
    const session = this.state.session;
    if (!session || session.phase !== "idle" || session.complete) return;
    session.beginPresenting();
    this.sync();
    await this.guarded(
      async () => {
        const trial = await this.api.nextTrial(session.sessionId);
        session.trialPresented(trial.trial_index, trial.presented);
        this.setStatus(`trial ${trial.trial_index + 1} presented`);
        this.sync();
      },
      "present next trial",
      () => {
        session.presentFailed();
        this.sync();
      },
    );
  }

  async respond(perceivedLabel: string): Promise<void> {
    const session = this.state.session;
    if (!session || session.phase !== "awaiting_response" || session.trialIndex === null) return;
    const trialIndex = session.trialIndex;
    await this.guarded(async () => {
      const ack = await this.api.postResponse(session.sessionId, trialIndex, perceivedLabel);
      session.responseRecorded(perceivedLabel, ack.cursor);
      this.sync();
      if (session.complete) {
        await this.showCompletion();
      }
    }, `record response for trial ${trialIndex}`);
  }

  async runTraining(): Promise<void> {
    await this.guarded(async () => {
      for (const vibration of VIBRATIONS) {
        for (let rep = 1; rep <= TRAINING_REPS; rep += 1) {
          await this.api.play(vibration);
          this.setStatus(`training: ${vibration} (${rep}/${TRAINING_REPS})`);
        }
      }
      this.setStatus("training complete");
    }, "training playback");
  }

  private async showCompletion(): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    const results = await this.api.results(session.sessionId);
    const panel = this.el["completion"]!;
    panel.innerHTML = "";
    panel.appendChild(this.h("h2", "", "Session complete"));
    if (results.summary) {
      panel.appendChild(
        this.h(
          "p",
          "summary-line",
          `mean diagonal ${(results.summary.mean_diagonal * 100).toFixed(1)}%` +
            ` · best ${results.summary.best_label}` +
            ` · worst ${results.summary.worst_label}`,
        ),
      );
    }
    panel.appendChild(this.renderMatrix(results));
    panel.classList.remove("hidden");
    this.el["session"]!.classList.add("hidden");
    this.root.dataset["phase"] = "complete";
  }

  private async retryLast(): Promise<void> {
    const action = this.lastFailed;
    if (!action) return;
    this.hideError();
    await action();
  }

  // -- view sync ---------------------------------------------------------------

  private sync(): void {
    const session = this.state.session;
    if (!session) return;
    this.root.dataset["phase"] = session.complete ? "complete" : session.phase;
    this.root.dataset["progress"] = String(session.done);
    this.el["progress"]!.textContent = `${session.done}/${session.total}`;
    (this.el["present"] as HTMLButtonElement).disabled =
      session.phase !== "idle" || session.complete;
    this.grid.setEnabled(session.phase === "awaiting_response");
    this.el["reveal"]!.textContent =
      session.phase === "awaiting_response" && session.presented !== null
        ? session.presented
        : "—";
    this.renderLiveCounts(session);
  }

  private renderLiveCounts(session: SessionState): void {
    const counts = session.confusionCounts();
    const table = this.el["counts"]!;
    table.innerHTML = "";
    const header = this.h("tr", "");
    header.appendChild(this.h("th", "", ""));
    for (const label of CONDITION_LABELS) header.appendChild(this.h("th", "", label));
    table.appendChild(header);
    CONDITIONS.forEach((condition, i) => {
      const row = this.h("tr", "");
      row.appendChild(this.h("th", "", condition.label));
      counts[i]!.forEach((count, j) => {
        const cell = this.h("td", i === j ? "diagonal" : "", count ? String(count) : "");
        cell.dataset["row"] = String(i);
        cell.dataset["col"] = String(j);
        row.appendChild(cell);
      });
      table.appendChild(row);
    });
  }

  private renderMatrix(results: SessionResults): HTMLElement {
    const table = this.h("table", "results-matrix");
    const header = this.h("tr", "");
    header.appendChild(this.h("th", "", ""));
    for (const label of results.labels) header.appendChild(this.h("th", "", label));
    table.appendChild(header);
    results.labels.forEach((label, i) => {
      const row = this.h("tr", "");
      row.appendChild(this.h("th", "", label));
      results.labels.forEach((_, j) => {
        const proportion = results.proportions?.[i]?.[j] ?? 0;
        const count = results.counts[i]?.[j] ?? 0;
        row.appendChild(this.h("td", i === j ? "diagonal" : "", proportion ? proportion.toFixed(2) : count ? String(count) : ""));
      });
      table.appendChild(row);
    });
    return table;
  }

  private setStatus(text: string): void {
    this.el["status"]!.textContent = text;
  }

  private hideError(): void {
    this.el["banner"]!.classList.add("hidden");
  }

  private async guarded(
    action: () => Promise<void>,
    description: string,
    onError?: () => void,
  ): Promise<void> {
    try {
      await action();
      this.lastFailed = null;
      this.hideError();
    } catch (error) {
      this.lastFailed = () => this.guarded(action, description, onError);
      onError?.();
      this.el["errorText"]!.textContent = `${description} failed: ${
        error instanceof Error ? error.message : String(error)
      }`;
      this.el["banner"]!.classList.remove("hidden");
    }
  }
}
