export interface SessionInfo {
  session_id: string;
  participant_id: string;
  seed: number;
  cursor: number;
  status: "active" | "complete";
}

export interface NextTrial {
  trial_index: number;
  presented: string;
  experimenter_only: boolean;
}

export interface ResponseAck {
  ack: boolean;
  duplicate: boolean;
  cursor: number;
}

export interface SessionSummary {
  mean_diagonal: number;
  best_label: string;
  best_value: number;
  worst_label: string;
  worst_value: number;
}

export interface SessionResults extends SessionInfo {
  labels: string[];
  counts: number[][];
  proportions: number[][] | null;
  summary: SessionSummary | null;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    message: string,
  ) {
    super(message);
  }
}

/** Shape the app depends on; tests substitute in-memory fakes. */
export interface StudyApi {
  createSession(participantId: string, seed: number): Promise<SessionInfo>;
  nextTrial(sessionId: string): Promise<NextTrial>;
  postResponse(sessionId: string, trialIndex: number, perceived: string): Promise<ResponseAck>;
  results(sessionId: string): Promise<SessionResults>;
  play(pattern: string): Promise<void>;
}

export class ApiClient implements StudyApi {
  constructor(readonly baseUrl: string) {}

  private async request<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      throw new ApiError(
        response.status,
        String(payload["error"] ?? "HttpError"),
        String(payload["message"] ?? `HTTP ${response.status}`),
      );
    }
    return payload as T;
  }

  createSession(participantId: string, seed: number): Promise<SessionInfo> {
    return this.request("POST", "/api/session", { participant_id: participantId, seed });
  }

  nextTrial(sessionId: string): Promise<NextTrial> {
    return this.request("GET", `/api/session/${sessionId}/next`);
  }

  postResponse(sessionId: string, trialIndex: number, perceived: string): Promise<ResponseAck> {
    return this.request("POST", `/api/session/${sessionId}/response`, {
      trial_index: trialIndex,
      perceived,
    });
  }

  results(sessionId: string): Promise<SessionResults> {
    return this.request("GET", `/api/session/${sessionId}/results`);
  }

  async play(pattern: string): Promise<void> {
    await this.request("POST", "/api/haptic/play", { pattern });
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/api/health");
  }
}
