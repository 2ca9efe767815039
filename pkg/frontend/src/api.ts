import type {
  CreateSessionResponse,
  InputCategory,
  NextOperation,
  TreeResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public kind: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

/** Thin, reshaping-free client for the engine's HTTP contract. */
export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let kind = `http-${response.status}`;
      let message = response.statusText;
      try {
        const detail = (await response.json()).detail;
        if (detail?.error) {
          kind = detail.error;
          message = detail.message ?? message;
        }
      } catch {
        // non-JSON error body; keep the HTTP status
      }
      throw new ApiError(response.status, kind, message);
    }
    return (await response.json()) as T;
  }

  healthz(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  createSession(goal: string, target: string): Promise<CreateSessionResponse> {
    return this.request("POST", "/sessions", { goal, target });
  }

  getTree(sessionId: string): Promise<TreeResponse> {
    return this.request("GET", `/sessions/${sessionId}/tree`);
  }

  requestNext(sessionId: string): Promise<NextOperation> {
    return this.request("POST", `/sessions/${sessionId}/next`);
  }

  submitResult(
    sessionId: string,
    category: InputCategory,
    raw: string,
  ): Promise<{ revision: number }> {
    return this.request("POST", `/sessions/${sessionId}/results`, { category, raw });
  }

  askFeedback(sessionId: string, question: string): Promise<{ answer: string }> {
    return this.request("POST", `/sessions/${sessionId}/feedback`, { question });
  }

  revise(sessionId: string, instruction: string): Promise<{ revision: number }> {
    return this.request("POST", `/sessions/${sessionId}/revise`, { instruction });
  }

  eventsUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/events`;
  }
}
