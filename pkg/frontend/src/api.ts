// Typed client over the session service HTTP API. Every number the UI
// shows comes from these responses; nothing is recomputed client-side.

export interface DomainSpec {
  bounds: [number, number][];
  grid_per_dim: number;
}

export interface SessionConfigSpec {
  seed?: number;
  n_init?: number;
  n_features?: number;
  landmarks?: string;
  simulated?: string | null;
}

export interface DuelSpec {
  left: number[];
  right: number[];
  iteration: number;
}

export interface WinnerSpec {
  point: number[];
  score: number;
  table: { points: number[][]; scores: number[] };
}

export interface HistoryEntry {
  left: number[];
  right: number[];
  y: number;
}

export interface SessionState {
  id: string;
  domain: DomainSpec;
  policy: string;
  config: SessionConfigSpec;
  size: number;
  pending: DuelSpec | null;
  history: HistoryEntry[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(response.status, body.code ?? "http_error", body.message ?? response.statusText);
  }
  return body as T;
}

export class SessionApi {
  constructor(private base: string = "") {}

  createSession(domain: DomainSpec, policy: string, config: SessionConfigSpec): Promise<{ id: string }> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify({ domain, policy, config }),
    });
  }

  state(id: string): Promise<SessionState> {
    return request(this.base, `/sessions/${id}`);
  }

  nextDuel(id: string): Promise<DuelSpec> {
    return request(this.base, `/sessions/${id}/next-duel`);
  }

  submitOutcome(id: string, y: 0 | 1): Promise<{ size: number }> {
    return request(this.base, `/sessions/${id}/outcome`, {
      method: "POST",
      body: JSON.stringify({ y }),
    });
  }

  winner(id: string): Promise<WinnerSpec> {
    return request(this.base, `/sessions/${id}/winner`);
  }
}
