// Typed client for the session service. All console traffic goes through
// this module; nothing else touches the network.

export interface DomainView {
  lower: number[];
  upper: number[];
}

export interface AcquisitionView {
  kind: string;
  beta: number;
  base: string;
  n_fantasies: number;
}

export interface CandidateView {
  point: number[];
  utility: number;
  predicted_mean: number;
  predicted_sd: number;
  is_utility_optimum: boolean;
}

export interface HistoryRow {
  iteration: number;
  chosen_index: number;
  chooser: string;
  point: number[];
  observed: number | null;
  best_so_far: number | null;
}

export interface InitialDesignView {
  points: number[][];
  expert_mask: boolean[];
  observed: number[] | null;
}

export interface SessionView {
  schema_version: number;
  id: string;
  phase: string;
  iteration: number;
  max_iterations: number;
  p: number;
  domain: DomainView;
  acquisition: AcquisitionView;
  initial_design: InitialDesignView;
  pending_candidates: CandidateView[] | null;
  pending_point: number[] | null;
  history: HistoryRow[];
  best_observed: number | null;
  evaluations: number;
}

export interface SessionConfigBody {
  domain: { lower: number[]; upper: number[] };
  acquisition: { kind: string };
  p: number;
  init_design_size: number;
  noise: string | number;
  max_iterations: number;
  seed: number;
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class ApiClient {
  // retryDelayMs grows 2x per attempt; HTTP error responses never retry,
  // only network-level faults do
  constructor(private base = '', private retryDelayMs = 1000) {}

  async request<T>(path: string, init?: RequestInit, retries = 0): Promise<T> {
    let attempt = 0;
    for (;;) {
      let response: Response;
      try {
        response = await fetch(this.base + path, init);
      } catch (err) {
        if (attempt >= retries) throw err;
        await sleep(this.retryDelayMs * 2 ** attempt);
        attempt += 1;
        continue;
      }
      if (!response.ok) {
        let code = 'error';
        let message = `${response.status}`;
        try {
          const body = await response.json();
          if (body && typeof body.code === 'string') code = body.code;
          if (body && typeof body.message === 'string') message = body.message;
        } catch {
          // non-JSON error body; keep the status text
        }
        throw new ApiError(response.status, code, message);
      }
      return response.json() as Promise<T>;
    }
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  getSession(id: string, retries = 2): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${id}`, undefined, retries);
  }

  createSession(
    config: SessionConfigBody,
    expertSeeds: number[][] | null,
  ): Promise<{ id: string; session: SessionView }> {
    return this.post('/sessions', { config, expert_seeds: expertSeeds });
  }

  initObservations(id: string, values: number[]): Promise<SessionView> {
    return this.post(`/sessions/${id}/init-observations`, { values });
  }

  propose(id: string): Promise<SessionView> {
    return this.post(`/sessions/${id}/propose`, {});
  }

  choose(id: string, index: number, chooser = 'human'): Promise<SessionView> {
    return this.post(`/sessions/${id}/choice`, { index, chooser });
  }

  observe(id: string, y: number): Promise<SessionView> {
    return this.post(`/sessions/${id}/observation`, { y });
  }
}
