import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';
import { ApiClient, CandidateView, SessionView } from '../src/api.js';
import { fmtNum } from '../src/format.js';
import { SessionScreen } from '../src/session.js';

function candidate(i: number, optimal = false): CandidateView {
  return {
    point: [0.1 * (i + 1)],
    utility: 0.01 * (i + 1),
    predicted_mean: -i,
    predicted_sd: 0.5,
    is_utility_optimum: optimal,
  };
}

function makeView(overrides: Partial<SessionView>): SessionView {
  return {
    schema_version: 1,
    id: 'sess1',
    phase: 'awaiting_choice',
    iteration: 0,
    max_iterations: 6,
    p: 4,
    domain: { lower: [0], upper: [1] },
    acquisition: { kind: 'EI', beta: 2, base: 'EI', n_fantasies: 8 },
    initial_design: {
      points: [[0.2], [0.8]],
      expert_mask: [true, false],
      observed: [1.5, -0.25],
    },
    pending_candidates: [candidate(0), candidate(1), candidate(2), candidate(3, true)],
    pending_point: null,
    history: [],
    best_observed: 1.5,
    evaluations: 2,
    ...overrides,
  };
}

// fetch stub backed by a mutable view plus a request log
function stubService(state: { view: SessionView }) {
  const log: Array<{ url: string; body: unknown }> = [];
  vi.stubGlobal(
    'fetch',
    vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      const path = String(url);
      log.push({ url: path, body: init?.body ? JSON.parse(String(init.body)) : null });
      return new Response(JSON.stringify(state.view), { status: 200 });
    }),
  );
  return log;
}

function screenFor(id = 'sess1'): SessionScreen {
  const api = new ApiClient('', 1);
  return new SessionScreen(document.body, api, id, 1);
}

describe('SessionScreen', () => {
  beforeEach(() => {
    document.body.innerHTML = '';
    vi.restoreAllMocks();
  });
  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it('renders p cards in awaiting_choice and submits the picked index', async () => {
    const state = { view: makeView({}) };
    const log = stubService(state);
    const screen = screenFor();
    await screen.tick();
    screen.stop();
    expect(document.querySelectorAll('.card').length).toBe(4);
    expect(document.querySelectorAll('.badge-optimal').length).toBe(1);
    const utilities = [...document.querySelectorAll('.card-utility')].map((el) => el.textContent);
    expect(utilities).toEqual(state.view.pending_candidates!.map((c) => fmtNum(c.utility)));

    state.view = makeView({ phase: 'awaiting_observation', pending_point: [0.3], pending_candidates: null });
    document.querySelectorAll<HTMLButtonElement>('.choose')[2].click();
    await vi.waitFor(() => {
      expect(log.some((r) => r.url.endsWith('/sessions/sess1/choice'))).toBe(true);
    });
    const choice = log.find((r) => r.url.endsWith('/choice'))!;
    expect(choice.body).toEqual({ index: 2, chooser: 'human' });
    await vi.waitFor(() => {
      expect(document.querySelector('.observation-form')).not.toBeNull();
    });
  });

  it('shows the initial observation form in awaiting_init and posts the values', async () => {
    const state = {
      view: makeView({
        phase: 'awaiting_init',
        pending_candidates: null,
        initial_design: { points: [[0.2], [0.8]], expert_mask: [false, false], observed: null },
        best_observed: null,
        evaluations: 0,
      }),
    };
    const log = stubService(state);
    const screen = screenFor();
    await screen.tick();
    screen.stop();
    const inputs = document.querySelectorAll<HTMLInputElement>('.init-observation');
    expect(inputs.length).toBe(2);
    inputs[0].value = '1.25';
    inputs[1].value = '-2.5';
    document.querySelector<HTMLFormElement>('.init-form')!.dispatchEvent(
      new Event('submit', { cancelable: true }),
    );
    await vi.waitFor(() => {
      expect(log.some((r) => r.url.endsWith('/init-observations'))).toBe(true);
    });
    expect(log.find((r) => r.url.endsWith('/init-observations'))!.body).toEqual({
      values: [1.25, -2.5],
    });
  });

  it('auto-advances a proposing session', async () => {
    const state = { view: makeView({ phase: 'proposing', pending_candidates: null }) };
    const log = stubService(state);
    const screen = screenFor();
    await screen.tick();
    await vi.waitFor(() => {
      expect(log.some((r) => r.url.endsWith('/sessions/sess1/propose'))).toBe(true);
    });
    screen.stop();
  });

  it('keeps form input alive across unchanged polls', async () => {
    const state = {
      view: makeView({ phase: 'awaiting_observation', pending_point: [0.4], pending_candidates: null }),
    };
    stubService(state);
    const screen = screenFor();
    await screen.tick();
    const input = document.querySelector<HTMLInputElement>('.observation-value')!;
    input.value = '3.14';
    await screen.tick();
    screen.stop();
    expect(document.querySelector<HTMLInputElement>('.observation-value')!.value).toBe('3.14');
  });

  it('surfaces a 409 inline and refreshes the view', async () => {
    const state = { view: makeView({}) };
    let conflictOnce = true;
    const log: string[] = [];
    vi.stubGlobal(
      'fetch',
      vi.fn(async (url: RequestInfo | URL) => {
        const path = String(url);
        log.push(path);
        if (path.endsWith('/choice') && conflictOnce) {
          conflictOnce = false;
          return new Response(
            JSON.stringify({ code: 'illegal_phase', message: 'no pending choice' }),
            { status: 409 },
          );
        }
        return new Response(JSON.stringify(state.view), { status: 200 });
      }),
    );
    const screen = screenFor();
    await screen.tick();
    screen.stop();
    state.view = makeView({ phase: 'awaiting_observation', pending_point: [0.9], pending_candidates: null });
    document.querySelector<HTMLButtonElement>('.choose')!.click();
    await vi.waitFor(() => {
      expect(document.querySelector('.status-error')!.textContent).toContain('illegal_phase');
    });
    await vi.waitFor(() => {
      // the conflict triggers an immediate re-fetch of the session
      expect(log.filter((p) => p.endsWith('/sessions/sess1')).length).toBeGreaterThanOrEqual(2);
    });
    await vi.waitFor(() => {
      expect(document.querySelector('.observation-form')).not.toBeNull();
    });
  });

  it('backs off polling while the service is unreachable', async () => {
    let calls = 0;
    vi.stubGlobal(
      'fetch',
      vi.fn(async () => {
        calls += 1;
        throw new TypeError('fetch failed');
      }),
    );
    const screen = screenFor();
    await screen.tick();
    expect(document.querySelector('.status-note')!.textContent).toContain('connection lost');
    await vi.waitFor(() => {
      expect(calls).toBeGreaterThanOrEqual(2);
    });
    screen.stop();
  });
});
