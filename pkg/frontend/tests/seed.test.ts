import { afterEach, beforeEach, describe, expect, it, vi } from 'vitest';
import { ApiClient } from '../src/api.js';
import { SeedScreen } from '../src/seed.js';

function input(cls: string): HTMLInputElement {
  return document.querySelector<HTMLInputElement>(cls)!;
}

function buildScreen(onCreated = (_id: string) => undefined) {
  const api = new ApiClient('http://service.invalid', 1);
  return new SeedScreen(document.body, api, onCreated);
}

describe('SeedScreen', () => {
  beforeEach(() => {
    document.body.innerHTML = '';
    vi.restoreAllMocks();
  });
  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it('rejects an out-of-bounds coordinate without sending a request', async () => {
    const fetchSpy = vi.fn();
    vi.stubGlobal('fetch', fetchSpy);
    const screen = buildScreen();
    input('.cfg-dim').value = '2';
    input('.cfg-lower').value = '0';
    input('.cfg-upper').value = '1';
    screen.addRow();
    const coords = document.querySelectorAll<HTMLInputElement>('.seed-coord');
    coords[0].value = '0.5';
    coords[1].value = '1.5';
    await screen.submit();
    expect(fetchSpy).not.toHaveBeenCalled();
    expect(document.querySelector('.status-error')!.textContent).toContain('outside [0, 1]');
  });

  it('caps expert rows at the initial design size', () => {
    const screen = buildScreen();
    input('.cfg-t').value = '3';
    for (let i = 0; i < 6; i++) screen.addRow();
    expect(screen.m).toBe(3);
    expect(document.querySelector<HTMLButtonElement>('.add-point')!.disabled).toBe(true);
  });

  it('submits m = 0 with a null seed list and navigates on success', async () => {
    const created: string[] = [];
    const fetchSpy = vi.fn(async (url: RequestInfo | URL, init?: RequestInit) => {
      expect(String(url)).toBe('http://service.invalid/sessions');
      const body = JSON.parse(String(init!.body));
      expect(body.expert_seeds).toBeNull();
      expect(body.config.domain).toEqual({ lower: [0, 0], upper: [1, 1] });
      expect(body.config.init_design_size).toBe(4);
      return new Response(JSON.stringify({ id: 'abc123', session: {} }), { status: 201 });
    });
    vi.stubGlobal('fetch', fetchSpy);
    const screen = buildScreen((id) => {
      created.push(id);
      return undefined;
    });
    input('.cfg-dim').value = '2';
    input('.cfg-t').value = '4';
    await screen.submit();
    expect(fetchSpy).toHaveBeenCalledTimes(1);
    expect(created).toEqual(['abc123']);
  });

  it('surfaces a server 422 inline', async () => {
    vi.stubGlobal(
      'fetch',
      vi.fn(async () =>
        new Response(JSON.stringify({ code: 'invalid_config', message: 'bad session config' }), {
          status: 422,
        }),
      ),
    );
    const screen = buildScreen();
    await screen.submit();
    expect(document.querySelector('.status-error')!.textContent).toBe(
      'invalid_config: bad session config',
    );
  });

  it('requires bounds lists to match the dimension', async () => {
    const fetchSpy = vi.fn();
    vi.stubGlobal('fetch', fetchSpy);
    const screen = buildScreen();
    input('.cfg-dim').value = '3';
    input('.cfg-lower').value = '0, 1';
    await screen.submit();
    expect(fetchSpy).not.toHaveBeenCalled();
    expect(document.querySelector('.status-error')!.textContent).toContain('3 comma-separated');
  });
});
