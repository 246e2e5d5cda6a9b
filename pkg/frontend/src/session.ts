import { ApiClient, ApiError, SessionView } from './api.js';
import { renderChoiceCards } from './cards.js';
import { renderHistory } from './history.js';
import { fmtNum, fmtPoint } from './format.js';

// Live session view. Everything renders from the last GET /sessions/{id}
// payload; the screen holds no state of its own beyond half-typed form
// fields, so a page reload reconstructs the same view.
//
// The DOM is only rebuilt when the payload changes, which keeps form input
// alive across polls.

export class SessionScreen {
  private status: HTMLElement;
  private body: HTMLElement;
  private lastJson = '';
  private timer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;
  private failures = 0;
  private proposeInFlight = false;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private id: string,
    private pollMs = 2000,
  ) {
    const title = document.createElement('h1');
    title.textContent = `Session ${id}`;
    this.status = document.createElement('div');
    this.status.className = 'status';
    this.body = document.createElement('div');
    this.body.className = 'session-body';
    root.appendChild(title);
    root.appendChild(this.status);
    root.appendChild(this.body);
  }

  start(): void {
    void this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) clearTimeout(this.timer);
  }

  async tick(): Promise<void> {
    if (this.stopped) return;
    let view: SessionView;
    try {
      view = await this.api.getSession(this.id, 0);
    } catch (err) {
      this.failures += 1;
      if (err instanceof ApiError) {
        this.showError(err);
      } else {
        this.note(`connection lost, retry ${this.failures} shortly`);
      }
      this.schedule();
      return;
    }
    this.failures = 0;
    this.apply(view);
    this.schedule();
  }

  private schedule(): void {
    if (this.stopped) return;
    // network faults back the poll off exponentially, capped at 16x
    const delay = this.pollMs * 2 ** Math.min(this.failures, 4);
    this.timer = setTimeout(() => void this.tick(), delay);
  }

  apply(view: SessionView): void {
    if (view.phase === 'proposing') void this.autoPropose();
    const json = JSON.stringify(view);
    if (json === this.lastJson) return;
    this.lastJson = json;
    this.render(view);
  }

  private async autoPropose(): Promise<void> {
    if (this.proposeInFlight || this.stopped) return;
    this.proposeInFlight = true;
    try {
      const view = await this.api.propose(this.id);
      this.apply(view);
    } catch (err) {
      // 409 = somebody else already advanced the session; the next poll
      // will pick the fresh phase up
      if (!(err instanceof ApiError && err.status === 409)) this.showError(err);
    } finally {
      this.proposeInFlight = false;
    }
  }

  private note(text: string): void {
    this.status.textContent = text;
    this.status.className = 'status status-note';
  }

  private showError(err: unknown): void {
    if (err instanceof ApiError) {
      this.note(`${err.code}: ${err.message}`);
      this.status.className = 'status status-error';
      if (err.status === 409) void this.refreshNow();
    } else {
      this.note(String(err));
      this.status.className = 'status status-error';
    }
  }

  private clearStatus(): void {
    this.status.textContent = '';
    this.status.className = 'status';
  }

  private async refreshNow(): Promise<void> {
    try {
      this.apply(await this.api.getSession(this.id, 0));
    } catch {
      // the regular poll keeps trying
    }
  }

  private async mutate(call: () => Promise<SessionView>): Promise<void> {
    try {
      const view = await call();
      this.clearStatus();
      this.apply(view);
    } catch (err) {
      this.showError(err);
    }
  }

  private render(view: SessionView): void {
    this.body.innerHTML = '';
    const meta = document.createElement('p');
    meta.className = 'session-meta';
    meta.textContent =
      `phase ${view.phase} · iteration ${view.iteration}/${view.max_iterations} · ` +
      `p=${view.p} · ${view.acquisition.kind}`;
    this.body.appendChild(meta);

    if (view.phase === 'awaiting_init') this.renderInitForm(view);
    if (view.phase === 'awaiting_choice' && view.pending_candidates) {
      const intro = document.createElement('h2');
      intro.textContent = 'Pick the next point to evaluate';
      this.body.appendChild(intro);
      renderChoiceCards(this.body, view.pending_candidates, view.domain, (index) => {
        void this.mutate(() => this.api.choose(this.id, index));
      });
    }
    if (view.phase === 'awaiting_observation' && view.pending_point) {
      this.renderObservationForm(view.pending_point);
    }
    if (view.phase === 'done') this.renderDone(view);

    renderHistory(this.body, view);
  }

  private renderInitForm(view: SessionView): void {
    const form = document.createElement('form');
    form.className = 'init-form';
    const h = document.createElement('h2');
    h.textContent = 'Record initial observations';
    form.appendChild(h);
    const inputs: HTMLInputElement[] = [];
    view.initial_design.points.forEach((pt, i) => {
      const row = document.createElement('label');
      row.className = 'init-row';
      const tag = view.initial_design.expert_mask[i] ? ' (expert seed)' : '';
      row.appendChild(document.createTextNode(`y at ${fmtPoint(pt)}${tag} `));
      const input = document.createElement('input');
      input.type = 'number';
      input.step = 'any';
      input.required = true;
      input.className = 'init-observation';
      row.appendChild(input);
      inputs.push(input);
      form.appendChild(row);
    });
    const submit = document.createElement('button');
    submit.type = 'submit';
    submit.textContent = 'Record observations';
    form.appendChild(submit);
    form.addEventListener('submit', (ev) => {
      ev.preventDefault();
      const values = inputs.map((el) => Number(el.value));
      if (inputs.some((el) => el.value.trim() === '') || values.some((v) => !Number.isFinite(v))) {
        this.note('every design point needs a finite observation');
        this.status.className = 'status status-error';
        return;
      }
      void this.mutate(() => this.api.initObservations(this.id, values));
    });
    this.body.appendChild(form);
  }

  private renderObservationForm(point: number[]): void {
    const form = document.createElement('form');
    form.className = 'observation-form';
    const h = document.createElement('h2');
    h.textContent = `Evaluate ${fmtPoint(point)} and report the outcome`;
    form.appendChild(h);
    const input = document.createElement('input');
    input.type = 'number';
    input.step = 'any';
    input.required = true;
    input.className = 'observation-value';
    form.appendChild(input);
    const submit = document.createElement('button');
    submit.type = 'submit';
    submit.textContent = 'Record observation';
    form.appendChild(submit);
    form.addEventListener('submit', (ev) => {
      ev.preventDefault();
      const y = Number(input.value);
      if (input.value.trim() === '' || !Number.isFinite(y)) {
        this.note('the observation must be a finite number');
        this.status.className = 'status status-error';
        return;
      }
      void this.mutate(() => this.api.observe(this.id, y));
    });
    this.body.appendChild(form);
  }

  private renderDone(view: SessionView): void {
    const panel = document.createElement('div');
    panel.className = 'done-panel';
    const h = document.createElement('h2');
    h.textContent = 'Session complete';
    panel.appendChild(h);
    const p = document.createElement('p');
    p.textContent =
      `${view.evaluations} evaluations, best observed ${fmtNum(view.best_observed)}`;
    panel.appendChild(p);
    const doc = document.createElement('a');
    doc.href = `/sessions/${view.id}/document`;
    doc.textContent = 'session document (JSON)';
    panel.appendChild(doc);
    panel.appendChild(document.createTextNode(' · '));
    const csv = document.createElement('a');
    csv.href = `/sessions/${view.id}/export.csv`;
    csv.textContent = 'export.csv';
    panel.appendChild(csv);
    this.body.appendChild(panel);
  }
}
