import { ApiError } from './api.js';
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
    constructor(root, api, id, pollMs = 2000) {
        this.root = root;
        this.api = api;
        this.id = id;
        this.pollMs = pollMs;
        this.lastJson = '';
        this.timer = null;
        this.stopped = false;
        this.failures = 0;
        this.proposeInFlight = false;
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
    start() {
        void this.tick();
    }
    stop() {
        this.stopped = true;
        if (this.timer !== null)
            clearTimeout(this.timer);
    }
    async tick() {
        if (this.stopped)
            return;
        let view;
        try {
            view = await this.api.getSession(this.id, 0);
        }
        catch (err) {
            this.failures += 1;
            if (err instanceof ApiError) {
                this.showError(err);
            }
            else {
                this.note(`connection lost, retry ${this.failures} shortly`);
            }
            this.schedule();
            return;
        }
        this.failures = 0;
        this.apply(view);
        this.schedule();
    }
    schedule() {
        if (this.stopped)
            return;
        // network faults back the poll off exponentially, capped at 16x
        const delay = this.pollMs * 2 ** Math.min(this.failures, 4);
        this.timer = setTimeout(() => void this.tick(), delay);
    }
    apply(view) {
        if (view.phase === 'proposing')
            void this.autoPropose();
        const json = JSON.stringify(view);
        if (json === this.lastJson)
            return;
        this.lastJson = json;
        this.render(view);
    }
    async autoPropose() {
        if (this.proposeInFlight || this.stopped)
            return;
        this.proposeInFlight = true;
        try {
            const view = await this.api.propose(this.id);
            this.apply(view);
        }
        catch (err) {
            // 409 = somebody else already advanced the session; the next poll
            // will pick the fresh phase up
            if (!(err instanceof ApiError && err.status === 409))
                this.showError(err);
        }
        finally {
            this.proposeInFlight = false;
        }
    }
    note(text) {
        this.status.textContent = text;
        this.status.className = 'status status-note';
    }
    showError(err) {
        if (err instanceof ApiError) {
            this.note(`${err.code}: ${err.message}`);
            this.status.className = 'status status-error';
            if (err.status === 409)
                void this.refreshNow();
        }
        else {
            this.note(String(err));
            this.status.className = 'status status-error';
        }
    }
    clearStatus() {
        this.status.textContent = '';
        this.status.className = 'status';
    }
    async refreshNow() {
        try {
            this.apply(await this.api.getSession(this.id, 0));
        }
        catch {
            // the regular poll keeps trying
        }
    }
    async mutate(call) {
        try {
            const view = await call();
            this.clearStatus();
            this.apply(view);
        }
        catch (err) {
            this.showError(err);
        }
    }
    render(view) {
        this.body.innerHTML = '';
        const meta = document.createElement('p');
        meta.className = 'session-meta';
        meta.textContent =
            `phase ${view.phase} · iteration ${view.iteration}/${view.max_iterations} · ` +
                `p=${view.p} · ${view.acquisition.kind}`;
        this.body.appendChild(meta);
        if (view.phase === 'awaiting_init')
            this.renderInitForm(view);
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
        if (view.phase === 'done')
            this.renderDone(view);
        renderHistory(this.body, view);
    }
    renderInitForm(view) {
        const form = document.createElement('form');
        form.className = 'init-form';
        const h = document.createElement('h2');
        h.textContent = 'Record initial observations';
        form.appendChild(h);
        const inputs = [];
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
    renderObservationForm(point) {
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
    renderDone(view) {
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
