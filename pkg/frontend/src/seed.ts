import { ApiClient, ApiError, SessionConfigBody } from './api.js';

// Session creation form: box domain + loop settings + up to t expert seed
// points. Bounds problems are caught client-side (mirroring the server's
// 422s) before any request goes out; m = 0 is fine and yields a pure
// space-filling design.

function labeled(text: string, input: HTMLElement): HTMLLabelElement {
  const label = document.createElement('label');
  label.className = 'field';
  const span = document.createElement('span');
  span.textContent = text;
  label.appendChild(span);
  label.appendChild(input);
  return label;
}

function numberInput(value: string, cls: string): HTMLInputElement {
  const input = document.createElement('input');
  input.type = 'number';
  input.step = 'any';
  input.value = value;
  input.className = cls;
  return input;
}

function parseList(text: string, dim: number, what: string): number[] {
  const parts = text.split(',').map((s) => s.trim()).filter((s) => s !== '');
  const values = parts.map(Number);
  if (values.some((v) => !Number.isFinite(v))) {
    throw new Error(`${what} must be numbers`);
  }
  if (values.length === 1) return new Array(dim).fill(values[0]);
  if (values.length !== dim) {
    throw new Error(`${what} needs ${dim} comma-separated values (or one for all)`);
  }
  return values;
}

export class SeedScreen {
  private error: HTMLElement;
  private pointsBox: HTMLElement;
  private addButton: HTMLButtonElement;
  private dimInput: HTMLInputElement;
  private lowerInput: HTMLInputElement;
  private upperInput: HTMLInputElement;
  private pInput: HTMLInputElement;
  private tInput: HTMLInputElement;
  private iterInput: HTMLInputElement;
  private seedInput: HTMLInputElement;
  private noiseInput: HTMLInputElement;
  private kindSelect: HTMLSelectElement;
  private rows: HTMLInputElement[][] = [];

  constructor(
    root: HTMLElement,
    private api: ApiClient,
    private onCreated: (id: string) => void,
  ) {
    const title = document.createElement('h1');
    title.textContent = 'New optimization session';
    root.appendChild(title);

    this.error = document.createElement('div');
    this.error.className = 'status';
    root.appendChild(this.error);

    const form = document.createElement('form');
    form.className = 'seed-form';

    this.dimInput = numberInput('2', 'cfg-dim');
    this.lowerInput = document.createElement('input');
    this.lowerInput.value = '0';
    this.lowerInput.className = 'cfg-lower';
    this.upperInput = document.createElement('input');
    this.upperInput.value = '1';
    this.upperInput.className = 'cfg-upper';
    this.pInput = numberInput('4', 'cfg-p');
    this.tInput = numberInput('8', 'cfg-t');
    this.iterInput = numberInput('16', 'cfg-iterations');
    this.seedInput = numberInput('0', 'cfg-seed');
    this.noiseInput = document.createElement('input');
    this.noiseInput.value = 'learned';
    this.noiseInput.className = 'cfg-noise';
    this.kindSelect = document.createElement('select');
    this.kindSelect.className = 'cfg-kind';
    for (const kind of ['EI', 'UCB', 'NoisyEI']) {
      const opt = document.createElement('option');
      opt.value = kind;
      opt.textContent = kind;
      this.kindSelect.appendChild(opt);
    }

    form.appendChild(labeled('dimensions', this.dimInput));
    form.appendChild(labeled('lower bounds (comma separated)', this.lowerInput));
    form.appendChild(labeled('upper bounds (comma separated)', this.upperInput));
    form.appendChild(labeled('alternatives per iteration (p)', this.pInput));
    form.appendChild(labeled('initial design size (t)', this.tInput));
    form.appendChild(labeled('iterations', this.iterInput));
    form.appendChild(labeled('seed', this.seedInput));
    form.appendChild(labeled("noise ('learned' or a variance)", this.noiseInput));
    form.appendChild(labeled('acquisition', this.kindSelect));

    const seeds = document.createElement('fieldset');
    seeds.className = 'expert-seeds';
    const legend = document.createElement('legend');
    legend.textContent = 'Expert seed points (optional, at most t)';
    seeds.appendChild(legend);
    this.pointsBox = document.createElement('div');
    this.pointsBox.className = 'expert-points';
    seeds.appendChild(this.pointsBox);
    this.addButton = document.createElement('button');
    this.addButton.type = 'button';
    this.addButton.className = 'add-point';
    this.addButton.textContent = 'Add point';
    this.addButton.addEventListener('click', () => this.addRow());
    seeds.appendChild(this.addButton);
    form.appendChild(seeds);

    const submit = document.createElement('button');
    submit.type = 'submit';
    submit.className = 'create-session';
    submit.textContent = 'Create session';
    form.appendChild(submit);

    this.dimInput.addEventListener('change', () => this.resetRows());
    this.tInput.addEventListener('change', () => this.syncAddButton());
    form.addEventListener('submit', (ev) => {
      ev.preventDefault();
      void this.submit();
    });
    root.appendChild(form);
  }

  get m(): number {
    return this.rows.length;
  }

  private dim(): number {
    return Math.max(1, Math.floor(Number(this.dimInput.value) || 1));
  }

  private t(): number {
    return Math.max(1, Math.floor(Number(this.tInput.value) || 1));
  }

  addRow(): void {
    if (this.rows.length >= this.t()) return;
    const d = this.dim();
    const row = document.createElement('div');
    row.className = 'expert-point';
    const inputs: HTMLInputElement[] = [];
    for (let j = 0; j < d; j++) {
      const input = numberInput('', 'seed-coord');
      input.placeholder = `x${j + 1}`;
      inputs.push(input);
      row.appendChild(input);
    }
    const remove = document.createElement('button');
    remove.type = 'button';
    remove.textContent = 'remove';
    remove.addEventListener('click', () => {
      this.rows = this.rows.filter((r) => r !== inputs);
      row.remove();
      this.syncAddButton();
    });
    row.appendChild(remove);
    this.rows.push(inputs);
    this.pointsBox.appendChild(row);
    this.syncAddButton();
  }

  private resetRows(): void {
    this.rows = [];
    this.pointsBox.innerHTML = '';
    this.syncAddButton();
  }

  private syncAddButton(): void {
    this.addButton.disabled = this.rows.length >= this.t();
  }

  private fail(message: string): void {
    this.error.textContent = message;
    this.error.className = 'status status-error';
  }

  async submit(): Promise<void> {
    this.error.textContent = '';
    this.error.className = 'status';
    const d = this.dim();
    let lower: number[];
    let upper: number[];
    try {
      lower = parseList(this.lowerInput.value, d, 'lower bounds');
      upper = parseList(this.upperInput.value, d, 'upper bounds');
    } catch (err) {
      this.fail((err as Error).message);
      return;
    }
    for (let j = 0; j < d; j++) {
      if (!(lower[j] < upper[j])) {
        this.fail(`dimension ${j + 1}: lower bound must be below the upper bound`);
        return;
      }
    }
    const points: number[][] = [];
    for (let k = 0; k < this.rows.length; k++) {
      const coords: number[] = [];
      for (let j = 0; j < this.rows[k].length; j++) {
        const raw = this.rows[k][j].value.trim();
        const v = Number(raw);
        if (raw === '' || !Number.isFinite(v)) {
          this.fail(`point ${k + 1}: x${j + 1} must be a number`);
          return;
        }
        if (v < lower[j] || v > upper[j]) {
          this.fail(
            `point ${k + 1}: x${j + 1} = ${raw} is outside [${lower[j]}, ${upper[j]}]`,
          );
          return;
        }
        coords.push(v);
      }
      points.push(coords);
    }
    const noiseRaw = this.noiseInput.value.trim();
    const noise: string | number = noiseRaw === 'learned' ? 'learned' : Number(noiseRaw);
    if (typeof noise === 'number' && (!Number.isFinite(noise) || noise < 0)) {
      this.fail("noise must be 'learned' or a nonnegative variance");
      return;
    }
    const config: SessionConfigBody = {
      domain: { lower, upper },
      acquisition: { kind: this.kindSelect.value },
      p: Math.floor(Number(this.pInput.value)),
      init_design_size: this.t(),
      noise,
      max_iterations: Math.floor(Number(this.iterInput.value)),
      seed: Math.floor(Number(this.seedInput.value)),
    };
    try {
      const created = await this.api.createSession(config, points.length ? points : null);
      this.onCreated(created.id);
    } catch (err) {
      if (err instanceof ApiError) {
        this.fail(`${err.code}: ${err.message}`);
      } else {
        this.fail(`request failed: ${String(err)}`);
      }
    }
  }
}
