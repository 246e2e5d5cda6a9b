import { fmtNum, fmtPoint } from './format.js';
import { renderSparkline } from './sparkline.js';
function cell(row, text, cls) {
    const td = document.createElement('td');
    td.textContent = text;
    if (cls)
        td.className = cls;
    row.appendChild(td);
}
// Initial design block plus one table row per loop iteration; the header
// carries a best-so-far sparkline over everything observed so far.
export function renderHistory(container, view) {
    const section = document.createElement('section');
    section.className = 'history';
    const head = document.createElement('header');
    const h = document.createElement('h2');
    h.textContent = `History (${view.evaluations} evaluations)`;
    head.appendChild(h);
    const best = [];
    const observedInit = view.initial_design.observed ?? [];
    for (const y of observedInit) {
        best.push(best.length ? Math.max(best[best.length - 1], y) : y);
    }
    for (const row of view.history) {
        if (row.observed !== null) {
            best.push(best.length ? Math.max(best[best.length - 1], row.observed) : row.observed);
        }
    }
    if (best.length > 1)
        head.appendChild(renderSparkline(best));
    if (view.best_observed !== null) {
        const span = document.createElement('span');
        span.className = 'best-observed';
        span.textContent = `best so far ${fmtNum(view.best_observed)}`;
        head.appendChild(span);
    }
    section.appendChild(head);
    const init = document.createElement('div');
    init.className = 'initial-design';
    const ih = document.createElement('h3');
    ih.textContent = 'Initial design';
    init.appendChild(ih);
    const ul = document.createElement('ul');
    view.initial_design.points.forEach((pt, i) => {
        const li = document.createElement('li');
        const y = observedInit[i];
        const tag = view.initial_design.expert_mask[i] ? ' [expert seed]' : '';
        li.textContent = `${fmtPoint(pt)}${tag}${y !== undefined ? ` → ${fmtNum(y)}` : ''}`;
        ul.appendChild(li);
    });
    init.appendChild(ul);
    section.appendChild(init);
    if (view.history.length > 0) {
        const table = document.createElement('table');
        table.className = 'history-table';
        const thead = document.createElement('thead');
        const hr = document.createElement('tr');
        for (const name of ['#', 'chooser', 'choice', 'point', 'observed', 'best so far']) {
            const th = document.createElement('th');
            th.textContent = name;
            hr.appendChild(th);
        }
        thead.appendChild(hr);
        table.appendChild(thead);
        const tbody = document.createElement('tbody');
        for (const row of view.history) {
            const tr = document.createElement('tr');
            cell(tr, String(row.iteration + 1));
            cell(tr, row.chooser);
            cell(tr, `Choice ${row.chosen_index + 1}`);
            cell(tr, fmtPoint(row.point));
            cell(tr, row.observed === null ? 'pending' : fmtNum(row.observed), 'history-observed');
            cell(tr, row.best_so_far === null ? '–' : fmtNum(row.best_so_far));
            tbody.appendChild(tr);
        }
        table.appendChild(tbody);
        section.appendChild(table);
    }
    container.appendChild(section);
}
