import { fmtBand, fmtNum } from './format.js';
import { renderProfile } from './profile.js';
// One card per pending candidate. Displayed numbers are rounded through
// format.ts; the submitted index is the exact array position.
export function renderChoiceCards(container, candidates, domain, onChoose) {
    const grid = document.createElement('div');
    grid.className = 'cards';
    candidates.forEach((c, i) => {
        const card = document.createElement('article');
        card.className = 'card';
        const head = document.createElement('header');
        const title = document.createElement('h3');
        title.textContent = `Choice ${i + 1}`;
        head.appendChild(title);
        if (c.is_utility_optimum) {
            const badge = document.createElement('span');
            badge.className = 'badge-optimal';
            badge.textContent = 'optimal';
            head.appendChild(badge);
        }
        card.appendChild(head);
        const facts = document.createElement('dl');
        facts.className = 'card-facts';
        const fact = (name, value, cls) => {
            const dt = document.createElement('dt');
            dt.textContent = name;
            const dd = document.createElement('dd');
            dd.className = cls;
            dd.textContent = value;
            facts.appendChild(dt);
            facts.appendChild(dd);
        };
        fact('utility', fmtNum(c.utility), 'card-utility');
        fact('predicted', fmtBand(c.predicted_mean, c.predicted_sd), 'card-predicted');
        card.appendChild(facts);
        card.appendChild(renderProfile(c.point, domain));
        const button = document.createElement('button');
        button.className = 'choose';
        button.textContent = 'Evaluate this one';
        button.addEventListener('click', () => onChoose(i));
        card.appendChild(button);
        grid.appendChild(card);
    });
    container.appendChild(grid);
}
