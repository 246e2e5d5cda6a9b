import { fmtNum } from './format.js';
// Per-dimension bar rendering of a candidate point: each coordinate drawn as
// a horizontal bar filling [lower_i, upper_i]. Generic stand-in for
// problem-specific control-profile plots.
const SVG_NS = 'http://www.w3.org/2000/svg';
const BAR_W = 150;
const ROW_H = 18;
const LABEL_W = 30;
const VALUE_W = 68;
function svgEl(tag, attrs) {
    const el = document.createElementNS(SVG_NS, tag);
    for (const [k, v] of Object.entries(attrs))
        el.setAttribute(k, v);
    return el;
}
export function renderProfile(point, domain) {
    const d = point.length;
    const svg = svgEl('svg', {
        class: 'profile',
        width: String(LABEL_W + BAR_W + VALUE_W),
        height: String(d * ROW_H + 4),
        role: 'img',
    });
    for (let i = 0; i < d; i++) {
        const lo = domain.lower[i];
        const hi = domain.upper[i];
        const span = hi - lo;
        const frac = span > 0 ? Math.min(1, Math.max(0, (point[i] - lo) / span)) : 0;
        const y = i * ROW_H + 2;
        const label = svgEl('text', { x: '0', y: String(y + 12), class: 'profile-label' });
        label.textContent = `x${i + 1}`;
        svg.appendChild(label);
        svg.appendChild(svgEl('rect', {
            x: String(LABEL_W),
            y: String(y),
            width: String(BAR_W),
            height: '14',
            class: 'profile-track',
        }));
        svg.appendChild(svgEl('rect', {
            x: String(LABEL_W),
            y: String(y),
            width: String(Math.max(1, Math.round(frac * BAR_W))),
            height: '14',
            class: 'profile-bar',
        }));
        const value = svgEl('text', {
            x: String(LABEL_W + BAR_W + 6),
            y: String(y + 12),
            class: 'profile-value',
        });
        value.textContent = fmtNum(point[i]);
        svg.appendChild(value);
    }
    return svg;
}
