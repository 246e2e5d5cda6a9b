const SVG_NS = 'http://www.w3.org/2000/svg';
// Tiny best-so-far polyline for the history header.
export function renderSparkline(values, width = 160, height = 36) {
    const svg = document.createElementNS(SVG_NS, 'svg');
    svg.setAttribute('class', 'sparkline');
    svg.setAttribute('width', String(width));
    svg.setAttribute('height', String(height));
    if (values.length > 0) {
        const lo = Math.min(...values);
        const hi = Math.max(...values);
        const span = hi - lo || 1;
        const step = values.length > 1 ? (width - 4) / (values.length - 1) : 0;
        const pts = values
            .map((v, i) => {
            const x = 2 + i * step;
            const y = height - 3 - ((v - lo) / span) * (height - 6);
            return `${x.toFixed(1)},${y.toFixed(1)}`;
        })
            .join(' ');
        const line = document.createElementNS(SVG_NS, 'polyline');
        line.setAttribute('points', pts);
        line.setAttribute('fill', 'none');
        line.setAttribute('class', 'sparkline-path');
        svg.appendChild(line);
    }
    return svg;
}
