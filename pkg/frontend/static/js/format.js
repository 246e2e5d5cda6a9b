// Every number the console renders goes through fmtNum, so tests can compare
// displayed text against API payloads at the same precision.
export function fmtNum(v) {
    if (v === null || v === undefined || Number.isNaN(v))
        return '–';
    if (v === 0)
        return '0';
    return String(Number(v.toPrecision(4)));
}
export function fmtPoint(point) {
    return `(${point.map(fmtNum).join(', ')})`;
}
export function fmtBand(mean, sd) {
    return `${fmtNum(mean)} ± ${fmtNum(sd)}`;
}
