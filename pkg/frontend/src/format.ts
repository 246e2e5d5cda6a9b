// Every number the console renders goes through fmtNum, so tests can compare
// displayed text against API payloads at the same precision.

export function fmtNum(v: number | null | undefined): string {
  if (v === null || v === undefined || Number.isNaN(v)) return '–';
  if (v === 0) return '0';
  return String(Number(v.toPrecision(4)));
}

export function fmtPoint(point: number[]): string {
  return `(${point.map(fmtNum).join(', ')})`;
}

export function fmtBand(mean: number, sd: number): string {
  return `${fmtNum(mean)} ± ${fmtNum(sd)}`;
}
