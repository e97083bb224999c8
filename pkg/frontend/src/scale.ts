/** Axis scales and tick placement, written for reproducible output:
 * all arithmetic is plain IEEE doubles and every derived value is
 * formatted through one shared routine. */

export interface Scale {
  kind: "linear" | "log";
  domain: [number, number];
  range: [number, number];
  map(value: number): number;
  ticks(): number[];
}

/** Shared fixed-precision number formatting so re-renders are byte-stable. */
export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  if (Number.isInteger(x) && Math.abs(x) < 1e15) return String(x);
  const s = x.toPrecision(8);
  // Trim trailing zeros (and a bare trailing dot) of the mantissa.
  return s
    .replace(/(\.\d*?)0+(e[+-]?\d+)?$/, "$1$2")
    .replace(/\.(e[+-]?\d+)?$/, "$1")
    .replace(/\.$/, "");
}

export function linearScale(
  domain: [number, number],
  range: [number, number]
): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  return {
    kind: "linear",
    domain,
    range,
    map: (v) => r0 + ((v - d0) / span) * (r1 - r0),
    ticks: () => linearTicks(d0, d1),
  };
}

export function logScale(
  domain: [number, number],
  range: [number, number]
): Scale {
  const [d0, d1] = domain;
  if (d0 <= 0 || d1 <= 0) {
    throw new Error(`log scale needs a positive domain, got [${d0}, ${d1}]`);
  }
  const [r0, r1] = range;
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const span = l1 - l0 || 1;
  return {
    kind: "log",
    domain,
    range,
    map: (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0),
    ticks: () => logTicks(d0, d1),
  };
}

/** Round-valued ticks covering [lo, hi], roughly `count` of them. */
export function linearTicks(lo: number, hi: number, count = 5): number[] {
  if (lo === hi) return [lo];
  const rawStep = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const residual = rawStep / mag;
  const step = (residual >= 5 ? 5 : residual >= 2 ? 2 : 1) * mag;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  // Snap each tick to the grid to avoid accumulating float error.
  for (let i = 0; first + i * step <= hi + step * 1e-9; i++) {
    ticks.push(Number((first + i * step).toPrecision(12)));
  }
  return ticks;
}

/** Powers of ten inside [lo, hi]; falls back to endpoints for narrow spans. */
export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  const e0 = Math.ceil(Math.log10(lo) - 1e-9);
  const e1 = Math.floor(Math.log10(hi) + 1e-9);
  for (let e = e0; e <= e1; e++) ticks.push(Math.pow(10, e));
  if (ticks.length === 0) return [lo, hi];
  return ticks;
}
