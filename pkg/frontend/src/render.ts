import { fmt, linearScale, logScale, Scale } from "./scale.js";
import { LOG_SCALE_METRICS, Panel, Series } from "./types.js";

const WIDTH = 720;
const HEIGHT = 440;
const MARGIN = { top: 36, right: 190, bottom: 44, left: 64 };

/** Fixed palette, assigned to series in sorted order. */
const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
  "#bcbd22",
  "#17becf",
  "#393b79",
  "#ad494a",
  "#637939",
  "#7b4173",
  "#3182bd",
  "#e6550d",
];

export interface RenderOptions {
  metric: string;
  /** Override the default (log for wide-range metrics, linear otherwise). */
  logY?: boolean;
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

function useLog(panel: Panel, opts: RenderOptions): boolean {
  const wanted = opts.logY ?? LOG_SCALE_METRICS.has(opts.metric);
  if (!wanted) return false;
  // Log needs at least one positive value to anchor the domain.
  return panel.series.some((s) => s.high.some((v) => v > 0));
}

function yDomain(panel: Panel, log: boolean): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  let minPos = Infinity;
  for (const s of panel.series) {
    for (let t = 0; t < s.steps.length; t++) {
      const a = s.low[t]!;
      const b = s.high[t]!;
      if (a < lo) lo = a;
      if (b > hi) hi = b;
      if (a > 0 && a < minPos) minPos = a;
      if (b > 0 && b < minPos) minPos = b;
    }
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return [0, 1];
  if (log) {
    // Clamp non-positive values to the smallest observed positive one.
    lo = minPos;
    if (hi <= lo) hi = lo * 10;
    return [lo, hi];
  }
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

function clampForLog(value: number, domain: [number, number]): number {
  return value < domain[0] ? domain[0] : value;
}

function pathFrom(points: Array<[number, number]>): string {
  return points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x)},${fmt(y)}`)
    .join("");
}

function seriesLabel(s: Series): string {
  return `${s.rule} β=${fmt(s.beta)}`;
}

/** Render one attack panel to a standalone SVG document. */
export function renderPanel(panel: Panel, opts: RenderOptions): string {
  const log = useLog(panel, opts);
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;

  let stepMax = 1;
  for (const s of panel.series) {
    const last = s.steps[s.steps.length - 1];
    if (last !== undefined && last > stepMax) stepMax = last;
  }
  const x = linearScale([0, stepMax], [x0, x1]);
  const dom = yDomain(panel, log);
  const y: Scale = log ? logScale(dom, [y0, y1]) : linearScale(dom, [y0, y1]);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
      `font-family="Helvetica, Arial, sans-serif">`
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${x0}" y="22" font-size="15" fill="#111111">` +
      `${esc(opts.metric)} — attack: ${esc(panel.attack)}</text>`
  );

  // Axes and gridlines.
  for (const tick of x.ticks()) {
    const px = x.map(tick);
    parts.push(
      `<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y1}" ` +
        `stroke="#e5e5e5" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${fmt(px)}" y="${y0 + 18}" font-size="11" fill="#444444" ` +
        `text-anchor="middle">${fmt(tick)}</text>`
    );
  }
  for (const tick of y.ticks()) {
    const py = y.map(tick);
    parts.push(
      `<line x1="${x0}" y1="${fmt(py)}" x2="${x1}" y2="${fmt(py)}" ` +
        `stroke="#e5e5e5" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${x0 - 6}" y="${fmt(py + 4)}" font-size="11" fill="#444444" ` +
        `text-anchor="end">${fmt(tick)}</text>`
    );
  }
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#111111"/>`
  );
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#111111"/>`
  );
  parts.push(
    `<text x="${fmt((x0 + x1) / 2)}" y="${HEIGHT - 8}" font-size="12" ` +
      `fill="#111111" text-anchor="middle">step</text>`
  );

  // Replica bands first, then curves, then the legend.
  panel.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    if (s.replicaIds.length > 1) {
      const upper: Array<[number, number]> = s.steps.map((st, t) => [
        x.map(st),
        y.map(log ? clampForLog(s.high[t]!, dom) : s.high[t]!),
      ]);
      const lower: Array<[number, number]> = s.steps
        .map((st, t): [number, number] => [
          x.map(st),
          y.map(log ? clampForLog(s.low[t]!, dom) : s.low[t]!),
        ])
        .reverse();
      parts.push(
        `<path d="${pathFrom(upper.concat(lower))}Z" fill="${color}" ` +
          `fill-opacity="0.15" stroke="none"/>`
      );
    }
    const line: Array<[number, number]> = s.steps.map((st, t) => [
      x.map(st),
      y.map(log ? clampForLog(s.mean[t]!, dom) : s.mean[t]!),
    ]);
    parts.push(
      `<path d="${pathFrom(line)}" fill="none" stroke="${color}" ` +
        `stroke-width="1.6"/>`
    );
  });

  panel.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const ly = y1 + 14 + i * 16;
    parts.push(
      `<line x1="${x1 + 10}" y1="${ly - 4}" x2="${x1 + 28}" y2="${ly - 4}" ` +
        `stroke="${color}" stroke-width="2"/>`
    );
    parts.push(
      `<text x="${x1 + 33}" y="${ly}" font-size="11" fill="#111111">` +
        `${esc(seriesLabel(s))}</text>`
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
