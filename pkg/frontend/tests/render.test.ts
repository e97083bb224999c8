import * as path from "node:path";
import { describe, expect, it } from "vitest";
import { buildPanels, loadIndex } from "../src/data.js";
import { renderPanel } from "../src/render.js";
import { Panel } from "../src/types.js";

const FIXTURE = path.join(__dirname, "fixtures", "small_sweep");
const INDEX = path.join(FIXTURE, "sweep.json");

function fixturePanels(metric: string): Panel[] {
  return buildPanels(loadIndex(INDEX), metric, FIXTURE);
}

describe("renderPanel", () => {
  it("produces a standalone SVG document", () => {
    const [panel] = fixturePanels("grad_sq");
    const svg = renderPanel(panel!, { metric: "grad_sq" });
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
    expect(svg).toContain("attack: empire");
    expect(svg).not.toContain("NaN");
  });

  it("re-rendering is byte-identical", () => {
    for (const metric of ["grad_sq", "accuracy", "loss"]) {
      const a = fixturePanels(metric).map((p) => renderPanel(p, { metric }));
      const b = fixturePanels(metric).map((p) => renderPanel(p, { metric }));
      expect(a).toEqual(b);
    }
  });

  it("draws one legend entry and one curve per series", () => {
    const [panel] = fixturePanels("accuracy");
    const svg = renderPanel(panel!, { metric: "accuracy" });
    for (const label of [
      "cwtm β=0<",
      "cwtm β=0.99",
      "krum_star β=0<",
      "krum_star β=0.99",
    ]) {
      expect(svg).toContain(label);
    }
    const curves = svg.match(/fill="none" stroke="#/g) ?? [];
    expect(curves.length).toBe(panel!.series.length);
  });

  it("draws a translucent band for multi-replica series only", () => {
    const [panel] = fixturePanels("loss");
    const withBands = renderPanel(panel!, { metric: "loss" });
    expect(withBands.match(/fill-opacity="0.15"/g)).toHaveLength(
      panel!.series.length
    );
    const single: Panel = {
      attack: panel!.attack,
      series: panel!.series.map((s) => ({ ...s, replicaIds: [s.replicaIds[0]!] })),
    };
    expect(renderPanel(single, { metric: "loss" })).not.toContain(
      'fill-opacity="0.15"'
    );
  });

  it("uses a log axis for wide-range metrics and linear for accuracy", () => {
    const [panel] = fixturePanels("grad_sq");
    const logSvg = renderPanel(panel!, { metric: "grad_sq" });
    // Power-of-ten gridline labels are the log axis fingerprint.
    expect(logSvg).toMatch(/>0\.001</);
    const [accPanel] = fixturePanels("accuracy");
    const linSvg = renderPanel(accPanel!, { metric: "accuracy" });
    expect(linSvg).toMatch(/>0\.6</);
    const forcedLinear = renderPanel(panel!, { metric: "grad_sq", logY: false });
    expect(forcedLinear).not.toMatch(/>1e-\d+</);
  });

  it("handles constant series without degenerate domains", () => {
    const flat: Panel = {
      attack: "none",
      series: [
        {
          rule: "mean",
          beta: 0,
          steps: [1, 2, 3],
          mean: [1, 1, 1],
          low: [1, 1, 1],
          high: [1, 1, 1],
          replicaIds: ["only"],
        },
      ],
    };
    const svg = renderPanel(flat, { metric: "accuracy" });
    expect(svg).toContain("<svg ");
    expect(svg).not.toContain("NaN");
  });
});
