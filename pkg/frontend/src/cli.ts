#!/usr/bin/env node
/** Command line entry point: render one SVG per attack from a sweep index.
 *
 *   resam-plot --index results/sweep.json --metric grad_sq --out figs/
 *
 * Consumes only the simulator's documented outputs (sweep.json plus the
 * per-run CSV files it references). Rendering is deterministic: the same
 * inputs always produce byte-identical SVG files.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { parseArgs } from "node:util";
import { buildPanels, loadIndex, PlotInputError } from "./data.js";
import { renderPanel } from "./render.js";
import { KNOWN_METRICS } from "./types.js";

export interface CliResult {
  written: string[];
}

export function runCli(argv: string[]): CliResult {
  const { values } = parseArgs({
    args: argv,
    options: {
      index: { type: "string" },
      metric: { type: "string", default: "grad_sq" },
      out: { type: "string", default: "figs" },
      linear: { type: "boolean", default: false },
    },
  });
  if (!values.index) {
    throw new PlotInputError("--index is required (path to sweep.json)");
  }
  const metric = values.metric!;
  if (!(KNOWN_METRICS as readonly string[]).includes(metric)) {
    throw new PlotInputError(
      `unknown metric '${metric}' (choose from ${KNOWN_METRICS.join(", ")})`
    );
  }
  const index = loadIndex(values.index);
  const panels = buildPanels(index, metric, path.dirname(values.index));
  fs.mkdirSync(values.out!, { recursive: true });
  const written: string[] = [];
  for (const panel of panels) {
    const svg = renderPanel(panel, {
      metric,
      logY: values.linear ? false : undefined,
    });
    const file = path.join(values.out!, `${metric}_${panel.attack}.svg`);
    fs.writeFileSync(file, svg, "utf-8");
    written.push(file);
  }
  return { written };
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;

if (invokedDirectly) {
  try {
    const result = runCli(process.argv.slice(2));
    for (const file of result.written) console.log(file);
  } catch (err) {
    if (err instanceof PlotInputError) {
      console.error(`error: ${err.message}`);
      process.exit(2);
    }
    throw err;
  }
}
