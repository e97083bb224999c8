export { buildPanels, loadIndex, loadTrace, PlotInputError } from "./data.js";
export { renderPanel } from "./render.js";
export { runCli } from "./cli.js";
export { fmt, linearScale, linearTicks, logScale, logTicks } from "./scale.js";
export * from "./types.js";
