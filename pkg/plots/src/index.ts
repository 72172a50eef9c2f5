export { parseCsv, columnIndex, numericColumn, stringColumn, SchemaError } from "./csv.js";
export { RunDir } from "./rundir.js";
export { buildFigure, FIGURE_KINDS, rampColor } from "./figures.js";
export type { FigureKind, FigureOptions } from "./figures.js";
export { sceneToSvg } from "./svg.js";
export { sceneToPng, Canvas, parseColor } from "./raster.js";
export { encodePng, crc32 } from "./png.js";
export { linearScale, logScale, linearTicks, decadeTicks, formatTick } from "./scale.js";
export { makeScene, drawAxes, clippedPolyline } from "./scene.js";
export { parseArgs, renderJob, main } from "./cli.js";
