export { parseArtifact, requireColumns, requireRows, SchemaError } from "./csv.js";
export type { Artifact } from "./csv.js";
export { makeSpec, parseStyleFile, resolveStyles } from "./spec.js";
export type { CaseStyle, FigureSpec, Marker } from "./spec.js";
export { plotReceivedSignal } from "./received.js";
export type { NamedArtifact } from "./received.js";
export { plotBer } from "./ber.js";
export { run } from "./cli.js";
