/**
 * Figure description: which artifacts to read, how each mobility case
 * is styled, which axis scales apply, and where the image goes.
 */

import { SchemaError } from "./csv.js";

export type Marker = "circle" | "square" | "triangle" | "diamond";

export interface CaseStyle {
  color?: string;
  dash?: string; // SVG stroke-dasharray, e.g. "6 3"
  marker?: Marker;
}

export interface FigureSpec {
  inputs: string[];
  output: string;
  styles: Record<string, CaseStyle>;
  xScale: "linear";
  yScale: "linear" | "log";
  width: number;
  height: number;
  title?: string;
}

const PALETTE = ["#1f6fb2", "#c5481c", "#348a3f", "#7b4fa6", "#8a7014", "#c23c7e"];
const MARKERS: Marker[] = ["circle", "square", "triangle", "diamond"];

export function makeSpec(
  inputs: string[],
  output: string,
  yScale: "linear" | "log",
  styles?: Record<string, CaseStyle>,
  title?: string,
): FigureSpec {
  return {
    inputs,
    output,
    styles: styles ?? {},
    xScale: "linear",
    yScale,
    width: 720,
    height: 480,
    title,
  };
}

/**
 * Resolve a deterministic style for every case label present in the
 * data, and reject style entries that reference labels the data does
 * not contain.
 */
export function resolveStyles(
  spec: FigureSpec,
  labels: string[],
): Map<string, Required<CaseStyle>> {
  const unknown = Object.keys(spec.styles).filter((l) => !labels.includes(l));
  if (unknown.length > 0) {
    throw new SchemaError(
      `style entries reference unknown case labels [${unknown.join(", ")}], ` +
        `data contains [${labels.join(", ")}]`,
    );
  }
  const resolved = new Map<string, Required<CaseStyle>>();
  labels.forEach((label, i) => {
    const given = spec.styles[label] ?? {};
    resolved.set(label, {
      color: given.color ?? PALETTE[i % PALETTE.length]!,
      dash: given.dash ?? "",
      marker: given.marker ?? MARKERS[i % MARKERS.length]!,
    });
  });
  return resolved;
}

/** Parse the optional style file (JSON: {label: {color, dash, marker}}). */
export function parseStyleFile(text: string, name: string): Record<string, CaseStyle> {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (exc) {
    throw new SchemaError(`${name}: not valid JSON (${(exc as Error).message})`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new SchemaError(`${name}: style file must be a JSON object keyed by case label`);
  }
  const styles: Record<string, CaseStyle> = {};
  for (const [label, value] of Object.entries(raw)) {
    if (typeof value !== "object" || value === null || Array.isArray(value)) {
      throw new SchemaError(`${name}: style for ${JSON.stringify(label)} must be an object`);
    }
    const entry = value as Record<string, unknown>;
    const style: CaseStyle = {};
    for (const key of Object.keys(entry)) {
      if (key === "color" || key === "dash") {
        if (typeof entry[key] !== "string") {
          throw new SchemaError(`${name}: ${label}.${key} must be a string`);
        }
        style[key] = entry[key] as string;
      } else if (key === "marker") {
        const m = entry[key];
        if (m !== "circle" && m !== "square" && m !== "triangle" && m !== "diamond") {
          throw new SchemaError(
            `${name}: ${label}.marker must be one of circle, square, triangle, diamond`,
          );
        }
        style.marker = m;
      } else {
        throw new SchemaError(`${name}: unknown style key ${label}.${key}`);
      }
    }
    styles[label] = style;
  }
  return styles;
}
