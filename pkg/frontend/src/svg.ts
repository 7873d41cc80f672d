/**
 * Minimal deterministic SVG chart primitives.
 *
 * Everything here is a pure function of its numeric inputs: fixed
 * fonts, fixed margins, coordinates rounded to fixed precision. Same
 * data in, byte-identical image out.
 */

export interface Viewport {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

export function viewport(width: number, height: number): Viewport {
  return { width, height, left: 72, right: 18, top: 26, bottom: 52 };
}

export interface Scale {
  (value: number): number;
  ticks(): number[];
}

function px(v: number): string {
  // fixed-precision coordinates keep the output stable across platforms
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

/** Nice step for a linear axis: 1, 2, or 5 times a power of ten. */
function niceStep(span: number, target: number): number {
  const rough = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  for (const m of [1, 2, 5, 10]) {
    if (m * mag >= rough) {
      return m * mag;
    }
  }
  return 10 * mag;
}

export function linearScale(
  lo: number,
  hi: number,
  outLo: number,
  outHi: number,
): Scale {
  const span = hi - lo;
  const scale = ((value: number) =>
    outLo + ((value - lo) / span) * (outHi - outLo)) as Scale;
  scale.ticks = () => {
    const step = niceStep(span, 6);
    const first = Math.ceil(lo / step - 1e-9) * step;
    const ticks: number[] = [];
    for (let v = first; v <= hi + 1e-9 * span; v += step) {
      ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
    }
    return ticks;
  };
  return scale;
}

export function logScale(
  lo: number,
  hi: number,
  outLo: number,
  outHi: number,
): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const scale = ((value: number) =>
    outLo + ((Math.log10(value) - llo) / (lhi - llo)) * (outHi - outLo)) as Scale;
  scale.ticks = () => {
    const decades: number[] = [];
    for (let e = Math.ceil(llo - 1e-9); e <= Math.floor(lhi + 1e-9); e++) {
      decades.push(Math.pow(10, e));
    }
    if (decades.length >= 2) {
      return decades;
    }
    // under two decades: fall back to mantissa ticks so a narrow axis
    // still gets readable round numbers
    const mantissaTicks = (subs: number[]) => {
      const ticks: number[] = [];
      for (let e = Math.floor(llo) - 1; e <= Math.ceil(lhi); e++) {
        for (const m of subs) {
          const v = m * Math.pow(10, e);
          if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) {
            ticks.push(v);
          }
        }
      }
      return ticks;
    };
    const fine = mantissaTicks([1, 2, 3, 4, 5, 6, 7, 8, 9]);
    if (fine.length >= 2 && fine.length <= 8) {
      return fine;
    }
    const coarse = mantissaTicks([1, 2, 5]);
    if (coarse.length >= 2) {
      return coarse;
    }
    // degenerate span with no round numbers inside at all
    return [lo, hi];
  };
  return scale;
}

/** Compact deterministic tick label: plain below 1e4, exponent form beyond. */
export function tickLabel(value: number): string {
  if (value === 0) {
    return "0";
  }
  const exp = Math.floor(Math.log10(Math.abs(value)));
  if (exp >= -3 && exp < 4) {
    const rounded = Number(value.toPrecision(6));
    return String(rounded);
  }
  const mantissa = Number((value / Math.pow(10, exp)).toPrecision(3));
  return mantissa === 1 ? `1e${exp}` : `${mantissa}e${exp}`;
}

export function markerPath(
  marker: "circle" | "square" | "triangle" | "diamond",
  x: number,
  y: number,
  r: number,
  color: string,
): string {
  const attrs = `fill="${color}" stroke="none"`;
  switch (marker) {
    case "circle":
      return `<circle cx="${px(x)}" cy="${px(y)}" r="${px(r)}" ${attrs}/>`;
    case "square":
      return `<rect x="${px(x - r)}" y="${px(y - r)}" width="${px(2 * r)}" height="${px(2 * r)}" ${attrs}/>`;
    case "triangle":
      return (
        `<path d="M ${px(x)} ${px(y - r)} L ${px(x + r)} ${px(y + r)} ` +
        `L ${px(x - r)} ${px(y + r)} Z" ${attrs}/>`
      );
    case "diamond":
      return (
        `<path d="M ${px(x)} ${px(y - r)} L ${px(x + r)} ${px(y)} ` +
        `L ${px(x)} ${px(y + r)} L ${px(x - r)} ${px(y)} Z" ${attrs}/>`
      );
  }
}

export function errorBar(
  x: number,
  yLo: number,
  yHi: number,
  color: string,
): string {
  const cap = 3.5;
  return (
    `<path d="M ${px(x)} ${px(yLo)} L ${px(x)} ${px(yHi)} ` +
    `M ${px(x - cap)} ${px(yLo)} L ${px(x + cap)} ${px(yLo)} ` +
    `M ${px(x - cap)} ${px(yHi)} L ${px(x + cap)} ${px(yHi)}" ` +
    `stroke="${color}" stroke-width="1" fill="none"/>`
  );
}

export function polyline(
  points: [number, number][],
  color: string,
  dash: string,
): string {
  const d = points
    .map(([x, y], i) => `${i === 0 ? "M" : "L"} ${px(x)} ${px(y)}`)
    .join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<path d="${d}" stroke="${color}" stroke-width="1.6" fill="none"${dashAttr}/>`;
}

export interface AxisLabels {
  x: string;
  y: string;
  title?: string;
}

/** Frame, grid lines, tick marks, tick labels, axis titles. */
export function axes(
  vp: Viewport,
  xScale: Scale,
  yScale: Scale,
  labels: AxisLabels,
): string {
  const parts: string[] = [];
  const x0 = vp.left;
  const x1 = vp.width - vp.right;
  const y0 = vp.height - vp.bottom;
  const y1 = vp.top;
  parts.push(
    `<rect x="${px(x0)}" y="${px(y1)}" width="${px(x1 - x0)}" height="${px(y0 - y1)}" ` +
      `fill="none" stroke="#444444" stroke-width="1"/>`,
  );
  for (const t of xScale.ticks()) {
    const x = xScale(t);
    if (x < x0 - 0.5 || x > x1 + 0.5) {
      continue;
    }
    parts.push(
      `<line x1="${px(x)}" y1="${px(y0)}" x2="${px(x)}" y2="${px(y0 + 5)}" stroke="#444444" stroke-width="1"/>`,
      `<line x1="${px(x)}" y1="${px(y0)}" x2="${px(x)}" y2="${px(y1)}" stroke="#dddddd" stroke-width="0.5"/>`,
      `<text x="${px(x)}" y="${px(y0 + 19)}" text-anchor="middle" font-size="11">${tickLabel(t)}</text>`,
    );
  }
  for (const t of yScale.ticks()) {
    const y = yScale(t);
    if (y < y1 - 0.5 || y > y0 + 0.5) {
      continue;
    }
    parts.push(
      `<line x1="${px(x0)}" y1="${px(y)}" x2="${px(x0 - 5)}" y2="${px(y)}" stroke="#444444" stroke-width="1"/>`,
      `<line x1="${px(x0)}" y1="${px(y)}" x2="${px(x1)}" y2="${px(y)}" stroke="#dddddd" stroke-width="0.5"/>`,
      `<text x="${px(x0 - 8)}" y="${px(y + 3.5)}" text-anchor="end" font-size="11">${tickLabel(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${px((x0 + x1) / 2)}" y="${px(vp.height - 12)}" text-anchor="middle" font-size="13">${escapeText(labels.x)}</text>`,
    `<text x="${px(16)}" y="${px((y0 + y1) / 2)}" text-anchor="middle" font-size="13" ` +
      `transform="rotate(-90 16 ${px((y0 + y1) / 2)})">${escapeText(labels.y)}</text>`,
  );
  if (labels.title) {
    parts.push(
      `<text x="${px((x0 + x1) / 2)}" y="${px(17)}" text-anchor="middle" font-size="14">${escapeText(labels.title)}</text>`,
    );
  }
  return parts.join("\n");
}

export interface LegendEntry {
  label: string;
  color: string;
  dash: string;
  marker?: "circle" | "square" | "triangle" | "diamond";
}

export function legend(vp: Viewport, entries: LegendEntry[]): string {
  const lineH = 18;
  const boxW = 150;
  const x = vp.width - vp.right - boxW - 8;
  const y = vp.top + 8;
  const parts: string[] = [
    `<rect x="${px(x)}" y="${px(y)}" width="${px(boxW)}" height="${px(entries.length * lineH + 8)}" ` +
      `fill="#ffffff" fill-opacity="0.85" stroke="#bbbbbb" stroke-width="0.5"/>`,
  ];
  entries.forEach((e, i) => {
    const cy = y + 13 + i * lineH;
    parts.push(polyline([[x + 8, cy], [x + 34, cy]], e.color, e.dash));
    if (e.marker) {
      parts.push(markerPath(e.marker, x + 21, cy, 3.2, e.color));
    }
    parts.push(
      `<text x="${px(x + 40)}" y="${px(cy + 3.5)}" font-size="11">${escapeText(e.label)}</text>`,
    );
  });
  return parts.join("\n");
}

export function escapeText(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function document(vp: Viewport, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${vp.width}" height="${vp.height}" ` +
    `viewBox="0 0 ${vp.width} ${vp.height}" font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${vp.width}" height="${vp.height}" fill="#ffffff"/>\n` +
    body +
    `\n</svg>\n`
  );
}
