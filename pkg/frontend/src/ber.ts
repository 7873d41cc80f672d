/**
 * Expected error probability against the detection threshold:
 * analytical curves per mobility case, simulated estimates as markers
 * with error bars, logarithmic probability axis.
 */

import {
  Artifact,
  SchemaError,
  caseLabels,
  numberCell,
  requireColumns,
  requireRows,
} from "./csv.js";
import { FigureSpec, resolveStyles } from "./spec.js";
import {
  axes,
  document,
  errorBar,
  legend,
  LegendEntry,
  linearScale,
  logScale,
  markerPath,
  polyline,
  viewport,
} from "./svg.js";

interface BerPoint {
  xi: number;
  analytical: number;
  sim?: number;
  simStderr?: number;
}

export function plotBer(artifact: Artifact, name: string, spec: FigureSpec): string {
  requireColumns(artifact, name, ["xi", "case", "p_e_analytical"]);
  requireRows(artifact, name);
  const hasSim = artifact.columns.includes("p_e_sim");
  const hasSimStderr = artifact.columns.includes("p_e_sim_stderr");

  const byCase = new Map<string, BerPoint[]>();
  artifact.rows.forEach((row, i) => {
    const point: BerPoint = {
      xi: numberCell(row, "xi", name, i),
      analytical: numberCell(row, "p_e_analytical", name, i),
    };
    if (hasSim) {
      point.sim = numberCell(row, "p_e_sim", name, i);
      if (hasSimStderr) {
        point.simStderr = numberCell(row, "p_e_sim_stderr", name, i);
      }
    }
    const label = row["case"]!;
    const series = byCase.get(label);
    if (series) {
      series.push(point);
    } else {
      byCase.set(label, [point]);
    }
  });
  for (const series of byCase.values()) {
    series.sort((a, b) => a.xi - b.xi);
  }

  const labels = caseLabels(artifact);
  const styles = resolveStyles(spec, labels);

  let xiMin = Infinity;
  let xiMax = -Infinity;
  let pMin = Infinity;
  let pMax = -Infinity;
  for (const series of byCase.values()) {
    for (const p of series) {
      xiMin = Math.min(xiMin, p.xi);
      xiMax = Math.max(xiMax, p.xi);
      for (const v of [p.analytical, p.sim]) {
        if (v !== undefined && v > 0) {
          pMin = Math.min(pMin, v);
          pMax = Math.max(pMax, v);
        }
      }
      if (p.sim !== undefined && p.sim > 0 && p.simStderr) {
        const lo = p.sim - p.simStderr;
        if (lo > 0) {
          pMin = Math.min(pMin, lo);
        }
        pMax = Math.max(pMax, p.sim + p.simStderr);
      }
    }
  }
  if (!Number.isFinite(pMin)) {
    throw new SchemaError(`${name}: no positive probabilities to draw on a log axis`);
  }

  const vp = viewport(spec.width, spec.height);
  const x = linearScale(
    xiMin,
    xiMax > xiMin ? xiMax : xiMin + 1,
    vp.left,
    vp.width - vp.right,
  );
  const y = logScale(pMin * 0.8, pMax * 1.25, vp.height - vp.bottom, vp.top);
  const yFloor = pMin * 0.8;

  const body: string[] = [
    axes(vp, x, y, {
      x: "detection threshold",
      y: "expected error probability",
      title: spec.title,
    }),
  ];
  for (const [label, series] of byCase) {
    const style = styles.get(label)!;
    body.push(
      polyline(
        series.filter((p) => p.analytical > 0).map((p) => [x(p.xi), y(p.analytical)]),
        style.color,
        style.dash,
      ),
    );
  }
  if (hasSim) {
    for (const [label, series] of byCase) {
      const style = styles.get(label)!;
      for (const p of series) {
        if (p.sim === undefined || p.sim <= 0) {
          continue; // nonpositive estimates have no place on a log axis
        }
        if (p.simStderr && p.simStderr > 0) {
          const lo = Math.max(p.sim - p.simStderr, yFloor);
          body.push(errorBar(x(p.xi), y(lo), y(p.sim + p.simStderr), style.color));
        }
        body.push(markerPath(style.marker, x(p.xi), y(p.sim), 3.0, style.color));
      }
    }
  }
  const entries: LegendEntry[] = labels.map((label) => {
    const style = styles.get(label)!;
    const entry: LegendEntry = {
      label,
      color: style.color,
      dash: style.dash,
    };
    if (hasSim) {
      entry.marker = style.marker;
    }
    return entry;
  });
  body.push(legend(vp, entries));
  return document(vp, body.join("\n"));
}
