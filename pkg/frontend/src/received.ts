/**
 * Expected received signal over a frame: analytical curves per mobility
 * case, simulated means as markers, error bars when the artifact
 * carries a standard-error column.
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
  markerPath,
  polyline,
  viewport,
} from "./svg.js";

interface SeriesPoint {
  t: number;
  value: number;
  stderr?: number;
}

function collect(
  artifact: Artifact,
  name: string,
  valueColumn: string,
  stderrColumn: string,
): { byCase: Map<string, SeriesPoint[]>; hasStderr: boolean } {
  requireColumns(artifact, name, ["time_s", "case", valueColumn]);
  requireRows(artifact, name);
  const hasStderr = artifact.columns.includes(stderrColumn);
  const byCase = new Map<string, SeriesPoint[]>();
  artifact.rows.forEach((row, i) => {
    const label = row["case"]!;
    const point: SeriesPoint = {
      t: numberCell(row, "time_s", name, i),
      value: numberCell(row, valueColumn, name, i),
    };
    if (hasStderr) {
      point.stderr = numberCell(row, stderrColumn, name, i);
    }
    const series = byCase.get(label);
    if (series) {
      series.push(point);
    } else {
      byCase.set(label, [point]);
    }
  });
  for (const series of byCase.values()) {
    series.sort((a, b) => a.t - b.t);
  }
  return { byCase, hasStderr };
}

export interface NamedArtifact {
  name: string;
  artifact: Artifact;
}

/**
 * Split the input files into the analytical and the simulated artifact
 * by their headers. Either may be absent, both may live in one file.
 */
function classify(inputs: NamedArtifact[]): {
  analytical?: NamedArtifact;
  simulated?: NamedArtifact;
} {
  let analytical: NamedArtifact | undefined;
  let simulated: NamedArtifact | undefined;
  for (const input of inputs) {
    const isAna = input.artifact.columns.includes("n_c_analytical");
    const isSim = input.artifact.columns.includes("n_c_sim");
    if (!isAna && !isSim) {
      throw new SchemaError(
        `${input.name}: expected a received-signal artifact with column ` +
          `n_c_analytical or n_c_sim, found [${input.artifact.columns.join(", ")}]`,
      );
    }
    if (isAna) {
      if (analytical) {
        throw new SchemaError(
          `${input.name}: second artifact with column n_c_analytical ` +
            `(already read ${analytical.name})`,
        );
      }
      analytical = input;
    }
    if (isSim) {
      if (simulated && simulated !== analytical) {
        throw new SchemaError(
          `${input.name}: second artifact with column n_c_sim ` +
            `(already read ${simulated.name})`,
        );
      }
      simulated = input;
    }
  }
  return { analytical, simulated };
}

export function plotReceivedSignal(
  inputs: NamedArtifact[],
  spec: FigureSpec,
): string {
  if (inputs.length === 0) {
    throw new SchemaError("received-signal figure needs at least one input artifact");
  }
  const { analytical, simulated } = classify(inputs);

  const curves = analytical
    ? collect(analytical.artifact, analytical.name, "n_c_analytical", "")
    : undefined;
  const points = simulated
    ? collect(simulated.artifact, simulated.name, "n_c_sim", "n_c_sim_stderr")
    : undefined;

  const labels: string[] = [];
  for (const source of [analytical, simulated]) {
    if (source) {
      for (const label of caseLabels(source.artifact)) {
        if (!labels.includes(label)) {
          labels.push(label);
        }
      }
    }
  }
  const styles = resolveStyles(spec, labels);

  let tMax = 0;
  let vMax = 0;
  const scan = (series: Map<string, SeriesPoint[]>) => {
    for (const pts of series.values()) {
      for (const p of pts) {
        tMax = Math.max(tMax, p.t);
        vMax = Math.max(vMax, p.value + (p.stderr ?? 0));
      }
    }
  };
  if (curves) {
    scan(curves.byCase);
  }
  if (points) {
    scan(points.byCase);
  }
  if (vMax <= 0) {
    vMax = 1;
  }

  const vp = viewport(spec.width, spec.height);
  const x = linearScale(0, tMax, vp.left, vp.width - vp.right);
  const y = linearScale(0, 1.06 * vMax, vp.height - vp.bottom, vp.top);

  const body: string[] = [
    axes(vp, x, y, {
      x: "time (s)",
      y: "expected bound molecules",
      title: spec.title,
    }),
  ];
  if (curves) {
    for (const [label, pts] of curves.byCase) {
      const style = styles.get(label)!;
      body.push(
        polyline(pts.map((p) => [x(p.t), y(p.value)]), style.color, style.dash),
      );
    }
  }
  if (points) {
    for (const [label, pts] of points.byCase) {
      const style = styles.get(label)!;
      for (const p of pts) {
        if (points.hasStderr && p.stderr! > 0) {
          body.push(
            errorBar(x(p.t), y(p.value - p.stderr!), y(p.value + p.stderr!), style.color),
          );
        }
        body.push(markerPath(style.marker, x(p.t), y(p.value), 3.0, style.color));
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
    if (points && points.byCase.has(label)) {
      entry.marker = style.marker;
    }
    return entry;
  });
  body.push(legend(vp, entries));
  return document(vp, body.join("\n"));
}
