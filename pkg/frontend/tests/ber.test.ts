import { readFileSync } from "fs";
import { join } from "path";

import { describe, expect, it } from "vitest";

import { parseArtifact } from "../src/csv.js";
import { plotBer } from "../src/ber.js";
import { makeSpec } from "../src/spec.js";

const FIXTURES = join(__dirname, "fixtures");

function fixture(name: string) {
  return parseArtifact(readFileSync(join(FIXTURES, name), "utf8"), name);
}

describe("plotBer", () => {
  it("renders curves and markers on a log axis (golden)", () => {
    const svg = plotBer(fixture("ber.csv"), "ber.csv", makeSpec(["b"], "o.svg", "log"));
    expect(svg).toMatchSnapshot();
  });

  it("labels decade ticks when the data spans decades", () => {
    const art = parseArtifact(
      "xi,case,p_e_analytical\n0,w,0.5\n1,w,0.04\n2,w,0.003\n",
      "wide.csv",
    );
    const svg = plotBer(art, "wide.csv", makeSpec(["w"], "o.svg", "log"));
    expect(svg).toContain(">0.1</text>");
    expect(svg).toContain(">0.01</text>");
  });

  it("labels round mantissa ticks when the data spans less than a decade", () => {
    const svg = plotBer(fixture("ber.csv"), "ber.csv", makeSpec(["b"], "o.svg", "log"));
    expect(svg).toContain(">0.4</text>");
    expect(svg).toContain(">0.5</text>");
  });

  it("renders a monotone single case without needing a minimum", () => {
    const art = parseArtifact(
      "xi,case,p_e_analytical\n0,only,0.5\n1,only,0.2\n2,only,0.05\n",
      "mono.csv",
    );
    const svg = plotBer(art, "mono.csv", makeSpec(["m"], "o.svg", "log"));
    expect(svg).toMatchSnapshot();
    expect(svg).toContain(">only</text>");
  });

  it("rejects empty data rows, writing no image", () => {
    const art = parseArtifact("xi,case,p_e_analytical\n", "empty.csv");
    expect(() => plotBer(art, "empty.csv", makeSpec(["e"], "o.svg", "log"))).toThrow(
      /no data rows/,
    );
  });

  it("reports missing required columns with diagnostics", () => {
    const art = parseArtifact("threshold,case,pe\n1,a,0.5\n", "cols.csv");
    expect(() => plotBer(art, "cols.csv", makeSpec(["c"], "o.svg", "log"))).toThrow(
      /missing required columns \[xi, p_e_analytical\], found \[threshold, case, pe\]/,
    );
  });

  it("degrades to bare markers when the sim stderr column is absent", () => {
    const art = parseArtifact(
      "xi,case,p_e_analytical,p_e_sim\n0,a,0.5,0.48\n1,a,0.3,0.31\n",
      "nostderr.csv",
    );
    const svg = plotBer(art, "nostderr.csv", makeSpec(["n"], "o.svg", "log"));
    expect(svg).toContain("<circle");
    expect(svg).not.toMatch(/M [0-9.]+ [0-9.]+ L [0-9.]+ [0-9.]+ M/);
  });

  it("skips nonpositive simulated estimates instead of breaking the axis", () => {
    const art = parseArtifact(
      "xi,case,p_e_analytical,p_e_sim,p_e_sim_stderr\n0,a,0.5,0.0,0.0\n1,a,0.3,0.28,0.01\n",
      "zero.csv",
    );
    const svg = plotBer(art, "zero.csv", makeSpec(["z"], "o.svg", "log"));
    // one data marker (the zero estimate is dropped) plus the legend swatch
    expect((svg.match(/<circle/g) ?? []).length).toBe(2);
    expect(svg).not.toContain("Infinity");
    expect(svg).not.toContain("NaN");
  });

  it("rejects data with no positive probabilities at all", () => {
    const art = parseArtifact("xi,case,p_e_analytical\n0,a,0.0\n", "zeros.csv");
    expect(() => plotBer(art, "zeros.csv", makeSpec(["z"], "o.svg", "log"))).toThrow(
      /no positive probabilities/,
    );
  });
});
