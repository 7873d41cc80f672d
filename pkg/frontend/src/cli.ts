#!/usr/bin/env node
/**
 * Batch figure generation from simulation artifacts.
 *
 *   mobilemc-figures received-signal analytical.csv sim.csv --output fig2.svg
 *   mobilemc-figures ber ber.csv --output fig3.svg --style styles.json
 *
 * Reads only CSV artifacts, never recomputes physics. Exit code 0 on
 * success, 1 for any argument, schema, or style problem.
 */

import { mkdirSync, readFileSync, writeFileSync } from "fs";
import { dirname } from "path";

import { parseArtifact, SchemaError } from "./csv.js";
import { plotBer } from "./ber.js";
import { NamedArtifact, plotReceivedSignal } from "./received.js";
import { CaseStyle, makeSpec, parseStyleFile } from "./spec.js";

const USAGE = `usage: mobilemc-figures <received-signal | ber> <input.csv...> --output <file.svg> [--style <styles.json>] [--title <text>]`;

interface Args {
  command: string;
  inputs: string[];
  output: string;
  style?: string;
  title?: string;
}

function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new SchemaError(USAGE);
  }
  const [command, ...rest] = argv;
  if (command !== "received-signal" && command !== "ber") {
    throw new SchemaError(`unknown command ${JSON.stringify(command)}\n${USAGE}`);
  }
  const inputs: string[] = [];
  let output: string | undefined;
  let style: string | undefined;
  let title: string | undefined;
  for (let i = 0; i < rest.length; i++) {
    const arg = rest[i]!;
    if (arg === "--output" || arg === "--style" || arg === "--title") {
      const value = rest[i + 1];
      if (value === undefined) {
        throw new SchemaError(`${arg} needs a value\n${USAGE}`);
      }
      if (arg === "--output") {
        output = value;
      } else if (arg === "--style") {
        style = value;
      } else {
        title = value;
      }
      i++;
    } else if (arg.startsWith("--")) {
      throw new SchemaError(`unknown option ${arg}\n${USAGE}`);
    } else {
      inputs.push(arg);
    }
  }
  if (inputs.length === 0) {
    throw new SchemaError(`no input artifacts given\n${USAGE}`);
  }
  if (command === "ber" && inputs.length !== 1) {
    throw new SchemaError(`ber takes exactly one input artifact, got ${inputs.length}`);
  }
  if (command === "received-signal" && inputs.length > 2) {
    throw new SchemaError(
      `received-signal takes one or two input artifacts, got ${inputs.length}`,
    );
  }
  if (!output) {
    throw new SchemaError(`--output is required\n${USAGE}`);
  }
  return { command, inputs, output, style, title };
}

function readText(path: string): string {
  try {
    return readFileSync(path, "utf8");
  } catch (exc) {
    throw new SchemaError(`cannot read ${path}: ${(exc as Error).message}`);
  }
}

export function run(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    let styles: Record<string, CaseStyle> | undefined;
    if (args.style) {
      styles = parseStyleFile(readText(args.style), args.style);
    }
    const yScale = args.command === "ber" ? "log" : "linear";
    const spec = makeSpec(args.inputs, args.output, yScale, styles, args.title);

    let svg: string;
    if (args.command === "received-signal") {
      const artifacts: NamedArtifact[] = args.inputs.map((path) => ({
        name: path,
        artifact: parseArtifact(readText(path), path),
      }));
      svg = plotReceivedSignal(artifacts, spec);
    } else {
      const path = args.inputs[0]!;
      svg = plotBer(parseArtifact(readText(path), path), path, spec);
    }
    try {
      mkdirSync(dirname(args.output), { recursive: true });
      writeFileSync(args.output, svg, "utf8");
    } catch (exc) {
      throw new SchemaError(`cannot write ${args.output}: ${(exc as Error).message}`);
    }
    process.stdout.write(`wrote ${args.output}\n`);
    return 0;
  } catch (exc) {
    if (exc instanceof SchemaError) {
      process.stderr.write(`error: ${exc.message}\n`);
      return 1;
    }
    throw exc;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(run(process.argv.slice(2)));
}
