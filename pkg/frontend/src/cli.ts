#!/usr/bin/env node
/**
 * Usage: node dist/cli.js --csv sweep.csv[,more.csv] --out charts/ [--task name]
 *
 * Exit codes: 0 ok, 2 bad arguments or schema mismatch.
 */

import { render } from "./render";
import { SchemaError } from "./schema";

function parseArgs(argv: string[]): { csv: string[]; out: string; task?: string } {
  let csv: string[] = [];
  let out = "";
  let task: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--csv":
        csv = (argv[++i] ?? "").split(",").filter((p) => p.length > 0);
        break;
      case "--out":
        out = argv[++i] ?? "";
        break;
      case "--task":
        task = argv[++i];
        break;
      default:
        throw new Error(`unknown argument ${argv[i]}`);
    }
  }
  if (csv.length === 0 || !out) {
    throw new Error("required: --csv <paths> --out <dir>");
  }
  return { csv, out, task };
}

function main(): number {
  try {
    const args = parseArgs(process.argv.slice(2));
    const charts = render({ csvPaths: args.csv, outDir: args.out, task: args.task });
    for (const chart of charts) {
      console.log(`${chart.task}: ${chart.bars} bars -> ${chart.pngPath}, ` +
        `${chart.svgPath}, ${chart.sidecarPath}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof Error) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    console.error(err);
    return 2;
  }
}

process.exit(main());
