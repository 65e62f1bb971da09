/**
 * plot --csv <path> --y abs_error|ess --out <path> [--panel-by proposal_preset]
 *
 * Reads an aggregate CSV from the inference harness and writes one SVG
 * per panel.  With --panel-by, each panel value gets its own file
 * (out.svg -> out-<value>.svg); otherwise a single file is written.
 */

import { readFileSync, writeFileSync } from "node:fs";
import path from "node:path";

import { CsvError, Metric, parseAggregateCsv } from "./csv.js";
import { panelGroups, renderPanel } from "./svg.js";

interface Args {
  csv: string;
  y: Metric;
  out: string;
  panelBy?: string;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== "plot") {
    throw new Error("usage: plot --csv <path> --y abs_error|ess --out <path> [--panel-by <column>]");
  }
  const opts = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`bad argument: ${flag}`);
    }
    opts.set(flag.slice(2), value);
  }
  const csv = opts.get("csv");
  const y = opts.get("y");
  const out = opts.get("out");
  if (!csv || !y || !out) {
    throw new Error("required flags: --csv, --y, --out");
  }
  if (y !== "abs_error" && y !== "ess") {
    throw new Error(`--y must be abs_error or ess, got '${y}'`);
  }
  return { csv, y, out, panelBy: opts.get("panel-by") };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (e) {
    console.error((e as Error).message);
    return 2;
  }
  let text: string;
  try {
    text = readFileSync(args.csv, "utf-8");
  } catch (e) {
    console.error(`cannot read ${args.csv}: ${(e as Error).message}`);
    return 1;
  }
  try {
    const rows = parseAggregateCsv(text);
    const groups = panelGroups(rows, args.panelBy);
    for (const [key, panelRows] of groups) {
      const title =
        key === ""
          ? `${panelRows[0].model}: ${args.y} vs particles`
          : `${panelRows[0].model} [${args.panelBy}=${key}]: ${args.y} vs particles`;
      const svg = renderPanel(panelRows, args.y, title);
      let outPath = args.out;
      if (key !== "") {
        const ext = path.extname(args.out);
        outPath = args.out.slice(0, args.out.length - ext.length) + `-${key}${ext}`;
      }
      writeFileSync(outPath, svg + "\n");
      console.log(`wrote ${outPath}`);
    }
    return 0;
  } catch (e) {
    if (e instanceof CsvError || e instanceof Error) {
      console.error((e as Error).message);
      return 1;
    }
    throw e;
  }
}

const isDirect =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (isDirect) {
  process.exit(main(process.argv.slice(2)));
}
