#!/usr/bin/env node
/**
 * CLI: dsnorm-plots --kind {maxwl1,randnorms,gain,coverage} --in file.csv --out fig.svg
 *
 * Exit codes: 0 on success, 1 on schema violations or I/O problems.
 */
import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import {
  renderCoverage,
  renderGain,
  renderMaxwl1,
  renderRandnorms,
} from "./figures.js";
import {
  maxwl1Row,
  parseCsv,
  randnormsRow,
  reportRow,
  SchemaError,
} from "./schema.js";

export const KINDS = ["maxwl1", "randnorms", "gain", "coverage"] as const;
export type Kind = (typeof KINDS)[number];

export function renderText(kind: Kind, csvText: string): string {
  switch (kind) {
    case "maxwl1":
      return renderMaxwl1(parseCsv(csvText, maxwl1Row));
    case "randnorms":
      return renderRandnorms(parseCsv(csvText, randnormsRow));
    case "gain":
      return renderGain(parseCsv(csvText, reportRow));
    case "coverage":
      return renderCoverage(parseCsv(csvText, reportRow));
  }
}

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
      },
    }));
  } catch (err) {
    console.error(String(err));
    return 1;
  }
  const kind = values.kind as Kind | undefined;
  if (!kind || !KINDS.includes(kind) || !values.in || !values.out) {
    console.error(
      `usage: dsnorm-plots --kind {${KINDS.join(",")}} --in file.csv --out fig.svg`,
    );
    return 1;
  }
  try {
    const svg = renderText(kind, readFileSync(values.in, "utf8"));
    writeFileSync(values.out, svg);
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema violation: ${err.message}`);
    } else {
      console.error(String(err));
    }
    return 1;
  }
  return 0;
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
