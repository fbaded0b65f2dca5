/**
 * Metrics CSV schema: parsing and strict validation.
 *
 * The header must match the training harness's output exactly; on mismatch
 * the error reports the precise column diff so typos are obvious.
 */

export const REQUIRED_COLUMNS = [
  "variant",
  "optimizer",
  "task",
  "seed",
  "epoch",
  "top1",
  "top5",
  "top10",
  "mean",
] as const;

export class SchemaError extends Error {}

export interface MetricRow {
  variant: string;
  optimizer: string;
  task: string;
  seed: string;
  epoch: string;
  top1: number;
  /** Raw cell texts in column order, preserved verbatim for the sidecar. */
  cells: string[];
}

export function validateHeader(headerLine: string): void {
  const got = headerLine.split(",").map((c) => c.trim());
  const expected = [...REQUIRED_COLUMNS];
  if (got.length === expected.length && got.every((c, i) => c === expected[i])) {
    return;
  }
  const missing = expected.filter((c) => !got.includes(c));
  const unexpected = got.filter((c) => !(expected as string[]).includes(c));
  const parts: string[] = [];
  if (missing.length) parts.push(`missing columns [${missing.join(", ")}]`);
  if (unexpected.length) parts.push(`unexpected columns [${unexpected.join(", ")}]`);
  if (!parts.length) parts.push(`column order must be [${expected.join(", ")}]`);
  throw new SchemaError(`metrics CSV header mismatch: ${parts.join("; ")}`);
}

export function parseMetricsCsv(text: string, source = "<csv>"): MetricRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: empty file`);
  }
  validateHeader(lines[0]);
  const rows: MetricRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== REQUIRED_COLUMNS.length) {
      throw new SchemaError(
        `${source}:${i + 1}: expected ${REQUIRED_COLUMNS.length} cells, got ${cells.length}`
      );
    }
    const top1 = Number(cells[5]);
    if (!Number.isFinite(top1)) {
      throw new SchemaError(`${source}:${i + 1}: top1 is not a number: ${cells[5]}`);
    }
    rows.push({
      variant: cells[0],
      optimizer: cells[1],
      task: cells[2],
      seed: cells[3],
      epoch: cells[4],
      top1,
      cells,
    });
  }
  return rows;
}
