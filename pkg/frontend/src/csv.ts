export const SUMMARY_COLUMNS = [
  'L', 'beta', 'observable', 'value', 'ci_lo', 'ci_hi', 'tau',
] as const;

export const BENCH_COLUMNS = [
  'L', 'sampler', 'tau', 't0_ms_median', 'tau_t0_ms',
  'tau_ratio_vs_metropolis', 'tau_t0_ratio_vs_metropolis',
] as const;

export interface SummaryRow {
  L: number;
  beta: number;
  observable: string;
  value: number;
  ci_lo: number;
  ci_hi: number;
  tau: number;
}

export interface BenchRow {
  L: number;
  sampler: string;
  tau: number;
  t0_ms_median: number;
  tau_t0_ms: number;
}

export class SchemaError extends Error {}

function splitTable(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.length > 0 && !line.startsWith('#'))
    .map((line) => line.split(','));
}

function checkHeader(header: string[], expected: readonly string[], what: string): void {
  const missing = expected.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(
      `${what}: missing column(s) ${missing.join(', ')} (got: ${header.join(',')})`,
    );
  }
}

export function parseSummary(text: string, source = 'summary'): SummaryRow[] {
  const lines = splitTable(text);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: file is empty`);
  }
  checkHeader(lines[0], SUMMARY_COLUMNS, source);
  const idx = Object.fromEntries(lines[0].map((c, i) => [c, i]));
  const rows = lines.slice(1).map((cols) => ({
    L: Number(cols[idx.L]),
    beta: Number(cols[idx.beta]),
    observable: cols[idx.observable],
    value: Number(cols[idx.value]),
    ci_lo: Number(cols[idx.ci_lo]),
    ci_hi: Number(cols[idx.ci_hi]),
    tau: Number(cols[idx.tau]),
  }));
  if (rows.length === 0) {
    throw new SchemaError(`${source}: no data rows`);
  }
  return rows;
}

export function parseBench(text: string, source = 'bench'): BenchRow[] {
  const lines = splitTable(text);
  if (lines.length === 0) {
    throw new SchemaError(`${source}: file is empty`);
  }
  checkHeader(lines[0], BENCH_COLUMNS, source);
  const idx = Object.fromEntries(lines[0].map((c, i) => [c, i]));
  const rows = lines.slice(1).map((cols) => ({
    L: Number(cols[idx.L]),
    sampler: cols[idx.sampler],
    tau: Number(cols[idx.tau]),
    t0_ms_median: Number(cols[idx.t0_ms_median]),
    tau_t0_ms: Number(cols[idx.tau_t0_ms]),
  }));
  if (rows.length === 0) {
    throw new SchemaError(`${source}: no data rows`);
  }
  return rows;
}
