import { readFileSync } from 'fs';

import {
  FIGURE_KINDS, FigureKind, renderBinderVsBeta, renderCeLowT,
  renderChiCollapse, renderChiVsBeta, renderGCollapse, renderTauBars,
} from './charts.js';
import { parseBench, parseSummary, SchemaError } from './csv.js';

export interface PlotSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  eta?: number;
  observable?: string;
}

export function loadSpec(path: string): PlotSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, 'utf8'));
  } catch (e) {
    throw new SchemaError(`cannot read spec ${path}: ${(e as Error).message}`);
  }
  const spec = raw as Partial<PlotSpec>;
  if (!spec.kind || !(FIGURE_KINDS as readonly string[]).includes(spec.kind)) {
    throw new SchemaError(
      `spec.kind must be one of ${FIGURE_KINDS.join(', ')} (got ${spec.kind})`,
    );
  }
  if (!Array.isArray(spec.inputs) || spec.inputs.length === 0) {
    throw new SchemaError('spec.inputs must list at least one CSV file');
  }
  if (typeof spec.output !== 'string' || spec.output.length === 0) {
    throw new SchemaError('spec.output must name the image file to write');
  }
  if ((spec.kind === 'chi_collapse') && typeof spec.eta !== 'number') {
    throw new SchemaError('spec.eta is required for collapse figures');
  }
  return spec as PlotSpec;
}

export function renderSpec(spec: PlotSpec, readFile = (p: string) => readFileSync(p, 'utf8')): string {
  if (spec.kind === 'tau_bars') {
    const rows = spec.inputs.flatMap((p) => parseBench(readFile(p), p));
    return renderTauBars(rows);
  }
  const rows = spec.inputs.flatMap((p) => parseSummary(readFile(p), p));
  switch (spec.kind) {
    case 'binder_vs_beta':
      return renderBinderVsBeta(rows, spec.observable ?? 'g_q');
    case 'chi_vs_beta':
      return renderChiVsBeta(rows);
    case 'ce_lowT':
      return renderCeLowT(rows);
    case 'g_collapse':
      return renderGCollapse(rows, spec.observable ?? 'g_q');
    case 'chi_collapse':
      return renderChiCollapse(rows, spec.eta as number);
    default:
      throw new SchemaError(`unhandled figure kind ${spec.kind}`);
  }
}
