#!/usr/bin/env node
import { writeFileSync } from 'fs';

import { SchemaError } from './csv.js';
import { loadSpec, renderSpec } from './spec.js';

export function main(argv: string[]): number {
  if (argv.length !== 2 || argv[0] !== 'plot') {
    process.stderr.write('usage: tnmc-plots plot <spec.json>\n');
    return 2;
  }
  try {
    const spec = loadSpec(argv[1]);
    const svg = renderSpec(spec);
    writeFileSync(spec.output, svg);
    process.stdout.write(`wrote ${spec.output}\n`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      process.stderr.write(`schema error: ${e.message}\n`);
      return 1;
    }
    throw e;
  }
}

process.exit(main(process.argv.slice(2)));
