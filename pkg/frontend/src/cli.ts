#!/usr/bin/env node
/**
 * puredp-plots render --in <csv> --kind <k> --out <img>
 *
 * Exit codes: 0 ok, 1 runtime failure, 2 usage error (bad arguments,
 * malformed CSV, missing columns).
 */

import { readFileSync, writeFileSync } from 'node:fs';
import { CsvFormatError, MissingColumnsError, parseCsv } from './csv.js';
import { KINDS, Kind, render } from './render.js';

const USAGE = `usage: puredp-plots render --in <csv> --kind <${KINDS.join('|')}> --out <img>`;

interface Args {
  input: string;
  kind: Kind;
  out: string;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== 'render') {
    throw new UsageError(`unknown command ${argv[0] ?? '(none)'}`);
  }
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith('--') || value === undefined) {
      throw new UsageError(`malformed argument ${key}`);
    }
    flags.set(key.slice(2), value);
  }
  const input = flags.get('in');
  const kind = flags.get('kind');
  const out = flags.get('out');
  if (!input || !kind || !out) {
    throw new UsageError('--in, --kind and --out are all required');
  }
  if (!(KINDS as readonly string[]).includes(kind)) {
    throw new UsageError(`unknown kind ${kind}; expected one of ${KINDS.join(', ')}`);
  }
  return { input, kind: kind as Kind, out };
}

class UsageError extends Error {}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    console.error(USAGE);
    return 2;
  }

  let textBody: string;
  try {
    textBody = readFileSync(args.input, 'utf8');
  } catch (err) {
    console.error(`error: cannot read ${args.input}: ${(err as Error).message}`);
    return 1;
  }

  let svg: string;
  try {
    svg = render(args.kind, parseCsv(textBody));
  } catch (err) {
    if (err instanceof MissingColumnsError || err instanceof CsvFormatError) {
      console.error(`error: ${args.input}: ${err.message}`);
      return 2;
    }
    throw err;
  }

  try {
    writeFileSync(args.out, svg);
  } catch (err) {
    console.error(`error: cannot write ${args.out}: ${(err as Error).message}`);
    return 1;
  }
  console.log(`wrote ${args.out}`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith('cli.js')) {
  process.exit(main(process.argv.slice(2)));
}
