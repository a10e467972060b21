import { existsSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { describe, expect, it, vi } from 'vitest';
import { main } from '../src/cli.js';

const fixture = (name: string) => join(__dirname, 'fixtures', name);
const outDir = mkdtempSync(join(tmpdir(), 'puredp-plots-'));

describe('cli', () => {
  it('renders the figure1 fixture to an SVG file', () => {
    const out = join(outDir, 'fig1.svg');
    const code = main(['render', '--in', fixture('figure1.csv'), '--kind', 'variance_crossover', '--out', out]);
    expect(code).toBe(0);
    expect(existsSync(out)).toBe(true);
    expect(readFileSync(out, 'utf8')).toContain('</svg>');
  });

  it('exits 2 on a malformed csv', () => {
    const bad = join(outDir, 'bad.csv');
    writeFileSync(bad, 'delta,laplace_var\n1,2,3\n');
    const err = vi.spyOn(console, 'error').mockImplementation(() => {});
    const code = main(['render', '--in', bad, '--kind', 'variance_crossover', '--out', join(outDir, 'x.svg')]);
    expect(code).toBe(2);
    err.mockRestore();
  });

  it('exits 2 with column diagnostics on the wrong csv', () => {
    const err = vi.spyOn(console, 'error').mockImplementation(() => {});
    const code = main(['render', '--in', fixture('audit.csv'), '--kind', 'variance_crossover', '--out', join(outDir, 'y.svg')]);
    expect(code).toBe(2);
    const message = err.mock.calls.map((c) => c.join(' ')).join('\n');
    expect(message).toContain('missing required column(s)');
    expect(message).toContain('delta');
    err.mockRestore();
  });

  it('exits 2 on an unknown kind', () => {
    const err = vi.spyOn(console, 'error').mockImplementation(() => {});
    const code = main(['render', '--in', fixture('figure1.csv'), '--kind', 'pie', '--out', join(outDir, 'z.svg')]);
    expect(code).toBe(2);
    err.mockRestore();
  });

  it('exits 1 when the input file does not exist', () => {
    const err = vi.spyOn(console, 'error').mockImplementation(() => {});
    const code = main(['render', '--in', join(outDir, 'nope.csv'), '--kind', 'audit_bands', '--out', join(outDir, 'w.svg')]);
    expect(code).toBe(1);
    err.mockRestore();
  });
});
