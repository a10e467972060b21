/**
 * The three figure kinds, each consuming one experiment CSV:
 *
 * - variance_crossover: per-coordinate variance vs log10(delta); the Laplace
 *   level is a dashed horizontal line, the Gaussian calibration a solid curve.
 * - scaling_loglog: per-n mean of a utility column on log-log axes.
 * - audit_bands: empirical epsilon estimates with 95% confidence bars against
 *   the claimed pure epsilon.
 */

import { CsvTable, numericColumn, requireColumns } from './csv.js';
import {
  HEIGHT,
  MARGIN,
  WIDTH,
  axes,
  circle,
  document,
  extent,
  legend,
  linearScale,
  polyline,
  text,
} from './svg.js';

export const KINDS = ['variance_crossover', 'scaling_loglog', 'audit_bands'] as const;
export type Kind = (typeof KINDS)[number];

const X_RANGE: [number, number] = [MARGIN.left, WIDTH - MARGIN.right];
const Y_RANGE: [number, number] = [HEIGHT - MARGIN.bottom, MARGIN.top];

export function render(kind: Kind, table: CsvTable): string {
  switch (kind) {
    case 'variance_crossover':
      return renderVarianceCrossover(table);
    case 'scaling_loglog':
      return renderScalingLogLog(table);
    case 'audit_bands':
      return renderAuditBands(table);
  }
}

function log10TickLabel(v: number): string {
  return `1e${Math.round(v)}`;
}

function renderVarianceCrossover(table: CsvTable): string {
  requireColumns(table, ['delta', 'laplace_var', 'gaussian_var']);
  const logDelta = numericColumn(table, 'delta').map(Math.log10);
  const laplace = numericColumn(table, 'laplace_var');
  const gaussian = numericColumn(table, 'gaussian_var');

  const xScale = linearScale(extent(logDelta), X_RANGE);
  const yScale = linearScale(pad(extent([...laplace, ...gaussian])), Y_RANGE);

  const body = [
    axes(xScale, yScale, {
      x: 'delta',
      y: 'per-coordinate variance',
      xTick: log10TickLabel,
    }),
    polyline(logDelta.map(xScale), laplace.map(yScale), 'firebrick', true),
    polyline(logDelta.map(xScale), gaussian.map(yScale), 'steelblue'),
    legend([
      { label: 'Laplace (pure DP)', stroke: 'firebrick', dashed: true },
      { label: 'analytic Gaussian', stroke: 'steelblue' },
    ]),
  ].join('\n');
  return document('Noise variance vs delta', body);
}

function renderScalingLogLog(table: CsvTable): string {
  requireColumns(table, ['n', 'excess_risk']);
  const ns = numericColumn(table, 'n');
  const risks = numericColumn(table, 'excess_risk');

  // mean over trials per n, in increasing n
  const byN = new Map<number, number[]>();
  ns.forEach((n, i) => {
    const arr = byN.get(n) ?? [];
    arr.push(risks[i]);
    byN.set(n, arr);
  });
  const sortedN = [...byN.keys()].sort((a, b) => a - b);
  const logN = sortedN.map(Math.log10);
  const logRisk = sortedN.map((n) => {
    const vals = byN.get(n)!;
    const mean = vals.reduce((a, b) => a + b, 0) / vals.length;
    return Math.log10(Math.max(mean, 1e-300));
  });

  const xScale = linearScale(pad(extent(logN)), X_RANGE);
  const yScale = linearScale(pad(extent(logRisk)), Y_RANGE);
  const body = [
    axes(xScale, yScale, {
      x: 'n',
      y: 'excess risk',
      xTick: log10TickLabel,
      yTick: log10TickLabel,
    }),
    polyline(logN.map(xScale), logRisk.map(yScale), 'steelblue'),
    ...logN.map((x, i) => circle(xScale(x), yScale(logRisk[i]), 'steelblue')),
    legend([{ label: 'mean excess risk', stroke: 'steelblue' }]),
  ].join('\n');
  return document('Excess risk vs n (log-log)', body);
}

function renderAuditBands(table: CsvTable): string {
  requireColumns(table, ['target', 'eps_claimed', 'eps_hat', 'conf_radius']);
  const claimed = numericColumn(table, 'eps_claimed');
  const hats = numericColumn(table, 'eps_hat');
  const radii = numericColumn(table, 'conf_radius');
  const targets = table.rows.map((row) => row['target']!);

  const k = targets.length;
  const slots = targets.map((_, i) => i + 1);
  const xScale = linearScale([0, k + 1], X_RANGE);
  const yLo = Math.min(0, ...hats.map((h, i) => h - radii[i]));
  const yHi = Math.max(...claimed, ...hats.map((h, i) => h + radii[i]));
  const yScale = linearScale(pad([yLo, yHi]), Y_RANGE);

  const parts = [
    axes(xScale, yScale, { x: 'audit target', y: 'epsilon', xTick: () => '' }),
  ];
  slots.forEach((slot, i) => {
    const x = xScale(slot);
    const lo = yScale(hats[i] - radii[i]);
    const hi = yScale(hats[i] + radii[i]);
    // 95% confidence bar around the empirical estimate
    parts.push(`<line x1="${x.toFixed(2)}" y1="${lo.toFixed(2)}" x2="${x.toFixed(2)}" y2="${hi.toFixed(2)}" stroke="steelblue" stroke-width="2"/>`);
    parts.push(circle(x, yScale(hats[i]), 'steelblue', 4));
    // claimed pure-epsilon level for this target
    const cy = yScale(claimed[i]);
    parts.push(
      `<line x1="${(x - 25).toFixed(2)}" y1="${cy.toFixed(2)}" x2="${(x + 25).toFixed(2)}" y2="${cy.toFixed(2)}" stroke="firebrick" stroke-dasharray="6,4" stroke-width="1.5"/>`,
    );
    parts.push(text(x, HEIGHT - MARGIN.bottom + 35, targets[i]));
  });
  parts.push(
    legend([
      { label: 'empirical epsilon (95% CI)', stroke: 'steelblue' },
      { label: 'claimed epsilon', stroke: 'firebrick', dashed: true },
    ]),
  );
  return document('Privacy audit: empirical vs claimed epsilon', parts.join('\n'));
}

function pad([lo, hi]: [number, number]): [number, number] {
  const slack = 0.05 * (hi - lo || 1);
  return [lo - slack, hi + slack];
}
