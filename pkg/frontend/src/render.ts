// HTML rendering for explanation steps. Pure string builders so the logic is
// testable without a browser; main.ts injects the results into the page.
//
// Cell states: given digits are plain, facts used by the step are yellow,
// the derived cell is green, and every constraint group used by the step
// outlines its cells in blue.

import type { EvalPair, QueryPayload, StepPayload } from './api.js';

const FEATURE_LABELS = [
  'adjacent facts (other value)',
  'non-adjacent facts (same value)',
  'non-adjacent facts (other value)',
  'adjacent groups: cat 1',
  'adjacent groups: cat 2',
  'adjacent groups: cat 3',
  'non-adjacent groups: cat 1',
  'non-adjacent groups: cat 2',
  'non-adjacent groups: cat 3',
  'adjacent facts from cat 1',
  'adjacent facts from cat 2',
  'adjacent facts from cat 3',
];

function escapeHtml(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function cellKey(row: number, col: number): string {
  return `${row},${col}`;
}

export function renderGrid(step: StepPayload): string {
  if (step.kind !== 'sudoku' || !step.grid || !step.size) {
    return `<pre class="raw-step">${escapeHtml(JSON.stringify(step, null, 2))}</pre>`;
  }
  const n = step.size;
  const used = new Set(step.facts.map((f) => cellKey(f.var[0], f.var[1])));
  const derived = cellKey(step.target.var[0], step.target.var[1]);
  const outlined = new Set<string>();
  for (const group of step.groups) {
    for (const [r, c] of group.cells ?? []) {
      outlined.add(cellKey(r, c));
    }
  }

  const rows: string[] = [];
  for (let r = 1; r <= n; r++) {
    const cells: string[] = [];
    for (let c = 1; c <= n; c++) {
      const key = cellKey(r, c);
      const classes = ['cell'];
      let text = '';
      const value = step.grid[r - 1][c - 1];
      if (value > 0) {
        classes.push('given');
        text = String(value);
      }
      if (used.has(key)) classes.push('used-fact');
      if (key === derived) {
        classes.push('derived');
        text = String(step.target.val);
      }
      if (outlined.has(key)) classes.push('in-unit');
      cells.push(`<td class="${classes.join(' ')}">${text}</td>`);
    }
    rows.push(`<tr>${cells.join('')}</tr>`);
  }
  return `<table class="grid grid-${n}"><tbody>${rows.join('')}</tbody></table>`;
}

export function renderFeatureTable(step: StepPayload): string {
  const rows = step.features
    .map((count, i) => {
      if (count === 0) return '';
      const label = FEATURE_LABELS[i] ?? `feature ${i}`;
      return `<tr><td>${escapeHtml(label)}</td><td>${count}</td></tr>`;
    })
    .filter((row) => row !== '');
  if (rows.length === 0) {
    return '<p class="no-features">no counted features</p>';
  }
  return `<table class="features"><tbody>${rows.join('')}</tbody></table>`;
}

export function renderStepPanel(step: StepPayload, side: 'left' | 'right'): string {
  return [
    `<div class="step-panel" data-side="${side}">`,
    renderGrid(step),
    renderFeatureTable(step),
    '</div>',
  ].join('\n');
}

export function renderTrainingPair(query: QueryPayload): string {
  return [
    `<p class="progress">query ${query.t} of ${query.T}</p>`,
    '<div class="pair">',
    renderStepPanel(query.left, 'left'),
    renderStepPanel(query.right, 'right'),
    '</div>',
    renderChoiceButtons(),
  ].join('\n');
}

export function renderEvaluationPair(
  pair: EvalPair,
  index: number,
  total: number
): string {
  // deliberately renders nothing that could reveal which side is which
  return [
    '<p class="banner">evaluation — which explanation do you prefer?</p>',
    `<p class="progress">pair ${index + 1} of ${total}</p>`,
    '<div class="pair">',
    renderStepPanel(pair.left, 'left'),
    renderStepPanel(pair.right, 'right'),
    '</div>',
    renderChoiceButtons(),
  ].join('\n');
}

export function renderChoiceButtons(): string {
  return [
    '<div class="choices">',
    '<button data-choice="left">left</button>',
    '<button data-choice="indifferent">no preference</button>',
    '<button data-choice="right">right</button>',
    '</div>',
  ].join('');
}

export function renderDone(result: {
  learned: number;
  ses: number;
  indifferent: number;
}): string {
  return [
    '<p class="banner">session complete</p>',
    `<p>learned-weights step preferred: ${result.learned.toFixed(0)}%</p>`,
    `<p>baseline step preferred: ${result.ses.toFixed(0)}%</p>`,
    `<p>no preference: ${result.indifferent.toFixed(0)}%</p>`,
  ].join('\n');
}
