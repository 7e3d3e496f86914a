// Page bootstrap: read options from the URL, drive the App, wire buttons.

import { Client, type Choice, type SessionConfig } from './api.js';
import { App, type View } from './app.js';

function configFromUrl(): { base: string; config: SessionConfig } {
  const params = new URLSearchParams(window.location.search);
  const base = params.get('service') ?? 'http://127.0.0.1:8000';
  const config: SessionConfig = {
    strategy: params.get('strategy') === 'choice_perceptron' ? 'choice_perceptron' : 'machop',
    T: Number(params.get('T') ?? 50),
    seed: Number(params.get('seed') ?? Date.now() % 100000),
  };
  return { base, config };
}

function show(root: HTMLElement, view: View): void {
  root.innerHTML = view.html;
}

async function run(): Promise<void> {
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app element');
  const { base, config } = configFromUrl();
  const app = new App(new Client(base), config);

  root.addEventListener('click', async (event) => {
    const target = event.target as HTMLElement;
    const choice = target.dataset?.choice as Choice | undefined;
    if (!choice) return;
    try {
      show(root, await app.choose(choice));
    } catch (err) {
      // idempotent GET recovers the pending state on the next render
      console.error(err);
      show(root, await app.currentView());
    }
  });

  show(root, await app.start());
}

run().catch((err) => {
  const root = document.getElementById('app');
  if (root) root.innerHTML = `<p class="error">${String(err)}</p>`;
});
