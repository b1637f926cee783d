// Page bootstrap: wires the API client into the three views. Read-only —
// ingest administration stays on the CLI.

import { ApiClient } from './api';
import { renderError, renderSearchResults, renderTimeline, renderTrace } from './views';

declare global {
  interface Window {
    VIGIL_API_BASE?: string;
  }
}

/** Keeps a view single-flighted: only the latest request's response renders. */
class LatestOnly {
  private token = 0;

  async run<T>(work: () => Promise<T>, render: (value: T) => void, onError: (e: unknown) => void) {
    const mine = ++this.token;
    try {
      const value = await work();
      if (mine === this.token) render(value);
    } catch (error) {
      if (mine === this.token) onError(error);
    }
  }
}

export function mountDashboard(root: HTMLElement, baseUrl?: string): ApiClient {
  const doc = root.ownerDocument;
  const client = new ApiClient(
    baseUrl ?? doc.defaultView?.VIGIL_API_BASE ?? 'http://127.0.0.1:8000',
  );

  root.innerHTML = `
    <section id="timelines"><h2>Camera timelines</h2><div id="timeline-bands"></div></section>
    <section id="search">
      <h2>Search</h2>
      <form id="search-form"><input id="search-input" type="text" placeholder="keywords">
      <button type="submit">search</button></form>
      <div id="search-results"></div>
      <h2>Track</h2>
      <form id="track-form"><input id="track-input" type="text" placeholder="entity keywords">
      <button type="submit">track</button></form>
      <div id="trace"></div>
    </section>`;

  const bands = root.querySelector<HTMLElement>('#timeline-bands')!;
  const results = root.querySelector<HTMLElement>('#search-results')!;
  const traceBox = root.querySelector<HTMLElement>('#trace')!;
  const searchInput = root.querySelector<HTMLInputElement>('#search-input')!;
  const searchFlight = new LatestOnly();
  const trackFlight = new LatestOnly();

  const runSearch = (q: string) =>
    searchFlight.run(
      () => client.search(q),
      (hits) => renderSearchResults(results, hits),
      (error) => renderError(results, String(error)),
    );

  root.querySelector('#search-form')!.addEventListener('submit', (event) => {
    event.preventDefault();
    if (searchInput.value.trim()) void runSearch(searchInput.value);
  });

  root.querySelector('#track-form')!.addEventListener('submit', (event) => {
    event.preventDefault();
    const q = root.querySelector<HTMLInputElement>('#track-input')!.value;
    if (!q.trim()) return;
    void trackFlight.run(
      () => client.trackEntity(q),
      (trace) => renderTrace(traceBox, trace),
      (error) => renderError(traceBox, String(error)),
    );
  });

  void (async () => {
    try {
      const stats = await client.stats();
      for (const cameraId of Object.keys(stats.per_camera)) {
        const band = doc.createElement('div');
        bands.appendChild(band);
        const segments = await client.segments(cameraId);
        const window: [number, number] = segments.length
          ? [segments[0].start_ms, Math.max(...segments.map((s) => s.end_ms))]
          : [0, 1];
        renderTimeline(band, cameraId, segments, window, {
          onJumpToSearch: (text) => {
            searchInput.value = text;
            void runSearch(text);
          },
        });
      }
    } catch (error) {
      renderError(bands, String(error));
    }
  })();

  return client;
}
