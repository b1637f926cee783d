// @vitest-environment node
//
// Dashboard-against-live-service integration: builds a fixture store with
// the pipeline CLI, serves it over real HTTP, and drives the dashboard's
// client + views against it in a DOM, asserting the views show exactly
// what the API returned.

import { execFile, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join, resolve } from 'node:path';
import { promisify } from 'node:util';

import { JSDOM } from 'jsdom';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api';
import { renderSearchResults, renderTimeline, renderTrace } from '../src/views';

const execFileP = promisify(execFile);

const PORT = 8873;
const BASE_URL = `http://127.0.0.1:${PORT}`;
const SCENARIO = resolve(__dirname, '../../scenarios/two_room.json');

let workdir: string;
let server: ChildProcess | undefined;
let dom: JSDOM;
let client: ApiClient;

function container(): HTMLElement {
  const node = dom.window.document.createElement('div');
  dom.window.document.body.appendChild(node);
  return node;
}

async function waitForHealth(timeoutMs = 20_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(`${BASE_URL}/api/health`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error('service never became healthy');
    await new Promise((r) => setTimeout(r, 100));
  }
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), 'vigil-dash-'));
  await execFileP('vigil', [
    'eval', '--scenario', SCENARIO, '--fps', '1',
    '--workdir', workdir, '--out', join(workdir, 'report.json'),
  ]);
  server = spawn('vigil', ['--store', join(workdir, 'store'), 'serve', '--port', String(PORT)], {
    stdio: 'ignore',
  });
  await waitForHealth();
  dom = new JSDOM('<!doctype html><body></body>');
  client = new ApiClient(BASE_URL);
});

afterAll(() => {
  server?.kill('SIGTERM');
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe('timeline view against the live store', () => {
  it('renders exactly the segment count the API returns', async () => {
    const segments = await client.segments('cam_front');
    expect(segments.length).toBe(4); // 3 scripted events + background run

    const box = container();
    const window: [number, number] = [
      segments[0].start_ms,
      Math.max(...segments.map((s) => s.end_ms)),
    ];
    renderTimeline(box, 'cam_front', segments, window);
    expect(box.querySelectorAll('.timeline-block')).toHaveLength(segments.length);
  });

  it('renders the rear camera band independently', async () => {
    const segments = await client.segments('cam_rear');
    expect(segments.length).toBe(3);
    const box = container();
    renderTimeline(box, 'cam_rear', segments, [segments[0].start_ms, segments[2].end_ms]);
    expect(box.querySelectorAll('.timeline-block')).toHaveLength(3);
  });
});

describe('search view against the live store', () => {
  it('displays hits in exactly the API response order', async () => {
    const raw = await fetch(`${BASE_URL}/api/search?q=red+shirt&limit=10`);
    const rawHits = (await raw.json()) as Array<{ text: string; score: number }>;
    expect(rawHits.length).toBeGreaterThan(0);

    const hits = await client.search('red shirt', { limit: 10 });
    expect(hits.map((h) => h.text)).toEqual(rawHits.map((h) => h.text));

    const box = container();
    renderSearchResults(box, hits);
    const shown = [...box.querySelectorAll('.hit-text')].map((n) => n.textContent);
    expect(shown).toEqual(rawHits.map((h) => h.text));
    const scores = [...box.querySelectorAll('.hit-score')].map((n) => n.textContent);
    expect(scores).toEqual(rawHits.map((h) => h.score.toFixed(2)));
  });
});

describe('track view against the live store', () => {
  it('renders the trace ribbon in hop order', async () => {
    const trace = await client.trackEntity('man red shirt');
    expect(trace.hops.map((h) => h.camera_id)).toEqual(['cam_front', 'cam_rear']);

    const box = container();
    renderTrace(box, trace);
    const cameras = [...box.querySelectorAll('.trace-camera')].map((n) => n.textContent);
    expect(cameras).toEqual(['cam_front', 'cam_rear']);
    expect(box.querySelectorAll('.trace-arrow')).toHaveLength(1);
  });
});

describe('typed API errors reach the client', () => {
  it('surfaces UnknownCamera from the service', async () => {
    await expect(client.segments('ghost')).rejects.toMatchObject({
      errorName: 'UnknownCamera',
      status: 404,
    } satisfies Partial<ApiError>);
  });
});
