// DOM render functions. Each is a pure function of the API payload it is
// given: same payload, same DOM. No filtering, no re-sorting — the operator
// sees exactly what the service returned, in the order it returned it.

import { layoutBlocks } from './layout';
import type { EntityTrace, SearchHit, Segment } from './types';

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function formatTime(ms: number): string {
  return new Date(ms).toISOString().replace('T', ' ').replace('.000Z', 'Z');
}

/** Red banner for API failures: views must never blank-fail silently. */
export function renderError(container: HTMLElement, message: string): void {
  container.replaceChildren(
    el(container.ownerDocument, 'div', 'error-banner', `request failed: ${message}`),
  );
}

export interface TimelineOptions {
  bandWidthPx?: number;
  onJumpToSearch?: (text: string) => void;
}

/**
 * Horizontal time band for one camera: one block per segment, positioned and
 * sized proportionally to its span within the window. Clicking a block
 * reveals the representative text plus a jump-to-search affordance.
 */
export function renderTimeline(
  container: HTMLElement,
  cameraId: string,
  segments: Segment[],
  window: [number, number],
  options: TimelineOptions = {},
): void {
  const doc = container.ownerDocument;
  const bandWidthPx = options.bandWidthPx ?? 1000;
  container.replaceChildren();
  container.appendChild(el(doc, 'h3', 'timeline-camera', cameraId));

  if (segments.length === 0) {
    container.appendChild(el(doc, 'div', 'timeline-empty', 'no activity in this window'));
    return;
  }

  const band = el(doc, 'div', 'timeline-band');
  band.style.position = 'relative';
  band.style.width = `${bandWidthPx}px`;
  const detail = el(doc, 'div', 'timeline-detail');
  const blocks = layoutBlocks(segments, window[0], window[1], bandWidthPx);

  segments.forEach((segment, i) => {
    const block = el(doc, 'div', 'timeline-block');
    block.style.position = 'absolute';
    block.style.left = `${blocks[i].leftPx}px`;
    block.style.width = `${blocks[i].widthPx}px`;
    block.title = segment.representative_text;
    block.dataset.startMs = String(segment.start_ms);
    block.dataset.endMs = String(segment.end_ms);
    block.addEventListener('click', () => {
      detail.replaceChildren();
      detail.appendChild(
        el(doc, 'span', 'timeline-detail-text',
           `${formatTime(segment.start_ms)} – ${formatTime(segment.end_ms)}: ` +
           segment.representative_text),
      );
      const jump = el(doc, 'button', 'jump-to-search', 'search this');
      jump.addEventListener('click', () => options.onJumpToSearch?.(segment.representative_text));
      detail.appendChild(jump);
    });
    band.appendChild(block);
  });

  container.appendChild(band);
  container.appendChild(detail);
}

/** Hit list in exactly the API's order; empty state is distinct from error. */
export function renderSearchResults(container: HTMLElement, hits: SearchHit[]): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (hits.length === 0) {
    container.appendChild(el(doc, 'div', 'search-empty', 'no matches'));
    return;
  }
  const list = el(doc, 'ol', 'search-results');
  for (const hit of hits) {
    const item = el(doc, 'li', 'search-hit');
    item.appendChild(el(doc, 'span', 'hit-score', hit.score.toFixed(2)));
    item.appendChild(el(doc, 'span', 'hit-camera', hit.camera_id));
    item.appendChild(el(doc, 'span', 'hit-time', formatTime(hit.start_ms)));
    item.appendChild(el(doc, 'span', 'hit-text', hit.text));
    list.appendChild(item);
  }
  container.appendChild(list);
}

/** Camera badges connected left-to-right in hop order, with time labels. */
export function renderTrace(container: HTMLElement, trace: EntityTrace): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (trace.hops.length === 0) {
    container.appendChild(el(doc, 'div', 'trace-empty', 'entity not seen in this window'));
    return;
  }
  const ribbon = el(doc, 'div', 'trace-ribbon');
  trace.hops.forEach((hop, i) => {
    if (i > 0) ribbon.appendChild(el(doc, 'span', 'trace-arrow', '→'));
    const badge = el(doc, 'span', 'trace-badge');
    badge.appendChild(el(doc, 'span', 'trace-camera', hop.camera_id));
    badge.appendChild(
      el(doc, 'span', 'trace-time', `${formatTime(hop.start_ms)} – ${formatTime(hop.end_ms)}`),
    );
    badge.title = hop.matched_text;
    ribbon.appendChild(badge);
  });
  container.appendChild(ribbon);
}
