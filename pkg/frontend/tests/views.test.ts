import { beforeEach, describe, expect, it, vi } from 'vitest';

import type { EntityTrace, SearchHit, Segment } from '../src/types';
import { renderError, renderSearchResults, renderTimeline, renderTrace } from '../src/views';

function segment(start: number, end: number, text: string, camera = 'cam_a'): Segment {
  return {
    camera_id: camera,
    start_ms: start,
    end_ms: end,
    representative_text: text,
    frame_count: 1,
  };
}

function hit(text: string, score: number, start = 0): SearchHit {
  return { kind: 'segment', camera_id: 'cam_a', start_ms: start, end_ms: start + 1, text, score };
}

let container: HTMLElement;

beforeEach(() => {
  container = document.createElement('div');
  document.body.replaceChildren(container);
});

describe('renderTimeline', () => {
  it('renders one block per segment, in order', () => {
    renderTimeline(container, 'cam_a', [segment(0, 5000, 'a'), segment(6000, 7000, 'b')], [0, 10_000]);
    const blocks = container.querySelectorAll('.timeline-block');
    expect(blocks).toHaveLength(2);
    expect((blocks[0] as HTMLElement).title).toBe('a');
    expect((blocks[1] as HTMLElement).title).toBe('b');
  });

  it('block widths reflect durations proportionally', () => {
    renderTimeline(
      container, 'cam_a',
      [segment(0, 5000, 'long'), segment(6000, 7000, 'short')],
      [0, 10_000], { bandWidthPx: 1000 },
    );
    const blocks = container.querySelectorAll<HTMLElement>('.timeline-block');
    const widths = [...blocks].map((b) => parseInt(b.style.width, 10));
    expect(Math.abs(widths[0] / widths[1] - 5)).toBeLessThanOrEqual(0.1);
  });

  it('shows the no-activity placeholder for an empty window', () => {
    renderTimeline(container, 'cam_a', [], [0, 10_000]);
    expect(container.querySelector('.timeline-empty')).not.toBeNull();
    expect(container.querySelector('.timeline-block')).toBeNull();
  });

  it('click reveals text and a jump-to-search affordance', () => {
    const onJump = vi.fn();
    renderTimeline(container, 'cam_a', [segment(0, 5000, 'a man walks')], [0, 10_000], {
      onJumpToSearch: onJump,
    });
    (container.querySelector('.timeline-block') as HTMLElement).click();
    expect(container.querySelector('.timeline-detail')!.textContent).toContain('a man walks');
    (container.querySelector('.jump-to-search') as HTMLElement).click();
    expect(onJump).toHaveBeenCalledWith('a man walks');
  });

  it('is a pure function of the payload', () => {
    const segments = [segment(0, 5000, 'a'), segment(6000, 7000, 'b')];
    renderTimeline(container, 'cam_a', segments, [0, 10_000]);
    const first = container.innerHTML;
    renderTimeline(container, 'cam_a', segments, [0, 10_000]);
    expect(container.innerHTML).toBe(first);
  });
});

describe('renderSearchResults', () => {
  it('lists hits in exactly the given order, no re-ranking', () => {
    const hits = [hit('third by score', 0.4), hit('first', 1.0), hit('second', 0.7)];
    renderSearchResults(container, hits);
    const texts = [...container.querySelectorAll('.hit-text')].map((n) => n.textContent);
    expect(texts).toEqual(['third by score', 'first', 'second']);
  });

  it('shows scores and cameras', () => {
    renderSearchResults(container, [hit('a man', 0.5)]);
    expect(container.querySelector('.hit-score')!.textContent).toBe('0.50');
    expect(container.querySelector('.hit-camera')!.textContent).toBe('cam_a');
  });

  it('empty result state is distinct from the error state', () => {
    renderSearchResults(container, []);
    expect(container.querySelector('.search-empty')).not.toBeNull();
    expect(container.querySelector('.error-banner')).toBeNull();
    renderError(container, 'boom');
    expect(container.querySelector('.error-banner')).not.toBeNull();
    expect(container.querySelector('.search-empty')).toBeNull();
  });
});

describe('renderTrace', () => {
  const twoHops: EntityTrace = {
    query: 'man red shirt',
    hops: [
      { camera_id: 'cam_a', start_ms: 0, end_ms: 9000, matched_text: 'a man in a red shirt' },
      { camera_id: 'cam_b', start_ms: 12_000, end_ms: 19_000, matched_text: 'man with red shirt' },
    ],
  };

  it('renders two badges joined by one arrow', () => {
    renderTrace(container, twoHops);
    expect(container.querySelectorAll('.trace-badge')).toHaveLength(2);
    expect(container.querySelectorAll('.trace-arrow')).toHaveLength(1);
    const cameras = [...container.querySelectorAll('.trace-camera')].map((n) => n.textContent);
    expect(cameras).toEqual(['cam_a', 'cam_b']);
  });

  it('badges carry time labels', () => {
    renderTrace(container, twoHops);
    expect(container.querySelectorAll('.trace-time')).toHaveLength(2);
  });

  it('zero hops shows the empty panel', () => {
    renderTrace(container, { query: 'x', hops: [] });
    expect(container.querySelector('.trace-empty')).not.toBeNull();
    expect(container.querySelector('.trace-badge')).toBeNull();
  });
});

describe('renderError', () => {
  it('never blank-fails', () => {
    renderError(container, 'connection refused');
    expect(container.textContent).toContain('request failed');
    expect(container.textContent).toContain('connection refused');
  });
});
