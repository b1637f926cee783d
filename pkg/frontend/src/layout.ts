// Pure layout arithmetic for the timeline band: segment spans map linearly
// onto pixels, so block widths stay proportional to durations.

export interface Span {
  start_ms: number;
  end_ms: number;
}

export interface Block {
  leftPx: number;
  widthPx: number;
}

export function layoutBlocks(
  spans: Span[],
  windowFrom: number,
  windowTo: number,
  bandWidthPx: number,
  minBlockPx = 1,
): Block[] {
  const windowSpan = windowTo - windowFrom;
  if (windowSpan <= 0 || bandWidthPx <= 0) {
    return spans.map(() => ({ leftPx: 0, widthPx: minBlockPx }));
  }
  const scale = bandWidthPx / windowSpan;
  return spans.map((span) => ({
    leftPx: Math.round((span.start_ms - windowFrom) * scale),
    widthPx: Math.max(minBlockPx, Math.round((span.end_ms - span.start_ms) * scale)),
  }));
}
