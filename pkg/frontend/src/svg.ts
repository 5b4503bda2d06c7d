/**
 * Minimal deterministic SVG plotting: fixed canvas, no timestamps, numbers
 * serialized with JavaScript's canonical shortest round-trip formatting, so
 * identical data always produces identical bytes.
 */

export type Scale = (v: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function logScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const span = l1 - l0 || 1;
  return (v) => r0 + ((Math.log10(v) - l0) / span) * (r1 - r0);
}

export function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); e <= Math.floor(Math.log10(hi) + 1e-9); e++) {
    ticks.push(Math.pow(10, e));
  }
  return ticks;
}

const WIDTH = 640;
const HEIGHT = 420;
const MARGIN = { left: 70, right: 20, top: 40, bottom: 50 };

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export interface SeriesSpec {
  label: string;
  x: number[];
  y: number[];
  color: string;
  marker?: boolean;
}

export interface FigureSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xLog?: boolean;
  yLog?: boolean;
  series: SeriesSpec[];
  annotations: string[];
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmtTick(v: number): string {
  const e = Math.log10(v);
  if (Number.isInteger(e)) return `1e${e}`;
  return String(v);
}

export function renderFigure(spec: FigureSpec): string {
  const xs = spec.series.flatMap((s) => s.x);
  const ys = spec.series.flatMap((s) => s.y).filter((v) => Number.isFinite(v));
  const xlo = Math.min(...xs);
  const xhi = Math.max(...xs);
  const positive = (v: number) => (v > 0 ? v : Number.POSITIVE_INFINITY);
  const ylo = spec.yLog ? Math.min(...ys.map(positive)) : Math.min(...ys);
  const yhi = Math.max(...ys);
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  const sx = spec.xLog ? logScale(xlo, xhi, x0, x1) : linearScale(xlo, xhi, x0, x1);
  const sy = spec.yLog ? logScale(ylo, yhi, y0, y1) : linearScale(ylo, yhi, y0, y1);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">${esc(spec.title)}</text>`,
  );
  // frame
  parts.push(
    `<rect x="${x0}" y="${y1}" width="${x1 - x0}" height="${y0 - y1}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  // ticks
  const xticks = spec.xLog ? logTicks(xlo, xhi) : [xlo, (xlo + xhi) / 2, xhi];
  for (const t of xticks) {
    const px = sx(t);
    parts.push(`<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${px}" y="${y0 + 18}" text-anchor="middle" font-family="sans-serif" font-size="11">${esc(spec.xLog ? fmtTick(t) : String(t))}</text>`,
    );
  }
  const yticks = spec.yLog ? logTicks(ylo, yhi) : [ylo, (ylo + yhi) / 2, yhi];
  for (const t of yticks) {
    const py = sy(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`);
    parts.push(
      `<text x="${x0 - 8}" y="${py + 4}" text-anchor="end" font-family="sans-serif" font-size="11">${esc(spec.yLog ? fmtTick(t) : String(t))}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-family="sans-serif" font-size="13">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 ${(y0 + y1) / 2})">${esc(spec.yLabel)}</text>`,
  );
  // data
  spec.series.forEach((s, i) => {
    const pts = s.x
      .map((xv, k) => [xv, s.y[k]] as const)
      .filter(([, yv]) => Number.isFinite(yv) && (!spec.yLog || yv > 0));
    const coords = pts.map(([xv, yv]) => `${sx(xv)},${sy(yv)}`).join(" ");
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${s.color}" stroke-width="1.5"/>`,
    );
    if (s.marker !== false) {
      for (const [xv, yv] of pts) {
        parts.push(`<circle cx="${sx(xv)}" cy="${sy(yv)}" r="3" fill="${s.color}"/>`);
      }
    }
    parts.push(
      `<text x="${x1 - 8}" y="${y1 + 16 + 14 * i}" text-anchor="end" font-family="sans-serif" font-size="11" fill="${s.color}">${esc(s.label)}</text>`,
    );
  });
  spec.annotations.forEach((a, i) => {
    parts.push(
      `<text x="${x0 + 8}" y="${y1 + 16 + 14 * i}" font-family="sans-serif" font-size="11" fill="#333">${esc(a)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
