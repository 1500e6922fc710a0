/** Dependency-free SVG chart primitives shared by the figure renderers. */

export const WIDTH = 880;
export const HEIGHT = 520;
export const MARGIN = { top: 48, right: 24, bottom: 56, left: 72 };

export const PALETTE = [
  "#4361ee", "#e63946", "#2d6a4f", "#f77f00",
  "#7209b7", "#0096c7", "#bc4749", "#5f5f5f",
];

export interface Series {
  label: string;
  color: string;
  points: Array<[number, number]>;
}

export function color(index: number): string {
  return PALETTE[index % PALETTE.length]!;
}

export function escapeXml(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
    .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export interface Scale {
  (value: number): number;
  min: number;
  max: number;
}

export function linearScale(min: number, max: number, outMin: number, outMax: number): Scale {
  const span = max - min || 1;
  const fn = ((value: number) =>
    outMin + ((value - min) / span) * (outMax - outMin)) as Scale;
  fn.min = min;
  fn.max = max;
  return fn;
}

export function niceTicks(min: number, max: number, count = 6): number[] {
  const span = max - min || 1;
  const rawStep = span / count;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * power)
    .find((s) => span / s <= count) ?? 10 * power;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

export function formatTick(value: number): string {
  if (Math.abs(value) >= 10000) return value.toExponential(1).replace("e+", "e");
  if (Number.isInteger(value)) return String(value);
  return String(Number(value.toPrecision(4)));
}

export class Chart {
  private parts: string[] = [];
  readonly x: Scale;
  readonly y: Scale;

  constructor(title: string, xLabel: string, yLabel: string,
              xRange: [number, number], yRange: [number, number]) {
    this.x = linearScale(xRange[0], xRange[1], MARGIN.left, WIDTH - MARGIN.right);
    this.y = linearScale(yRange[0], yRange[1], HEIGHT - MARGIN.bottom, MARGIN.top);
    this.parts.push(
      `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
      `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16" ` +
      `font-family="sans-serif" font-weight="bold">${escapeXml(title)}</text>`,
    );
    this.axes(xLabel, yLabel);
  }

  private axes(xLabel: string, yLabel: string): void {
    const x0 = MARGIN.left;
    const x1 = WIDTH - MARGIN.right;
    const y0 = HEIGHT - MARGIN.bottom;
    const y1 = MARGIN.top;
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333"/>`,
    );
    for (const tick of niceTicks(this.x.min, this.x.max)) {
      const px = this.x(tick);
      this.parts.push(
        `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 5}" stroke="#333"/>`,
        `<text x="${px}" y="${y0 + 20}" text-anchor="middle" font-size="11" ` +
        `font-family="sans-serif">${formatTick(tick)}</text>`,
      );
    }
    for (const tick of niceTicks(this.y.min, this.y.max)) {
      const py = this.y(tick);
      this.parts.push(
        `<line x1="${x0 - 5}" y1="${py}" x2="${x0}" y2="${py}" stroke="#333"/>`,
        `<line x1="${x0}" y1="${py}" x2="${x1}" y2="${py}" stroke="#eee"/>`,
        `<text x="${x0 - 8}" y="${py + 4}" text-anchor="end" font-size="11" ` +
        `font-family="sans-serif">${formatTick(tick)}</text>`,
      );
    }
    this.parts.push(
      `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 14}" text-anchor="middle" ` +
      `font-size="13" font-family="sans-serif">${escapeXml(xLabel)}</text>`,
      `<text x="18" y="${(y0 + y1) / 2}" text-anchor="middle" font-size="13" ` +
      `font-family="sans-serif" transform="rotate(-90 18 ${(y0 + y1) / 2})">` +
      `${escapeXml(yLabel)}</text>`,
    );
  }

  polyline(series: Series, width = 1.5): void {
    const coords = series.points
      .map(([px, py]) => `${this.x(px).toFixed(2)},${this.y(py).toFixed(2)}`)
      .join(" ");
    this.parts.push(
      `<polyline points="${coords}" fill="none" stroke="${series.color}" ` +
      `stroke-width="${width}"/>`,
    );
  }

  steps(series: Series, width = 1.5): void {
    if (series.points.length === 0) return;
    const segments: string[] = [];
    let previous: [number, number] | undefined;
    for (const [px, py] of series.points) {
      const sx = this.x(px).toFixed(2);
      const sy = this.y(py).toFixed(2);
      if (previous === undefined) {
        segments.push(`M ${sx} ${sy}`);
      } else {
        segments.push(`H ${sx}`, `V ${sy}`);
      }
      previous = [px, py];
    }
    this.parts.push(
      `<path d="${segments.join(" ")}" fill="none" stroke="${series.color}" ` +
      `stroke-width="${width}"/>`,
    );
  }

  bar(x: number, widthUnits: number, height: number, fill: string): void {
    const px = this.x(x);
    const pw = this.x(x + widthUnits) - px;
    const py = this.y(height);
    const base = this.y(Math.max(this.y.min, 0));
    this.parts.push(
      `<rect x="${px.toFixed(2)}" y="${py.toFixed(2)}" width="${pw.toFixed(2)}" ` +
      `height="${(base - py).toFixed(2)}" fill="${fill}"/>`,
    );
  }

  text(x: number, y: number, content: string, anchor = "middle", size = 11): void {
    this.parts.push(
      `<text x="${this.x(x).toFixed(2)}" y="${(this.y(y) - 6).toFixed(2)}" ` +
      `text-anchor="${anchor}" font-size="${size}" font-family="sans-serif">` +
      `${escapeXml(content)}</text>`,
    );
  }

  legend(entries: Array<{ label: string; color: string }>): void {
    entries.forEach((entry, index) => {
      const y = MARGIN.top + 8 + index * 18;
      const x = WIDTH - MARGIN.right - 190;
      this.parts.push(
        `<rect x="${x}" y="${y - 9}" width="12" height="12" fill="${entry.color}"/>`,
        `<text x="${x + 18}" y="${y + 2}" font-size="12" font-family="sans-serif">` +
        `${escapeXml(entry.label)}</text>`,
      );
    });
  }

  caption(text: string): void {
    this.parts.push(
      `<text x="${MARGIN.left}" y="${HEIGHT - 2}" font-size="10" fill="#555" ` +
      `font-family="sans-serif">${escapeXml(text)}</text>`,
    );
  }

  render(): string {
    return `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" ` +
      `height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
      this.parts.join("\n") + "\n</svg>\n";
  }
}
