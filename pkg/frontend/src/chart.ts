import type { PolicyInfo, SeriesPoint } from "./types.js";

// Pure string-in, string-out SVG rendering. Keeping the chart free of DOM
// calls lets the tests assert on markup directly and the browser app just
// assign innerHTML.

export type ChartView = "raw" | "hourly";

export interface ChartOptions {
  width?: number;
  height?: number;
  view?: ChartView;
}

export const CHART_WIDTH = 680;
export const CHART_HEIGHT = 240;

const PAD_LEFT = 44;
const PAD_RIGHT = 16;
const PAD_TOP = 14;
const PAD_BOTTOM = 24;
// one tick-lane row per failed sensor under the plot
const TICK_ROW = 12;

export function svgNum(value: number): number {
  return Math.round(value * 100) / 100;
}

/** Sensors that failed at least one window, in stable display order. */
export function failedSensors(points: SeriesPoint[]): string[] {
  const ids = new Set<string>();
  for (const point of points) {
    for (const label of point.labels ?? []) {
      if (label.label === 1) ids.add(label.sensor_id);
    }
  }
  return [...ids].sort();
}

/** Maps an expected value in [0, 1] to a y pixel above the tick lane. */
export function yForValue(value: number, height: number, tickRows: number): number {
  const floor = height - PAD_BOTTOM - tickRows * TICK_ROW;
  return PAD_TOP + (1 - value) * (floor - PAD_TOP);
}

export function xForTimestamp(ts: number, t0: number, t1: number, width: number): number {
  const span = width - PAD_LEFT - PAD_RIGHT;
  if (t1 === t0) return PAD_LEFT + span / 2;
  return PAD_LEFT + ((ts - t0) / (t1 - t0)) * span;
}

/**
 * Collapses the series to one point per hour, keeping the worst estimate of
 * each hour. This is a selection, not an aggregation: the dashboard must not
 * invent values the service never sent, so no averaging happens here.
 */
export function bucketHourly(points: SeriesPoint[]): SeriesPoint[] {
  const byHour = new Map<number, SeriesPoint>();
  for (const point of points) {
    const hour = Math.floor(point.timestamp / 3600);
    const kept = byHour.get(hour);
    if (!kept || point.expected_value > kept.expected_value) byHour.set(hour, point);
  }
  return [...byHour.values()].sort((a, b) => a.timestamp - b.timestamp);
}

function fmtTime(ts: number): string {
  // readings carry unix seconds in production and small cycle counters in
  // fixtures; only the former are worth rendering as wall clock
  if (ts > 1e9) {
    const d = new Date(ts * 1000);
    const hh = String(d.getHours()).padStart(2, "0");
    const mm = String(d.getMinutes()).padStart(2, "0");
    return `${hh}:${mm}`;
  }
  return String(ts);
}

export function renderConditionChart(
  series: SeriesPoint[],
  policy: PolicyInfo,
  options: ChartOptions = {},
): string {
  const width = options.width ?? CHART_WIDTH;
  const height = options.height ?? CHART_HEIGHT;
  const view = options.view ?? "raw";

  if (series.length === 0) {
    return (
      `<svg class="condition-chart empty" viewBox="0 0 ${width} ${height}" role="img">` +
      `<text class="empty-note" x="${svgNum(width / 2)}" y="${svgNum(height / 2)}" text-anchor="middle">` +
      `no condition estimates yet</text></svg>`
    );
  }

  const points = view === "hourly" ? bucketHourly(series) : series;
  const sensors = failedSensors(points);
  const rows = sensors.length;
  const firstPoint = points[0] as SeriesPoint;
  const lastPoint = points[points.length - 1] as SeriesPoint;
  const t0 = firstPoint.timestamp;
  const t1 = lastPoint.timestamp;
  const x = (ts: number) => svgNum(xForTimestamp(ts, t0, t1, width));
  const y = (value: number) => svgNum(yForValue(value, height, rows));
  const floor = y(0);
  const parts: string[] = [];

  parts.push(`<svg class="condition-chart" viewBox="0 0 ${width} ${height}" role="img">`);

  // frame and horizontal guides at 0, 0.5, 1
  for (const guide of [0, 0.5, 1]) {
    parts.push(
      `<line class="grid" x1="${PAD_LEFT}" y1="${y(guide)}" x2="${width - PAD_RIGHT}" y2="${y(guide)}"/>`,
      `<text class="axis" x="${PAD_LEFT - 6}" y="${svgNum(y(guide) + 3)}" text-anchor="end">${guide.toFixed(1)}</text>`,
    );
  }
  parts.push(
    `<text class="axis" x="${PAD_LEFT}" y="${height - 6}">${fmtTime(t0)}</text>`,
    `<text class="axis" x="${width - PAD_RIGHT}" y="${height - 6}" text-anchor="end">${fmtTime(t1)}</text>`,
  );

  // policy threshold, the red dashed line of the operating scenario
  const ty = y(policy.threshold);
  parts.push(
    `<line class="threshold" data-threshold="${policy.threshold}" x1="${PAD_LEFT}" y1="${ty}" ` +
      `x2="${width - PAD_RIGHT}" y2="${ty}" stroke-dasharray="6 4"/>`,
    `<text class="threshold-label" x="${width - PAD_RIGHT}" y="${svgNum(ty - 4)}" text-anchor="end">` +
      `${policy.style} threshold ${policy.threshold}</text>`,
  );

  const line = points.map((p) => `${x(p.timestamp)},${y(p.expected_value)}`).join(" ");
  parts.push(`<polyline class="ev-line" fill="none" points="${line}"/>`);

  for (const p of points) {
    const alarm = p.intervene === 1;
    parts.push(
      `<circle class="${alarm ? "pt alarm" : "pt"}" cx="${x(p.timestamp)}" cy="${y(p.expected_value)}" ` +
        `r="${alarm ? 4.5 : 3}" data-seq="${p.seq}" data-e="${p.expected_value}">` +
        `<title>E=${p.expected_value} t=${p.timestamp}</title></circle>`,
    );
  }

  // per-sensor failure ticks below the plot
  sensors.forEach((sensorId, row) => {
    const rowY = svgNum(floor + 6 + row * TICK_ROW);
    parts.push(
      `<text class="axis sensor-row" x="${PAD_LEFT - 6}" y="${svgNum(rowY + 7)}" text-anchor="end">${sensorId}</text>`,
    );
    for (const p of points) {
      for (const label of p.labels ?? []) {
        if (label.sensor_id === sensorId && label.label === 1) {
          parts.push(
            `<line class="fail-tick" data-sensor="${sensorId}" x1="${x(p.timestamp)}" y1="${rowY}" ` +
              `x2="${x(p.timestamp)}" y2="${svgNum(rowY + 8)}"/>`,
          );
        }
      }
    }
  });

  parts.push("</svg>");
  return parts.join("");
}
