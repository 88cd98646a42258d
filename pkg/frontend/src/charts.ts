/** Grouped-bar SVG charts rendered from server-exported report aggregates.
 *
 * The UI computes no metric: every bar value is a field from the report.
 * Bars carry their value as a text label; axes stay unlabelled so the only
 * numbers on screen are the server's.
 */

import type { ExperimentReport, MetricKey } from "./types";

const BAR_WIDTH = 26;
const BAR_GAP = 6;
const GROUP_GAP = 30;
const CHART_HEIGHT = 160;
const LABEL_SPACE = 36;

const TASK_COLORS = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1"];

export function formatMetric(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(1);
}

export interface GroupedBarData {
  title: string;
  /** group label -> series label -> value */
  groups: { label: string; bars: { series: string; value: number }[] }[];
}

export function chartData(
  report: ExperimentReport,
  metric: MetricKey,
  title: string,
): GroupedBarData {
  const groups = report.plan.conditions.map((condition) => ({
    label: condition,
    bars: report.plan.tasks.flatMap((taskId) => {
      const cell = report.aggregates[taskId]?.[condition];
      if (!cell) {
        return [];
      }
      return [{ series: taskId, value: cell[metric] }];
    }),
  }));
  return { title, groups };
}

export function groupedBarSvg(data: GroupedBarData): string {
  const values = data.groups.flatMap((g) => g.bars.map((b) => b.value));
  if (values.length === 0) {
    return `<p class="empty">no data</p>`;
  }
  const top = Math.max(...values, 0);
  const bottom = Math.min(...values, 0);
  const span = top - bottom || 1;
  const scale = (CHART_HEIGHT - 24) / span;
  const zeroY = 12 + top * scale;

  const seriesNames = [...new Set(data.groups.flatMap((g) => g.bars.map((b) => b.series)))];
  const color = (series: string) =>
    TASK_COLORS[seriesNames.indexOf(series) % TASK_COLORS.length];

  let x = GROUP_GAP;
  const parts: string[] = [];
  for (const group of data.groups) {
    const groupStart = x;
    for (const bar of group.bars) {
      const height = Math.abs(bar.value) * scale;
      const y = bar.value >= 0 ? zeroY - height : zeroY;
      const labelY = bar.value >= 0 ? y - 4 : y + height + 12;
      parts.push(
        `<rect x="${x}" y="${y.toFixed(1)}" width="${BAR_WIDTH}" ` +
          `height="${height.toFixed(1)}" fill="${color(bar.series)}">` +
          `<title>${group.label} / ${bar.series}</title></rect>`,
        `<text x="${x + BAR_WIDTH / 2}" y="${labelY.toFixed(1)}" ` +
          `class="bar-value" text-anchor="middle">${formatMetric(bar.value)}</text>`,
      );
      x += BAR_WIDTH + BAR_GAP;
    }
    const center = (groupStart + x - BAR_GAP) / 2;
    parts.push(
      `<text x="${center}" y="${CHART_HEIGHT + LABEL_SPACE - 20}" ` +
        `class="group-label" text-anchor="middle">${group.label}</text>`,
    );
    x += GROUP_GAP;
  }
  const legend = seriesNames
    .map(
      (name, i) =>
        `<span class="legend-item"><span class="swatch" ` +
        `style="background:${TASK_COLORS[i % TASK_COLORS.length]}"></span>${name}</span>`,
    )
    .join(" ");
  const width = x;
  return (
    `<figure class="chart"><figcaption>${data.title}</figcaption>` +
    `<svg viewBox="0 0 ${width} ${CHART_HEIGHT + LABEL_SPACE}" role="img" ` +
    `aria-label="${data.title}">` +
    `<line x1="0" y1="${zeroY.toFixed(1)}" x2="${width}" y2="${zeroY.toFixed(1)}" ` +
    `class="axis"/>` +
    parts.join("") +
    `</svg><div class="legend">${legend}</div></figure>`
  );
}
