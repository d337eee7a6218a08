/**
 * Cost-curve plumbing for the gateway's /al/cost rows.
 *
 * The chart carries exactly one point per iteration: rows are sorted by
 * iteration and, if a client accumulated duplicates across polls, the
 * latest row for an iteration wins.
 */

import type { ChartConfiguration } from "chart.js";
import type { CostRow } from "./api.js";

export interface CostSeries {
  iterations: number[];
  meanCost: number[];
  meanTrLen: number[];
}

export function costSeries(rows: readonly CostRow[]): CostSeries {
  const byIteration = new Map<number, CostRow>();
  for (const row of rows) byIteration.set(row.iteration, row);
  const ordered = [...byIteration.values()].sort((a, b) => a.iteration - b.iteration);
  return {
    iterations: ordered.map((r) => r.iteration),
    meanCost: ordered.map((r) => r.mean_cost),
    meanTrLen: ordered.map((r) => r.mean_tr_len),
  };
}

export function costChartConfig(rows: readonly CostRow[]): ChartConfiguration<"line"> {
  const series = costSeries(rows);
  return {
    type: "line",
    data: {
      labels: series.iterations,
      datasets: [
        {
          label: "mean annotation cost",
          data: series.meanCost,
          borderColor: "#1565C0",
          backgroundColor: "#1565C0",
          tension: 0,
        },
        {
          label: "mean reference size",
          data: series.meanTrLen,
          borderColor: "#9e9e9e",
          backgroundColor: "#9e9e9e",
          borderDash: [6, 4],
          tension: 0,
        },
      ],
    },
    options: {
      animation: false,
      scales: {
        x: { title: { display: true, text: "iteration" } },
        y: { title: { display: true, text: "edits per sample" }, beginAtZero: true },
      },
      plugins: { legend: { position: "bottom" } },
    },
  };
}
