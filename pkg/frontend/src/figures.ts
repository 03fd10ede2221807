/**
 * Figure builders. Each takes validated rows and returns a complete
 * SVG document; nothing here recomputes the plotted quantities.
 */
import type { Maxwl1Row, RandnormsRow, ReportRow } from "./schema.js";
import { SchemaError } from "./schema.js";
import {
  axes,
  circle,
  defaultFrame,
  document,
  extent,
  Frame,
  linearScale,
  logScale,
  polyline,
  text,
  xTicks,
  yTicks,
} from "./svg.js";

export const REGIME_PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
];

const DASH_DOT = "8 3 2 3";
const DOTTED = "2 3";

function plotArea(frame: Frame): {
  x: [number, number];
  y: [number, number];
} {
  return {
    x: [frame.margin.left, frame.width - frame.margin.right],
    y: [frame.height - frame.margin.bottom, frame.margin.top],
  };
}

function legendLine(
  x: number,
  y: number,
  color: string,
  label: string,
  dash?: string,
): string {
  const d = dash ? ` stroke-dasharray="${dash}"` : "";
  return (
    `<line x1="${x}" y1="${y}" x2="${x + 28}" y2="${y}" stroke="${color}" stroke-width="1.5"${d}/>` +
    text(x + 34, y + 4, label)
  );
}

/** Gamma sweep: phi colored by achieving-z regime, psi curves for reference. */
export function renderMaxwl1(rows: Maxwl1Row[]): string {
  const frame = defaultFrame;
  const area = plotArea(frame);
  const sx = logScale([rows[0].gamma, rows[rows.length - 1].gamma], area.x);
  const ys = rows.flatMap((r) => [r.phi, r.psi_xi, r.psi_xi_inf]);
  const sy = linearScale(extent(ys), area.y);

  const regimeColor = new Map<number, string>();
  for (const r of rows) {
    if (!regimeColor.has(r.regime)) {
      regimeColor.set(r.regime, REGIME_PALETTE[regimeColor.size % REGIME_PALETTE.length]);
    }
  }

  const body: string[] = [axes(frame)];
  // phi: one solid segment per run of equal regime, overlapping by one
  // point so the curve stays visually connected
  let start = 0;
  for (let i = 1; i <= rows.length; i++) {
    if (i === rows.length || rows[i].regime !== rows[start].regime) {
      const seg = rows.slice(start, Math.min(i + 1, rows.length));
      body.push(
        polyline(
          seg.map((r) => [sx(r.gamma), sy(r.phi)]),
          regimeColor.get(rows[start].regime)!,
          { width: 2 },
        ),
      );
      start = i;
    }
  }
  body.push(
    polyline(rows.map((r) => [sx(r.gamma), sy(r.psi_xi)]), "black", {
      dash: DASH_DOT,
    }),
    polyline(rows.map((r) => [sx(r.gamma), sy(r.psi_xi_inf)]), "black", {
      dash: DOTTED,
    }),
  );

  const decades = [];
  for (let e = Math.ceil(Math.log10(rows[0].gamma)); 10 ** e <= rows[rows.length - 1].gamma * 1.0001; e++) {
    decades.push(10 ** e);
  }
  body.push(
    xTicks(frame, sx, decades, (v) => `1e${Math.round(Math.log10(v))}`),
    yTicks(frame, sy, niceTicks(extent(ys)), (v) => String(v)),
    text(frame.width / 2, frame.height - 10, "gamma", { anchor: "middle" }),
  );
  let ly = frame.margin.top + 10;
  for (const [regime, color] of regimeColor) {
    body.push(legendLine(frame.width - 190, ly, color, `phi (regime ${regime})`));
    ly += 18;
  }
  body.push(
    legendLine(frame.width - 190, ly, "black", "psi(Xi)", DASH_DOT),
    legendLine(frame.width - 190, ly + 18, "black", "psi(Xi_inf)", DOTTED),
  );
  return document(frame, body);
}

/** Random norm families: quantity scatter on top, ratio panel below. */
export function renderRandnorms(rows: RandnormsRow[]): string {
  const frame: Frame = { ...defaultFrame, height: 560 };
  const split = 360;
  const topArea = {
    x: [frame.margin.left, frame.width - frame.margin.right] as [number, number],
    y: [split - 12, frame.margin.top] as [number, number],
  };
  const botArea = {
    x: topArea.x,
    y: [frame.height - frame.margin.bottom, split + 28] as [number, number],
  };
  const sx = linearScale([rows[0].index, rows[rows.length - 1].index], topArea.x);
  const top = rows.flatMap((r) => [r.phi, r.two_phi, r.psi_xi, r.psi_xi_inf, r.lower_bound]);
  const syTop = linearScale(extent(top), topArea.y);
  const ratios = rows.map((r) => r.phi_over_psi_inf);
  const syBot = linearScale(extent([1, ...ratios]), botArea.y);

  const series: Array<[keyof RandnormsRow, string]> = [
    ["two_phi", "#9467bd"],
    ["phi", "#1f77b4"],
    ["psi_xi", "#ff7f0e"],
    ["psi_xi_inf", "#2ca02c"],
    ["lower_bound", "#7f7f7f"],
  ];
  const body: string[] = [];
  for (const [key, color] of series) {
    for (const r of rows) {
      body.push(circle(sx(r.index), syTop(r[key] as number), 2.5, color));
    }
  }
  body.push(
    `<line x1="${botArea.x[0]}" y1="${syBot(1)}" x2="${botArea.x[1]}" y2="${syBot(1)}" stroke="#aaaaaa" stroke-dasharray="${DOTTED}"/>`,
  );
  for (const r of rows) {
    body.push(circle(sx(r.index), syBot(r.phi_over_psi_inf), 2.5, "#d62728"));
  }
  body.push(
    yTicks(frame, syTop, niceTicks(extent(top)), (v) => String(v)),
    yTicks(frame, syBot, niceTicks(extent([1, ...ratios])), (v) => String(v)),
    text(frame.width / 2, frame.height - 10, "norm index", { anchor: "middle" }),
    text(frame.margin.left, frame.margin.top - 8, "diameter and surrogates"),
    text(frame.margin.left, split + 20, "phi / psi(Xi_inf)"),
  );
  let ly = frame.margin.top + 10;
  for (const [key, color] of series) {
    body.push(legendLine(frame.width - 150, ly, color, String(key)));
    ly += 16;
  }
  return document(frame, body);
}

function convergedErrors(rows: ReportRow[]): Array<{ trial: number; ds: number; lasso: number }> {
  const out = [];
  for (const r of rows) {
    if (r.ds_converged && r.lasso_converged && r.prediction_error_ds !== null && r.prediction_error_lasso !== null) {
      out.push({ trial: r.trial, ds: r.prediction_error_ds, lasso: r.prediction_error_lasso });
    }
  }
  if (out.length === 0) {
    throw new SchemaError("no converged trials with prediction errors");
  }
  return out;
}

/** Per-trial prediction error curves for the two estimators. */
export function renderGain(rows: ReportRow[]): string {
  const frame = defaultFrame;
  const area = plotArea(frame);
  const pts = convergedErrors(rows);
  const sx = linearScale([pts[0].trial, pts[pts.length - 1].trial || 1], area.x);
  const ys = pts.flatMap((p) => [p.ds, p.lasso]);
  const sy = linearScale(extent([0, ...ys]), area.y);
  const body = [
    axes(frame),
    polyline(pts.map((p) => [sx(p.trial), sy(p.lasso)]), "#ff7f0e"),
    polyline(pts.map((p) => [sx(p.trial), sy(p.ds)]), "#1f77b4", { width: 2 }),
    yTicks(frame, sy, niceTicks(extent([0, ...ys])), (v) => String(v)),
    text(frame.width / 2, frame.height - 10, "trial", { anchor: "middle" }),
    legendLine(frame.width - 220, frame.margin.top + 10, "#1f77b4", "doubly-sparse error"),
    legendLine(frame.width - 220, frame.margin.top + 28, "#ff7f0e", "lasso error"),
  ];
  return document(frame, body);
}

/** Per-trial lambda against the oracle threshold 2*theta, both arms. */
export function renderCoverage(rows: ReportRow[]): string {
  const frame = defaultFrame;
  const area = plotArea(frame);
  const sx = linearScale([rows[0].trial, rows[rows.length - 1].trial || 1], area.x);
  const ys = rows.flatMap((r) => [r.lambda_ds, r.lambda_lasso, 2 * r.theta_kd, 2 * r.theta_l1]);
  const sy = linearScale(extent([0, ...ys]), area.y);
  const body = [
    axes(frame),
    polyline(rows.map((r) => [sx(r.trial), sy(2 * r.theta_kd)]), "#1f77b4", { dash: DOTTED }),
    polyline(rows.map((r) => [sx(r.trial), sy(r.lambda_ds)]), "#1f77b4", { width: 2 }),
    polyline(rows.map((r) => [sx(r.trial), sy(2 * r.theta_l1)]), "#ff7f0e", { dash: DOTTED }),
    polyline(rows.map((r) => [sx(r.trial), sy(r.lambda_lasso)]), "#ff7f0e", { width: 2 }),
    yTicks(frame, sy, niceTicks(extent([0, ...ys])), (v) => String(v)),
    text(frame.width / 2, frame.height - 10, "trial", { anchor: "middle" }),
    legendLine(frame.width - 240, frame.margin.top + 10, "#1f77b4", "lambda (doubly sparse)"),
    legendLine(frame.width - 240, frame.margin.top + 28, "#1f77b4", "2 theta (doubly sparse)", DOTTED),
    legendLine(frame.width - 240, frame.margin.top + 46, "#ff7f0e", "lambda (lasso)"),
    legendLine(frame.width - 240, frame.margin.top + 64, "#ff7f0e", "2 theta (lasso)", DOTTED),
  ];
  return document(frame, body);
}

function niceTicks([lo, hi]: [number, number], count = 5): number[] {
  const span = hi - lo;
  const step = 10 ** Math.floor(Math.log10(span / count));
  const mult = [1, 2, 5, 10].find((m) => span / (step * m) <= count + 1) ?? 10;
  const s = step * mult;
  const out = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12; v += s) {
    out.push(Number(v.toFixed(12)));
  }
  return out;
}
