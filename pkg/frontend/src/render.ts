/**
 * Pure HTML renderers: payload in, markup string out.
 *
 * Counts and percentages print verbatim from the response inside
 * `.count` / `.pct` spans (the single-source-of-truth tests key on those),
 * and interactive elements carry data attributes for event delegation.
 * Choices whose projected result is empty get the `dead` class: greyed out,
 * never hidden, so users see why a path is closed instead of hitting an
 * empty result.
 */

import type {
  BucketJson,
  GeoNodeJson,
  QueryResponse,
  UiState,
  WidgetJson,
} from "./types.js";
import { isSelected } from "./urlstate.js";

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function attr(raw: string): string {
  return escapeHtml(raw);
}

// -- browse page ------------------------------------------------------------

export function renderGeoTree(
  nodes: GeoNodeJson[],
  state: UiState,
  field: string,
): string {
  const items = nodes.map((node) => renderGeoNode(node, state, field)).join("");
  return `<ul class="geo-tree">${items}</ul>`;
}

function renderGeoNode(node: GeoNodeJson, state: UiState, field: string): string {
  const classes = ["geo-node", `geo-${node.level}`];
  if (isSelected(state, field, node.name)) {
    classes.push("selected");
  }
  if (node.count === 0) {
    classes.push("dead");
  }
  const children = node.children.length
    ? `<ul>${node.children.map((c) => renderGeoNode(c, state, field)).join("")}</ul>`
    : "";
  return (
    `<li class="${classes.join(" ")}">` +
    `<button type="button" data-action="geo" data-node="${attr(node.name)}">` +
    `${escapeHtml(node.name)} <span class="count">${node.count}</span>` +
    `</button>${children}</li>`
  );
}

/** Year buckets as proportional bars; labels come straight from the keys. */
export function renderTimeline(
  buckets: { key: string; count: number }[],
): string {
  if (buckets.length === 0) {
    return `<div class="timeline empty">no dated records</div>`;
  }
  const years = buckets
    .filter((b) => /^\d+$/.test(b.key))
    .map((b) => ({ year: Number(b.key), count: b.count }));
  years.sort((a, b) => a.year - b.year);
  const rest = buckets.filter((b) => !/^\d+$/.test(b.key));
  const max = Math.max(1, ...years.map((y) => y.count));
  const bars: string[] = [];
  if (years.length > 0) {
    const first = years[0]!.year;
    const last = years[years.length - 1]!.year;
    const byYear = new Map(years.map((y) => [y.year, y.count]));
    for (let year = first; year <= last; year += 1) {
      const count = byYear.get(year) ?? 0;
      const height = Math.round((100 * count) / max);
      const label =
        count > 0
          ? `${year}: <span class="count">${count}</span>`
          : `${year}`;
      bars.push(
        `<div class="bar${count === 0 ? " dead" : ""}" ` +
          `data-action="year" data-year="${year}" ` +
          `style="height:${height}%"><span class="bar-label">${label}</span></div>`,
      );
    }
  }
  const restHtml = rest
    .map(
      (b) =>
        `<div class="bar special" data-key="${attr(b.key)}">` +
        `${escapeHtml(b.key)}: <span class="count">${b.count}</span></div>`,
    )
    .join("");
  return `<div class="timeline">${bars.join("")}${restHtml}</div>`;
}

export function renderSubjects(buckets: { key: string; count: number }[]): string {
  const items = buckets
    .map(
      (b) =>
        `<li><button type="button" data-action="subject" data-key="${attr(b.key)}">` +
        `${escapeHtml(b.key)}</button> <span class="count">${b.count}</span></li>`,
    )
    .join("");
  return `<ol class="subjects">${items}</ol>`;
}

// -- pie page -----------------------------------------------------------------

const PIE_COLORS = [
  "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
  "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

/** SVG pie plus a legend; percentages print exactly as the API sent them. */
export function renderPie(buckets: BucketJson[], total: number): string {
  if (buckets.length === 0 || total === 0) {
    return `<div class="pie empty">no records match</div>`;
  }
  const sum = buckets.reduce((acc, b) => acc + b.count, 0);
  let angle = -Math.PI / 2;
  const slices: string[] = [];
  buckets.forEach((b, i) => {
    const sweep = (2 * Math.PI * b.count) / sum;
    const color = PIE_COLORS[i % PIE_COLORS.length];
    if (buckets.length === 1) {
      slices.push(`<circle cx="0" cy="0" r="1" fill="${color}"></circle>`);
    } else {
      const x0 = Math.cos(angle);
      const y0 = Math.sin(angle);
      const x1 = Math.cos(angle + sweep);
      const y1 = Math.sin(angle + sweep);
      const large = sweep > Math.PI ? 1 : 0;
      slices.push(
        `<path d="M0,0 L${x0.toFixed(5)},${y0.toFixed(5)} ` +
          `A1,1 0 ${large} 1 ${x1.toFixed(5)},${y1.toFixed(5)} Z" fill="${color}">` +
          `<title>${escapeHtml(b.label)}</title></path>`,
      );
    }
    angle += sweep;
  });
  const legend = buckets
    .map((b, i) => {
      const pct =
        b.percentage !== undefined
          ? ` <span class="pct">${b.percentage}%</span>`
          : "";
      return (
        `<li><span class="swatch" style="background:${PIE_COLORS[i % PIE_COLORS.length]}"></span>` +
        `${escapeHtml(b.label)}${pct} <span class="count">${b.count}</span></li>`
      );
    })
    .join("");
  return (
    `<div class="pie"><svg viewBox="-1.05 -1.05 2.1 2.1">${slices.join("")}</svg>` +
    `<ul class="legend">${legend}</ul></div>`
  );
}

// -- widgets ------------------------------------------------------------------

export function renderWidget(widget: WidgetJson, state: UiState): string {
  if (widget.kind === "search_box") {
    const value = widget.query ?? "";
    return (
      `<div class="widget search"><input type="search" data-action="search" ` +
      `placeholder="search" value="${attr(value)}"></div>`
    );
  }
  if (widget.kind === "logo") {
    return widget.url
      ? `<div class="widget logo"><img src="${attr(widget.url)}" alt="logo"></div>`
      : "";
  }
  if ((widget.kind === "filter_list" || widget.kind === "tag_cloud") && widget.field) {
    const field = widget.field;
    const entries = (widget.buckets ?? []).map((b) => {
      const classes = [];
      if (b.selected) {
        classes.push("selected");
      }
      if (b.projected === 0) {
        classes.push("dead"); // greyed, not hidden: no dead-end selections
      }
      const size =
        widget.kind === "tag_cloud" && b.weight !== undefined
          ? ` style="font-size:${(0.8 + b.weight).toFixed(2)}em"`
          : "";
      return (
        `<li class="${classes.join(" ")}">` +
        `<button type="button" data-action="filter" data-field="${attr(field)}" ` +
        `data-key="${attr(b.key)}"${size}>${escapeHtml(b.key)}</button> ` +
        `<span class="count">${b.count}</span></li>`
      );
    });
    return (
      `<div class="widget ${widget.kind}" data-field="${attr(field)}">` +
      `<h3>${escapeHtml(field)}</h3><ul>${entries.join("")}</ul></div>`
    );
  }
  return "";
}

export function renderWidgets(payload: QueryResponse, state: UiState): string {
  return payload.widgets.map((w) => renderWidget(w, state)).join("");
}

export function renderTotal(total: number): string {
  return `<span class="total"><span class="count">${total}</span> records</span>`;
}

export function renderError(code: string, message: string): string {
  return (
    `<div class="error-banner" role="alert">${escapeHtml(code)}: ` +
    `${escapeHtml(message)}</div>`
  );
}

/** Widget buckets by field, as rendered: key order preserved from the API. */
export function widgetBuckets(
  payload: QueryResponse,
  field: string,
): { key: string; count: number }[] {
  for (const widget of payload.widgets) {
    if (widget.field === field && widget.buckets) {
      return widget.buckets.map((b) => ({ key: b.key, count: b.count }));
    }
  }
  return [];
}
