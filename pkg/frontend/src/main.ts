/**
 * Browser bootstrap: reads the view and filter state from the URL, loads
 * the embed payload for first paint, mounts the matching page controller,
 * and wires event delegation. All counts on screen come from API responses.
 */

import { ApiClient } from "./api.js";
import { BrowseController } from "./browse.js";
import { ViewController } from "./controller.js";
import { PieController } from "./pie.js";
import { renderError } from "./render.js";
import type { EmbedPayload, UiState } from "./types.js";
import { decodeUiState, encodeUiState } from "./urlstate.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function sink(id: string) {
  return (html: string) => {
    el(id).innerHTML = html;
  };
}

function pushUrl(state: UiState): void {
  const qs = encodeUiState(state);
  window.history.replaceState(null, "", qs ? `?${qs}` : window.location.pathname);
}

function pickField(
  embed: EmbedPayload,
  predicate: (ftype: string) => boolean,
  exclude: string[],
): string | null {
  for (const widget of embed.view.widgets) {
    if (widget.kind !== "filter_list" || !widget.field) {
      continue;
    }
    if (exclude.includes(widget.field)) {
      continue;
    }
    const spec = embed.schema.find((f) => f.name === widget.field);
    if (spec && predicate(spec.ftype)) {
      return widget.field;
    }
  }
  return null;
}

async function mount(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = params.get("api") ?? "";
  const client = new ApiClient(api, (url) => fetch(url));
  const urlState = decodeUiState(window.location.search);
  const app = el("app");

  if (!urlState.view) {
    app.innerHTML = renderError(
      "NoView",
      "open this page with ?view=<view id> (append f.Field=Key filters freely)",
    );
    return;
  }

  let embed: EmbedPayload;
  try {
    embed = await client.embed(urlState.view);
  } catch (err) {
    app.innerHTML = renderError("EmbedFailed", String(err));
    return;
  }

  let controller: ViewController;
  if (embed.view.kind === "geo") {
    app.innerHTML = [
      '<div id="status"></div><div id="error"></div>',
      '<section id="geo" aria-label="geography"></section>',
      '<section id="timeline" aria-label="timeline"></section>',
      '<section id="subjects" aria-label="subjects"></section>',
    ].join("");
    const geoField = embed.view.facet_field ?? "Location";
    const dateField = pickField(embed, (t) => t === "datetime", [geoField]);
    const subjectField = pickField(embed, (t) => t !== "datetime", [
      geoField,
      dateField ?? "",
    ]);
    controller = new BrowseController({
      client,
      viewId: embed.view.view_id,
      geoField,
      dateField: dateField ?? "Date",
      subjectField: subjectField ?? "Subject",
      sinks: {
        geo: sink("geo"),
        timeline: sink("timeline"),
        subjects: sink("subjects"),
        status: sink("status"),
      },
      errorSink: sink("error"),
      onStateChange: pushUrl,
    });
  } else {
    app.innerHTML = [
      '<div id="status"></div><div id="error"></div>',
      '<section id="view" aria-label="chart"></section>',
      '<aside id="widgets" aria-label="widgets"></aside>',
    ].join("");
    controller = new PieController({
      client,
      viewId: embed.view.view_id,
      sinks: { pie: sink("view"), widgets: sink("widgets"), status: sink("status") },
      errorSink: sink("error"),
      onStateChange: pushUrl,
    });
  }

  const hasFilters =
    Object.keys(urlState.selections).length > 0 || urlState.textQuery !== null;
  if (hasFilters) {
    await controller.initFromState(urlState);
  } else {
    controller.initFromPayload(embed.initial);
  }

  app.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest("[data-action]");
    if (!(target instanceof HTMLElement)) {
      return;
    }
    const action = target.dataset.action;
    if (action === "geo" && controller instanceof BrowseController) {
      void controller.toggleNode(target.dataset.node ?? "");
    } else if (action === "year" && controller instanceof BrowseController) {
      void controller.toggleYear(target.dataset.year ?? "");
    } else if (action === "subject" && controller instanceof BrowseController) {
      void controller.toggleSubject(target.dataset.key ?? "");
    } else if (action === "filter") {
      void controller.toggle(
        target.dataset.field ?? "",
        target.dataset.key ?? "",
      );
    }
  });

  app.addEventListener("input", (event) => {
    const target = event.target as HTMLElement;
    if (
      target instanceof HTMLInputElement &&
      target.dataset.action === "search" &&
      controller instanceof PieController
    ) {
      controller.onSearchInput(target.value);
    }
  });
}

void mount();
