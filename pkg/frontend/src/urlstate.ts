/**
 * URL serialization of the exploration state.
 *
 * Uses the engine's own query grammar (repeatable `f.<field>=<key>` plus
 * `q=`) with an extra `view=` parameter, so any UI state is a shareable
 * link and reloading a URL reproduces the identical rendered state.
 */

import type { UiState } from "./types.js";

/** Canonical query string (sorted fields and keys, no leading '?'). */
export function encodeUiState(state: UiState): string {
  const parts: string[] = [];
  if (state.view) {
    parts.push(`view=${encodeURIComponent(state.view)}`);
  }
  for (const field of Object.keys(state.selections).sort()) {
    const keys = state.selections[field] ?? [];
    for (const key of [...keys].sort()) {
      parts.push(`f.${encodeURIComponent(field)}=${encodeURIComponent(key)}`);
    }
  }
  if (state.textQuery !== null && state.textQuery.trim() !== "") {
    parts.push(`q=${encodeURIComponent(state.textQuery)}`);
  }
  return parts.join("&");
}

export function decodeUiState(query: string): UiState {
  const state: UiState = { view: null, selections: {}, textQuery: null };
  const trimmed = query.startsWith("?") ? query.slice(1) : query;
  if (trimmed === "") {
    return state;
  }
  for (const piece of trimmed.split("&")) {
    if (!piece) {
      continue;
    }
    const eq = piece.indexOf("=");
    const rawName = eq < 0 ? piece : piece.slice(0, eq);
    const rawValue = eq < 0 ? "" : piece.slice(eq + 1);
    const name = decodeURIComponent(rawName);
    const value = decodeURIComponent(rawValue);
    if (name === "view") {
      state.view = value;
    } else if (name === "q") {
      state.textQuery = value;
    } else if (name.startsWith("f.")) {
      const field = name.slice(2);
      const keys = state.selections[field] ?? [];
      if (!keys.includes(value)) {
        keys.push(value);
      }
      state.selections[field] = keys;
    }
  }
  for (const field of Object.keys(state.selections)) {
    state.selections[field]?.sort();
  }
  return state;
}

/** The engine-facing part of the state (everything except `view=`). */
export function filterQueryString(state: UiState): string {
  const clone: UiState = { ...state, view: null };
  return encodeUiState(clone);
}

export function toggleSelection(state: UiState, field: string, key: string): UiState {
  const keys = state.selections[field] ?? [];
  const next = keys.includes(key)
    ? keys.filter((k) => k !== key)
    : [...keys, key].sort();
  const selections = { ...state.selections };
  if (next.length === 0) {
    delete selections[field];
  } else {
    selections[field] = next;
  }
  return { ...state, selections };
}

export function isSelected(state: UiState, field: string, key: string): boolean {
  return (state.selections[field] ?? []).includes(key);
}
