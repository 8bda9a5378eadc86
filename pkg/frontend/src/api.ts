/**
 * Query client plus the sequencing that keeps overlapping responses sane:
 * requests carry a monotonic sequence number and anything superseded by
 * newer input is discarded before it can touch the screen.
 */

import type { ApiErrorJson, EmbedPayload, QueryResponse, UiState } from "./types.js";
import { filterQueryString } from "./urlstate.js";

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiError extends Error {
  readonly code: string;
  readonly locator?: string;

  constructor(payload: ApiErrorJson, status: number) {
    super(`${payload.code}: ${payload.message}`);
    this.code = payload.code;
    this.locator = payload.locator;
    this.name = `ApiError(${status})`;
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url) => fetch(url));
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.base + path);
    const body = (await resp.json()) as T | ApiErrorJson;
    if (!resp.ok) {
      throw new ApiError(body as ApiErrorJson, resp.status);
    }
    return body as T;
  }

  embed(viewId: string): Promise<EmbedPayload> {
    return this.get(`/views/${encodeURIComponent(viewId)}/embed`);
  }

  query(viewId: string, state: UiState): Promise<QueryResponse> {
    const qs = filterQueryString(state);
    const suffix = qs ? `?${qs}` : "";
    return this.get(`/views/${encodeURIComponent(viewId)}/query${suffix}`);
  }
}

/**
 * Last-issued-wins guard. `begin()` hands out a ticket; `isCurrent(ticket)`
 * is true only while no newer ticket exists, so stale responses resolve to
 * no-ops instead of overwriting fresher renders.
 */
export class LatestWins {
  private seq = 0;

  begin(): number {
    this.seq += 1;
    return this.seq;
  }

  isCurrent(ticket: number): boolean {
    return ticket === this.seq;
  }
}

/**
 * Trailing-edge debounce with an injectable timer so tests can use fake
 * clocks. 250 ms balances immediate feedback against request flooding.
 */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
  timers: {
    set: (cb: () => void, ms: number) => unknown;
    clear: (handle: unknown) => void;
  } = { set: (cb, ms) => setTimeout(cb, ms), clear: (h) => clearTimeout(h as number) },
): { call: (...args: A) => void; cancel: () => void } {
  let handle: unknown | null = null;
  return {
    call: (...args: A) => {
      if (handle !== null) {
        timers.clear(handle);
      }
      handle = timers.set(() => {
        handle = null;
        fn(...args);
      }, waitMs);
    },
    cancel: () => {
      if (handle !== null) {
        timers.clear(handle);
        handle = null;
      }
    },
  };
}

export const SEARCH_DEBOUNCE_MS = 250;
