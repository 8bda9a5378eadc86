/**
 * Shared controller core: holds the UI state, issues queries (one per user
 * action), discards superseded responses, and hands each fresh payload to a
 * page-specific renderer. Rendering is sink-based (strings out), so pages
 * run identically in the browser and under tests.
 */

import { ApiClient, ApiError, LatestWins } from "./api.js";
import { renderError } from "./render.js";
import type { QueryResponse, UiState } from "./types.js";
import { emptyState } from "./types.js";
import { toggleSelection } from "./urlstate.js";

export type Sink = (html: string) => void;

export interface ControllerOptions {
  client: ApiClient;
  viewId: string;
  errorSink?: Sink;
  /** Called with the canonical query string after every successful render. */
  onStateChange?: (state: UiState) => void;
}

export abstract class ViewController {
  readonly client: ApiClient;
  readonly viewId: string;
  state: UiState;
  lastPayload: QueryResponse | null = null;
  private readonly latest = new LatestWins();
  private readonly errorSink?: Sink;
  private readonly onStateChange?: (state: UiState) => void;

  constructor(options: ControllerOptions) {
    this.client = options.client;
    this.viewId = options.viewId;
    this.state = emptyState(options.viewId);
    this.errorSink = options.errorSink;
    this.onStateChange = options.onStateChange;
  }

  /** First paint: render a given payload (embed) without any request. */
  initFromPayload(initial: QueryResponse): void {
    this.lastPayload = initial;
    this.renderPayload(initial);
    this.onStateChange?.(this.state);
  }

  /** First paint from a shared URL: one query for the decoded state. */
  async initFromState(state: UiState): Promise<void> {
    this.state = { ...state, view: this.viewId };
    await this.refresh();
  }

  /** Toggle one facet selection; exactly one query follows. */
  async toggle(field: string, key: string): Promise<void> {
    this.state = toggleSelection(this.state, field, key);
    await this.refresh();
  }

  async setTextQuery(text: string | null): Promise<void> {
    this.state = { ...this.state, textQuery: text && text.trim() ? text : null };
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const ticket = this.latest.begin();
    let payload: QueryResponse;
    try {
      payload = await this.client.query(this.viewId, this.state);
    } catch (err) {
      if (this.latest.isCurrent(ticket)) {
        const code = err instanceof ApiError ? err.code : "Error";
        const message = err instanceof Error ? err.message : String(err);
        this.errorSink?.(renderError(code, message));
      }
      return;
    }
    if (!this.latest.isCurrent(ticket)) {
      return; // superseded by newer input
    }
    this.errorSink?.("");
    this.lastPayload = payload;
    this.renderPayload(payload);
    this.onStateChange?.(this.state);
  }

  protected abstract renderPayload(payload: QueryResponse): void;
}
