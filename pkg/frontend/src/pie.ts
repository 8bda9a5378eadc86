/**
 * Pie view page: the chart, a debounced search box, filter-list widgets,
 * and a logo slot. Legend percentages, widget counts, and the pie itself
 * update together from each response; typing debounces 250 ms and stale
 * responses are discarded by sequence number.
 */

import { debounce, SEARCH_DEBOUNCE_MS } from "./api.js";
import type { ControllerOptions, Sink } from "./controller.js";
import { ViewController } from "./controller.js";
import { renderPie, renderTotal, renderWidgets } from "./render.js";
import type { QueryResponse } from "./types.js";

export interface PieOptions extends ControllerOptions {
  sinks: {
    pie: Sink;
    widgets: Sink;
    status?: Sink;
  };
  timers?: {
    set: (cb: () => void, ms: number) => unknown;
    clear: (handle: unknown) => void;
  };
}

export class PieController extends ViewController {
  private readonly sinks: PieOptions["sinks"];
  private readonly debouncedSearch: { call: (text: string) => void; cancel: () => void };

  constructor(options: PieOptions) {
    super(options);
    this.sinks = options.sinks;
    this.debouncedSearch = debounce(
      (text: string) => {
        void this.setTextQuery(text);
      },
      SEARCH_DEBOUNCE_MS,
      options.timers,
    );
  }

  /** Keystroke handler: queries only after typing pauses. */
  onSearchInput(text: string): void {
    this.debouncedSearch.call(text);
  }

  clearSearch(): Promise<void> {
    this.debouncedSearch.cancel();
    return this.setTextQuery(null);
  }

  toggleFilter(field: string, key: string): Promise<void> {
    return this.toggle(field, key);
  }

  protected renderPayload(payload: QueryResponse): void {
    this.sinks.pie(renderPie(payload.result.buckets, payload.result.total));
    this.sinks.widgets(renderWidgets(payload, this.state));
    this.sinks.status?.(renderTotal(payload.result.total));
  }
}
