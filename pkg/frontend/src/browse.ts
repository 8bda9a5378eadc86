/**
 * Browse page: hierarchical geography selector above a year timeline above
 * the most common subjects. All three rerender together from the single
 * response each selection triggers; nothing is recomputed client-side.
 */

import type { ControllerOptions, Sink } from "./controller.js";
import { ViewController } from "./controller.js";
import {
  renderGeoTree,
  renderSubjects,
  renderTimeline,
  renderTotal,
  widgetBuckets,
} from "./render.js";
import type { QueryResponse } from "./types.js";

export interface BrowseOptions extends ControllerOptions {
  geoField: string;
  dateField: string;
  subjectField: string;
  subjectCount?: number;
  sinks: {
    geo: Sink;
    timeline: Sink;
    subjects: Sink;
    status?: Sink;
  };
}

export class BrowseController extends ViewController {
  private readonly geoField: string;
  private readonly dateField: string;
  private readonly subjectField: string;
  private readonly subjectCount: number;
  private readonly sinks: BrowseOptions["sinks"];

  constructor(options: BrowseOptions) {
    super(options);
    this.geoField = options.geoField;
    this.dateField = options.dateField;
    this.subjectField = options.subjectField;
    this.subjectCount = options.subjectCount ?? 5;
    this.sinks = options.sinks;
  }

  /** Click on a region, country, or city: toggle it, requery once. */
  toggleNode(name: string): Promise<void> {
    return this.toggle(this.geoField, name);
  }

  toggleSubject(key: string): Promise<void> {
    return this.toggle(this.subjectField, key);
  }

  toggleYear(year: string): Promise<void> {
    return this.toggle(this.dateField, year);
  }

  protected renderPayload(payload: QueryResponse): void {
    this.sinks.geo(
      renderGeoTree(payload.result.nodes ?? [], this.state, this.geoField),
    );
    this.sinks.timeline(renderTimeline(widgetBuckets(payload, this.dateField)));
    this.sinks.subjects(
      renderSubjects(
        widgetBuckets(payload, this.subjectField).slice(0, this.subjectCount),
      ),
    );
    this.sinks.status?.(renderTotal(payload.result.total));
  }
}
