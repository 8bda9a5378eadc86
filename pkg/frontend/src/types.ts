/**
 * Wire types mirroring the engine's JSON responses.
 * The UI never computes a count itself; every number shown on screen is
 * taken verbatim from one of these payloads.
 */

export interface BucketJson {
  label: string;
  count: number;
  percentage?: number;
  weight?: number;
}

export interface GeoNodeJson {
  name: string;
  level: string;
  count: number;
  children: GeoNodeJson[];
}

export interface TableRowJson {
  record_id: string;
  cells: Record<string, unknown>;
}

export interface StateJson {
  selections: Record<string, string[]>;
  text_query: string | null;
}

export interface ViewResultJson {
  kind: string;
  total: number;
  version: number;
  state: StateJson;
  buckets: BucketJson[];
  nodes?: GeoNodeJson[];
  rows?: TableRowJson[];
  missing_weights?: number;
}

export interface WidgetBucketJson {
  key: string;
  count: number;
  projected: number;
  selected: boolean;
  weight?: number;
}

export interface WidgetJson {
  kind: string;
  field?: string;
  url?: string;
  query?: string | null;
  buckets?: WidgetBucketJson[];
}

export interface QueryResponse {
  view_id: string;
  version: number;
  state: StateJson;
  result: ViewResultJson;
  widgets: WidgetJson[];
}

export interface ViewConfigJson {
  view_id: string;
  kind: string;
  dataset_id: string;
  facet_field?: string;
  weight_field?: string;
  k: number;
  widgets: { kind: string; field?: string; url?: string }[];
}

export interface EmbedPayload {
  view: ViewConfigJson;
  version: number;
  query_url: string;
  schema: { name: string; ftype: string; multivalued: boolean }[];
  initial: QueryResponse;
}

export interface ApiErrorJson {
  code: string;
  message: string;
  locator?: string;
}

/** The whole exploration state: selected view plus the live filter. */
export interface UiState {
  view: string | null;
  selections: Record<string, string[]>;
  textQuery: string | null;
}

export function emptyState(view: string | null = null): UiState {
  return { view, selections: {}, textQuery: null };
}
