import { describe, expect, it } from "vitest";

import { ApiClient, debounce } from "../src/api.js";
import { PieController } from "../src/pie.js";
import type { EmbedPayload, QueryResponse } from "../src/types.js";
import {
  FakeClock,
  FakeTransport,
  ManualTransport,
  StringSink,
  fixture,
  flushMicrotasks,
} from "./helpers.js";

const embed = fixture<EmbedPayload>("pie_embed.json");
const khrushchev = fixture<QueryResponse>("pie_query_khrushchev.json");

const EMPTY_URL = "/views/langpie/query";
const SEARCH_URL = "/views/langpie/query?q=Khrushchev";

function makeController(
  transport: { fetch: import("../src/api.js").FetchLike },
  clock?: FakeClock,
) {
  const pie = new StringSink();
  const widgets = new StringSink();
  const error = new StringSink();
  const controller = new PieController({
    client: new ApiClient("", transport.fetch),
    viewId: "langpie",
    sinks: { pie: pie.sink, widgets: widgets.sink },
    errorSink: error.sink,
    timers: clock?.timers,
  });
  return { controller, pie, widgets, error };
}

describe("pie page", () => {
  it("search debounces 250ms: many keystrokes, one request", async () => {
    const transport = new FakeTransport();
    transport.route(SEARCH_URL, khrushchev);
    const clock = new FakeClock();
    const { controller, pie } = makeController(transport, clock);
    controller.initFromPayload(embed.initial);

    controller.onSearchInput("K");
    clock.advance(100);
    controller.onSearchInput("Khrush");
    clock.advance(100);
    controller.onSearchInput("Khrushchev");
    expect(transport.calls).toEqual([]); // nothing until typing pauses
    clock.advance(249);
    expect(transport.calls).toEqual([]);
    clock.advance(1);
    await flushMicrotasks();
    expect(transport.calls).toEqual([SEARCH_URL]);
    expect(pie.html).toContain("55.8%");
  });

  it("clearing the search restores the full-collection pie", async () => {
    const transport = new FakeTransport();
    transport.route(SEARCH_URL, khrushchev);
    transport.route(EMPTY_URL, embed.initial);
    const clock = new FakeClock();
    const { controller, pie } = makeController(transport, clock);
    controller.initFromPayload(embed.initial);
    const initialHtml = pie.html;

    controller.onSearchInput("Khrushchev");
    clock.advance(250);
    await flushMicrotasks();
    expect(pie.html).not.toEqual(initialHtml);

    await controller.clearSearch();
    expect(pie.html).toEqual(initialHtml);
    expect(transport.calls).toEqual([SEARCH_URL, EMPTY_URL]);
  });

  it("clicking a filter value re-renders the pie over the narrowed set", async () => {
    const narrowed: QueryResponse = JSON.parse(JSON.stringify(khrushchev));
    narrowed.result.buckets = [
      { label: "Russian", count: 708, percentage: 100.0 },
    ];
    narrowed.result.total = 708;
    const transport = new FakeTransport();
    transport.route("/views/langpie/query?f.Language=Russian", narrowed);
    const { controller, pie, widgets } = makeController(transport);
    controller.initFromPayload(embed.initial);

    await controller.toggleFilter("Language", "Russian");
    expect(transport.calls).toEqual(["/views/langpie/query?f.Language=Russian"]);
    expect(pie.html).toContain("100%");
    expect(pie.html).toContain("Russian");
    expect(widgets.html).toContain("widget");
  });

  it("stale responses are discarded: last-issued input wins", async () => {
    const transport = new ManualTransport();
    const { controller, pie } = makeController(transport);
    controller.initFromPayload(embed.initial);

    const slow: QueryResponse = JSON.parse(JSON.stringify(khrushchev));
    slow.result.buckets = [{ label: "SLOW", count: 1, percentage: 100.0 }];
    const fast: QueryResponse = JSON.parse(JSON.stringify(khrushchev));
    fast.result.buckets = [{ label: "FAST", count: 2, percentage: 100.0 }];

    const p1 = controller.setTextQuery("slow");
    const p2 = controller.setTextQuery("fast");
    expect(transport.pending.length).toBe(2);
    // resolve out of order: newest first, stale afterwards
    transport.pending[1]!.resolve(fast);
    await flushMicrotasks();
    transport.pending[0]!.resolve(slow);
    await Promise.all([p1, p2]);

    expect(pie.html).toContain("FAST");
    expect(pie.html).not.toContain("SLOW");
  });

  it("debounce helper is reusable and cancellable", () => {
    const clock = new FakeClock();
    const seen: string[] = [];
    const d = debounce((s: string) => seen.push(s), 250, clock.timers);
    d.call("a");
    clock.advance(200);
    d.call("b");
    clock.advance(250);
    expect(seen).toEqual(["b"]);
    d.call("c");
    d.cancel();
    clock.advance(1000);
    expect(seen).toEqual(["b"]);
  });
});
