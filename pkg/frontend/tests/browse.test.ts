import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { BrowseController } from "../src/browse.js";
import type { EmbedPayload, QueryResponse } from "../src/types.js";
import { decodeUiState, encodeUiState } from "../src/urlstate.js";
import {
  FakeTransport,
  StringSink,
  fixture,
  numbersIn,
  renderedCounts,
} from "./helpers.js";

const embed = fixture<EmbedPayload>("browse_embed.json");
const emptyQuery = fixture<QueryResponse>("browse_query_empty.json");
const eastAsia = fixture<QueryResponse>("browse_query_east_asia.json");

const QUERY_URL = "/views/browse/query";
const EAST_ASIA_URL = "/views/browse/query?f.Location=East%20Asia";

function makeController(transport: FakeTransport) {
  const sinks = {
    geo: new StringSink(),
    timeline: new StringSink(),
    subjects: new StringSink(),
    status: new StringSink(),
  };
  const error = new StringSink();
  const urls: string[] = [];
  const controller = new BrowseController({
    client: new ApiClient("", transport.fetch),
    viewId: "browse",
    geoField: "Location",
    dateField: "Date",
    subjectField: "Subjects",
    sinks: {
      geo: sinks.geo.sink,
      timeline: sinks.timeline.sink,
      subjects: sinks.subjects.sink,
      status: sinks.status.sink,
    },
    errorSink: error.sink,
    onStateChange: (state) => urls.push(encodeUiState(state)),
  });
  return { controller, sinks, error, urls };
}

describe("browse page coupling", () => {
  it("first paint comes from the embed payload with no request", () => {
    const transport = new FakeTransport();
    const { controller, sinks } = makeController(transport);
    controller.initFromPayload(embed.initial);
    expect(transport.calls).toEqual([]);
    expect(sinks.geo.html).toContain("East Asia");
    expect(sinks.timeline.html).toContain("bar");
    expect(sinks.subjects.html.match(/<li>/g)?.length).toBe(5);
  });

  it("selecting a node issues exactly one query and re-renders from it", async () => {
    const transport = new FakeTransport();
    transport.route(QUERY_URL, emptyQuery);
    transport.route(EAST_ASIA_URL, eastAsia);
    const { controller, sinks } = makeController(transport);
    controller.initFromPayload(embed.initial);

    await controller.toggleNode("East Asia");
    expect(transport.calls).toEqual([EAST_ASIA_URL]);

    // timeline and subjects re-rendered strictly from the response
    const allowed = numbersIn(eastAsia);
    for (const count of [
      ...renderedCounts(sinks.timeline.html),
      ...renderedCounts(sinks.subjects.html),
      ...renderedCounts(sinks.geo.html),
    ]) {
      expect(allowed, `count ${count} not in response`).toContain(count);
    }
    expect(sinks.geo.html).toContain("selected");
  });

  it("deselecting returns to a render identical to first paint", async () => {
    const transport = new FakeTransport();
    transport.route(QUERY_URL, emptyQuery);
    transport.route(EAST_ASIA_URL, eastAsia);
    const { controller, sinks } = makeController(transport);
    controller.initFromPayload(embed.initial);
    const initial = {
      geo: sinks.geo.html,
      timeline: sinks.timeline.html,
      subjects: sinks.subjects.html,
    };

    await controller.toggleNode("East Asia");
    expect(sinks.geo.html).not.toEqual(initial.geo);
    await controller.toggleNode("East Asia");
    expect(transport.calls).toEqual([EAST_ASIA_URL, QUERY_URL]);
    expect(sinks.geo.html).toEqual(initial.geo);
    expect(sinks.timeline.html).toEqual(initial.timeline);
    expect(sinks.subjects.html).toEqual(initial.subjects);
  });

  it("a copied URL reproduces the identical rendered state", async () => {
    const transport = new FakeTransport();
    transport.route(QUERY_URL, emptyQuery);
    transport.route(EAST_ASIA_URL, eastAsia);
    const first = makeController(transport);
    first.controller.initFromPayload(embed.initial);
    await first.controller.toggleNode("East Asia");
    const sharedUrl = first.urls[first.urls.length - 1]!;
    expect(sharedUrl).toContain("f.Location=East%20Asia");

    const second = makeController(transport);
    await second.controller.initFromState(decodeUiState(sharedUrl));
    expect(second.sinks.geo.html).toEqual(first.sinks.geo.html);
    expect(second.sinks.timeline.html).toEqual(first.sinks.timeline.html);
    expect(second.sinks.subjects.html).toEqual(first.sinks.subjects.html);
  });

  it("failures render an error banner and leave the selection reversible", async () => {
    const transport = new FakeTransport();
    transport.route(QUERY_URL, emptyQuery);
    // EAST_ASIA_URL unrouted -> 404 ApiError
    const { controller, error } = makeController(transport);
    controller.initFromPayload(embed.initial);

    await controller.toggleNode("East Asia");
    expect(error.html).toContain("error-banner");
    expect(error.html).toContain("UnknownRoute");

    // one more interaction reverses the selection and recovers
    await controller.toggleNode("East Asia");
    expect(error.html).toBe("");
    expect(transport.calls).toEqual([EAST_ASIA_URL, QUERY_URL]);
  });

  it("the status line shows the response total verbatim", async () => {
    const transport = new FakeTransport();
    transport.route(EAST_ASIA_URL, eastAsia);
    const { controller, sinks } = makeController(transport);
    controller.initFromPayload(embed.initial);
    await controller.toggleNode("East Asia");
    expect(sinks.status.html).toContain(
      `<span class="count">${eastAsia.result.total}</span>`,
    );
  });
});
