/** Shared test utilities: fixture loading, fake transports, string sinks. */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";
import type { QueryResponse } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

export function fixtureText(name: string): string {
  return readFileSync(join(here, "fixtures", name), "utf-8");
}

/** Serves canned payloads by exact URL; records every request. */
export class FakeTransport {
  readonly calls: string[] = [];
  private readonly routes = new Map<string, unknown>();

  route(url: string, payload: unknown): void {
    this.routes.set(url, payload);
  }

  readonly fetch: FetchLike = (url: string) => {
    this.calls.push(url);
    const payload = this.routes.get(url);
    if (payload === undefined) {
      return Promise.resolve({
        ok: false,
        status: 404,
        json: async () => ({ code: "UnknownRoute", message: url }),
      });
    }
    return Promise.resolve({ ok: true, status: 200, json: async () => payload });
  };
}

/** Requests stay pending until the test resolves them, in any order. */
export class ManualTransport {
  readonly pending: { url: string; resolve: (payload: unknown) => void }[] = [];

  readonly fetch: FetchLike = (url: string) =>
    new Promise((res) => {
      this.pending.push({
        url,
        resolve: (payload: unknown) =>
          res({ ok: true, status: 200, json: async () => payload }),
      });
    });
}

export class StringSink {
  html = "";
  readonly writes: string[] = [];

  readonly sink = (html: string): void => {
    this.html = html;
    this.writes.push(html);
  };
}

/** Deterministic manual clock for debounce tests. */
export class FakeClock {
  private now = 0;
  private next = 1;
  private scheduled = new Map<number, { at: number; cb: () => void }>();

  readonly timers = {
    set: (cb: () => void, ms: number): unknown => {
      const handle = this.next++;
      this.scheduled.set(handle, { at: this.now + ms, cb });
      return handle;
    },
    clear: (handle: unknown): void => {
      this.scheduled.delete(handle as number);
    },
  };

  advance(ms: number): void {
    this.now += ms;
    const due = [...this.scheduled.entries()]
      .filter(([, t]) => t.at <= this.now)
      .sort((a, b) => a[1].at - b[1].at);
    for (const [handle, t] of due) {
      this.scheduled.delete(handle);
      t.cb();
    }
  }
}

/** Every number that occurs anywhere in a JSON payload, as strings. */
export function numbersIn(payload: unknown): Set<string> {
  const out = new Set<string>();
  const walk = (value: unknown): void => {
    if (typeof value === "number") {
      out.add(String(value));
    } else if (Array.isArray(value)) {
      value.forEach(walk);
    } else if (value !== null && typeof value === "object") {
      Object.values(value).forEach(walk);
    }
  };
  walk(payload);
  return out;
}

export function renderedCounts(html: string): string[] {
  return [...html.matchAll(/<span class="count">([^<]+)<\/span>/g)].map(
    (m) => m[1]!,
  );
}

export function renderedPercentages(html: string): string[] {
  return [...html.matchAll(/<span class="pct">([^<]+)%<\/span>/g)].map(
    (m) => m[1]!,
  );
}

export function flushMicrotasks(): Promise<void> {
  return new Promise((res) => setTimeout(res, 0));
}

export type { QueryResponse };
