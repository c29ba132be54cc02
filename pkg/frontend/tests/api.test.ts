import { describe, expect, it, vi } from "vitest";

import { AnnotationClient } from "../src/api.js";
import { Poller } from "../src/app.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("AnnotationClient", () => {
  it("lists pending queries", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ queries: [{ query_id: "q1" }] }));
    const client = new AnnotationClient("http://svc", fetchMock);
    const queries = await client.pendingQueries();
    expect(queries).toEqual([{ query_id: "q1" }]);
    expect(fetchMock).toHaveBeenCalledWith("http://svc/api/queries/pending");
  });

  it("submits annotations and returns ok", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ status: "resolved" }));
    const client = new AnnotationClient("", fetchMock);
    const result = await client.submitAnnotation("q1", {
      example_id: "e1",
      kind: "sketch",
      payload: "(count ...)",
    });
    expect(result).toEqual({ ok: true });
    const [url, init] = fetchMock.mock.calls[0];
    expect(url).toBe("/api/queries/q1/annotation");
    expect(init?.method).toBe("POST");
    expect(JSON.parse(init?.body as string).kind).toBe("sketch");
  });

  it("surfaces the server's 422 reason verbatim", async () => {
    const fetchMock = vi.fn(async () =>
      jsonResponse({ detail: "executes to 3, expected 'china'" }, 422)
    );
    const client = new AnnotationClient("", fetchMock);
    const result = await client.submitAnnotation("q1", {
      example_id: "e1",
      kind: "full_mr",
      payload: "(count all_rows)",
    });
    expect(result).toEqual({
      ok: false,
      status: 422,
      reason: "executes to 3, expected 'china'",
    });
  });

  it("reports 409 conflicts", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ detail: "query already resolved" }, 409));
    const client = new AnnotationClient("", fetchMock);
    const result = await client.submitAnnotation("q1", {
      example_id: "e1",
      kind: "sketch",
      payload: "(count ...)",
    });
    expect(result.ok).toBe(false);
    if (!result.ok) expect(result.status).toBe(409);
  });

  it("fetches experiment status", async () => {
    const fetchMock = vi.fn(async () =>
      jsonResponse({ state: "training", iteration: 2, pending_count: 0, accuracies: null })
    );
    const client = new AnnotationClient("", fetchMock);
    const status = await client.experimentStatus();
    expect(status.state).toBe("training");
    expect(status.iteration).toBe(2);
  });
});

describe("Poller", () => {
  it("delivers queries and status, and reports the connection as up", async () => {
    const fetchMock = vi.fn(async (url: string) => {
      if (url.includes("pending")) return jsonResponse({ queries: [] });
      return jsonResponse({ state: "idle", iteration: 0, pending_count: 0, accuracies: null });
    });
    const client = new AnnotationClient("", fetchMock);
    const seen: string[] = [];
    const poller = new Poller(client, {
      onQueries: () => seen.push("queries"),
      onStatus: () => seen.push("status"),
      onConnectionChange: (up) => seen.push(up ? "up" : "down"),
    });
    await poller.tick();
    expect(seen).toEqual(["up", "queries", "status"]);
  });

  it("backs off while the service is unreachable and recovers", async () => {
    let failing = true;
    const fetchMock = vi.fn(async (url: string) => {
      if (failing) throw new Error("connection refused");
      if (url.includes("pending")) return jsonResponse({ queries: [] });
      return jsonResponse({ state: "idle", iteration: 0, pending_count: 0, accuracies: null });
    });
    const client = new AnnotationClient("", fetchMock);
    const connection: boolean[] = [];
    const poller = new Poller(
      client,
      {
        onQueries: () => undefined,
        onStatus: () => undefined,
        onConnectionChange: (up) => connection.push(up),
      },
      100,
      400
    );
    await poller.tick();
    await poller.tick();
    expect((poller as unknown as { delayMs: number }).delayMs).toBe(400);
    failing = false;
    await poller.tick();
    expect((poller as unknown as { delayMs: number }).delayMs).toBe(100);
    expect(connection).toEqual([false, false, true]);
  });
});
