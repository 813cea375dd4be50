import { afterEach, describe, expect, it, vi } from "vitest";

import { ServiceClient, ServiceError, parseSseChunk } from "../src/api.js";

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("parseSseChunk", () => {
  it("extracts complete events and keeps the partial tail", () => {
    const delta = { tick: 1, new_failures: [2], new_ponzis: [], recovered: [], i_current: 0.02, cumulative_failed: 2, n_ponzi: 4 };
    const text = `data: ${JSON.stringify(delta)}\n\ndata: {"tick": 2`;
    const { events, rest } = parseSseChunk(text);
    expect(events).toEqual([delta]);
    expect(rest).toBe('data: {"tick": 2');
  });

  it("handles empty input", () => {
    expect(parseSseChunk("")).toEqual({ events: [], rest: "" });
  });
});

describe("ServiceClient", () => {
  it("posts intervention payloads and unwraps previews", async () => {
    const calls: { url: string; body: unknown }[] = [];
    vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
      calls.push({ url, body: init?.body ? JSON.parse(init.body as string) : null });
      return new Response(JSON.stringify({ preview: { tick: 3 } }), { status: 200 });
    });
    const client = new ServiceClient("http://x");
    const preview = await client.preview("abc", { kind: "set_rate", rate: 0.01 });
    expect(preview).toEqual({ tick: 3 });
    expect(calls[0].url).toBe("http://x/sessions/abc/preview");
    expect(calls[0].body).toEqual({ kind: "set_rate", rate: 0.01 });
  });

  it("raises ServiceError with the service detail on 4xx", async () => {
    vi.stubGlobal("fetch", async () =>
      new Response(JSON.stringify({ detail: "unknown session zzz" }), { status: 404 }));
    const client = new ServiceClient("http://x");
    await expect(client.snapshot("zzz")).rejects.toThrow(/unknown session zzz/);
    await expect(client.snapshot("zzz")).rejects.toBeInstanceOf(ServiceError);
  });

  it("strips trailing slashes from the base url", () => {
    expect(new ServiceClient("http://x:81/").baseUrl).toBe("http://x:81");
  });
});
