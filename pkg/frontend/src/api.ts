// Typed client for the session service.  SSE is parsed over fetch streams so
// the same code runs in the browser and under node-based tests; connection
// loss triggers a snapshot resync before the stream resumes.

import type { Delta, InterveneResponse, InterventionRequest, PhaseGridPayload, Snapshot } from "./types.js";

export class ServiceError extends Error {
  constructor(public status: number, detail: string) {
    super(`service error ${status}: ${detail}`);
  }
}

async function expectOk(resp: Response): Promise<Response> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body);
    } catch {
      // detail stays as statusText
    }
    throw new ServiceError(resp.status, detail);
  }
  return resp;
}

export class ServiceClient {
  constructor(public baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return (await expectOk(resp)).json() as Promise<T>;
  }

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`);
    return (await expectOk(resp)).json() as Promise<T>;
  }

  async createSession(scenario: Record<string, unknown>): Promise<{ session_id: string; snapshot: Snapshot }> {
    return this.post("/sessions", scenario);
  }

  async snapshot(sessionId: string): Promise<Snapshot> {
    return this.get(`/sessions/${sessionId}/snapshot`);
  }

  async advance(sessionId: string, nTicks: number): Promise<{ deltas: Delta[]; tick: number }> {
    return this.post(`/sessions/${sessionId}/advance`, { n_ticks: nTicks });
  }

  async preview(sessionId: string, intervention: InterventionRequest): Promise<Delta> {
    const out = await this.post<{ preview: Delta }>(`/sessions/${sessionId}/preview`, intervention);
    return out.preview;
  }

  async intervene(sessionId: string, intervention: InterventionRequest): Promise<InterveneResponse> {
    return this.post(`/sessions/${sessionId}/intervene`, intervention);
  }

  async replay(sessionId: string): Promise<{ config: unknown; interventions: unknown[]; deltas: Delta[]; tick: number }> {
    return this.get(`/sessions/${sessionId}/replay`);
  }

  async phaseGrid(sessionId: string, n0Steps = 48, i0Steps = 24): Promise<PhaseGridPayload> {
    return this.get(`/sessions/${sessionId}/phasegrid?n0_steps=${n0Steps}&i0_steps=${i0Steps}`);
  }

  /** Drain the currently buffered deltas after `fromTick` (single poll). */
  async drainDeltas(sessionId: string, fromTick: number): Promise<Delta[]> {
    const resp = await expectOk(
      await fetch(`${this.baseUrl}/sessions/${sessionId}/stream?follow=false&from_tick=${fromTick}`),
    );
    const text = await resp.text();
    return parseSseChunk(text).events;
  }

  /**
   * Follow the live delta stream.  Returns a stop() handle; on connection
   * loss calls onResync with a fresh snapshot, then resumes streaming from
   * the snapshot's tick.
   */
  streamDeltas(
    sessionId: string,
    onDelta: (delta: Delta) => void,
    onResync?: (snap: Snapshot) => void,
    retryMs = 500,
  ): { stop: () => void } {
    let stopped = false;
    let lastTick = 0;

    const loop = async () => {
      while (!stopped) {
        try {
          const resp = await expectOk(
            await fetch(`${this.baseUrl}/sessions/${sessionId}/stream?from_tick=${lastTick}`),
          );
          const reader = resp.body!.getReader();
          const decoder = new TextDecoder();
          let buffer = "";
          for (;;) {
            const { done, value } = await reader.read();
            if (stopped) {
              await reader.cancel().catch(() => undefined);
              return;
            }
            if (done) break;
            buffer += decoder.decode(value, { stream: true });
            const { events, rest } = parseSseChunk(buffer);
            buffer = rest;
            for (const delta of events) {
              lastTick = delta.tick;
              onDelta(delta);
            }
          }
        } catch {
          // fall through to resync + retry
        }
        if (stopped) return;
        await new Promise((r) => setTimeout(r, retryMs));
        if (onResync) {
          try {
            const snap = await this.snapshot(sessionId);
            lastTick = snap.tick;
            onResync(snap);
          } catch {
            // service still unreachable; retry loop continues
          }
        }
      }
    };
    void loop();
    return { stop: () => (stopped = true) };
  }
}

/** Parse complete `data: {...}` SSE events out of a text chunk. */
export function parseSseChunk(text: string): { events: Delta[]; rest: string } {
  const events: Delta[] = [];
  const parts = text.split("\n\n");
  const rest = parts.pop() ?? "";
  for (const part of parts) {
    for (const line of part.split("\n")) {
      if (line.startsWith("data: ")) {
        events.push(JSON.parse(line.slice("data: ".length)) as Delta);
      }
    }
  }
  return { events, rest };
}
