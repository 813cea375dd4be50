// Console round-trip against the real session service (acceptance: the
// rendered failure timeline must equal the service's per-tick series, and the
// bridge-immunization preview must show zero cross-cluster failures with the
// commit changing subsequent ticks accordingly).

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { InterventionFlow } from "../src/controls.js";
import { forceLayout } from "../src/layout.js";
import { ConsoleState } from "../src/state.js";
import { timelineBars } from "../src/render.js";
import type { Delta } from "../src/types.js";

const PORT = 8873;
const BASE = `http://127.0.0.1:${PORT}`;

const DUMBBELL_SCENARIO = {
  network: { kind: "dumbbell", cluster_size: 20, n_bridges: 2 },
  resilience: { k: 1e-6, beta: 1.0 },
  i0: 0.02,
  alpha: 0.0,
  seeds: [0],
  ticks: 60,
  seed: 7,
};

let server: ChildProcess;

async function waitForService(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const resp = await fetch(`${BASE}/schema`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((r) => setTimeout(r, 250));
  }
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "minskysim.cli", "serve", "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForService();
});

afterAll(() => {
  server?.kill();
});

describe("console round-trip against the live service", () => {
  it("timeline after advance(5) equals the service per-tick series", async () => {
    const client = new ServiceClient(BASE);
    const created = await client.createSession(DUMBBELL_SCENARIO);
    const state = ConsoleState.fromSnapshot(created.snapshot);
    const layout = forceLayout(state.nNodes, state.edges, state.layoutSeed);
    expect(layout).toHaveLength(42);

    await client.advance(created.session_id, 5);
    for (const delta of await client.drainDeltas(created.session_id, 0)) {
      state.applyDelta(delta);
    }
    const service = await client.snapshot(created.session_id);
    expect(state.failureTimeline()).toEqual(service.per_tick_failures);
    expect(state.tick).toBe(service.tick);
    // the rendered bars carry exactly those counts
    const bars = timelineBars(state.failureTimeline(), 420, 170);
    expect(bars.map((b) => b.count)).toEqual(service.per_tick_failures);
  });

  it("live stream delivers the same deltas as the drain endpoint", async () => {
    const client = new ServiceClient(BASE);
    const created = await client.createSession(DUMBBELL_SCENARIO);
    const collected: Delta[] = [];
    const stream = client.streamDeltas(created.session_id, (d) => collected.push(d));
    await client.advance(created.session_id, 4);
    const deadline = Date.now() + 10_000;
    while (collected.length < 4 && Date.now() < deadline) {
      await new Promise((r) => setTimeout(r, 50));
    }
    stream.stop();
    expect(collected.map((d) => d.tick)).toEqual([1, 2, 3, 4]);
    const drained = await client.drainDeltas(created.session_id, 0);
    expect(collected).toEqual(drained);
  });

  it("reconnect resync equals a direct snapshot fetch", async () => {
    const client = new ServiceClient(BASE);
    const created = await client.createSession(DUMBBELL_SCENARIO);
    const state = ConsoleState.fromSnapshot(created.snapshot);
    await client.advance(created.session_id, 7);
    // simulate a dropped stream: resync from a fresh snapshot
    const snap = await client.snapshot(created.session_id);
    state.resync(snap);
    const direct = ConsoleState.fromSnapshot(snap);
    expect(state.statuses).toEqual(direct.statuses);
    expect(state.failureTimeline()).toEqual(direct.failureTimeline());
    expect(state.rateSeries()).toEqual(direct.rateSeries());
  });

  it("bridge immunization: preview shows zero cross-cluster failures, commit confines the crisis", async () => {
    const client = new ServiceClient(BASE);
    const created = await client.createSession(DUMBBELL_SCENARIO);
    const sid = created.session_id;
    const state = ConsoleState.fromSnapshot(created.snapshot);

    // burn cluster A up to the bridge (path of 20 from the seed)
    await client.advance(sid, 19);
    for (const delta of await client.drainDeltas(sid, 0)) state.applyDelta(delta);
    expect(state.cumulativeFailed).toBe(20);

    const flow = new InterventionFlow(client, sid);
    const preview = await flow.preview({ kind: "immunize_nodes", nodes: [40, 41] });
    expect(preview.new_failures).toEqual([]); // zero cross-cluster failures

    // committed state unchanged by the preview itself
    const snapAfterPreview = await client.snapshot(sid);
    expect(snapAfterPreview.statuses.immunized).toEqual([]);
    expect(snapAfterPreview.tick).toBe(19);

    const result = await flow.commit();
    expect(result.ok).toBe(true);
    state.markImmunized([40, 41]);

    await client.advance(sid, 40);
    const deltas = await client.drainDeltas(sid, 19);
    for (const delta of deltas) state.applyDelta(delta);
    expect(deltas.flatMap((d) => d.new_failures)).toEqual([]);

    const final = await client.snapshot(sid);
    expect(final.cumulative_failed).toBe(20);
    expect(new Set(final.statuses.failed)).toEqual(new Set(Array.from({ length: 20 }, (_, i) => i)));
    // console state tracked the service exactly
    expect(state.cumulativeFailed).toBe(final.cumulative_failed);
    expect(state.statuses.filter((s) => s === "failed")).toHaveLength(20);
  });

  it("phase grid export renders for a mapped scenario", async () => {
    const client = new ServiceClient(BASE);
    const created = await client.createSession({
      network: { kind: "random_regular", n: 500, k: 4 },
      resilience: { k: 0.002, beta: 1.3 },
      i0: 0.01, alpha: 0.25, seeds: [0], ticks: 10, seed: 3,
      map_params: { gamma: 1.0, s: 1.0 },
    });
    const grid = await client.phaseGrid(created.session_id, 20, 8);
    expect(grid.available).toBe(true);
    expect(grid.labels).toHaveLength(8);
    const { phaseCells } = await import("../src/render.js");
    expect(phaseCells(grid, 420, 170)).toHaveLength(8 * 20);
    // the dumbbell scenario has no mean-field map: grid degrades gracefully
    const plain = await client.createSession(DUMBBELL_SCENARIO);
    const none = await client.phaseGrid(plain.session_id);
    expect(none.available).toBe(false);
  });

  it("unintervened twin session fails both clusters", async () => {
    const client = new ServiceClient(BASE);
    const created = await client.createSession(DUMBBELL_SCENARIO);
    await client.advance(created.session_id, 60);
    const snap = await client.snapshot(created.session_id);
    expect(snap.cumulative_failed).toBe(42);
  });

  it("cancel after preview leaves committed state unchanged", async () => {
    const client = new ServiceClient(BASE);
    const created = await client.createSession(DUMBBELL_SCENARIO);
    const sid = created.session_id;
    const before = await client.snapshot(sid);
    const flow = new InterventionFlow(client, sid);
    await flow.preview({ kind: "set_rate", rate: 0.000001 });
    flow.cancel();
    const after = await client.snapshot(sid);
    expect(after).toEqual(before);
  });
});
