// The console's view model.  Every number on screen comes from service
// payloads: deltas are applied in strict tick order on top of the last
// snapshot, and a reconnect resync replaces the whole state wholesale.

import type { Delta, NodeStatus, Snapshot } from "./types.js";

export class OutOfOrderDeltaError extends Error {
  constructor(expected: number, got: number) {
    super(`delta out of order: expected tick ${expected}, got ${got}`);
  }
}

export class ConsoleState {
  tick = 0;
  iCurrent = 0;
  cumulativeFailed = 0;
  perTickFailures: number[] = [];
  perTickRates: number[] = [];
  statuses: NodeStatus[] = [];
  edges: [number, number][] = [];
  guaranteedEdges = new Set<string>();
  layoutSeed = 0;
  phaseAnnotation: string | null = null;
  thresholds: Snapshot["thresholds"] = null;
  nNodes = 0;

  static fromSnapshot(snap: Snapshot): ConsoleState {
    const state = new ConsoleState();
    state.resync(snap);
    return state;
  }

  resync(snap: Snapshot): void {
    this.tick = snap.tick;
    this.iCurrent = snap.i_current;
    this.cumulativeFailed = snap.cumulative_failed;
    this.perTickFailures = [...snap.per_tick_failures];
    this.perTickRates = [...snap.per_tick_rates];
    this.nNodes = snap.n_nodes;
    this.edges = snap.edges.map(([u, v]) => [u, v]);
    this.layoutSeed = snap.layout_seed;
    this.phaseAnnotation = snap.phase_annotation;
    this.thresholds = snap.thresholds;
    this.guaranteedEdges = new Set(snap.guaranteed_edges.map(edgeKey));
    this.statuses = new Array<NodeStatus>(snap.n_nodes).fill("viable");
    for (const n of snap.statuses.ponzi) this.statuses[n] = "ponzi";
    for (const n of snap.statuses.failed) this.statuses[n] = "failed";
    for (const n of snap.statuses.immunized) {
      // immunized viable/ponzi nodes render as immunized; failure wins
      if (this.statuses[n] !== "failed") this.statuses[n] = "immunized";
    }
  }

  /** Apply one delta; ticks must arrive gap-free and in order. */
  applyDelta(delta: Delta): void {
    if (delta.tick !== this.tick + 1) {
      throw new OutOfOrderDeltaError(this.tick + 1, delta.tick);
    }
    this.tick = delta.tick;
    this.iCurrent = delta.i_current;
    this.cumulativeFailed = delta.cumulative_failed;
    this.perTickFailures.push(delta.new_failures.length);
    this.perTickRates.push(delta.i_current);
    for (const n of delta.new_ponzis) {
      if (this.statuses[n] === "viable") this.statuses[n] = "ponzi";
    }
    for (const n of delta.recovered) {
      if (this.statuses[n] === "ponzi") this.statuses[n] = "viable";
    }
    for (const n of delta.new_failures) this.statuses[n] = "failed";
  }

  markImmunized(nodes: number[]): void {
    for (const n of nodes) {
      if (this.statuses[n] !== "failed") this.statuses[n] = "immunized";
    }
  }

  markGuaranteed(edges: [number, number][]): void {
    for (const e of edges) this.guaranteedEdges.add(edgeKey(e));
  }

  /** Bar heights for the failure timeline panel, one per tick. */
  failureTimeline(): number[] {
    return [...this.perTickFailures];
  }

  rateSeries(): number[] {
    return [...this.perTickRates];
  }

  /** Live marker for the phase-map panel: (cumulative failures, current rate). */
  phaseMarker(): { n: number; i: number } {
    return { n: Math.max(this.cumulativeFailed, 1), i: this.iCurrent };
  }

  statusCounts(): Record<NodeStatus, number> {
    const counts: Record<NodeStatus, number> = {
      viable: 0, ponzi: 0, failed: 0, immunized: 0,
    };
    for (const s of this.statuses) counts[s] += 1;
    return counts;
  }
}

export function edgeKey([u, v]: [number, number]): string {
  return u < v ? `${u}-${v}` : `${v}-${u}`;
}
