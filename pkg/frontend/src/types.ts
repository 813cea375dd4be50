// Payload shapes of the session service (see its /schema endpoint).

export interface StatusLists {
  viable: number[];
  ponzi: number[];
  failed: number[];
  immunized: number[];
}

export interface ThresholdInfo {
  i_safe: number;
  n_safe: number;
  i_0c: number;
  n_0c: number;
  regime: string;
  n_conv: number | null;
  n_div: number | null;
  n_core: number | null;
}

export interface Snapshot {
  session_id: string;
  tick: number;
  i_current: number;
  cumulative_failed: number;
  per_tick_failures: number[];
  per_tick_rates: number[];
  statuses: StatusLists;
  edges: [number, number][];
  n_nodes: number;
  layout_seed: number;
  phase_annotation: string | null;
  thresholds: ThresholdInfo | null;
  guaranteed_edges: [number, number][];
}

export interface Delta {
  tick: number;
  new_failures: number[];
  new_ponzis: number[];
  recovered: number[];
  i_current: number;
  cumulative_failed: number;
  n_ponzi: number;
}

export type InterventionRequest =
  | { kind: "immunize_nodes"; nodes: number[] }
  | { kind: "guarantee_edges"; edges: [number, number][] }
  | { kind: "set_rate"; rate: number }
  | {
      kind: "set_policy";
      policy: {
        rate_rule: string;
        manual_rate?: number;
        rate_floor?: number;
        rate_driver?: string;
      };
    };

export interface InterveneResponse {
  ok: boolean;
  intervention: Record<string, unknown>;
  preview: Delta;
}

export type NodeStatus = "viable" | "ponzi" | "failed" | "immunized";

export interface PhaseGridPayload {
  available: boolean;
  reason?: string;
  axis?: "i0";
  axis_values?: number[];
  n0_values?: number[];
  labels?: string[][];
  boundaries?: { n_conv: (number | null)[]; n_div: (number | null)[]; n_core: (number | null)[] };
  thresholds?: Record<string, number>;
  session_point?: { n0: number; i0: number };
}
