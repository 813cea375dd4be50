// Intervention flow: every action must show its service-computed preview
// before it can commit, and cancelling leaves committed state untouched.

import type { ServiceClient } from "./api.js";
import type { Delta, InterveneResponse, InterventionRequest } from "./types.js";

export class CommitWithoutPreviewError extends Error {
  constructor() {
    super("intervention must be previewed before it can commit");
  }
}

export type FlowPhase = "idle" | "previewed";

export class InterventionFlow {
  phase: FlowPhase = "idle";
  pending: InterventionRequest | null = null;
  lastPreview: Delta | null = null;

  constructor(
    private client: ServiceClient,
    private sessionId: string,
  ) {}

  /** Ask the service for a one-tick what-if; nothing commits. */
  async preview(intervention: InterventionRequest): Promise<Delta> {
    const preview = await this.client.preview(this.sessionId, intervention);
    this.phase = "previewed";
    this.pending = intervention;
    this.lastPreview = preview;
    return preview;
  }

  /** Commit the previewed intervention.  Rejects if nothing was previewed. */
  async commit(): Promise<InterveneResponse> {
    if (this.phase !== "previewed" || this.pending === null) {
      throw new CommitWithoutPreviewError();
    }
    const result = await this.client.intervene(this.sessionId, this.pending);
    this.reset();
    return result;
  }

  /** Drop the pending intervention; committed state is unaffected. */
  cancel(): void {
    this.reset();
  }

  private reset(): void {
    this.phase = "idle";
    this.pending = null;
    this.lastPreview = null;
  }
}

/** The clickable node menu offers immunize, or guarantee of incident edges. */
export function nodeActions(
  node: number,
  edges: [number, number][],
): InterventionRequest[] {
  const incident = edges.filter(([u, v]) => u === node || v === node);
  const actions: InterventionRequest[] = [
    { kind: "immunize_nodes", nodes: [node] },
  ];
  if (incident.length > 0) {
    actions.push({ kind: "guarantee_edges", edges: incident });
  }
  return actions;
}

export function rateAction(rate: number): InterventionRequest {
  if (!(rate > 0)) throw new Error("rate must be positive");
  return { kind: "set_rate", rate };
}
