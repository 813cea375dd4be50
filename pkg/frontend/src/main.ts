// Browser wiring: connect to a session, stream deltas, render panels,
// drive the preview -> commit intervention flow.

import { ServiceClient } from "./api.js";
import { InterventionFlow, nodeActions, rateAction } from "./controls.js";
import { forceLayout, Point } from "./layout.js";
import { ConsoleState } from "./state.js";
import { drawNetwork, drawPhasePanel, drawRateSeries, drawTimeline } from "./render.js";
import type { Delta, PhaseGridPayload, Snapshot } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function canvasCtx(id: string): [HTMLCanvasElement, CanvasRenderingContext2D] {
  const canvas = el<HTMLCanvasElement>(id);
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error(`no 2d context for #${id}`);
  return [canvas, ctx];
}

class Console {
  state!: ConsoleState;
  layout: Point[] = [];
  flow!: InterventionFlow;
  phaseGrid: PhaseGridPayload | null = null;
  private renderQueued = false;

  constructor(
    private client: ServiceClient,
    private sessionId: string,
  ) {}

  async start(snapshot: Snapshot): Promise<void> {
    this.state = ConsoleState.fromSnapshot(snapshot);
    this.layout = forceLayout(snapshot.n_nodes, this.state.edges, snapshot.layout_seed);
    this.flow = new InterventionFlow(this.client, this.sessionId);
    // the phase map is pre-rendered from the service's grid export once
    this.phaseGrid = await this.client.phaseGrid(this.sessionId).catch(() => null);
    this.client.streamDeltas(
      this.sessionId,
      (delta: Delta) => {
        this.state.applyDelta(delta);
        this.queueRender();
      },
      (snap: Snapshot) => {
        this.state.resync(snap);
        this.queueRender();
      },
    );
    this.wireControls();
    this.queueRender();
  }

  /** Renders coalesce to one per animation frame. */
  queueRender(): void {
    if (this.renderQueued) return;
    this.renderQueued = true;
    requestAnimationFrame(() => {
      this.renderQueued = false;
      this.render();
    });
  }

  render(): void {
    const [netCanvas, netCtx] = canvasCtx("network");
    drawNetwork(netCtx, this.state, this.layout, netCanvas.width, netCanvas.height);
    const [tlCanvas, tlCtx] = canvasCtx("timeline");
    drawTimeline(tlCtx, this.state.failureTimeline(), tlCanvas.width, tlCanvas.height);
    const [rateCanvas, rateCtx] = canvasCtx("rates");
    drawRateSeries(rateCtx, this.state.rateSeries(), rateCanvas.width, rateCanvas.height);
    const [phaseCanvas, phaseCtx] = canvasCtx("phasemap");
    drawPhasePanel(phaseCtx, this.state, this.state.nNodes,
                   phaseCanvas.width, phaseCanvas.height, this.phaseGrid);

    el("tick-label").textContent = `tick ${this.state.tick}`;
    el("rate-label").textContent = `i = ${(this.state.iCurrent * 100).toFixed(3)}%`;
    const counts = this.state.statusCounts();
    el("counts-label").textContent =
      `viable ${counts.viable} | ponzi ${counts.ponzi} | ` +
      `failed ${counts.failed} | immunized ${counts.immunized}`;
    el("phase-label").textContent = this.state.phaseAnnotation ?? "-";
  }

  private wireControls(): void {
    el<HTMLButtonElement>("advance-1").onclick = () => void this.advance(1);
    el<HTMLButtonElement>("advance-5").onclick = () => void this.advance(5);

    const [netCanvas] = canvasCtx("network");
    netCanvas.onclick = (ev: MouseEvent) => {
      const rect = netCanvas.getBoundingClientRect();
      const x = (ev.clientX - rect.left) / rect.width;
      const y = (ev.clientY - rect.top) / rect.height;
      const node = this.nearestNode(x, y);
      if (node !== null) void this.openNodeMenu(node);
    };

    el<HTMLButtonElement>("rate-preview").onclick = () => {
      const slider = el<HTMLInputElement>("rate-slider");
      void this.previewAction(rateAction(Number(slider.value)));
    };
    el<HTMLButtonElement>("commit").onclick = () => void this.commit();
    el<HTMLButtonElement>("cancel").onclick = () => {
      this.flow.cancel();
      this.setPreviewText("cancelled; committed state unchanged");
      this.syncFlowButtons();
    };
    this.syncFlowButtons();
  }

  nearestNode(x: number, y: number, radius = 0.035): number | null {
    let best: number | null = null;
    let bestDist = radius * radius;
    this.layout.forEach((p, n) => {
      const d = (p.x - x) ** 2 + (p.y - y) ** 2;
      if (d < bestDist) {
        best = n;
        bestDist = d;
      }
    });
    return best;
  }

  private async openNodeMenu(node: number): Promise<void> {
    const actions = nodeActions(node, this.state.edges);
    const choice = window.prompt(
      `node ${node}: 0 = immunize, 1 = guarantee its edges`, "0");
    const idx = choice === "1" && actions.length > 1 ? 1 : 0;
    await this.previewAction(actions[idx]);
  }

  private async previewAction(action: Parameters<InterventionFlow["preview"]>[0]): Promise<void> {
    const preview = await this.flow.preview(action);
    this.setPreviewText(
      `preview tick ${preview.tick}: ${preview.new_failures.length} new failures, ` +
      `${preview.new_ponzis.length} new ponzi, i -> ${(preview.i_current * 100).toFixed(3)}%`);
    this.syncFlowButtons();
  }

  private async commit(): Promise<void> {
    const result = await this.flow.commit();
    if (result.intervention.kind === "immunize_nodes") {
      this.state.markImmunized(result.intervention.nodes as number[]);
    } else if (result.intervention.kind === "guarantee_edges") {
      this.state.markGuaranteed(result.intervention.edges as [number, number][]);
    }
    this.setPreviewText("committed");
    this.syncFlowButtons();
    this.queueRender();
  }

  private async advance(n: number): Promise<void> {
    await this.client.advance(this.sessionId, n);
    // deltas arrive through the stream; nothing to apply here
  }

  private setPreviewText(text: string): void {
    el("preview-panel").textContent = text;
  }

  private syncFlowButtons(): void {
    el<HTMLButtonElement>("commit").disabled = this.flow.phase !== "previewed";
    el<HTMLButtonElement>("cancel").disabled = this.flow.phase !== "previewed";
  }
}

async function boot(): Promise<void> {
  const client = new ServiceClient(window.location.origin);
  const params = new URLSearchParams(window.location.search);
  let sessionId = params.get("session");
  let snapshot: Snapshot;
  if (sessionId) {
    snapshot = await client.snapshot(sessionId);
  } else {
    const scenarioText = el<HTMLTextAreaElement>("scenario-input").value;
    const created = await client.createSession(JSON.parse(scenarioText));
    sessionId = created.session_id;
    snapshot = created.snapshot;
    params.set("session", sessionId);
    history.replaceState(null, "", `?${params.toString()}`);
  }
  el("session-label").textContent = sessionId;
  await new Console(client, sessionId).start(snapshot);
}

el<HTMLButtonElement>("connect").onclick = () => void boot();
