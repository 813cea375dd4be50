"""Interactive session API for steering live simulated crises.

JSON over HTTP plus a server-sent-event delta stream.  One writer per
session: tick/intervene requests serialize through a per-session lock, while
snapshots and what-if previews read immutable state copies and never mutate
committed state.  Endpoints (payload schemas in schemas/api_schema.json):

    POST /sessions                      create from a scenario config
    GET  /sessions/{id}/snapshot        full state snapshot
    POST /sessions/{id}/advance         apply n ticks, returns deltas
    POST /sessions/{id}/intervene       queue intervention + next-tick preview
    POST /sessions/{id}/preview         one-tick what-if without committing
    GET  /sessions/{id}/stream          SSE delta stream (resumable)
    GET  /sessions/{id}/replay          config + intervention log + deltas
    GET  /schema                        the API schema document
"""

from __future__ import annotations

import asyncio
import json
import threading
import uuid
from dataclasses import dataclass, field
from importlib import resources
from time import time

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse, StreamingResponse

from .abm import (Intervention, InterventionError, PolicySpec, SimState,
                  init_scenario, apply_intervention, tick)
from .combined import DegenerateParametersError, SolverError, classify_phase, \
    phase_diagram, solve_fixed_points, thresholds
from .firms import FAILED, PONZI
from .scenario import (ScenarioValidationError, combined_params_for,
                       load_scenario)
from .validation import ParameterError

API_VERSION = 1


@dataclass
class Session:
    id: str
    sim: SimState
    doc: dict
    created_at: float
    updated_at: float
    deltas: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: int = 0
    scheduled: list[Intervention] = field(default_factory=list)


def _status_lists(state: SimState) -> dict:
    status = state.firms.status
    return {
        "viable": np.flatnonzero(status == 0).tolist(),
        "ponzi": np.flatnonzero(status == PONZI).tolist(),
        "failed": np.flatnonzero(status == FAILED).tolist(),
        "immunized": np.flatnonzero(state.firms.immunized).tolist(),
    }


def _delta_between(before: SimState, after: SimState) -> dict:
    new_failed = sorted(set(after.failed_ids.tolist())
                        - set(before.failed_ids.tolist()))
    ponzi_before = set(before.ponzi_ids.tolist())
    ponzi_after = set(after.ponzi_ids.tolist())
    return {
        "tick": after.tick,
        "new_failures": new_failed,
        "new_ponzis": sorted(ponzi_after - ponzi_before),
        "recovered": sorted(ponzi_before - ponzi_after - set(new_failed)),
        "i_current": after.i_current,
        "cumulative_failed": after.cumulative_failed,
        "n_ponzi": len(ponzi_after),
    }


def _snapshot(session: Session) -> dict:
    state = session.sim
    doc = session.doc
    annotation = None
    th = None
    params = combined_params_for(doc, state.network.n_nodes)
    if params is not None and 0 < params.alpha_beta < 1:
        try:
            fps = solve_fixed_points(params)
            t = thresholds(params)
            n0 = max(len(state.config.seeds), 1)
            annotation = classify_phase(params, n0, fixed_points=fps).value
            th = {"i_safe": t.i_safe, "n_safe": t.n_safe, "i_0c": t.i_0c,
                  "n_0c": t.n_0c, "regime": fps.regime.value,
                  "n_conv": fps.n_conv, "n_div": fps.n_div,
                  "n_core": fps.n_core}
        except (DegenerateParametersError, SolverError, ParameterError):
            annotation = None
    return {
        "session_id": session.id,
        "tick": state.tick,
        "i_current": state.i_current,
        "cumulative_failed": state.cumulative_failed,
        "per_tick_failures": list(state.per_tick_failures),
        "per_tick_rates": list(state.per_tick_rates),
        "statuses": _status_lists(state),
        "edges": state.network.edges().tolist(),
        "n_nodes": state.network.n_nodes,
        "layout_seed": state.config.seed,
        "phase_annotation": annotation,
        "thresholds": th,
        "guaranteed_edges": sorted(list(e) for e in state.guaranteed_edges),
    }


def _parse_intervention(payload: dict) -> Intervention:
    kind = payload.get("kind")
    if kind == "immunize_nodes":
        return Intervention(kind=kind, nodes=tuple(payload.get("nodes", ())))
    if kind == "guarantee_edges":
        return Intervention(kind=kind, edges=tuple(
            (int(u), int(v)) for u, v in payload.get("edges", ())))
    if kind == "set_rate":
        return Intervention(kind=kind, rate=payload.get("rate"))
    if kind == "set_policy":
        pol = payload.get("policy", {})
        return Intervention(kind=kind, policy=PolicySpec(
            rate_rule=pol.get("rate_rule", "procyclical"),
            manual_rate=pol.get("manual_rate"),
            rate_floor=pol.get("rate_floor"),
            rate_driver=pol.get("rate_driver", "cumulative")))
    raise InterventionError(f"unknown intervention kind {kind!r}")


def create_app(static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="minskysim session service", version=str(API_VERSION))
    sessions: dict[str, Session] = {}

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id}")
        return session

    @app.post("/sessions")
    def create_session(doc: dict):
        try:
            config = load_scenario(doc)
            sim = init_scenario(config)
        except (ScenarioValidationError, ParameterError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        session = Session(id=uuid.uuid4().hex, sim=sim, doc=doc,
                          created_at=time(), updated_at=time(),
                          scheduled=sorted(config.interventions,
                                           key=lambda iv: iv.applied_at_tick))
        sessions[session.id] = session
        return {"session_id": session.id, "snapshot": _snapshot(session)}

    @app.get("/sessions/{session_id}/snapshot")
    def snapshot(session_id: str):
        return _snapshot(get_session(session_id))

    @app.post("/sessions/{session_id}/advance")
    def advance(session_id: str, body: dict):
        session = get_session(session_id)
        n_ticks = int(body.get("n_ticks", 1))
        if n_ticks < 0:
            raise HTTPException(status_code=422, detail="n_ticks must be >= 0")
        with session.lock:
            deltas = []
            for _ in range(n_ticks):
                while session.scheduled and \
                        session.scheduled[0].applied_at_tick <= session.sim.tick:
                    session.sim = apply_intervention(session.sim,
                                                     session.scheduled.pop(0))
                before = session.sim
                session.sim = tick(before)
                delta = _delta_between(before, session.sim)
                session.deltas.append(delta)
                deltas.append(delta)
            session.updated_at = time()
        return {"deltas": deltas, "tick": session.sim.tick}

    @app.post("/sessions/{session_id}/preview")
    def preview(session_id: str, body: dict):
        """One-tick what-if on a copy; committed state is never touched."""
        session = get_session(session_id)
        try:
            iv = _parse_intervention(body)
            with session.lock:
                shadow = apply_intervention(session.sim, iv)
            after = tick(shadow)
        except (InterventionError, ParameterError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"preview": _delta_between(session.sim, after)}

    @app.post("/sessions/{session_id}/intervene")
    def intervene(session_id: str, body: dict):
        session = get_session(session_id)
        try:
            iv = _parse_intervention(body)
            with session.lock:
                committed = apply_intervention(session.sim, iv)
                preview_state = tick(committed)
                session.sim = committed
                session.updated_at = time()
        except (InterventionError, ParameterError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"ok": True,
                "intervention": session.sim.interventions[-1].describe(),
                "preview": _delta_between(session.sim, preview_state)}

    @app.get("/sessions/{session_id}/phasegrid")
    def phasegrid(session_id: str, n0_steps: int = 48, i0_steps: int = 24):
        """Phase labels over an (N0, i0) grid around the session's scenario,
        for the console's pre-rendered phase-map panel."""
        session = get_session(session_id)
        n0_steps = max(4, min(n0_steps, 200))
        i0_steps = max(4, min(i0_steps, 200))
        params = combined_params_for(session.doc,
                                     session.sim.network.n_nodes)
        if params is None or not (0 < params.alpha_beta < 1):
            return {"available": False, "reason":
                    "no mean-field map parameters for this scenario"}
        try:
            th = thresholds(params)
            lo = min(0.2 * th.i_safe, 0.5 * params.i0)
            hi = max(5.0 * th.i_0c, 2.0 * params.i0)
            i0_values = np.geomspace(lo, hi, i0_steps)
            n0_values = np.geomspace(1.0, float(params.n_total), n0_steps)
            grid = phase_diagram(params, n0_values, i0_values, axis="i0")
        except (DegenerateParametersError, SolverError, ParameterError) as exc:
            return {"available": False, "reason": str(exc)}
        side = grid.sidecar()
        return {
            "available": True,
            "axis": "i0",
            "axis_values": side["axis_values"],
            "n0_values": side["n0_values"],
            "labels": [list(row) for row in grid.labels],
            "boundaries": side["boundaries"],
            "thresholds": side["thresholds"],
            "session_point": {"n0": max(len(session.sim.config.seeds), 1),
                              "i0": params.i0},
        }

    @app.get("/sessions/{session_id}/replay")
    def replay(session_id: str):
        session = get_session(session_id)
        return {
            "config": session.doc,
            "interventions": [iv.describe()
                              for iv in session.sim.interventions],
            "deltas": session.deltas,
            "tick": session.sim.tick,
        }

    @app.get("/sessions/{session_id}/stream")
    async def stream(session_id: str, from_tick: int = 0, follow: bool = True):
        """SSE delta stream; ``from_tick`` resumes after a reconnect and
        ``follow=false`` drains the buffered deltas and closes (polling)."""
        session = get_session(session_id)

        async def gen():
            session.subscribers += 1
            cursor = 0
            try:
                while cursor < len(session.deltas) and \
                        session.deltas[cursor]["tick"] <= from_tick:
                    cursor += 1
                while True:
                    while cursor < len(session.deltas):
                        delta = session.deltas[cursor]
                        cursor += 1
                        yield f"data: {json.dumps(delta)}\n\n"
                    if not follow:
                        break
                    await asyncio.sleep(0.05)
            finally:
                session.subscribers -= 1

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.get("/schema")
    def schema():
        doc = resources.files("minskysim").joinpath(
            "schemas/api_schema.json").read_text()
        return JSONResponse(content=json.loads(doc))

    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="console")

    return app
