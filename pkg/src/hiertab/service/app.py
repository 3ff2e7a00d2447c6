"""HTTP API over the session store."""

from __future__ import annotations

import json
from typing import Any, Optional

from fastapi import Body, FastAPI, HTTPException, Query, Response

from .config import ServiceConfig
from .store import SessionStore, StoreError, state_to_wire


def _agent_policy(checkpoint_path: str):
    """Argmax policy from a training checkpoint."""
    import torch
    from ..agent.ppo import load_checkpoint
    from ..agent.ppo import _encode_cached, _snapshot
    from ..transform import ACTIONS

    nets, _ = load_checkpoint(checkpoint_path)

    def policy(env):
        tr = _snapshot(nets, env)
        with torch.no_grad():
            _, out = _encode_cached(nets, tr)
        return ACTIONS[int(torch.argmax(out.probs()))]

    return policy


def create_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="hiertab", version="0.1.0")
    store = SessionStore(config.data_dir)
    app.state.store = store
    app.state.config = config
    policy = None
    if config.checkpoint:
        policy = _agent_policy(config.checkpoint)

    def guard(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StoreError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc))

    @app.post("/sessions", status_code=201)
    def create_session(document: Any = Body(...)) -> dict:
        session = guard(store.create, document)
        return {"id": session.id, "revision": session.revision}

    @app.get("/sessions/{sid}")
    def get_session(sid: str) -> dict:
        session = guard(store.get, sid)
        state = guard(store.build_state, session)
        metrics = guard(store.metrics, session, state)
        return {
            "id": session.id,
            "revision": session.revision,
            "document": session.document,
            "state": state_to_wire(state),
            "insights": session.records,
            "metrics": {
                "ar": metrics.ar,
                "ir": metrics.ir,
                "er": metrics.er,
                "coveredCells": metrics.covered_cells,
                "totalCells": metrics.total_cells,
                "discoveredKinds": metrics.discovered_kinds,
                "totalKinds": metrics.total_kinds,
            },
            "relations": guard(store.relations, session, config.detectors),
        }

    @app.post("/sessions/{sid}/recommend")
    def recommend(sid: str, budget: int = Query(...)) -> dict:
        added = guard(
            store.recommend, sid, budget, config.episode_config(), policy
        )
        session = store.get(sid)
        return {"added": added, "revision": session.revision}

    @app.delete("/sessions/{sid}/insights/{iid}")
    def remove_insight(sid: str, iid: str) -> dict:
        metrics = guard(store.remove, sid, iid)
        session = store.get(sid)
        return {
            "revision": session.revision,
            "metrics": {"ar": metrics.ar, "ir": metrics.ir, "er": metrics.er},
        }

    @app.get("/sessions/{sid}/insights/{iid}/alternatives")
    def alternatives(sid: str, iid: str) -> dict:
        return {
            "alternatives": guard(store.alternatives, sid, iid, config.detectors)
        }

    @app.post("/sessions/{sid}/insights/{iid}/replace")
    def replace_insight(sid: str, iid: str, body: dict = Body(...)) -> dict:
        kind = body.get("kind")
        if not isinstance(kind, str):
            raise HTTPException(status_code=400, detail="body must carry a kind")
        records = guard(store.replace, sid, iid, kind, config.detectors)
        session = store.get(sid)
        return {"insights": records, "revision": session.revision}

    @app.post("/sessions/{sid}/insights", status_code=201)
    def add_insight(sid: str, body: dict = Body(...)) -> dict:
        for key in ("rowEntry", "colEntry", "kind"):
            if key not in body:
                raise HTTPException(status_code=400, detail=f"missing {key}")
        record = guard(
            store.add_manual,
            sid,
            body["rowEntry"],
            body["colEntry"],
            body["kind"],
            config.detectors,
        )
        session = store.get(sid)
        return {"insight": record, "revision": session.revision}

    @app.get("/sessions/{sid}/export")
    def export_session(sid: str) -> Response:
        payload = guard(store.export, sid)
        return Response(content=payload, media_type="application/json")

    return app
