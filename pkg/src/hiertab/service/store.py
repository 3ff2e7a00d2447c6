"""File-backed session store: append-only event log plus latest snapshot."""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field, replace as dc_replace
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..env import (
    EpisodeConfig,
    LedgerEntry,
    Metrics,
    TableEnv,
    compute_metrics,
)
from ..insight import (
    DetectorError,
    InsightRecord,
    compose_multiblock,
    detect_all,
    recommend_blocks,
)
from ..table import (
    Block,
    SchemaError,
    TableError,
    TableState,
    block_for,
    overlaps_mask,
    parse_table,
)


class StoreError(Exception):
    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


@dataclass
class Session:
    id: str
    document: dict
    records: list[dict] = field(default_factory=list)
    tombstones: list[list] = field(default_factory=list)
    revision: int = 0
    record_counter: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    run_in_progress: bool = False


def record_to_wire(record: InsightRecord, block: Block) -> dict:
    return {
        "id": record.id,
        "kind": record.kind,
        "score": record.score,
        "params": record.params,
        "chart": record.chart,
        "provenance": record.provenance,
        "rowEntry": list(block.row_entry),
        "colEntry": list(block.col_entry),
    }


def state_to_wire(state: TableState) -> dict:
    def tree_obj(tree) -> list[dict]:
        return [
            {
                "path": list(node.path),
                "label": node.label,
                "depth": node.depth,
                "leaf": node.is_leaf,
            }
            for node in tree.iter_nodes()
        ]

    return {
        "rowNodes": tree_obj(state.row_tree),
        "colNodes": tree_obj(state.col_tree),
        "values": [
            [None if np.isnan(v) else float(v) for v in row]
            for row in state.grid.values
        ],
        "vizMask": [[v for v in row] for row in state.grid.viz],
    }


class SessionStore:
    """All sessions of one service instance; writes are serialized per
    session and every mutation bumps the revision by exactly one."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.sessions: dict[str, Session] = {}
        self._load()

    # -- persistence -------------------------------------------------------

    def _snapshot_path(self, sid: str) -> Path:
        return self.data_dir / f"{sid}.snapshot.json"

    def _log_path(self, sid: str) -> Path:
        return self.data_dir / f"{sid}.log"

    def _load(self) -> None:
        for path in sorted(self.data_dir.glob("*.snapshot.json")):
            payload = json.loads(path.read_text())
            session = Session(
                id=payload["id"],
                document=payload["document"],
                records=payload["records"],
                tombstones=payload["tombstones"],
                revision=payload["revision"],
                record_counter=payload["recordCounter"],
            )
            self.sessions[session.id] = session

    def _persist(self, session: Session, event: dict) -> None:
        with open(self._log_path(session.id), "a") as fh:
            fh.write(json.dumps({"revision": session.revision, **event}) + "\n")
        snapshot = {
            "id": session.id,
            "document": session.document,
            "records": session.records,
            "tombstones": session.tombstones,
            "revision": session.revision,
            "recordCounter": session.record_counter,
        }
        self._snapshot_path(session.id).write_text(json.dumps(snapshot))

    # -- helpers -----------------------------------------------------------

    def get(self, sid: str) -> Session:
        session = self.sessions.get(sid)
        if session is None:
            raise StoreError(f"unknown session {sid}", status=404)
        return session

    def build_state(self, session: Session) -> TableState:
        state = parse_table(json.dumps(session.document))
        for rec in session.records:
            block = block_for(
                state, tuple(rec["rowEntry"]), tuple(rec["colEntry"])
            )
            if overlaps_mask(state, block):
                raise StoreError("ledger produced overlapping blocks", 500)
            for r in range(*block.rows):
                for c in range(*block.cols):
                    state.grid.viz[r, c] = rec["id"]
        return state

    def metrics(self, session: Session, state: Optional[TableState] = None) -> Metrics:
        state = state or self.build_state(session)
        coverage: dict[str, int] = {}
        for rec in session.records:
            block = block_for(
                state, tuple(rec["rowEntry"]), tuple(rec["colEntry"])
            )
            coverage[rec["kind"]] = coverage.get(rec["kind"], 0) + block.n_cells
        return compute_metrics(coverage, state.grid.values.size)

    def _find_record(self, session: Session, iid: str) -> dict:
        for rec in session.records:
            if rec["id"] == iid:
                return rec
        raise StoreError(f"unknown insight {iid}", status=404)

    # -- operations --------------------------------------------------------

    def create(self, document: Any) -> Session:
        if not isinstance(document, dict):
            raise StoreError("document must be a JSON object", 400)
        try:
            parse_table(json.dumps(document))
        except (SchemaError, TableError, ValueError) as exc:
            raise StoreError(f"invalid table document: {exc}", 400)
        sid = uuid.uuid4().hex[:12]
        session = Session(id=sid, document=document)
        self.sessions[sid] = session
        with session.lock:
            session.revision += 1
            self._persist(session, {"type": "create", "document": document})
        return session

    def recommend(
        self,
        sid: str,
        budget: int,
        episode_config: EpisodeConfig,
        policy: Optional[Any] = None,
    ) -> list[dict]:
        """Run the agent (or greedy fallback) for ≤ budget selection steps.

        Existing records stay embedded; tombstoned (block, kind) pairs are
        never re-proposed.
        """
        if budget < 0:
            raise StoreError("budget must be non-negative", 400)
        session = self.get(sid)
        with session.lock:
            if session.run_in_progress:
                raise StoreError("a recommendation run is already active", 409)
            session.run_in_progress = True
        try:
            added = self._run_recommendation(
                session, budget, episode_config, policy
            )
            with session.lock:
                session.records.extend(added)
                session.revision += 1
                self._persist(
                    session,
                    {"type": "recommend", "budget": budget, "added": added},
                )
            return added
        finally:
            session.run_in_progress = False

    def _run_recommendation(
        self,
        session: Session,
        budget: int,
        episode_config: EpisodeConfig,
        policy: Optional[Any],
    ) -> list[dict]:
        if budget == 0:
            return []
        state = self.build_state(session)
        # start inside the selection stage: recommendation never rewrites
        # the layout, so manual records survive
        state = dc_replace(state, step=episode_config.transform_steps)
        initial_ledger = []
        for rec in session.records:
            block = block_for(
                state, tuple(rec["rowEntry"]), tuple(rec["colEntry"])
            )
            record = InsightRecord(
                kind=rec["kind"],
                block=block,
                score=rec["score"],
                params=rec["params"],
                chart=rec["chart"],
                provenance=rec["provenance"],
                id=rec["id"],
            )
            initial_ledger.append(LedgerEntry(record=record, cells=block.n_cells))
        tombstones = {
            (tuple(r), tuple(c), k) for r, c, k in session.tombstones
        }

        def veto(block: Block, kind: str) -> bool:
            return (block.row_entry, block.col_entry, kind) in tombstones

        config = dc_replace(
            episode_config,
            total_steps=episode_config.transform_steps + budget,
        )
        env = TableEnv(
            json.dumps(session.document),
            config,
            initial_state=state,
            initial_ledger=initial_ledger,
            veto=veto,
        )
        while not env.done:
            if policy is not None:
                action = policy(env)
            else:
                from ..agent.baselines import _greedy_action

                action = _greedy_action(env)
            env.step(action)
        added = []
        for entry in env.ledger[len(initial_ledger):]:
            block = entry.record.block
            assert isinstance(block, Block)
            record = entry.record.with_id(f"i{session.record_counter}")
            session.record_counter += 1
            added.append(record_to_wire(record, block))
        return added

    def remove(self, sid: str, iid: str) -> Metrics:
        session = self.get(sid)
        with session.lock:
            rec = self._find_record(session, iid)
            session.records.remove(rec)
            session.tombstones.append(
                [rec["rowEntry"], rec["colEntry"], rec["kind"]]
            )
            session.revision += 1
            self._persist(session, {"type": "remove", "id": iid})
        return self.metrics(session)

    def alternatives(
        self, sid: str, iid: str, detectors
    ) -> list[dict]:
        session = self.get(sid)
        rec = self._find_record(session, iid)
        state = self.build_state(session)
        block = block_for(state, tuple(rec["rowEntry"]), tuple(rec["colEntry"]))
        try:
            records = detect_all(state, block, detectors)
        except DetectorError:
            return []
        return [
            record_to_wire(r, block)
            for r in records
            if r.kind != rec["kind"]
        ]

    def replace(self, sid: str, iid: str, kind: str, detectors) -> list[dict]:
        session = self.get(sid)
        with session.lock:
            rec = self._find_record(session, iid)
            state = self.build_state(session)
            block = block_for(
                state, tuple(rec["rowEntry"]), tuple(rec["colEntry"])
            )
            try:
                records = detect_all(state, block, detectors)
            except DetectorError:
                records = []
            match = next(
                (r for r in records if r.kind == kind and r.kind != rec["kind"]),
                None,
            )
            if match is None:
                raise StoreError(
                    f"kind {kind!r} is not an alternative for {iid}", 422
                )
            rec.update(
                kind=match.kind,
                score=match.score,
                params=match.params,
                chart=match.chart,
                provenance="manual",
            )
            session.revision += 1
            self._persist(
                session,
                {"type": "replace", "id": iid, "kind": kind, "record": dict(rec)},
            )
        return list(session.records)

    def add_manual(
        self, sid: str, row_entry: list, col_entry: list, kind: str, detectors
    ) -> dict:
        session = self.get(sid)
        with session.lock:
            state = self.build_state(session)
            try:
                block = block_for(state, tuple(row_entry), tuple(col_entry))
            except TableError as exc:
                raise StoreError(str(exc), 400)
            if overlaps_mask(state, block):
                raise StoreError("block overlaps an existing insight", 409)
            try:
                records = detect_all(state, block, detectors)
            except DetectorError as exc:
                raise StoreError(f"detector not applicable: {exc}", 422)
            match = next((r for r in records if r.kind == kind), None)
            if match is None:
                raise StoreError(f"kind {kind!r} does not fire on this block", 422)
            record = dc_replace(match, provenance="manual").with_id(
                f"i{session.record_counter}"
            )
            session.record_counter += 1
            wire = record_to_wire(record, block)
            session.records.append(wire)
            session.revision += 1
            self._persist(session, {"type": "manual", "record": wire})
        return wire

    def export(self, sid: str) -> bytes:
        """Canonical byte-stable document + insights array."""
        session = self.get(sid)
        payload = {
            "rowTree": session.document["rowTree"],
            "colTree": session.document["colTree"],
            "values": session.document["values"],
            "insights": [
                {
                    "kind": rec["kind"],
                    "rowEntry": rec["rowEntry"],
                    "colEntry": rec["colEntry"],
                    "score": rec["score"],
                    "params": rec["params"],
                    "chart": rec["chart"],
                    "provenance": rec["provenance"],
                }
                for rec in session.records
            ],
        }
        return json.dumps(
            payload, sort_keys=True, separators=(",", ":")
        ).encode("utf-8")

    def relations(self, session: Session, detectors) -> list[dict]:
        """Multi-block cues for every embedded record's block."""
        state = self.build_state(session)
        out = []
        for rec in session.records:
            block = block_for(
                state, tuple(rec["rowEntry"]), tuple(rec["colEntry"])
            )
            for relation in recommend_blocks(state, block):
                blocks = (relation.anchor,) + relation.related
                per_block = []
                for b in blocks:
                    try:
                        per_block.append(detect_all(state, b, detectors))
                    except DetectorError:
                        per_block.append([])
                try:
                    pattern = compose_multiblock(relation, per_block)
                except ValueError:
                    pattern = None
                out.append(
                    {
                        "anchorInsight": rec["id"],
                        "mechanism": relation.mechanism,
                        "sharedSide": relation.shared_side,
                        "blocks": [
                            {
                                "rowEntry": list(b.row_entry),
                                "colEntry": list(b.col_entry),
                            }
                            for b in blocks
                        ],
                        "pattern": None
                        if pattern is None
                        else {
                            "kind": pattern.kind,
                            "score": pattern.score,
                            "params": pattern.params,
                            "chart": pattern.chart,
                        },
                    }
                )
        return out
