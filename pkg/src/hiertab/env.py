"""Episode environment: two-stage action gating, rewards, termination.

Transformation steps rewrite the table (and clear all embedded insights);
selection steps move a marker and embed the best detected insight of the
block they land on. Extrinsic reward is the weighted change of the three
coverage/diversity metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from . import stats
from .insight import (
    DEFAULT_CONFIG,
    DetectorConfig,
    DetectorError,
    InsightRecord,
    SINGLE_BLOCK_KINDS,
    detect_all,
)
from .table import (
    Block,
    TableState,
    overlaps_mask,
    parse_table,
    resolve_block,
)
from .transform import (
    ActionKind,
    ACTIONS,
    IllegalAction,
    SELECT_ACTIONS,
    TRANSFORM_ACTIONS,
    apply_transform,
    legal_actions,
    move_selection,
)

STAGE_TRANSFORM = "transform"
STAGE_SELECT = "select"

discounted_return = stats.discounted_return


@dataclass(frozen=True)
class Metrics:
    ar: float
    ir: float
    er: float
    covered_cells: int
    total_cells: int
    discovered_kinds: int
    total_kinds: int
    coverage_by_kind: dict[str, int] = field(default_factory=dict)

    @staticmethod
    def zero(total_cells: int, total_kinds: int = len(SINGLE_BLOCK_KINDS)) -> "Metrics":
        return Metrics(0.0, 0.0, 0.0, 0, total_cells, 0, total_kinds, {})


def compute_metrics(
    coverage_by_kind: dict[str, int],
    total_cells: int,
    total_kinds: int = len(SINGLE_BLOCK_KINDS),
) -> Metrics:
    """AR, IR and Shannon-entropy ER from per-kind covered-cell counts."""
    covered = sum(coverage_by_kind.values())
    ar = covered / total_cells if total_cells else 0.0
    ir = len(coverage_by_kind) / total_kinds
    er = 0.0
    if covered > 0:
        for count in coverage_by_kind.values():
            p = count / covered
            if p > 0:
                er -= p * math.log(p)
    return Metrics(
        ar=ar,
        ir=ir,
        er=er,
        covered_cells=covered,
        total_cells=total_cells,
        discovered_kinds=len(coverage_by_kind),
        total_kinds=total_kinds,
        coverage_by_kind=dict(coverage_by_kind),
    )


@dataclass(frozen=True)
class RewardWeights:
    eta_coverage: float = 1.0
    eta_insight: float = 1.0
    eta_evenness: float = 1.0
    gamma: float = 0.99

    def __post_init__(self) -> None:
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must be in [0, 1]")
        if min(self.eta_coverage, self.eta_insight, self.eta_evenness) < 0:
            raise ValueError("reward weights must be non-negative")


@dataclass(frozen=True)
class RewardBreakdown:
    delta_ar: float = 0.0
    delta_ir: float = 0.0
    delta_er: float = 0.0
    r_coverage: float = 0.0
    r_diversity: float = 0.0
    r_ext: float = 0.0
    r_int_heading: float = 0.0
    r_int_content: float = 0.0

    @staticmethod
    def from_deltas(
        weights: RewardWeights, delta_ar: float, delta_ir: float, delta_er: float
    ) -> "RewardBreakdown":
        r_c = weights.eta_coverage * delta_ar
        r_d = weights.eta_insight * delta_ir + weights.eta_evenness * delta_er
        return RewardBreakdown(
            delta_ar=delta_ar,
            delta_ir=delta_ir,
            delta_er=delta_er,
            r_coverage=r_c,
            r_diversity=r_d,
            r_ext=r_c + r_d,
        )


@dataclass(frozen=True)
class EpisodeConfig:
    total_steps: int = 200
    stage_ratio: float = 0.04
    weights: RewardWeights = field(default_factory=RewardWeights)
    detectors: DetectorConfig = field(default_factory=lambda: DEFAULT_CONFIG)
    seed: int = 0

    @property
    def transform_steps(self) -> int:
        return max(1, round(self.stage_ratio * self.total_steps))


@dataclass
class LedgerEntry:
    record: InsightRecord
    cells: int


class EnvError(IllegalAction):
    def __init__(self, message: str, mask: Optional[np.ndarray] = None):
        super().__init__(message)
        self.mask = mask


class TableEnv:
    """Single-episode environment over one hierarchical table document.

    One instance is single-writer; run independent instances concurrently
    for rollout collection.
    """

    def __init__(
        self,
        document: bytes | str | dict,
        config: EpisodeConfig,
        initial_state: Optional[TableState] = None,
        initial_ledger: Optional[list[LedgerEntry]] = None,
        veto: Optional[Any] = None,
    ):
        self.config = config
        self._document = document
        self._initial_state = initial_state
        self._initial_ledger = list(initial_ledger or [])
        # veto(block, kind) -> True suppresses embedding that kind there
        self.veto = veto
        self.rng = np.random.default_rng(config.seed)
        self.state: TableState = parse_table(document)
        self.ledger: list[LedgerEntry] = []
        self.metrics = Metrics.zero(self.state.grid.values.size)
        self.done = False
        self.done_reason: Optional[str] = None
        self._record_counter = 0
        self._apply_initial()

    def _apply_initial(self) -> None:
        if self._initial_state is not None:
            self.state = self._initial_state
        if self._initial_ledger:
            self.ledger = list(self._initial_ledger)
            coverage: dict[str, int] = {}
            for e in self.ledger:
                coverage[e.record.kind] = coverage.get(e.record.kind, 0) + e.cells
            self.metrics = compute_metrics(coverage, self.state.grid.values.size)
            self._record_counter = len(self.ledger)
        # a seeded start can already be terminal
        if self.state.step >= self.config.total_steps:
            self.done, self.done_reason = True, "step-limit"
        elif self.metrics.covered_cells >= self.metrics.total_cells:
            self.done, self.done_reason = True, "fully-visualized"
        elif not np.any(self.legal_mask()):
            self.done, self.done_reason = True, "no-legal-action"

    # -- lifecycle ---------------------------------------------------------

    def reset(self) -> tuple[TableState, dict[str, Any]]:
        self.rng = np.random.default_rng(self.config.seed)
        self.state = parse_table(self._document)
        self.ledger = []
        self.metrics = Metrics.zero(self.state.grid.values.size)
        self.done = False
        self.done_reason = None
        self._record_counter = 0
        self._apply_initial()
        return self.state, self.observation()

    @property
    def stage(self) -> str:
        if self.state.step < self.config.transform_steps:
            return STAGE_TRANSFORM
        return STAGE_SELECT

    def legal_mask(self) -> np.ndarray:
        return legal_actions(self.state, self.stage)

    def observation(self) -> dict[str, Any]:
        return {
            "state": self.state,
            "stage": self.stage,
            "legal_mask": self.legal_mask(),
            "step": self.state.step,
        }

    # -- transitions -------------------------------------------------------

    def step(
        self, action: ActionKind
    ) -> tuple[TableState, RewardBreakdown, bool, dict[str, Any]]:
        if self.done:
            raise EnvError("episode is done")
        mask = self.legal_mask()
        if not mask[ACTIONS.index(action)]:
            raise EnvError(f"illegal action {action.value}", mask=mask)

        info: dict[str, Any] = {"stage": self.stage, "action": action.value}
        if action in TRANSFORM_ACTIONS:
            new_state = apply_transform(self.state, action)
            # clearing the mask resets the metrics baseline: the agent is not
            # punished with negative deltas for transforming
            self.ledger = []
            self.metrics = Metrics.zero(new_state.grid.values.size)
            breakdown = RewardBreakdown()
        else:
            new_state = move_selection(self.state, action)
            breakdown, embedded = self._embed_at_selection(new_state)
            if embedded is not None:
                info["embedded"] = embedded.record
                new_state = self._masked_state(new_state, embedded.record)

        new_state = replace(new_state, step=self.state.step + 1)
        self.state = new_state

        if self.state.step >= self.config.total_steps:
            self.done, self.done_reason = True, "step-limit"
        elif self.metrics.covered_cells >= self.metrics.total_cells:
            self.done, self.done_reason = True, "fully-visualized"
        elif not np.any(self.legal_mask()):
            self.done, self.done_reason = True, "no-legal-action"
        info["done_reason"] = self.done_reason
        info["metrics"] = self.metrics
        return self.state, breakdown, self.done, info

    def _embed_at_selection(
        self, state: TableState
    ) -> tuple[RewardBreakdown, Optional[LedgerEntry]]:
        block = resolve_block(state)
        if overlaps_mask(state, block):
            return RewardBreakdown(), None
        try:
            records = detect_all(state, block, self.config.detectors)
        except DetectorError:
            return RewardBreakdown(), None
        if self.veto is not None:
            records = [r for r in records if not self.veto(block, r.kind)]
        if not records:
            return RewardBreakdown(), None
        record = records[0].with_id(f"i{self._record_counter}")
        self._record_counter += 1
        entry = LedgerEntry(record=record, cells=block.n_cells)
        self.ledger.append(entry)
        coverage: dict[str, int] = {}
        for e in self.ledger:
            kind = e.record.kind
            coverage[kind] = coverage.get(kind, 0) + e.cells
        new_metrics = compute_metrics(coverage, state.grid.values.size)
        breakdown = RewardBreakdown.from_deltas(
            self.config.weights,
            new_metrics.ar - self.metrics.ar,
            new_metrics.ir - self.metrics.ir,
            new_metrics.er - self.metrics.er,
        )
        self.metrics = new_metrics
        return breakdown, entry

    @staticmethod
    def _masked_state(state: TableState, record: InsightRecord) -> TableState:
        block = record.block
        assert isinstance(block, Block)
        grid = state.grid.copy()
        for r in range(*block.rows):
            for c in range(*block.cols):
                grid.viz[r, c] = record.id
        return replace(state, grid=grid)

    # -- lookahead helper used by the greedy baseline ----------------------

    def peek_select_reward(self, action: ActionKind) -> float:
        """Immediate extrinsic reward a selection action would produce."""
        if action not in SELECT_ACTIONS:
            return 0.0
        mask = self.legal_mask()
        if not mask[ACTIONS.index(action)]:
            return 0.0
        moved = move_selection(self.state, action)
        block = resolve_block(moved)
        if overlaps_mask(moved, block):
            return 0.0
        try:
            records = detect_all(moved, block, self.config.detectors)
        except DetectorError:
            return 0.0
        if self.veto is not None:
            records = [r for r in records if not self.veto(block, r.kind)]
        if not records:
            return 0.0
        coverage: dict[str, int] = {}
        for e in self.ledger:
            coverage[e.record.kind] = coverage.get(e.record.kind, 0) + e.cells
        kind = records[0].kind
        coverage[kind] = coverage.get(kind, 0) + block.n_cells
        hypothetical = compute_metrics(coverage, moved.grid.values.size)
        return RewardBreakdown.from_deltas(
            self.config.weights,
            hypothetical.ar - self.metrics.ar,
            hypothetical.ir - self.metrics.ir,
            hypothetical.er - self.metrics.er,
        ).r_ext


def observation_to_json(obs: dict[str, Any]) -> dict[str, Any]:
    """Stable versioned record of an observation for replay files."""
    state: TableState = obs["state"]

    def tree_obj(tree) -> list[dict[str, Any]]:
        nodes = []
        for node in tree.iter_nodes():
            nodes.append(
                {
                    "path": list(node.path),
                    "depth": node.depth,
                    "selected": node.selected,
                    "leaf": node.is_leaf,
                }
            )
        return nodes

    values = [
        [None if np.isnan(v) else float(v) for v in row]
        for row in state.grid.values
    ]
    viz = [[v for v in row] for row in state.grid.viz]
    ids = [[v for v in row] for row in state.grid.cell_ids]
    return {
        "version": 1,
        "stage": obs["stage"],
        "step": obs["step"],
        "legalMask": [bool(b) for b in obs["legal_mask"]],
        "rowNodes": tree_obj(state.row_tree),
        "colNodes": tree_obj(state.col_tree),
        "values": values,
        "vizMask": viz,
        "cellIds": ids,
    }
