"""Heading transformations and selection movement.

Fourteen discrete actions: six table transformations (transpose, aggregate,
stack, unstack, swap_row, swap_col) plus eight selection moves, with
legality masks for the two-stage action gating.
"""

from __future__ import annotations

import warnings
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .table import (
    COL,
    ROW,
    Block,
    CellGrid,
    HeadingNode,
    HeadingTree,
    Path,
    TableError,
    TableState,
    block_for,
    overlaps_mask,
    tree_from_paths,
)

AVG_LABEL = "__avg__"


class ActionKind(str, Enum):
    TRANSPOSE = "transpose"
    AGGREGATE = "aggregate"
    STACK = "stack"
    UNSTACK = "unstack"
    SWAP_ROW = "swap_row"
    SWAP_COL = "swap_col"
    ROW_UP = "row_up"
    ROW_DOWN = "row_down"
    ROW_LEFT = "row_left"
    ROW_RIGHT = "row_right"
    COL_UP = "col_up"
    COL_DOWN = "col_down"
    COL_LEFT = "col_left"
    COL_RIGHT = "col_right"


ACTIONS: list[ActionKind] = list(ActionKind)
TRANSFORM_ACTIONS: list[ActionKind] = ACTIONS[:6]
SELECT_ACTIONS: list[ActionKind] = ACTIONS[6:]


class IllegalAction(TableError):
    """Raised when an action's preconditions are violated."""


def _select_first_entries(row_tree: HeadingTree, col_tree: HeadingTree) -> None:
    for tree in (row_tree, col_tree):
        for node in tree.iter_nodes():
            node.selected = False
        tree.root.children[0].selected = True


def _rebuild_grid(
    state: TableState,
    new_row_paths: list[Path],
    new_col_paths: list[Path],
    lookup: Callable[[Path, Path], Optional[tuple[int, int]]],
) -> CellGrid:
    """Re-index the grid so the label-path -> value mapping is preserved.

    ``lookup`` maps a (row path, col path) pair in the new layout to the old
    cell coordinates, or None for combinations absent in the source.
    """
    shape = (len(new_row_paths), len(new_col_paths))
    values = np.full(shape, np.nan, dtype=np.float64)
    cell_ids = np.full(shape, None, dtype=object)
    for i, rp in enumerate(new_row_paths):
        for j, cp in enumerate(new_col_paths):
            old = lookup(rp, cp)
            if old is None:
                continue
            values[i, j] = state.grid.values[old]
            cell_ids[i, j] = state.grid.cell_ids[old]
    return CellGrid(values, cell_ids, CellGrid.empty_viz(shape))


def transpose(state: TableState) -> TableState:
    """Exchange row and column headings; selection markers travel along."""
    new_row = HeadingTree(ROW, state.col_tree.copy().root)
    new_col = HeadingTree(COL, state.row_tree.copy().root)
    grid = CellGrid(
        state.grid.values.T.copy(),
        state.grid.cell_ids.T.copy(),
        CellGrid.empty_viz((state.shape[1], state.shape[0])),
    )
    return TableState(new_row, new_col, grid, state.step)


def stack(state: TableState) -> TableState:
    """Move the innermost column level to the innermost row level."""
    if state.col_tree.levels < 2:
        raise IllegalAction("stack requires >=2 column levels")
    old_col_paths = state.col_tree.leaf_paths()
    old_row_paths = state.row_tree.leaf_paths()

    inner_labels: list[str] = []
    for p in old_col_paths:
        if p[-1] not in inner_labels:
            inner_labels.append(p[-1])
    new_col_paths: list[Path] = []
    for p in old_col_paths:
        if p[:-1] not in new_col_paths:
            new_col_paths.append(p[:-1])
    new_row_paths = [rp + (q,) for rp in old_row_paths for q in inner_labels]

    old_index = {
        (rp, cp): (i, j)
        for i, rp in enumerate(old_row_paths)
        for j, cp in enumerate(old_col_paths)
    }

    def lookup(rp: Path, cp: Path) -> Optional[tuple[int, int]]:
        return old_index.get((rp[:-1], cp + (rp[-1],)))

    row_tree = tree_from_paths(ROW, new_row_paths)
    col_tree = tree_from_paths(COL, new_col_paths)
    grid = _rebuild_grid(state, row_tree.leaf_paths(), col_tree.leaf_paths(), lookup)
    _select_first_entries(row_tree, col_tree)
    return TableState(row_tree, col_tree, grid, state.step)


def unstack(state: TableState) -> TableState:
    """Move the innermost row level to the innermost column level."""
    if state.row_tree.levels < 2:
        raise IllegalAction("unstack requires >=2 row levels")
    old_col_paths = state.col_tree.leaf_paths()
    old_row_paths = state.row_tree.leaf_paths()

    inner_labels: list[str] = []
    for p in old_row_paths:
        if p[-1] not in inner_labels:
            inner_labels.append(p[-1])
    new_row_paths: list[Path] = []
    for p in old_row_paths:
        if p[:-1] not in new_row_paths:
            new_row_paths.append(p[:-1])
    new_col_paths = [cp + (q,) for cp in old_col_paths for q in inner_labels]

    old_index = {
        (rp, cp): (i, j)
        for i, rp in enumerate(old_row_paths)
        for j, cp in enumerate(old_col_paths)
    }

    def lookup(rp: Path, cp: Path) -> Optional[tuple[int, int]]:
        return old_index.get((rp + (cp[-1],), cp[:-1]))

    row_tree = tree_from_paths(ROW, new_row_paths)
    col_tree = tree_from_paths(COL, new_col_paths)
    grid = _rebuild_grid(state, row_tree.leaf_paths(), col_tree.leaf_paths(), lookup)
    _select_first_entries(row_tree, col_tree)
    return TableState(row_tree, col_tree, grid, state.step)


def swap(state: TableState, side: str) -> TableState:
    """Exchange the two innermost levels of one side's headings."""
    tree = state.row_tree if side == ROW else state.col_tree
    if tree.levels < 2:
        raise IllegalAction(f"swap requires >=2 {side} levels")

    def flip(p: Path) -> Path:
        return p[:-2] + (p[-1], p[-2])

    old_paths = tree.leaf_paths()
    new_paths = [flip(p) for p in old_paths]
    new_tree = tree_from_paths(side, new_paths)

    if side == ROW:
        old_index = {p: i for i, p in enumerate(old_paths)}
        col_paths = state.col_tree.leaf_paths()
        col_index = {p: j for j, p in enumerate(col_paths)}

        def lookup(rp: Path, cp: Path) -> Optional[tuple[int, int]]:
            return (old_index[flip(rp)], col_index[cp])

        row_tree, col_tree = new_tree, state.col_tree.copy()
    else:
        old_index = {p: j for j, p in enumerate(old_paths)}
        row_paths = state.row_tree.leaf_paths()
        row_index = {p: i for i, p in enumerate(row_paths)}

        def lookup(rp: Path, cp: Path) -> Optional[tuple[int, int]]:
            return (row_index[rp], old_index[flip(cp)])

        row_tree, col_tree = state.row_tree.copy(), new_tree

    grid = _rebuild_grid(state, row_tree.leaf_paths(), col_tree.leaf_paths(), lookup)
    _select_first_entries(row_tree, col_tree)
    return TableState(row_tree, col_tree, grid, state.step)


def aggregate(state: TableState) -> TableState:
    """Append one mean-derived child per innermost-level row parent.

    The derived row holds the arithmetic mean of the parent's original
    children per column, skipping missing cells. Idempotent per parent.
    Derived cells get fresh identifiers flagged with an ``avg:`` prefix.
    """
    row_tree = state.row_tree.copy()
    levels = row_tree.levels
    if levels >= 2:
        parents = [
            n for n in row_tree.iter_nodes()
            if n.depth == levels - 2 and not n.is_leaf
        ]
    else:
        parents = [row_tree.root]
    changed = False
    for parent in parents:
        if any(c.label == AVG_LABEL for c in parent.children):
            continue
        parent.children.append(
            HeadingNode(
                label=AVG_LABEL,
                depth=parent.depth + 1,
                path=parent.path + (AVG_LABEL,),
            )
        )
        changed = True
    if not changed:
        new_row = HeadingTree(ROW, row_tree.root)
        col_tree = state.col_tree.copy()
        _select_first_entries(new_row, col_tree)
        grid = state.grid.copy()
        grid.viz = CellGrid.empty_viz(grid.shape)
        return TableState(new_row, col_tree, grid, state.step)

    new_row = HeadingTree(ROW, row_tree.root)
    col_tree = state.col_tree.copy()
    col_paths = col_tree.leaf_paths()
    old_row_index = {p: i for i, p in enumerate(state.row_tree.leaf_paths())}

    shape = (new_row.n_leaves, len(col_paths))
    values = np.full(shape, np.nan, dtype=np.float64)
    cell_ids = np.full(shape, None, dtype=object)
    for i, leaf in enumerate(new_row.leaf_order):
        if leaf.label != AVG_LABEL or leaf.path in old_row_index:
            old_i = old_row_index[leaf.path]
            values[i, :] = state.grid.values[old_i, :]
            cell_ids[i, :] = state.grid.cell_ids[old_i, :]
            continue
        parent_path = leaf.path[:-1]
        member_rows = [
            old_row_index[p]
            for p in state.row_tree.leaf_paths()
            if p[:-1] == parent_path and p[-1] != AVG_LABEL
        ] if levels >= 2 else [
            old_row_index[p]
            for p in state.row_tree.leaf_paths()
            if p[-1] != AVG_LABEL
        ]
        sub = state.grid.values[member_rows, :]
        with np.errstate(invalid="ignore"), warnings.catch_warnings():
            # all-missing member columns legitimately average to NaN
            warnings.simplefilter("ignore", RuntimeWarning)
            means = np.nanmean(sub, axis=0)
        values[i, :] = means
        rp_key = "/".join(parent_path) or "<root>"
        for j, cp in enumerate(col_paths):
            cell_ids[i, j] = f"avg:{rp_key}|{'/'.join(cp)}"
    grid = CellGrid(values, cell_ids, CellGrid.empty_viz(shape))
    _select_first_entries(new_row, col_tree)
    return TableState(new_row, col_tree, grid, state.step)


def _same_depth_nodes(tree: HeadingTree, depth: int) -> list[HeadingNode]:
    return [n for n in tree.iter_nodes() if n.depth == depth]


def _move_target(tree: HeadingTree, action_dir: str) -> Optional[Path]:
    """Path of the node the marker would land on, or None if the move leaves
    the tree."""
    node = tree.selected_node
    if action_dir in ("up", "down"):
        peers = _same_depth_nodes(tree, node.depth)
        idx = peers.index(node)
        idx += -1 if action_dir == "up" else 1
        if idx < 0 or idx >= len(peers):
            return None
        return peers[idx].path
    if action_dir == "left":
        if node.depth == 0:
            return None
        return node.path[:-1]
    if action_dir == "right":
        if node.is_leaf:
            return None
        return node.children[0].path
    raise ValueError(action_dir)


def _selection_move(action: ActionKind) -> tuple[str, str]:
    side, direction = action.value.split("_")
    return side, direction


def move_selection(state: TableState, action: ActionKind) -> TableState:
    """Move the selection marker of one tree; all other state unchanged."""
    if action not in SELECT_ACTIONS:
        raise IllegalAction(f"{action.value} is not a selection action")
    side, direction = _selection_move(action)
    tree = state.row_tree if side == ROW else state.col_tree
    target = _move_target(tree, direction)
    if target is None:
        raise IllegalAction(f"{action.value}: move leaves the tree")
    new_tree = tree.copy()
    new_tree.selected_node.selected = False
    node = new_tree.find(target)
    assert node is not None
    node.selected = True
    if side == ROW:
        return TableState(new_tree, state.col_tree, state.grid, state.step)
    return TableState(state.row_tree, new_tree, state.grid, state.step)


def apply_transform(state: TableState, action: ActionKind) -> TableState:
    if action == ActionKind.TRANSPOSE:
        return transpose(state)
    if action == ActionKind.AGGREGATE:
        return aggregate(state)
    if action == ActionKind.STACK:
        return stack(state)
    if action == ActionKind.UNSTACK:
        return unstack(state)
    if action == ActionKind.SWAP_ROW:
        return swap(state, ROW)
    if action == ActionKind.SWAP_COL:
        return swap(state, COL)
    raise IllegalAction(f"{action.value} is not a transformation action")


def legal_actions(state: TableState, stage: str) -> np.ndarray:
    """Boolean mask over the 14 actions for the given stage.

    Stage gating masks off whole action families; transformation legality
    follows level-count preconditions; selection legality additionally
    forbids moves that leave the tree or land on an already-visualized block.
    """
    if stage not in ("transform", "select"):
        raise ValueError(f"unknown stage {stage!r}")
    mask = np.zeros(len(ACTIONS), dtype=bool)
    if stage == "transform":
        mask[ACTIONS.index(ActionKind.TRANSPOSE)] = True
        mask[ACTIONS.index(ActionKind.AGGREGATE)] = True
        mask[ACTIONS.index(ActionKind.STACK)] = state.col_tree.levels >= 2
        mask[ACTIONS.index(ActionKind.UNSTACK)] = state.row_tree.levels >= 2
        mask[ACTIONS.index(ActionKind.SWAP_ROW)] = state.row_tree.levels >= 2
        mask[ACTIONS.index(ActionKind.SWAP_COL)] = state.col_tree.levels >= 2
        return mask

    row_sel = state.row_tree.selected_node.path
    col_sel = state.col_tree.selected_node.path
    for action in SELECT_ACTIONS:
        side, direction = _selection_move(action)
        tree = state.row_tree if side == ROW else state.col_tree
        target = _move_target(tree, direction)
        if target is None:
            continue
        if side == ROW:
            block = block_for(state, target, col_sel)
        else:
            block = block_for(state, row_sel, target)
        if overlaps_mask(state, block):
            continue
        mask[ACTIONS.index(action)] = True
    return mask
