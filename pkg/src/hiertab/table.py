"""Hierarchical table data model.

Heading trees, the cell grid with its visualization mask, block resolution,
and the canonical JSON on-disk format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional

import numpy as np

Path = tuple[str, ...]

ROW = "row"
COL = "col"


class TableError(Exception):
    """Base error for table parsing and block resolution."""


class SchemaError(TableError):
    """The document does not match the canonical table schema."""


@dataclass
class HeadingNode:
    label: str
    depth: int
    path: Path
    children: list["HeadingNode"] = field(default_factory=list)
    selected: bool = False

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def find(self, path: Path) -> Optional["HeadingNode"]:
        if path == self.path:
            return self
        for child in self.children:
            if path[: len(child.path)] == child.path:
                return child.find(path)
        return None


class HeadingTree:
    """One side of a hierarchical header.

    The root is virtual: it is never rendered, never selectable and never
    participates in block resolution. Real heading entries start at depth 0.
    """

    def __init__(self, side: str, root: HeadingNode):
        if side not in (ROW, COL):
            raise ValueError(f"invalid side: {side}")
        self.side = side
        self.root = root
        self._leaves: list[HeadingNode] = []
        self._collect_leaves(root)

    def _collect_leaves(self, node: HeadingNode) -> None:
        for child in node.children:
            if child.is_leaf:
                self._leaves.append(child)
            else:
                self._collect_leaves(child)

    @property
    def leaf_order(self) -> list[HeadingNode]:
        return self._leaves

    @property
    def n_leaves(self) -> int:
        return len(self._leaves)

    @property
    def levels(self) -> int:
        """Number of heading levels (uniform leaf depth + 1)."""
        if not self._leaves:
            return 0
        return self._leaves[0].depth + 1

    def iter_nodes(self, include_root: bool = False) -> Iterator[HeadingNode]:
        """Depth-first iteration over non-virtual nodes."""
        if include_root:
            yield self.root
        stack = list(reversed(self.root.children))
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def nodes_at_depth(self, depth: int) -> list[HeadingNode]:
        return [n for n in self.iter_nodes() if n.depth == depth]

    def find(self, path: Path) -> Optional[HeadingNode]:
        if not path:
            return None
        return self.root.find(path)

    @property
    def selected_node(self) -> HeadingNode:
        for node in self.iter_nodes():
            if node.selected:
                return node
        raise TableError(f"{self.side} tree carries no selection marker")

    def leaf_range(self, node: HeadingNode) -> tuple[int, int]:
        """Contiguous [start, stop) range of leaf indices under ``node``."""
        if node.is_leaf:
            start = self._leaves.index(node)
            return start, start + 1
        first = node
        while not first.is_leaf:
            first = first.children[0]
        last = node
        while not last.is_leaf:
            last = last.children[-1]
        return self._leaves.index(first), self._leaves.index(last) + 1

    def copy(self) -> "HeadingTree":
        return HeadingTree(self.side, _copy_node(self.root))

    def leaf_paths(self) -> list[Path]:
        return [leaf.path for leaf in self._leaves]


def _copy_node(node: HeadingNode) -> HeadingNode:
    return HeadingNode(
        label=node.label,
        depth=node.depth,
        path=node.path,
        children=[_copy_node(c) for c in node.children],
        selected=node.selected,
    )


def tree_from_paths(side: str, paths: list[Path]) -> HeadingTree:
    """Build a heading tree from an ordered list of leaf paths.

    Children are ordered by first appearance in the path sequence, which
    makes rebuilds deterministic and keeps double application of
    path-permuting transformations an identity.
    """
    root = HeadingNode(label="", depth=-1, path=())

    def insert(node: HeadingNode, path: Path) -> None:
        if len(path) == len(node.path):
            return
        label = path[len(node.path)]
        for child in node.children:
            if child.label == label:
                insert(child, path)
                return
        child = HeadingNode(
            label=label, depth=node.depth + 1, path=node.path + (label,)
        )
        node.children.append(child)
        insert(child, path)

    for path in paths:
        insert(root, path)
    return HeadingTree(side, root)


@dataclass
class CellGrid:
    """Numeric cell matrix with stable original ids and a visualization mask.

    ``values`` uses NaN for missing cells. ``cell_ids`` holds the immutable
    original identifier of each cell (None for cells created as structural
    holes by transformations). ``viz`` holds the id of the insight record
    embedded over each cell, or None.
    """

    values: np.ndarray
    cell_ids: np.ndarray
    viz: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def copy(self) -> "CellGrid":
        return CellGrid(self.values.copy(), self.cell_ids.copy(), self.viz.copy())

    @staticmethod
    def empty_viz(shape: tuple[int, int]) -> np.ndarray:
        return np.full(shape, None, dtype=object)


@dataclass
class TableState:
    """Immutable-by-convention table snapshot: two heading trees plus grid.

    Transformations never mutate a state in place; they return fresh states,
    so concurrent reads are safe.
    """

    row_tree: HeadingTree
    col_tree: HeadingTree
    grid: CellGrid
    step: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    def check_consistent(self) -> None:
        r, c = self.grid.shape
        if self.row_tree.n_leaves != r or self.col_tree.n_leaves != c:
            raise TableError(
                f"tree/grid mismatch: {self.row_tree.n_leaves}x"
                f"{self.col_tree.n_leaves} leaves vs {r}x{c} grid"
            )


@dataclass(frozen=True)
class Block:
    """Rectangular cell region determined by one row entry and one col entry."""

    row_entry: Path
    col_entry: Path
    rows: tuple[int, int]
    cols: tuple[int, int]

    @property
    def cells(self) -> list[tuple[int, int]]:
        return [
            (r, c)
            for r in range(*self.rows)
            for c in range(*self.cols)
        ]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows[1] - self.rows[0], self.cols[1] - self.cols[0])

    @property
    def n_cells(self) -> int:
        h, w = self.shape
        return h * w


def _parse_node(obj: Any, depth: int, path: Path, where: str) -> HeadingNode:
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: node must be an object")
    label = obj.get("label")
    if not isinstance(label, str):
        raise SchemaError(f"{where}: node label must be a string")
    children_obj = obj.get("children", [])
    if not isinstance(children_obj, list):
        raise SchemaError(f"{where}.children: must be a list")
    node_path = path + (label,) if depth >= 0 else ()
    node = HeadingNode(label=label, depth=depth, path=node_path)
    seen: set[str] = set()
    for i, child_obj in enumerate(children_obj):
        child = _parse_node(child_obj, depth + 1, node.path, f"{where}.children[{i}]")
        if child.label in seen:
            raise SchemaError(
                f"{where}.children: duplicate sibling label {child.label!r}"
            )
        seen.add(child.label)
        node.children.append(child)
    return node


def _check_uniform_depth(tree: HeadingTree, where: str) -> None:
    depths = {leaf.depth for leaf in tree.leaf_order}
    if len(depths) > 1:
        raise SchemaError(f"{where}: leaves at mixed depths {sorted(depths)}")
    if not tree.leaf_order:
        raise SchemaError(f"{where}: tree has no leaves")


def parse_table(document: bytes | str | dict) -> TableState:
    """Parse a canonical table document into a fresh TableState.

    Selection markers are initialized to the first (top-left) non-virtual
    entry of each tree, and the visualization mask is empty.
    """
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    for key in ("rowTree", "colTree", "values"):
        if key not in doc:
            raise SchemaError(f"missing key {key!r}")

    row_root = _parse_node(doc["rowTree"], -1, (), "rowTree")
    col_root = _parse_node(doc["colTree"], -1, (), "colTree")
    row_tree = HeadingTree(ROW, row_root)
    col_tree = HeadingTree(COL, col_root)
    _check_uniform_depth(row_tree, "rowTree")
    _check_uniform_depth(col_tree, "colTree")

    values_obj = doc["values"]
    if not isinstance(values_obj, list) or not values_obj:
        raise SchemaError("values: must be a non-empty matrix")
    widths = {len(row) if isinstance(row, list) else -1 for row in values_obj}
    if -1 in widths:
        raise SchemaError("values: every row must be a list")
    if len(widths) > 1:
        raise SchemaError(f"values: ragged matrix, row widths {sorted(widths)}")

    n_rows = len(values_obj)
    n_cols = len(values_obj[0])
    if n_rows != row_tree.n_leaves or n_cols != col_tree.n_leaves:
        raise SchemaError(
            f"leaf-count mismatch: values {n_rows}x{n_cols} vs trees "
            f"{row_tree.n_leaves}x{col_tree.n_leaves}"
        )

    values = np.full((n_rows, n_cols), np.nan, dtype=np.float64)
    for r, row in enumerate(values_obj):
        for c, v in enumerate(row):
            if v is None:
                continue
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"values[{r}][{c}]: must be a number or null")
            values[r, c] = float(v)

    cell_ids = np.empty((n_rows, n_cols), dtype=object)
    for r in range(n_rows):
        for c in range(n_cols):
            cell_ids[r, c] = r * n_cols + c

    row_tree.root.children[0].selected = True
    col_tree.root.children[0].selected = True

    state = TableState(
        row_tree=row_tree,
        col_tree=col_tree,
        grid=CellGrid(values, cell_ids, CellGrid.empty_viz((n_rows, n_cols))),
    )
    state.check_consistent()
    return state


def _node_to_obj(node: HeadingNode) -> dict:
    obj: dict[str, Any] = {"label": node.label}
    obj["children"] = [_node_to_obj(c) for c in node.children]
    return obj


def serialize(state: TableState) -> bytes:
    """Canonical UTF-8 JSON bytes for a state (layout and values only)."""
    doc = serialize_obj(state)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def serialize_obj(state: TableState) -> dict:
    values: list[list[Optional[float]]] = []
    for r in range(state.shape[0]):
        row: list[Optional[float]] = []
        for c in range(state.shape[1]):
            v = state.grid.values[r, c]
            row.append(None if np.isnan(v) else float(v))
        values.append(row)
    return {
        "rowTree": _node_to_obj(state.row_tree.root),
        "colTree": _node_to_obj(state.col_tree.root),
        "values": values,
    }


def resolve_block(state: TableState) -> Block:
    """Block covered by the two selected heading entries."""
    row_node = state.row_tree.selected_node
    col_node = state.col_tree.selected_node
    return block_for(state, row_node.path, col_node.path)


def block_for(state: TableState, row_entry: Path, col_entry: Path) -> Block:
    row_node = state.row_tree.find(row_entry)
    col_node = state.col_tree.find(col_entry)
    if row_node is None:
        raise TableError(f"unknown row entry {row_entry!r}")
    if col_node is None:
        raise TableError(f"unknown col entry {col_entry!r}")
    return Block(
        row_entry=row_entry,
        col_entry=col_entry,
        rows=state.row_tree.leaf_range(row_node),
        cols=state.col_tree.leaf_range(col_node),
    )


def block_values(state: TableState, block: Block) -> np.ndarray:
    """Row-major value matrix of a block; NaN marks missing cells."""
    sub = state.grid.values[block.rows[0]:block.rows[1], block.cols[0]:block.cols[1]]
    if np.all(np.isnan(sub)):
        raise TableError("block contains only missing cells")
    return sub.copy()


def overlaps_mask(state: TableState, block: Block) -> bool:
    """True iff any cell of the block already carries a visualization."""
    sub = state.grid.viz[block.rows[0]:block.rows[1], block.cols[0]:block.cols[1]]
    return any(v is not None for v in sub.flat)
