"""Observation featurization: text hashing, heading graph, cell features."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..table import ROW, TableState

CS_UNSELECTED = -1.0
CS_COL_SELECTED = 1.0
CS_ROW_SELECTED = 2.0

EDGE_ROW = 0
EDGE_COL = 1
EDGE_ROOT = 2
N_EDGE_CLASSES = 3


def _gram_hash(gram: str) -> int:
    return int.from_bytes(
        hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "big"
    )


def embed_text(label: str, dim: int) -> np.ndarray:
    """Deterministic feature-hashed character-n-gram embedding, unit L2 norm.

    Stable across runs and platforms; stands in for an external pre-trained
    text embedder behind the same interface.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    vec = np.zeros(dim, dtype=np.float64)
    if not label:
        return vec
    padded = f"^{label}$"
    grams = [label]
    for n in (2, 3):
        grams.extend(padded[i : i + n] for i in range(len(padded) - n + 1))
    for gram in grams:
        h = _gram_hash(gram)
        bucket = h % dim
        sign = 1.0 if (h >> 63) & 1 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


@dataclass
class HeadingGraph:
    """Node features plus class-tagged parent-child edges.

    Includes three virtual nodes (global root, row root, col root) linking
    the two heading hierarchies. Node feature = concat(text embedding,
    selection code).
    """

    node_features: np.ndarray  # [N, text_dim + 1]
    edges: list[tuple[int, int, int]]  # (parent, child, edge class)
    node_paths: list[tuple[str, tuple[str, ...]]]


def build_heading_graph(state: TableState, text_dim: int) -> HeadingGraph:
    features: list[np.ndarray] = []
    paths: list[tuple[str, tuple[str, ...]]] = []
    edges: list[tuple[int, int, int]] = []
    index: dict[tuple[str, tuple[str, ...]], int] = {}

    def add_node(side: str, path: tuple[str, ...], label: str, cs: float) -> int:
        idx = len(features)
        features.append(np.concatenate([embed_text(label, text_dim), [cs]]))
        paths.append((side, path))
        index[(side, path)] = idx
        return idx

    root = add_node("root", (), "", CS_UNSELECTED)
    row_root = add_node("row-root", (), "", CS_UNSELECTED)
    col_root = add_node("col-root", (), "", CS_UNSELECTED)
    edges.append((root, row_root, EDGE_ROOT))
    edges.append((root, col_root, EDGE_ROOT))

    for tree, virtual, edge_class, sel_code in (
        (state.row_tree, row_root, EDGE_ROW, CS_ROW_SELECTED),
        (state.col_tree, col_root, EDGE_COL, CS_COL_SELECTED),
    ):
        side = tree.side
        for node in tree.iter_nodes():
            cs = sel_code if node.selected else CS_UNSELECTED
            idx = add_node(side, node.path, node.label, cs)
            if node.depth == 0:
                edges.append((virtual, idx, edge_class))
            else:
                edges.append((index[(side, node.path[:-1])], idx, edge_class))

    return HeadingGraph(
        node_features=np.stack(features), edges=edges, node_paths=paths
    )


def content_features(
    state: TableState, kind_index_by_record: dict[str, int] | None = None
) -> np.ndarray:
    """Per-cell feature tensor [R, C, 5].

    Features: value standardized per table (missing as 0), missing flag,
    visualization-mask flag, embedded-kind code, and the original-id
    positional code that keeps items organized by their source numbering.
    """
    kind_index_by_record = kind_index_by_record or {}
    values = state.grid.values
    r, c = values.shape
    finite = values[~np.isnan(values)]
    mu = float(finite.mean()) if finite.size else 0.0
    sigma = float(finite.std()) if finite.size else 0.0
    out = np.zeros((r, c, 5), dtype=np.float64)
    n_total = r * c
    for i in range(r):
        for j in range(c):
            v = values[i, j]
            missing = np.isnan(v)
            out[i, j, 0] = 0.0 if missing or sigma == 0.0 else (v - mu) / sigma
            out[i, j, 1] = 1.0 if missing else 0.0
            record = state.grid.viz[i, j]
            out[i, j, 2] = 0.0 if record is None else 1.0
            if record is not None:
                out[i, j, 3] = (kind_index_by_record.get(record, -1) + 1) / 13.0
            cid = state.grid.cell_ids[i, j]
            if isinstance(cid, int):
                out[i, j, 4] = cid / max(1, n_total)
            elif cid is not None:
                # derived cells get a stable pseudo-position from their id hash
                out[i, j, 4] = (_gram_hash(str(cid)) % 1024) / 1024.0
    return out


def heading_summary(graph: HeadingGraph) -> np.ndarray:
    """Fixed-size pooled summary of the heading graph for the curiosity
    nets."""
    feats = graph.node_features
    return np.concatenate(
        [feats.mean(axis=0), feats.max(axis=0), [feats.shape[0] / 64.0]]
    )


def content_summary(cells: np.ndarray) -> np.ndarray:
    """Fixed-size pooled summary of the cell features for the curiosity
    nets."""
    flat = cells.reshape(-1, cells.shape[-1])
    r, c, _ = cells.shape
    return np.concatenate(
        [flat.mean(axis=0), flat.max(axis=0), [r / 32.0, c / 32.0]]
    )
