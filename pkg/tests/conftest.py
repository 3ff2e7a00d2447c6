import json
from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "hiertab" / "data"


def leaf(label):
    return {"label": label, "children": []}


def node(label, *children):
    return {"label": label, "children": list(children)}


@pytest.fixture
def small_doc():
    """2-level × 2-level, 4×4 leaves."""
    return {
        "rowTree": node("", node("A", leaf("a1"), leaf("a2")),
                        node("B", leaf("b1"), leaf("b2"))),
        "colTree": node("", node("X", leaf("x1"), leaf("x2")),
                        node("Y", leaf("y1"), leaf("y2"))),
        "values": [
            [1.0, 2.0, 3.0, 4.0],
            [2.0, 4.0, 6.0, 8.0],
            [60.0, 10.0, 10.0, 10.0],
            [5.0, 6.0, 5.0, 40.0],
        ],
    }


@pytest.fixture
def flat_doc():
    """1-level headings on both sides."""
    return {
        "rowTree": node("", leaf("r1"), leaf("r2")),
        "colTree": node("", leaf("c1"), leaf("c2"), leaf("c3")),
        "values": [[1.0, 2.0, 3.0], [4.0, None, 6.0]],
    }


@pytest.fixture
def planted_doc():
    return json.loads((DATA_DIR / "planted_8x8.json").read_text())


@pytest.fixture
def insurance_doc():
    return json.loads((DATA_DIR / "insurance.json").read_text())


@pytest.fixture
def console_doc():
    return json.loads((DATA_DIR / "console_sales.json").read_text())


def random_document(rng: np.random.Generator, max_leaves: int = 6,
                    max_depth: int = 3, allow_missing: bool = True) -> dict:
    """Random uniform-depth table document for property tests."""

    counter = [0]

    def fresh_label(prefix):
        counter[0] += 1
        return f"{prefix}{counter[0]}"

    def build_tree(prefix, depth, budget):
        # number of depth-0 children
        if depth == 1:
            n = int(rng.integers(1, budget + 1))
            return [leaf(fresh_label(prefix)) for _ in range(n)], n
        n = int(rng.integers(1, min(budget, 3) + 1))
        children, total = [], 0
        remaining = budget
        for i in range(n):
            share = remaining if i == n - 1 else int(
                rng.integers(1, remaining - (n - 1 - i) + 1)
            )
            sub, used = build_tree(prefix, depth - 1, share)
            children.append(node(fresh_label(prefix.upper()), *sub))
            total += used
            remaining -= share
        return children, total

    def side(prefix):
        depth = int(rng.integers(1, max_depth + 1))
        leaves = int(rng.integers(1, max_leaves + 1))
        children, total = build_tree(prefix, depth, leaves)
        return node("", *children), total

    row_tree, n_rows = side("r")
    col_tree, n_cols = side("c")
    values = np.round(rng.normal(10, 5, size=(n_rows, n_cols)), 2)
    rows = []
    for r in range(n_rows):
        row = []
        for c in range(n_cols):
            if allow_missing and rng.random() < 0.08:
                row.append(None)
            else:
                row.append(float(values[r, c]))
        rows.append(row)
    return {"rowTree": row_tree, "colTree": col_tree, "values": rows}
