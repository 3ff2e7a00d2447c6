"""Batch experiment harnesses: sweeps, robustness runs, insight extraction.

Every harness writes a delimited report plus a rendered figure next to it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import replace as dc_replace
from pathlib import Path
from typing import Any, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .agent.baselines import run_baseline_episode
from .agent.nets import NetConfig
from .agent.ppo import TrainConfig, evaluate, train
from .env import EpisodeConfig, compute_metrics
from .insight import SINGLE_BLOCK_KINDS
from .table import parse_table

SWEEP_STAGE_RATIOS = (0.01, 0.04, 0.08, 0.12, 0.16)
SWEEP_GCN_LAYERS = (1, 2, 3, 4, 5)


def _load_document(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def run_sweep(
    table_path: str | Path,
    out_dir: str | Path,
    episode_config: Optional[EpisodeConfig] = None,
    train_config: Optional[TrainConfig] = None,
    net_config: Optional[NetConfig] = None,
    eval_episodes: int = 5,
    stage_ratios: tuple = SWEEP_STAGE_RATIOS,
    gcn_layers: tuple = SWEEP_GCN_LAYERS,
) -> list[dict[str, Any]]:
    """Stage-ratio × encoder-depth grid; one small training run per cell."""
    document = _load_document(table_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    episode_config = episode_config or EpisodeConfig(total_steps=40)
    train_config = train_config or TrainConfig(
        parallel_envs=2, rollout_steps=16, minibatch_size=16, epochs=2,
        total_steps=64,
    )
    net_config = net_config or NetConfig(
        text_dim=8, hidden=16, lstm_hidden=8, content_mode="meanpool"
    )

    rows: list[dict[str, Any]] = []
    for sr in stage_ratios:
        for layers in gcn_layers:
            ep_cfg = dc_replace(episode_config, stage_ratio=sr)
            nets_cfg = dc_replace(net_config, gcn_layers=layers)
            nets, _ = train(document, ep_cfg, train_config, net_config=nets_cfg)
            results = evaluate(nets, document, ep_cfg, episodes=eval_episodes)
            rows.append(
                {
                    "stage_ratio": sr,
                    "gcn_layers": layers,
                    "stage1_steps": ep_cfg.transform_steps,
                    "ir": float(np.mean([r["ir"] for r in results])),
                    "ar": float(np.mean([r["ar"] for r in results])),
                    "er": float(np.mean([r["er"] for r in results])),
                }
            )

    csv_path = out_dir / "sweep.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for ax, metric in zip(axes, ("ir", "ar", "er")):
        grid = np.zeros((len(stage_ratios), len(gcn_layers)))
        for row in rows:
            i = stage_ratios.index(row["stage_ratio"])
            j = gcn_layers.index(row["gcn_layers"])
            grid[i, j] = row[metric]
        im = ax.imshow(grid, aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(gcn_layers)), [str(l) for l in gcn_layers])
        ax.set_yticks(range(len(stage_ratios)), [str(s) for s in stage_ratios])
        ax.set_xlabel("encoder layers")
        ax.set_ylabel("stage ratio")
        ax.set_title(metric.upper())
        fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(out_dir / "sweep.png", dpi=120)
    plt.close(fig)
    return rows


def shuffle_document(document: dict, rng: np.random.Generator) -> dict:
    """Random heading initialization: permute sibling order on both trees
    and permute the value matrix to match."""

    def leaf_count(node: dict) -> int:
        if not node["children"]:
            return 1
        return sum(leaf_count(c) for c in node["children"])

    def shuffle_node(node: dict, offset: int) -> tuple[dict, list[int]]:
        if not node["children"]:
            return {"label": node["label"], "children": []}, [offset]
        children = list(node["children"])
        order = rng.permutation(len(children))
        new_children, perm = [], []
        offsets = []
        pos = offset
        for c in children:
            offsets.append(pos)
            pos += leaf_count(c)
        for idx in order:
            child, child_perm = shuffle_node(children[idx], offsets[idx])
            new_children.append(child)
            perm.extend(child_perm)
        return {"label": node["label"], "children": new_children}, perm

    row_tree, row_perm = shuffle_node(document["rowTree"], 0)
    col_tree, col_perm = shuffle_node(document["colTree"], 0)
    values = np.array(
        [[np.nan if v is None else v for v in row] for row in document["values"]],
        dtype=np.float64,
    )
    shuffled = values[np.ix_(row_perm, col_perm)]
    return {
        "rowTree": row_tree,
        "colTree": col_tree,
        "values": [
            [None if np.isnan(v) else float(v) for v in row] for row in shuffled
        ],
    }


def run_robustness(
    table_path: str | Path,
    out_dir: str | Path,
    episode_config: Optional[EpisodeConfig] = None,
    n_inits: int = 10,
    seed: int = 0,
) -> dict[str, Any]:
    """Greedy policy over random heading initializations; mean ± σ report."""
    document = _load_document(table_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    episode_config = episode_config or EpisodeConfig(total_steps=40)
    rng = np.random.default_rng(seed)

    rows = []
    for init in range(n_inits):
        shuffled = shuffle_document(document, rng)
        trace = run_baseline_episode("greedy", shuffled, episode_config)
        m = trace.metrics
        rows.append(
            {"init": init, "ir": m.ir, "ar": m.ar, "er": m.er,
             "reward": trace.total_reward}
        )

    summary = {}
    for metric in ("ir", "ar", "er"):
        vals = np.array([r[metric] for r in rows])
        summary[f"{metric}_mean"] = float(vals.mean())
        summary[f"{metric}_std"] = float(vals.std())

    with open(out_dir / "robustness.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    fig, ax = plt.subplots(figsize=(5, 4))
    metrics = ("ir", "ar", "er")
    means = [summary[f"{m}_mean"] for m in metrics]
    stds = [summary[f"{m}_std"] for m in metrics]
    ax.bar([m.upper() for m in metrics], means, yerr=stds, capsize=4,
           color=["#4c72b0", "#55a868", "#c44e52"])
    ax.set_ylabel("mean over heading initializations")
    ax.set_title(f"greedy policy, {n_inits} random initializations")
    fig.tight_layout()
    fig.savefig(out_dir / "robustness.png", dpi=120)
    plt.close(fig)
    return {"rows": rows, "summary": summary}


def run_extract(
    table_path: str | Path,
    out_dir: str | Path,
    episode_config: Optional[EpisodeConfig] = None,
) -> dict[str, int]:
    """Deterministic greedy extraction; per-kind insight counts."""
    document = _load_document(table_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    episode_config = episode_config or EpisodeConfig(total_steps=100)

    from .env import TableEnv
    from .agent.baselines import _greedy_action

    env = TableEnv(
        json.dumps(document, sort_keys=True), episode_config
    )
    while not env.done:
        env.step(_greedy_action(env))
    counts = {kind: 0 for kind in SINGLE_BLOCK_KINDS}
    for entry in env.ledger:
        counts[entry.record.kind] += 1

    with open(out_dir / "extract.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "count"])
        for kind in SINGLE_BLOCK_KINDS:
            writer.writerow([kind, counts[kind]])

    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(SINGLE_BLOCK_KINDS, [counts[k] for k in SINGLE_BLOCK_KINDS],
           color="#4c72b0")
    ax.set_ylabel("insight count")
    ax.tick_params(axis="x", rotation=60)
    fig.tight_layout()
    fig.savefig(out_dir / "extract.png", dpi=120)
    plt.close(fig)
    return counts


def replay_log(log_path: str | Path) -> dict[str, Any]:
    """Rebuild a session from its append-only event log and re-derive
    metrics; used to audit the mixed-initiative history."""
    records: list[dict] = []
    document: Optional[dict] = None
    revision = 0
    events = 0
    for line in Path(log_path).read_text().splitlines():
        if not line.strip():
            continue
        event = json.loads(line)
        events += 1
        revision = event["revision"]
        etype = event["type"]
        if etype == "create":
            document = event["document"]
        elif etype == "recommend":
            records.extend(event["added"])
        elif etype == "remove":
            records = [r for r in records if r["id"] != event["id"]]
        elif etype == "replace":
            records = [
                event["record"] if r["id"] == event["id"] else r for r in records
            ]
        elif etype == "manual":
            records.append(event["record"])
        else:
            raise ValueError(f"unknown event type {etype!r}")
    if document is None:
        raise ValueError("log contains no create event")
    state = parse_table(json.dumps(document))
    from .table import block_for

    coverage: dict[str, int] = {}
    for rec in records:
        block = block_for(state, tuple(rec["rowEntry"]), tuple(rec["colEntry"]))
        coverage[rec["kind"]] = coverage.get(rec["kind"], 0) + block.n_cells
    metrics = compute_metrics(coverage, state.grid.values.size)
    return {
        "events": events,
        "revision": revision,
        "insights": records,
        "metrics": {"ar": metrics.ar, "ir": metrics.ir, "er": metrics.er},
    }
