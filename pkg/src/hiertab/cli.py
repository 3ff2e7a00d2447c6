"""Command-line interface."""

from __future__ import annotations

import json
from pathlib import Path

import click

from .env import EpisodeConfig


def _episode_config(total_steps: int, stage_ratio: float, seed: int) -> EpisodeConfig:
    return EpisodeConfig(
        total_steps=total_steps, stage_ratio=stage_ratio, seed=seed
    )


@click.group()
def main() -> None:
    """Hierarchical-table insight engine."""


@main.command()
@click.option("--port", type=int, default=None, help="Listen port.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--data-dir", type=click.Path(), default=None)
def serve(port, config_path, data_dir) -> None:
    """Run the HTTP service."""
    import uvicorn
    from dataclasses import replace

    from .service import create_app, load_config

    config = load_config(config_path)
    if port is not None:
        config = replace(config, port=port)
    if data_dir is not None:
        config = replace(config, data_dir=data_dir)
    uvicorn.run(create_app(config), host="127.0.0.1", port=config.port)


@main.command()
@click.option("--table", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--stage-ratio", type=float, default=0.04, show_default=True)
def extract(table, out_dir, steps, stage_ratio) -> None:
    """Extract insights with the deterministic greedy policy; write
    per-kind counts (CSV) and a bar chart."""
    from .harness import run_extract

    counts = run_extract(
        table, out_dir, _episode_config(steps, stage_ratio, seed=0)
    )
    for kind, count in counts.items():
        click.echo(f"{kind}: {count}")
    click.echo(f"report written to {out_dir}")


@main.command()
@click.option("--session-log", required=True, type=click.Path(exists=True))
def replay(session_log) -> None:
    """Rebuild a session from its event log and print the derived state."""
    from .harness import replay_log

    summary = replay_log(session_log)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


@main.command()
@click.option("--table", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--steps", type=int, default=40, show_default=True,
              help="Episode length.")
@click.option("--stage-ratio", type=float, default=0.04, show_default=True)
@click.option("--train-steps", type=int, default=20_000, show_default=True)
@click.option("--envs", type=int, default=8, show_default=True)
@click.option("--rollout", type=int, default=64, show_default=True)
@click.option("--intrinsic-lam", type=float, default=0.5, show_default=True)
@click.option("--content-mode", type=click.Choice(["bilstm", "meanpool"]),
              default="meanpool", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def train(table, out_dir, steps, stage_ratio, train_steps, envs, rollout,
          intrinsic_lam, content_mode, seed) -> None:
    """Train the policy; writes checkpoint.pt and metrics.csv."""
    from .agent.nets import NetConfig
    from .agent.ppo import TrainConfig, train as run_train

    document = json.loads(Path(table).read_text())
    _, history = run_train(
        document,
        _episode_config(steps, stage_ratio, seed),
        TrainConfig(
            total_steps=train_steps,
            parallel_envs=envs,
            rollout_steps=rollout,
            intrinsic_lam=intrinsic_lam,
            seed=seed,
        ),
        net_config=NetConfig(content_mode=content_mode),
        out_dir=Path(out_dir),
        log=lambda row: click.echo(
            f"iter {row['iteration']} steps {row['steps']} "
            f"rExt {row['reward_ext_mean']:.4f} ar {row['ar']:.3f} "
            f"ir {row['ir']:.3f} er {row['er']:.3f}"
        ),
    )
    click.echo(f"trained {len(history)} iterations; checkpoint in {out_dir}")


@main.command("eval")
@click.option("--table", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--episodes", type=int, default=20, show_default=True)
@click.option("--steps", type=int, default=40, show_default=True)
@click.option("--stage-ratio", type=float, default=0.04, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def eval_cmd(table, checkpoint, episodes, steps, stage_ratio, seed) -> None:
    """Evaluate a trained checkpoint over full episodes."""
    import numpy as np

    from .agent.ppo import evaluate, load_checkpoint

    nets, _ = load_checkpoint(Path(checkpoint))
    document = json.loads(Path(table).read_text())
    results = evaluate(
        nets, document, _episode_config(steps, stage_ratio, seed),
        episodes=episodes,
    )
    mean = {
        key: float(np.mean([r[key] for r in results]))
        for key in ("return", "ar", "ir", "er")
    }
    click.echo(json.dumps(mean, indent=2, sort_keys=True))


@main.command()
@click.option("--table", required=True, type=click.Path(exists=True))
@click.option("--policy", type=click.Choice(["random", "greedy", "beam"]),
              default="greedy", show_default=True)
@click.option("--episodes", type=int, default=10, show_default=True)
@click.option("--steps", type=int, default=40, show_default=True)
@click.option("--stage-ratio", type=float, default=0.04, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_csv", type=click.Path(), default=None,
              help="Optional CSV with per-episode results.")
def baseline(table, policy, episodes, steps, stage_ratio, seed, out_csv) -> None:
    """Run a non-learned reference policy."""
    import csv as csv_mod

    import numpy as np

    from .agent.baselines import run_baseline_episode

    document = json.loads(Path(table).read_text())
    rows = []
    for ep in range(episodes):
        trace = run_baseline_episode(
            policy, document,
            _episode_config(steps, stage_ratio, seed), seed=seed + ep,
        )
        m = trace.metrics
        rows.append(
            {"episode": ep, "reward": trace.total_reward,
             "ar": m.ar, "ir": m.ir, "er": m.er,
             "done_reason": trace.done_reason}
        )
    click.echo(
        f"{policy}: mean reward "
        f"{float(np.mean([r['reward'] for r in rows])):.4f} over {episodes} episodes"
    )
    if out_csv:
        with open(out_csv, "w", newline="") as fh:
            writer = csv_mod.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        click.echo(f"written {out_csv}")


@main.command()
@click.option("--table", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--eval-episodes", type=int, default=5, show_default=True)
def sweep(table, out_dir, eval_episodes) -> None:
    """Stage-ratio × encoder-depth sweep; CSV table plus heatmaps."""
    from .harness import run_sweep

    rows = run_sweep(table, out_dir, eval_episodes=eval_episodes)
    click.echo(f"{len(rows)} sweep cells written to {out_dir}")


@main.command()
@click.option("--table", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--inits", type=int, default=10, show_default=True)
@click.option("--steps", type=int, default=40, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def robustness(table, out_dir, inits, steps, seed) -> None:
    """Greedy metrics over random heading initializations."""
    from .harness import run_robustness

    result = run_robustness(
        table, out_dir,
        episode_config=_episode_config(steps, 0.04, seed),
        n_inits=inits, seed=seed,
    )
    click.echo(json.dumps(result["summary"], indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
