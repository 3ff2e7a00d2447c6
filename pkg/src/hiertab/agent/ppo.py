"""Clipped-surrogate policy optimization with curiosity-shaped rewards."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace as dc_replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
import torch

from ..env import EpisodeConfig, TableEnv
from ..transform import ACTIONS
from .features import content_summary, heading_summary
from .nets import AgentNets, GCNEncoder, NetConfig, RunningStd

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-4
    parallel_envs: int = 8
    rollout_steps: int = 64
    minibatch_size: int = 64
    epochs: int = 4
    clip: float = 0.2
    value_coef: float = 0.5
    entropy_coef: float = 0.01
    total_steps: int = 20_000
    intrinsic_lam: float = 0.5
    gamma: float = 0.99
    use_gae: bool = False
    gae_lambda: float = 0.95
    max_grad_norm: float = 0.5
    seed: int = 0


@dataclass
class Transition:
    node_features: torch.Tensor
    adj: torch.Tensor
    cells: torch.Tensor
    heading_x: torch.Tensor
    content_x: torch.Tensor
    stage: str
    legal_mask: np.ndarray
    action: int
    log_prob: float
    value: float
    reward: float
    reward_ext: float
    reward_int: float
    done: bool
    bootstrap: float = 0.0  # value of the successor state when truncated


def _encode_cached(nets: AgentNets, tr: Transition) -> tuple[torch.Tensor, Any]:
    h_h = nets.gcn(tr.node_features, tr.adj)
    h_d = nets.content(tr.cells)
    h_t = torch.cat([h_h, h_d])
    return h_t, nets.policy(h_t, tr.stage, tr.legal_mask)


def _snapshot(nets: AgentNets, env: TableEnv) -> Transition:
    """Feature-freeze the current observation (no gradients kept)."""
    from ..insight import SINGLE_BLOCK_KINDS
    from .features import build_heading_graph, content_features

    kind_index = {
        e.record.id: SINGLE_BLOCK_KINDS.index(e.record.kind)
        for e in env.ledger
        if e.record.kind in SINGLE_BLOCK_KINDS
    }
    graph = build_heading_graph(env.state, nets.config.text_dim)
    cells = content_features(env.state, kind_index)
    return Transition(
        node_features=torch.as_tensor(graph.node_features, dtype=torch.float64),
        adj=GCNEncoder.adjacency(graph),
        cells=torch.as_tensor(cells, dtype=torch.float64),
        heading_x=torch.as_tensor(heading_summary(graph), dtype=torch.float64),
        content_x=torch.as_tensor(content_summary(cells), dtype=torch.float64),
        stage=env.stage,
        legal_mask=env.legal_mask().copy(),
        action=-1,
        log_prob=0.0,
        value=0.0,
        reward=0.0,
        reward_ext=0.0,
        reward_int=0.0,
        done=False,
    )


class RolloutCollector:
    """Drives a fixed set of environments with the current policy."""

    def __init__(
        self,
        nets: AgentNets,
        document: bytes | str | dict,
        episode_config: EpisodeConfig,
        config: TrainConfig,
    ):
        self.nets = nets
        self.config = config
        self.episode_config = episode_config
        self.envs = [
            TableEnv(document, dc_replace(episode_config, seed=episode_config.seed + i))
            for i in range(config.parallel_envs)
        ]
        self.generator = torch.Generator().manual_seed(config.seed)
        self.std_heading = RunningStd()
        self.std_content = RunningStd()
        self.episode_returns: list[float] = []
        self.episode_metrics: list[Any] = []
        self._running_returns = [0.0] * config.parallel_envs

    def collect(self) -> list[list[Transition]]:
        """One rollout of `rollout_steps` per environment."""
        trajectories: list[list[Transition]] = []
        for env_idx, env in enumerate(self.envs):
            traj: list[Transition] = []
            for _ in range(self.config.rollout_steps):
                if env.done:
                    self.episode_returns.append(self._running_returns[env_idx])
                    self.episode_metrics.append(env.metrics)
                    self._running_returns[env_idx] = 0.0
                    env.reset()
                tr = _snapshot(self.nets, env)
                with torch.no_grad():
                    h_t, out = _encode_cached(self.nets, tr)
                    probs = out.probs()
                    action = int(
                        torch.multinomial(probs, 1, generator=self.generator)
                    )
                    tr.log_prob = float(torch.log(probs[action]))
                    tr.value = float(out.value)
                    r_h, r_d = self.nets.rnd.intrinsic(tr.heading_x, tr.content_x)
                tr.action = action
                _, breakdown, done, _ = env.step(ACTIONS[action])
                self.std_heading.update(float(r_h))
                self.std_content.update(float(r_d))
                r_int = float(r_h) / self.std_heading.std + float(
                    r_d
                ) / self.std_content.std
                tr.reward_ext = breakdown.r_ext
                tr.reward_int = r_int
                tr.reward = breakdown.r_ext + self.config.intrinsic_lam * r_int
                tr.done = done
                self._running_returns[env_idx] += breakdown.r_ext
                traj.append(tr)
            if not env.done:
                with torch.no_grad():
                    tail = _snapshot(self.nets, env)
                    _, out = _encode_cached(self.nets, tail)
                    traj[-1].bootstrap = float(out.value)
            trajectories.append(traj)
        return trajectories


def compute_targets(
    traj: list[Transition], config: TrainConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Per-trajectory returns and advantages.

    Default: discounted returns-to-go minus the value baseline. Optional:
    generalized advantage estimation with the same value targets.
    """
    n = len(traj)
    returns = np.zeros(n)
    running = traj[-1].bootstrap if not traj[-1].done else 0.0
    for i in range(n - 1, -1, -1):
        if traj[i].done:
            running = 0.0
        running = traj[i].reward + config.gamma * running
        returns[i] = running
    values = np.array([tr.value for tr in traj])
    if not config.use_gae:
        return returns, returns - values
    adv = np.zeros(n)
    gae = 0.0
    for i in range(n - 1, -1, -1):
        if traj[i].done:
            next_value, gae = 0.0, 0.0
        elif i == n - 1:
            next_value = traj[i].bootstrap
        else:
            next_value = values[i + 1]
        delta = traj[i].reward + config.gamma * next_value - values[i]
        gae = delta + config.gamma * config.gae_lambda * gae
        adv[i] = gae
    return returns, adv


def ppo_update(
    nets: AgentNets,
    optimizer: torch.optim.Optimizer,
    trajectories: list[list[Transition]],
    config: TrainConfig,
) -> dict[str, float]:
    """Run clipped-surrogate epochs over the collected batch.

    Raises RuntimeError with diagnostics if any loss goes non-finite.
    """
    batch: list[tuple[Transition, float, float]] = []
    for traj in trajectories:
        returns, advantages = compute_targets(traj, config)
        for tr, ret, adv in zip(traj, returns, advantages):
            batch.append((tr, float(ret), float(adv)))
    adv_arr = np.array([b[2] for b in batch])
    adv_mu, adv_sigma = adv_arr.mean(), adv_arr.std()
    if adv_sigma < 1e-8:
        adv_sigma = 1.0

    order = np.arange(len(batch))
    rng = np.random.default_rng(config.seed)
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "rnd_loss": 0.0}
    n_updates = 0
    for _ in range(config.epochs):
        rng.shuffle(order)
        for start in range(0, len(order), config.minibatch_size):
            idx = order[start : start + config.minibatch_size]
            policy_terms, value_terms, entropy_terms, rnd_terms = [], [], [], []
            for i in idx:
                tr, ret, adv = batch[i]
                adv_n = (adv - adv_mu) / adv_sigma
                _, out = _encode_cached(nets, tr)
                log_probs = torch.log_softmax(out.logits, dim=0)
                logp = log_probs[tr.action]
                ratio = torch.exp(logp - tr.log_prob)
                surr1 = ratio * adv_n
                surr2 = torch.clamp(ratio, 1 - config.clip, 1 + config.clip) * adv_n
                policy_terms.append(-torch.min(surr1, surr2))
                value_terms.append((out.value - ret) ** 2)
                finite = torch.isfinite(log_probs)
                probs = torch.exp(log_probs[finite])
                entropy_terms.append(-(probs * log_probs[finite]).sum())
                r_h, r_d = nets.rnd.intrinsic(tr.heading_x, tr.content_x)
                rnd_terms.append(r_h + r_d)
            policy_loss = torch.stack(policy_terms).mean()
            value_loss = torch.stack(value_terms).mean()
            entropy = torch.stack(entropy_terms).mean()
            rnd_loss = torch.stack(rnd_terms).mean()
            loss = (
                policy_loss
                + config.value_coef * value_loss
                - config.entropy_coef * entropy
                + rnd_loss
            )
            if not torch.isfinite(loss):
                raise RuntimeError(
                    "non-finite loss: "
                    f"policy={float(policy_loss)!r} value={float(value_loss)!r} "
                    f"entropy={float(entropy)!r} rnd={float(rnd_loss)!r}"
                )
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(
                [p for p in nets.parameters() if p.requires_grad],
                config.max_grad_norm,
            )
            optimizer.step()
            stats["policy_loss"] += policy_loss.detach().item()
            stats["value_loss"] += value_loss.detach().item()
            stats["entropy"] += entropy.detach().item()
            stats["rnd_loss"] += rnd_loss.detach().item()
            n_updates += 1
    if n_updates:
        for key in stats:
            stats[key] /= n_updates
    return stats


def save_checkpoint(
    path: Path,
    nets: AgentNets,
    optimizer: torch.optim.Optimizer,
    collector: RolloutCollector,
    config: TrainConfig,
    steps_done: int,
) -> None:
    torch.save(
        {
            "version": CHECKPOINT_VERSION,
            "net_config": nets.config.__dict__,
            "train_config": config.__dict__,
            "model": nets.state_dict(),
            "optimizer": optimizer.state_dict(),
            "std_heading": collector.std_heading.state_dict(),
            "std_content": collector.std_content.state_dict(),
            "torch_rng": torch.get_rng_state(),
            "steps_done": steps_done,
        },
        path,
    )


def load_checkpoint(path: Path) -> tuple[AgentNets, dict[str, Any]]:
    payload = torch.load(path, weights_only=False)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    net_config = NetConfig(**payload["net_config"])
    nets = AgentNets(net_config, seed=0)
    nets.load_state_dict(payload["model"])
    return nets, payload


def train(
    document: bytes | str | dict,
    episode_config: EpisodeConfig,
    train_config: TrainConfig,
    net_config: Optional[NetConfig] = None,
    out_dir: Optional[Path] = None,
    log: Optional[Any] = None,
) -> tuple[AgentNets, list[dict[str, float]]]:
    """Full training loop; writes a checkpoint and a metric-curve CSV."""
    net_config = net_config or NetConfig()
    torch.manual_seed(train_config.seed)
    nets = AgentNets(net_config, seed=train_config.seed)
    optimizer = torch.optim.Adam(
        [p for p in nets.parameters() if p.requires_grad], lr=train_config.lr
    )
    collector = RolloutCollector(nets, document, episode_config, train_config)

    history: list[dict[str, float]] = []
    steps_per_iter = train_config.parallel_envs * train_config.rollout_steps
    iterations = max(1, math.ceil(train_config.total_steps / steps_per_iter))
    for iteration in range(iterations):
        trajectories = collector.collect()
        update_stats = ppo_update(nets, optimizer, trajectories, train_config)
        flat = [tr for traj in trajectories for tr in traj]
        recent = collector.episode_metrics[-train_config.parallel_envs :]
        row = {
            "iteration": iteration,
            "steps": (iteration + 1) * steps_per_iter,
            "reward_ext_mean": float(np.mean([tr.reward_ext for tr in flat])),
            "reward_int_mean": float(np.mean([tr.reward_int for tr in flat])),
            "ar": float(np.mean([m.ar for m in recent])) if recent else 0.0,
            "ir": float(np.mean([m.ir for m in recent])) if recent else 0.0,
            "er": float(np.mean([m.er for m in recent])) if recent else 0.0,
            **update_stats,
        }
        history.append(row)
        if log is not None:
            log(row)

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(
            out_dir / "checkpoint.pt",
            nets,
            optimizer,
            collector,
            train_config,
            iterations * steps_per_iter,
        )
        with open(out_dir / "metrics.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(history[0].keys()))
            writer.writeheader()
            writer.writerows(history)
    return nets, history


def evaluate(
    nets: AgentNets,
    document: bytes | str | dict,
    episode_config: EpisodeConfig,
    episodes: int = 20,
    greedy: bool = True,
    seed: int = 0,
) -> list[dict[str, float]]:
    """Run evaluation episodes with the trained policy (argmax by default)."""
    generator = torch.Generator().manual_seed(seed)
    results = []
    for ep in range(episodes):
        env = TableEnv(document, dc_replace(episode_config, seed=episode_config.seed + ep))
        total = 0.0
        while not env.done:
            tr = _snapshot(nets, env)
            with torch.no_grad():
                _, out = _encode_cached(nets, tr)
                probs = out.probs()
            if greedy:
                action = int(torch.argmax(probs))
            else:
                action = int(torch.multinomial(probs, 1, generator=generator))
            _, breakdown, _, _ = env.step(ACTIONS[action])
            total += breakdown.r_ext
        m = env.metrics
        results.append(
            {"return": total, "ar": m.ar, "ir": m.ir, "er": m.er}
        )
    return results
