"""Non-learned reference policies: random, greedy lookahead, beam search."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace as dc_replace
from typing import Optional

import numpy as np

from ..env import EpisodeConfig, Metrics, STAGE_SELECT, TableEnv
from ..transform import ACTIONS, ActionKind

BEAM_DEPTH = 3


@dataclass
class EpisodeTrace:
    actions: list[str] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    metrics: Optional[Metrics] = None
    done_reason: Optional[str] = None

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))


def _legal_indices(env: TableEnv) -> list[int]:
    return [i for i, ok in enumerate(env.legal_mask()) if ok]


def _random_action(env: TableEnv, rng: np.random.Generator) -> ActionKind:
    return ACTIONS[int(rng.choice(_legal_indices(env)))]


def _greedy_action(env: TableEnv) -> ActionKind:
    """One-step lookahead on extrinsic reward; first legal action in the
    transformation stage and on ties."""
    legal = _legal_indices(env)
    if env.stage != STAGE_SELECT:
        return ACTIONS[legal[0]]
    best_idx, best_reward = legal[0], -np.inf
    for i in legal:
        reward = env.peek_select_reward(ACTIONS[i])
        if reward > best_reward:
            best_idx, best_reward = i, reward
    return ACTIONS[best_idx]


def _beam_action(env: TableEnv, width: int) -> ActionKind:
    """Beam search over action sequences up to depth 3, scored by cumulative
    extrinsic reward; returns the first action of the best sequence."""
    beam: list[tuple[float, ActionKind, TableEnv]] = []
    for i in _legal_indices(env):
        sim = copy.deepcopy(env)
        _, breakdown, done, _ = sim.step(ACTIONS[i])
        beam.append((breakdown.r_ext, ACTIONS[i], sim))
    beam.sort(key=lambda item: -item[0])
    beam = beam[:width]
    for _ in range(BEAM_DEPTH - 1):
        expanded: list[tuple[float, ActionKind, TableEnv]] = []
        for score, first, sim in beam:
            if sim.done:
                expanded.append((score, first, sim))
                continue
            for i in _legal_indices(sim):
                child = copy.deepcopy(sim)
                _, breakdown, _, _ = child.step(ACTIONS[i])
                expanded.append((score + breakdown.r_ext, first, child))
        expanded.sort(key=lambda item: -item[0])
        beam = expanded[:width]
    return beam[0][1]


def run_baseline_episode(
    policy: str,
    document: bytes | str | dict,
    config: EpisodeConfig,
    seed: Optional[int] = None,
    beam_width: int = 3,
) -> EpisodeTrace:
    """Play one full episode with the named policy.

    ``policy`` is "random", "greedy" or "beam"; the env seed defaults to
    the episode config's.
    """
    if policy not in ("random", "greedy", "beam"):
        raise ValueError(f"unknown baseline policy {policy!r}")
    if seed is not None:
        config = dc_replace(config, seed=seed)
    env = TableEnv(document, config)
    rng = np.random.default_rng(config.seed)
    trace = EpisodeTrace()
    while not env.done:
        if policy == "random":
            action = _random_action(env, rng)
        elif policy == "greedy":
            action = _greedy_action(env)
        else:
            action = _beam_action(env, beam_width)
        _, breakdown, _, _ = env.step(action)
        trace.actions.append(action.value)
        trace.rewards.append(breakdown.r_ext)
    trace.metrics = env.metrics
    trace.done_reason = env.done_reason
    return trace
