"""Learning agent: encoders, actor-critic policy, curiosity, baselines."""

from .features import embed_text, build_heading_graph, content_features
from .nets import AgentNets, NetConfig
from .ppo import TrainConfig, train, ppo_update
from .baselines import run_baseline_episode

__all__ = [
    "embed_text",
    "build_heading_graph",
    "content_features",
    "AgentNets",
    "NetConfig",
    "TrainConfig",
    "train",
    "ppo_update",
    "run_baseline_episode",
]
