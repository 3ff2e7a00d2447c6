"""Networks: heading-graph encoder, content encoder, actor-critic, curiosity.

Everything runs in float64 on CPU; desk-scale dimensions keep episodes and
finite-difference checks cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import torch
from torch import nn

from ..env import TableEnv
from ..transform import ACTIONS, TRANSFORM_ACTIONS
from .features import (
    HeadingGraph,
    N_EDGE_CLASSES,
    build_heading_graph,
    content_features,
    content_summary,
    heading_summary,
)

N_TRANSFORM = len(TRANSFORM_ACTIONS)
N_ACTIONS = len(ACTIONS)
CELL_FEATURES = 5


@dataclass(frozen=True)
class NetConfig:
    text_dim: int = 16
    hidden: int = 32
    gcn_layers: int = 3
    lstm_hidden: int = 16
    rnd_dim: int = 16
    content_mode: str = "bilstm"  # or "meanpool"

    @property
    def node_feature_dim(self) -> int:
        return self.text_dim + 1

    @property
    def heading_summary_dim(self) -> int:
        return 2 * self.node_feature_dim + 1

    @property
    def content_summary_dim(self) -> int:
        return 2 * CELL_FEATURES + 2


def _mlp(dims: list[int]) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(len(dims) - 1):
        layers.append(nn.Linear(dims[i], dims[i + 1]))
        if i < len(dims) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class GCNEncoder(nn.Module):
    """Sum-aggregation message passing over the heading graph, mean readout.

    Each layer transforms a node's previous feature plus the class-weighted
    sum of its neighbors' features; edge classes carry learned scalar
    weights.
    """

    def __init__(self, config: NetConfig):
        super().__init__()
        self.config = config
        self.input = nn.Linear(config.node_feature_dim, config.hidden)
        self.layers = nn.ModuleList(
            nn.Linear(config.hidden, config.hidden)
            for _ in range(config.gcn_layers)
        )
        self.edge_weights = nn.Parameter(
            torch.ones(config.gcn_layers, N_EDGE_CLASSES, dtype=torch.float64)
        )

    @staticmethod
    def adjacency(graph: HeadingGraph) -> torch.Tensor:
        n = graph.node_features.shape[0]
        adj = torch.zeros(N_EDGE_CLASSES, n, n, dtype=torch.float64)
        for parent, child, cls in graph.edges:
            adj[cls, parent, child] = 1.0
            adj[cls, child, parent] = 1.0
        return adj

    def forward(self, node_features: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        h = torch.relu(self.input(node_features))
        for layer_idx, layer in enumerate(self.layers):
            agg = h.clone()
            for cls in range(N_EDGE_CLASSES):
                agg = agg + self.edge_weights[layer_idx, cls] * (adj[cls] @ h)
            h = torch.relu(layer(agg))
        return h.mean(dim=0)


class BiLSTM(nn.Module):
    """Bidirectional recurrent cell with explicit gate equations."""

    def __init__(self, input_dim: int, hidden_dim: int):
        super().__init__()
        self.hidden_dim = hidden_dim
        scale = 1.0 / math.sqrt(hidden_dim)

        def param(*shape: int) -> nn.Parameter:
            return nn.Parameter(
                (torch.rand(*shape, dtype=torch.float64) * 2 - 1) * scale
            )

        self.w_ih_f = param(4 * hidden_dim, input_dim)
        self.w_hh_f = param(4 * hidden_dim, hidden_dim)
        self.b_f = param(4 * hidden_dim)
        self.w_ih_b = param(4 * hidden_dim, input_dim)
        self.w_hh_b = param(4 * hidden_dim, hidden_dim)
        self.b_b = param(4 * hidden_dim)

    def _run(
        self,
        xs: torch.Tensor,
        w_ih: torch.Tensor,
        w_hh: torch.Tensor,
        b: torch.Tensor,
    ) -> torch.Tensor:
        hd = self.hidden_dim
        h = torch.zeros(hd, dtype=torch.float64)
        c = torch.zeros(hd, dtype=torch.float64)
        for x in xs:
            gates = w_ih @ x + w_hh @ h + b
            i = torch.sigmoid(gates[:hd])
            f = torch.sigmoid(gates[hd : 2 * hd])
            g = torch.tanh(gates[2 * hd : 3 * hd])
            o = torch.sigmoid(gates[3 * hd :])
            c = f * c + i * g
            h = o * torch.tanh(c)
        return h

    def forward(self, xs: torch.Tensor) -> torch.Tensor:
        """[T, F] sequence -> [2H] concat of forward/backward final states."""
        fwd = self._run(xs, self.w_ih_f, self.w_hh_f, self.b_f)
        bwd = self._run(
            torch.flip(xs, dims=(0,)), self.w_ih_b, self.w_hh_b, self.b_b
        )
        return torch.cat([fwd, bwd])


class ContentEncoder(nn.Module):
    """Row-wise and column-wise recurrent summaries pooled into h_D.

    One shared sequence encoder runs along every row and every column, so
    transposing the grid exactly swaps the two halves of the pre-MLP
    concatenation. A mean-pool fallback sits behind the same interface.
    """

    def __init__(self, config: NetConfig):
        super().__init__()
        self.config = config
        if config.content_mode == "bilstm":
            self.seq = BiLSTM(CELL_FEATURES, config.lstm_hidden)
        elif config.content_mode == "meanpool":
            self.seq = None
            self.cell = nn.Linear(CELL_FEATURES, 2 * config.lstm_hidden)
        else:
            raise ValueError(f"unknown content mode {config.content_mode!r}")
        self.head = nn.Linear(4 * config.lstm_hidden, config.hidden)

    def _summarize(self, seqs: torch.Tensor) -> torch.Tensor:
        """[S, T, F] sequences -> mean over S of per-sequence encodings."""
        if self.seq is not None:
            encoded = torch.stack([self.seq(seq) for seq in seqs])
        else:
            encoded = torch.relu(self.cell(seqs)).mean(dim=1)
        return encoded.mean(dim=0)

    def pre_mlp(self, cells: torch.Tensor) -> torch.Tensor:
        row_part = self._summarize(cells)
        col_part = self._summarize(cells.transpose(0, 1))
        return torch.cat([row_part, col_part])

    def forward(self, cells: torch.Tensor) -> torch.Tensor:
        return torch.relu(self.head(self.pre_mlp(cells)))


@dataclass
class PolicyOutput:
    logits: torch.Tensor  # [14], illegal entries at -inf
    value: torch.Tensor  # scalar

    def probs(self) -> torch.Tensor:
        return torch.softmax(self.logits, dim=0)


class ActorCritic(nn.Module):
    """Shared trunk with a transformation head, a selection head and a
    critic."""

    def __init__(self, config: NetConfig):
        super().__init__()
        self.trunk = nn.Sequential(
            nn.Linear(2 * config.hidden, config.hidden), nn.Tanh()
        )
        self.transform_head = nn.Linear(config.hidden, N_TRANSFORM)
        self.select_head = nn.Linear(config.hidden, N_ACTIONS - N_TRANSFORM)
        self.value_head = nn.Linear(config.hidden, 1)

    def forward(
        self, h_t: torch.Tensor, stage: str, legal_mask: np.ndarray
    ) -> PolicyOutput:
        if not np.any(legal_mask):
            raise ValueError("no legal action under the mask")
        z = self.trunk(h_t)
        logits = torch.full((N_ACTIONS,), -torch.inf, dtype=torch.float64)
        if stage == "transform":
            logits = torch.cat(
                [
                    self.transform_head(z),
                    torch.full((N_ACTIONS - N_TRANSFORM,), -torch.inf, dtype=torch.float64),
                ]
            )
        else:
            logits = torch.cat(
                [
                    torch.full((N_TRANSFORM,), -torch.inf, dtype=torch.float64),
                    self.select_head(z),
                ]
            )
        mask_t = torch.as_tensor(legal_mask, dtype=torch.bool)
        logits = torch.where(
            mask_t, logits, torch.tensor(-torch.inf, dtype=torch.float64)
        )
        return PolicyOutput(logits=logits, value=self.value_head(z)[0])


class RNDNets(nn.Module):
    """Random network distillation: frozen targets, trainable predictors."""

    def __init__(self, config: NetConfig):
        super().__init__()
        k = config.rnd_dim
        self.heading_target = _mlp([config.heading_summary_dim, config.hidden, k])
        self.heading_predictor = _mlp([config.heading_summary_dim, config.hidden, k])
        self.content_target = _mlp([config.content_summary_dim, config.hidden, k])
        self.content_predictor = _mlp([config.content_summary_dim, config.hidden, k])
        for p in self.heading_target.parameters():
            p.requires_grad_(False)
        for p in self.content_target.parameters():
            p.requires_grad_(False)

    def intrinsic(
        self, heading_x: torch.Tensor, content_x: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        r_h = torch.sum(
            (self.heading_predictor(heading_x) - self.heading_target(heading_x)) ** 2
        )
        r_d = torch.sum(
            (self.content_predictor(content_x) - self.content_target(content_x)) ** 2
        )
        return r_h, r_d

    def target_parameter_hash(self) -> str:
        import hashlib

        h = hashlib.blake2b(digest_size=16)
        for net in (self.heading_target, self.content_target):
            for p in net.parameters():
                h.update(p.detach().numpy().tobytes())
        return h.hexdigest()


class RunningStd:
    """Welford running standard deviation used to normalize intrinsic
    rewards."""

    def __init__(self) -> None:
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @property
    def std(self) -> float:
        if self.count < 2:
            return 1.0
        return math.sqrt(self.m2 / self.count) or 1.0

    def state_dict(self) -> dict[str, float]:
        return {"count": self.count, "mean": self.mean, "m2": self.m2}

    def load_state_dict(self, state: dict[str, float]) -> None:
        self.count = int(state["count"])
        self.mean = state["mean"]
        self.m2 = state["m2"]


class AgentNets(nn.Module):
    """All trainable components plus the frozen curiosity targets."""

    def __init__(self, config: NetConfig, seed: int = 0):
        super().__init__()
        torch.manual_seed(seed)
        with torch.no_grad():
            default = torch.get_default_dtype()
            torch.set_default_dtype(torch.float64)
            try:
                self.gcn = GCNEncoder(config)
                self.content = ContentEncoder(config)
                self.policy = ActorCritic(config)
                self.rnd = RNDNets(config)
            finally:
                torch.set_default_dtype(default)
        self.double()
        self.config = config

    def encode(self, env: TableEnv) -> tuple[torch.Tensor, dict[str, Any]]:
        """Feature extraction for the current env state."""
        from ..insight import SINGLE_BLOCK_KINDS

        state = env.state
        kind_index = {
            e.record.id: SINGLE_BLOCK_KINDS.index(e.record.kind)
            for e in env.ledger
            if e.record.kind in SINGLE_BLOCK_KINDS
        }
        graph = build_heading_graph(state, self.config.text_dim)
        cells = content_features(state, kind_index)
        node_t = torch.as_tensor(graph.node_features, dtype=torch.float64)
        adj = GCNEncoder.adjacency(graph)
        cells_t = torch.as_tensor(cells, dtype=torch.float64)
        h_h = self.gcn(node_t, adj)
        h_d = self.content(cells_t)
        h_t = torch.cat([h_h, h_d])
        aux = {
            "heading_summary": torch.as_tensor(
                heading_summary(graph), dtype=torch.float64
            ),
            "content_summary": torch.as_tensor(
                content_summary(cells), dtype=torch.float64
            ),
        }
        return h_t, aux

    def policy_output(self, env: TableEnv) -> PolicyOutput:
        h_t, _ = self.encode(env)
        return self.policy(h_t, env.stage, env.legal_mask())
