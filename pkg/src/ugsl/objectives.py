"""Training objectives: supervised loss, adjacency regularizers, and the
denoising / contrastive unsupervised losses.

Regularizers (A is the learned adjacency, A0 the bootstrap graph, X the raw
features):

    closeness       ||A0 - A||_F^2
    smoothness      (1/n^2) sum_ij A_ij ||x_i - x_j||^2
    sparse-connect  ||A||_F^2
    log-barrier     -1^T log(A 1)   (row sums clamped at 1e-12)

The denoising loss corrupts a random subset of feature entries and trains a
separate two-layer GCN to reconstruct them over the learned graph. The
contrastive loss compares the learned graph against a slow-moving anchor
blend of it, both corrupted, through a shared GCN and projection head with
a symmetric temperature-scaled InfoNCE objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .config import ContrastiveConfig, DaeConfig, ObjectiveConfig
from .errors import ConfigurationError
from .layers import encode, init_encoder_layer
from .tensor import Tensor


# ---------------------------------------------------------------------------
# regularizers

def reg_closeness(adj: Tensor, initial: np.ndarray) -> Tensor:
    if initial.shape != adj.shape:
        raise ConfigurationError(
            f"closeness: shapes differ ({initial.shape} vs {adj.shape})")
    diff = T.sub(T.constant(initial), adj)
    return T.sum_all(T.hadamard(diff, diff))


def reg_smoothness(adj: Tensor, features: np.ndarray) -> Tensor:
    sq = (features * features).sum(axis=1)
    dists = sq[:, None] + sq[None, :] - 2.0 * (features @ features.T)
    dists = np.maximum(dists, 0.0)
    n = features.shape[0]
    return T.scale(T.sum_all(T.hadamard(adj, T.constant(dists))), 1.0 / (n * n))


def reg_sparse_connect(adj: Tensor) -> Tensor:
    return T.sum_all(T.hadamard(adj, adj))


def reg_log_barrier(adj: Tensor) -> Tensor:
    n = adj.shape[0]
    row_sums = T.matmul(adj, T.constant(np.ones((n, 1))))
    return T.scale(T.sum_all(T.log(row_sums)), -1.0)


# ---------------------------------------------------------------------------
# denoising auto-encoder

@dataclass
class DaeState:
    config: DaeConfig
    layer1: object
    layer2: object

    def parameters(self) -> list:
        return self.layer1.parameters() + self.layer2.parameters()


def init_dae(cfg: DaeConfig, input_dim: int, rng: np.random.Generator) -> DaeState:
    return DaeState(
        config=cfg,
        layer1=init_encoder_layer("gcn", input_dim, cfg.hidden, rng),
        layer2=init_encoder_layer("gcn", cfg.hidden, input_dim, rng),
    )


def masked_binary_cross_entropy(logits: Tensor, targets: np.ndarray,
                                mask: np.ndarray) -> Tensor:
    """Mean per-entry Bernoulli cross-entropy over the masked positions."""
    count = int(mask.sum())
    if count == 0:
        raise ConfigurationError("binary cross-entropy over an empty mask")
    m = T.constant(mask.astype(np.float64) / count)
    y = T.constant(targets)
    one = T.constant(np.ones_like(targets))
    p = T.sigmoid(logits)
    ll = T.add(T.hadamard(y, T.log(p)),
               T.hadamard(T.sub(one, y), T.log(T.sub(one, p))))
    return T.scale(T.sum_all(T.hadamard(ll, m)), -1.0)


def masked_mse(pred: Tensor, targets: np.ndarray, mask: np.ndarray) -> Tensor:
    count = int(mask.sum())
    if count == 0:
        raise ConfigurationError("mse over an empty mask")
    diff = T.sub(pred, T.constant(targets))
    masked = T.hadamard(T.hadamard(diff, diff),
                        T.constant(mask.astype(np.float64)))
    return T.scale(T.sum_all(masked), 1.0 / count)


def _draw_entry_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    mask = rng.random(shape) < rate
    if not mask.any():  # resample once, then give up
        mask = rng.random(shape) < rate
        if not mask.any():
            raise ConfigurationError(
                f"dae.mask_rate: rate {rate} selected no entries twice")
    return mask


def dae_loss(features: np.ndarray, learned_adj: Tensor, dae: DaeState,
             rng: np.random.Generator, feature_kind: str, activation: str,
             training: bool = True) -> Tensor:
    """Reconstruction loss of a separate GCN run on the corrupted features
    and the learned adjacency. Binary features are zero-masked and scored
    with per-entry cross-entropy; continuous features get additive Gaussian
    noise and squared error. The loss covers only the corrupted entries."""
    mask = _draw_entry_mask(features.shape, dae.config.mask_rate, rng)
    corrupted = features.copy()
    if feature_kind == "binary":
        corrupted[mask] = 0.0
    else:
        corrupted[mask] += rng.normal(0.0, dae.config.noise_sigma,
                                      size=int(mask.sum()))
    h = encode(T.constant(corrupted), learned_adj, dae.layer1,
               activation=activation, apply_activation=True)
    recon = encode(h, learned_adj, dae.layer2, activation=activation,
                   apply_activation=False)
    if feature_kind == "binary":
        return masked_binary_cross_entropy(recon, features, mask)
    return masked_mse(recon, features, mask)


# ---------------------------------------------------------------------------
# contrastive loss with a bootstrapped anchor graph

@dataclass
class AnchorState:
    """Slow-moving blend of the learned adjacency used as the second view;
    starts at the identity when the dataset has no input structure."""

    adjacency: np.ndarray
    tau: float

    @classmethod
    def initial(cls, n: int, tau: float,
                initial_adjacency: np.ndarray | None = None) -> "AnchorState":
        adj = np.eye(n) if initial_adjacency is None else initial_adjacency.copy()
        return cls(adjacency=adj, tau=tau)

    def update(self, learned_values: np.ndarray) -> None:
        self.adjacency = (self.tau * self.adjacency
                          + (1.0 - self.tau) * learned_values)


@dataclass
class ContrastiveState:
    config: ContrastiveConfig
    encoder1: object
    encoder2: object
    proj1: object
    proj2: object
    anchor: AnchorState

    def parameters(self) -> list:
        return (self.encoder1.parameters() + self.encoder2.parameters()
                + self.proj1.parameters() + self.proj2.parameters())


def init_contrastive(cfg: ContrastiveConfig, n: int, input_dim: int,
                     hidden: int, rng: np.random.Generator,
                     initial_adjacency: np.ndarray | None = None) -> ContrastiveState:
    return ContrastiveState(
        config=cfg,
        encoder1=init_encoder_layer("gcn", input_dim, hidden, rng),
        encoder2=init_encoder_layer("gcn", hidden, hidden, rng),
        proj1=init_encoder_layer("mlp", hidden, hidden, rng),
        proj2=init_encoder_layer("mlp", hidden, hidden, rng),
        anchor=AnchorState.initial(n, cfg.tau, initial_adjacency),
    )


def nt_xent(x_emb: Tensor, y_emb: Tensor, temperature: float) -> Tensor:
    """Symmetric InfoNCE over row-aligned pairs with cosine similarity."""
    n = x_emb.shape[0]
    sims = T.matmul(T.normalize_rows(x_emb), T.transpose(T.normalize_rows(y_emb)))
    scaled = T.scale(sims, 1.0 / temperature)
    diag_labels = np.arange(n)
    full = np.ones(n, dtype=bool)
    forward = T.softmax_cross_entropy(scaled, diag_labels, full)
    backward = T.softmax_cross_entropy(T.transpose(scaled), diag_labels, full)
    return T.scale(T.add(forward, backward), 0.5)


def _corrupt_view(features: np.ndarray, adj: Tensor, rate: float,
                  rng: np.random.Generator, training: bool):
    """Drop edges and mask feature columns at the given rate."""
    if not training:
        return T.constant(features), adj
    col_mask = (rng.random((1, features.shape[1])) >= rate).astype(np.float64)
    x = T.constant(features * col_mask)
    edge_mask = (rng.random(adj.shape) >= rate).astype(np.float64)
    return x, T.hadamard(adj, T.constant(edge_mask))


def _embed_view(x: Tensor, adj: Tensor, state: ContrastiveState,
                activation: str) -> Tensor:
    h = encode(x, adj, state.encoder1, activation=activation,
               apply_activation=True)
    h = encode(h, adj, state.encoder2, activation=activation,
               apply_activation=False)
    h = encode(h, None, state.proj1, activation=activation,
               apply_activation=True)
    return encode(h, None, state.proj2, activation=activation,
                  apply_activation=False)


def contrastive_loss(features: np.ndarray, learned_adj: Tensor,
                     state: ContrastiveState, rng: np.random.Generator,
                     activation: str, training: bool = True) -> Tensor:
    """Contrast the learned graph against the anchor blend. Gradients reach
    the structure through the first view; the anchor matrix is a constant
    snapshot updated once per epoch by the trainer."""
    cfg = state.config
    x1, a1 = _corrupt_view(features, learned_adj, cfg.mask_rate, rng, training)
    x2, a2 = _corrupt_view(features, T.constant(state.anchor.adjacency),
                           cfg.mask_rate, rng, training)
    emb1 = _embed_view(x1, a1, state, activation)
    emb2 = _embed_view(x2, a2, state, activation)
    return nt_xent(emb1, emb2, cfg.temperature)


# ---------------------------------------------------------------------------
# combined objective

@dataclass
class ObjectiveState:
    """Per-trial trainable pieces owned by the objective (none when the
    config uses neither unsupervised loss)."""

    dae: DaeState | None = None
    contrastive: ContrastiveState | None = None

    def parameters(self) -> list:
        out = []
        if self.dae is not None:
            out.extend(self.dae.parameters())
        if self.contrastive is not None:
            out.extend(self.contrastive.parameters())
        return out


def init_objective_state(cfg: ObjectiveConfig, n: int, input_dim: int,
                         hidden: int, rng: np.random.Generator) -> ObjectiveState:
    state = ObjectiveState()
    if "dae" in cfg.unsupervised:
        state.dae = init_dae(cfg.dae, input_dim, rng)
    if "contrastive" in cfg.unsupervised:
        state.contrastive = init_contrastive(cfg.contrastive, n, input_dim,
                                             hidden, rng)
    return state


def total_objective(logits: Tensor, labels: np.ndarray, train_mask: np.ndarray,
                    adj: Tensor, initial_adj: np.ndarray, features: np.ndarray,
                    cfg: ObjectiveConfig, state: ObjectiveState,
                    rng: np.random.Generator, feature_kind: str,
                    activation: str, training: bool = True) -> Tensor:
    """Supervised cross-entropy plus weighted regularizers plus the active
    unsupervised losses at unit weight."""
    loss = T.softmax_cross_entropy(logits, labels, train_mask)
    if cfg.lambda_closeness > 0:
        loss = T.add(loss, T.scale(reg_closeness(adj, initial_adj),
                                   cfg.lambda_closeness))
    if cfg.lambda_smoothness > 0:
        loss = T.add(loss, T.scale(reg_smoothness(adj, features),
                                   cfg.lambda_smoothness))
    if cfg.lambda_sparse_connect > 0:
        loss = T.add(loss, T.scale(reg_sparse_connect(adj),
                                   cfg.lambda_sparse_connect))
    if cfg.lambda_log_barrier > 0:
        loss = T.add(loss, T.scale(reg_log_barrier(adj),
                                   cfg.lambda_log_barrier))
    if state.dae is not None:
        loss = T.add(loss, dae_loss(features, adj, state.dae, rng,
                                    feature_kind, activation, training))
    if state.contrastive is not None:
        loss = T.add(loss, contrastive_loss(features, adj, state.contrastive,
                                            rng, activation, training))
    return loss
