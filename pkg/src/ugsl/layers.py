"""The learnable-adjacency layer: edge scorer, sparsifier, processor, encoder.

Edge scorers produce a dense n x n score matrix:

    fp   score[i][j] is its own trainable parameter
    att  mean over heads p of Cos(X_i * v_p, X_j * v_p)
    mlp  Cos(MLP(X_i), MLP(X_j))

Sparsifiers zero most entries; the selection is discrete and gradients pass
only through the kept entries (straight-through). Processors symmetrize
and/or apply a nonlinearity. Encoders (GCN / GIN / plain MLP) consume the
processed adjacency and, at the final layer, emit class logits.

A LayerStack composes two such layers, either recomputing the adjacency
from the running node embeddings per layer or learning one adjacency that
both encoder layers share.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .config import GslConfig, ScorerConfig, SparsifierConfig
from .errors import ConfigurationError, ResourceError
from .tensor import Tensor

ACTIVATION_FNS = {"relu": T.relu, "tanh": T.tanh}
NUM_LAYERS = 2


# ---------------------------------------------------------------------------
# edge scorers

@dataclass
class EdgeScorerParams:
    kind: str
    fp: Tensor | None = None                      # (n, n)
    heads: list = field(default_factory=list)     # m tensors of shape (1, d)
    mlp: list = field(default_factory=list)       # [(W, b), ...]
    activation: str = "relu"

    def parameters(self) -> list:
        out = []
        if self.fp is not None:
            out.append(self.fp)
        out.extend(self.heads)
        for w, b in self.mlp:
            out.extend([w, b])
        return out


def init_edge_scorer(cfg: ScorerConfig, n: int, d: int, x0: np.ndarray,
                     activation: str, rng: np.random.Generator) -> EdgeScorerParams:
    cfg.validate()
    params = EdgeScorerParams(kind=cfg.kind, activation=activation)
    if cfg.kind == "fp":
        if cfg.init == "cosine":
            norms = np.maximum(np.linalg.norm(x0, axis=1, keepdims=True), 1e-12)
            y = x0 / norms
            params.fp = T.parameter(y @ y.T)
        else:
            params.fp = T.parameter((n, n), rng=rng, glorot=(n, n))
    elif cfg.kind == "att":
        params.heads = [T.parameter((1, d), rng=rng, glorot=(d, 1))
                        for _ in range(cfg.heads)]
    else:
        width = cfg.mlp_width if cfg.mlp_width is not None else d
        widths = [d] + [width] * cfg.mlp_depth
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            if cfg.init == "identity":
                if fan_in != fan_out:
                    raise ConfigurationError(
                        "scorer.init: identity init requires square layers")
                w = T.parameter(np.eye(fan_in))
            else:
                w = T.parameter((fan_in, fan_out), rng=rng,
                                glorot=(fan_in, fan_out))
            params.mlp.append((w, T.parameter(np.zeros((1, fan_out)))))
    return params


def score_fp(params: EdgeScorerParams, n: int) -> Tensor:
    if params.fp.shape != (n, n):
        raise ConfigurationError(
            f"fp scorer is {params.fp.shape}, graph has {n} nodes")
    return params.fp


def score_att(x_prev: Tensor, heads: list) -> Tensor:
    """Mean over heads of the cosine similarity of head-weighted rows."""
    total = None
    for head in heads:
        sim = T.pairwise_cosine(T.hadamard(x_prev, head))
        total = sim if total is None else T.add(total, sim)
    return T.scale(total, 1.0 / len(heads))


def score_mlp(x_prev: Tensor, mlp: list, activation: str) -> Tensor:
    """Cosine similarity of MLP embeddings; the configured activation is
    applied between layers only."""
    act = ACTIVATION_FNS[activation]
    h = x_prev
    for i, (w, b) in enumerate(mlp):
        h = T.add(T.matmul(h, w), b)
        if i + 1 < len(mlp):
            h = act(h)
    return T.pairwise_cosine(h)


def score(params: EdgeScorerParams, x_prev: Tensor) -> Tensor:
    if params.kind == "fp":
        return score_fp(params, x_prev.shape[0])
    if params.kind == "att":
        return score_att(x_prev, params.heads)
    return score_mlp(x_prev, params.mlp, params.activation)


# ---------------------------------------------------------------------------
# sparsifiers

def _ranked_order(values: np.ndarray) -> np.ndarray:
    """Per-row descending argsort with the diagonal pushed last and ties
    broken toward the lower column index."""
    masked = values.copy()
    np.fill_diagonal(masked, -np.inf)
    return np.argsort(-masked, axis=1, kind="stable")


def _mask_from_columns(n: int, columns: np.ndarray) -> np.ndarray:
    mask = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), columns.shape[1])
    mask[rows, columns.reshape(-1)] = True
    return mask


def sparsify(scores: Tensor, cfg: SparsifierConfig,
             rng: np.random.Generator | None = None,
             training: bool = False) -> Tensor:
    """Zero all but the selected entries of the score matrix.

    The selection itself is not differentiated; kept entries keep their
    score (for the Bernoulli relaxation, the relaxed score) and carry the
    full gradient, dropped entries carry none. Self-edges are never kept.
    """
    n = scores.shape[0]
    if scores.shape != (n, n):
        raise ConfigurationError(f"sparsify: scores must be square, got {scores.shape}")
    cfg.validate(n_nodes=n)

    if cfg.kind == "bernoulli":
        squashed = T.sigmoid(scores)
        logit = T.sub(T.log(squashed),
                      T.log(T.sub(T.constant(np.ones((n, n))), squashed)))
        if training:
            if rng is None:
                raise ConfigurationError("bernoulli sparsifier needs an rng in training")
            u = rng.uniform(size=(n, n))
        else:
            u = np.full((n, n), 0.5)
        noise = np.log(u) - np.log1p(-u)
        relaxed = T.sigmoid(T.scale(T.add(logit, T.constant(noise)),
                                    1.0 / cfg.temperature))
        keep = relaxed.values > cfg.epsilon
        np.fill_diagonal(keep, False)
        return T.hadamard(relaxed, T.constant(keep.astype(np.float64)))

    vals = scores.values
    if cfg.kind == "knn":
        keep = _mask_from_columns(n, _ranked_order(vals)[:, :cfg.k])
    elif cfg.kind == "dknn":
        ranks = np.arange(cfg.k) * cfg.dilation
        keep = _mask_from_columns(n, _ranked_order(vals)[:, ranks])
    elif cfg.kind == "random_dknn":
        pool = _ranked_order(vals)[:, :cfg.k * cfg.dilation]
        if training:
            if rng is None:
                raise ConfigurationError("random_dknn needs an rng in training")
            cols = np.stack([rng.choice(pool[i], size=cfg.k, replace=False)
                             for i in range(n)])
        else:
            cols = pool[:, np.arange(cfg.k) * cfg.dilation]
        keep = _mask_from_columns(n, cols)
    elif cfg.kind == "epsnn":
        keep = vals > cfg.epsilon
        np.fill_diagonal(keep, False)
        count = int(keep.sum())
        if count > cfg.max_edges:
            raise ResourceError(
                f"epsnn kept {count} edges, exceeding the budget of "
                f"{cfg.max_edges}")
    else:
        raise ConfigurationError(f"sparsifier.kind: unknown kind {cfg.kind!r}")
    return T.hadamard(scores, T.constant(keep.astype(np.float64)))


# ---------------------------------------------------------------------------
# processors

def process(adj: Tensor, mode: str, activation: str = "relu") -> Tensor:
    act = ACTIVATION_FNS[activation]
    if mode == "none":
        return adj
    if mode == "symmetrize":
        return T.scale(T.add(adj, T.transpose(adj)), 0.5)
    if mode == "activation":
        return act(adj)
    if mode == "activation_symmetrize":
        out = act(adj)
        return T.scale(T.add(out, T.transpose(out)), 0.5)
    raise ConfigurationError(f"processor.mode: unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# encoders

@dataclass
class EncoderLayerParams:
    kind: str
    weights: list  # gcn/mlp: [(W, b)]; gin: [(W1, b1), (W2, b2)]

    def parameters(self) -> list:
        out = []
        for w, b in self.weights:
            out.extend([w, b])
        return out


def init_encoder_layer(kind: str, fan_in: int, fan_out: int,
                       rng: np.random.Generator) -> EncoderLayerParams:
    def linear(i, o):
        return (T.parameter((i, o), rng=rng, glorot=(i, o)),
                T.parameter(np.zeros((1, o))))

    if kind == "gin":
        # epsilon-zero GIN with a 2-layer internal MLP
        return EncoderLayerParams(kind, [linear(fan_in, fan_out),
                                         linear(fan_out, fan_out)])
    return EncoderLayerParams(kind, [linear(fan_in, fan_out)])


def _normalize_adjacency(adj: Tensor) -> Tensor:
    """Symmetric degree normalization of relu(adj) + I."""
    n = adj.shape[0]
    clamped = T.relu(adj)
    with_self = T.add(clamped, T.constant(np.eye(n)))
    deg = T.matmul(with_self, T.constant(np.ones((n, 1))))
    inv_sqrt = T.power(deg, -0.5, floor=1e-6)
    scaled = T.hadamard(with_self, inv_sqrt)          # rows
    return T.hadamard(scaled, T.transpose(inv_sqrt))  # columns


def encode(x: Tensor, adj: Tensor | None, params: EncoderLayerParams,
           activation: str, apply_activation: bool,
           dropout_rate: float = 0.0,
           rng: np.random.Generator | None = None,
           training: bool = False) -> Tensor:
    """One encoder layer. GCN propagates with the normalized adjacency, GIN
    aggregates x + A x through its internal MLP, and the MLP encoder ignores
    the graph entirely. Negative adjacency weights are clamped to zero
    before any degree computation."""
    act = ACTIVATION_FNS[activation]
    h = T.dropout(x, dropout_rate, rng, training)
    if params.kind == "gcn":
        w, b = params.weights[0]
        out = T.add(T.matmul(T.matmul(_normalize_adjacency(adj), h), w), b)
    elif params.kind == "gin":
        agg = T.add(h, T.matmul(T.relu(adj), h))
        (w1, b1), (w2, b2) = params.weights
        out = T.add(T.matmul(act(T.add(T.matmul(agg, w1), b1)), w2), b2)
    elif params.kind == "mlp":
        w, b = params.weights[0]
        out = T.add(T.matmul(h, w), b)
    else:
        raise ConfigurationError(f"encoder.kind: unknown kind {params.kind!r}")
    return act(out) if apply_activation else out


# ---------------------------------------------------------------------------
# the stack

@dataclass
class LayerStack:
    """Two composed layers with either one shared learned adjacency or a
    separately scored adjacency per layer."""

    config: GslConfig
    scorers: list
    encoder_layers: list

    @classmethod
    def build(cls, config: GslConfig, n: int, input_dim: int,
              num_classes: int, x0: np.ndarray,
              rng: np.random.Generator) -> "LayerStack":
        n_scorers = 1 if config.adjacency_mode == "one" else NUM_LAYERS
        widths = [input_dim, config.hidden_units, num_classes]
        scorer_input_dims = [widths[i] for i in range(n_scorers)]
        scorers = [init_edge_scorer(config.scorer, n, dim, x0,
                                    config.activation, rng)
                   for dim in scorer_input_dims]
        encoder_layers = [init_encoder_layer(config.encoder.kind, widths[i],
                                             widths[i + 1], rng)
                          for i in range(NUM_LAYERS)]
        return cls(config=config, scorers=scorers, encoder_layers=encoder_layers)

    def parameters(self) -> list:
        out = []
        for s in self.scorers:
            out.extend(s.parameters())
        for e in self.encoder_layers:
            out.extend(e.parameters())
        return out

    def _learn_adjacency(self, scorer: EdgeScorerParams, x: Tensor,
                         rng: np.random.Generator, training: bool) -> Tensor:
        scores = score(scorer, x)
        sparse = sparsify(scores, self.config.sparsifier, rng=rng,
                          training=training)
        return process(sparse, self.config.processor.mode,
                       self.config.activation)

    def forward(self, x0: np.ndarray, rng: np.random.Generator,
                training: bool = False):
        """Run the full stack; returns (logits, last processed adjacency)."""
        cfg = self.config
        x = T.constant(x0)
        adj = None
        if cfg.adjacency_mode == "one":
            adj = self._learn_adjacency(self.scorers[0], x, rng, training)
        for layer_idx in range(NUM_LAYERS):
            if cfg.adjacency_mode == "per_layer":
                adj = self._learn_adjacency(self.scorers[layer_idx], x, rng,
                                            training)
            x = encode(x, adj, self.encoder_layers[layer_idx],
                       activation=cfg.activation,
                       apply_activation=layer_idx + 1 < NUM_LAYERS,
                       dropout_rate=cfg.dropout, rng=rng, training=training)
        return x, adj
