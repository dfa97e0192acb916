"""Positional encodings appended to raw node features.

Two flavors: Weisfeiler-Lehman role ids embedded sinusoidally, and the
eigenvectors of the normalized Laplacian for the smallest eigenvalues.
Both are computed from a bootstrap kNN graph when the dataset carries no
structure of its own.
"""

from __future__ import annotations

import numpy as np

from .config import PositionalConfig
from .data import knn_graph
from .errors import ConfigurationError
from .spectral import binarize_symmetrize, normalized_laplacian, \
    smallest_laplacian_eigenpairs


def wl_roles(adjacency: np.ndarray, iterations: int) -> np.ndarray:
    """Iterative color refinement on the binarized graph.

    Every node starts with color 0; each round maps (own color, sorted
    multiset of neighbor colors) to a dense id, assigned in first-seen
    order over nodes 0..n-1.
    """
    binary = binarize_symmetrize(adjacency)
    n = binary.shape[0]
    neighbors = [np.flatnonzero(binary[i]) for i in range(n)]
    colors = np.zeros(n, dtype=np.int64)
    for _ in range(iterations):
        table: dict[tuple, int] = {}
        fresh = np.empty(n, dtype=np.int64)
        for i in range(n):
            sig = (colors[i], tuple(sorted(colors[j] for j in neighbors[i])))
            if sig not in table:
                table[sig] = len(table)
            fresh[i] = table[sig]
        colors = fresh
    return colors


def wl_embedding(colors: np.ndarray, pe_dim: int) -> np.ndarray:
    """Transformer-style sinusoidal embedding of integer role ids."""
    if pe_dim % 2 != 0:
        raise ConfigurationError(f"positional.pe_dim: must be even, got {pe_dim}")
    colors = np.asarray(colors, dtype=np.float64).reshape(-1, 1)
    half = pe_dim // 2
    freqs = 1.0 / (10_000.0 ** (2.0 * np.arange(half) / pe_dim))
    angles = colors * freqs[None, :]
    out = np.empty((colors.shape[0], pe_dim))
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out


def spectral_embedding(adjacency: np.ndarray, k: int,
                       accept_residual: float | None = None) -> np.ndarray:
    """Columns are eigenvectors of the normalized Laplacian of the
    binarized, symmetrized graph for the k smallest eigenvalues.

    Near-degenerate spectra (heavily clustered graphs) can stall power
    iteration above its tolerance; by default that raises. Passing
    ``accept_residual`` accepts such stalled eigenpairs instead, which for
    encoding purposes lose nothing: a vector with residual r is an exact
    eigenvector of a Laplacian within r of this one.
    """
    n = adjacency.shape[0]
    if not 1 <= k <= n:
        raise ConfigurationError(f"positional.pe_dim: need 1 <= k <= n, got {k}")
    lap = normalized_laplacian(binarize_symmetrize(adjacency))
    _, vectors = smallest_laplacian_eigenpairs(lap, k,
                                               accept_residual=accept_residual)
    return vectors


def build_input_features(features: np.ndarray, adjacency: np.ndarray,
                         config: PositionalConfig) -> np.ndarray:
    """Raw features, optionally concatenated with an encoding computed on
    the given graph (or on a bootstrap kNN graph when it is empty)."""
    config.validate()
    if config.kind == "none":
        return features
    if not np.any(adjacency):
        adjacency = knn_graph(features, config.bootstrap_k)
    if config.kind == "wl":
        colors = wl_roles(adjacency, config.wl_iterations)
        encoding = wl_embedding(colors, config.pe_dim)
    else:
        encoding = spectral_embedding(adjacency, config.pe_dim)
    return np.concatenate([features, encoding], axis=1)
