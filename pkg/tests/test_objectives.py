import numpy as np
import pytest

import ugsl.tensor as T
from ugsl import objectives as O
from ugsl.config import ContrastiveConfig, DaeConfig, ObjectiveConfig
from ugsl.errors import ConfigurationError

from oracles import finite_difference_gradient, relative_error

RNG = lambda s=0: np.random.default_rng(s)


# --- regularizers ---------------------------------------------------------------

def test_closeness_zero_at_target():
    a = np.array([[0.1, 0.2], [0.3, 0.4]])
    assert O.reg_closeness(T.constant(a), a).item() == 0.0


def test_closeness_ones_against_zero_target():
    loss = O.reg_closeness(T.constant(np.ones((2, 2))), np.zeros((2, 2)))
    assert loss.item() == pytest.approx(4.0)


def test_closeness_scales_quadratically():
    rng = RNG(1)
    a = rng.normal(size=(3, 3))
    base = O.reg_closeness(T.constant(a), np.zeros((3, 3))).item()
    doubled = O.reg_closeness(T.constant(2 * a), np.zeros((3, 3))).item()
    assert np.sqrt(doubled) == pytest.approx(2 * np.sqrt(base))


def test_closeness_shape_mismatch():
    with pytest.raises(ConfigurationError):
        O.reg_closeness(T.constant(np.ones((2, 2))), np.ones((3, 3)))


def test_smoothness_identical_features():
    adj = T.constant(np.ones((3, 3)))
    assert O.reg_smoothness(adj, np.ones((3, 2))).item() == pytest.approx(0.0)


def test_smoothness_zero_adjacency():
    x = RNG(2).normal(size=(3, 2))
    assert O.reg_smoothness(T.constant(np.zeros((3, 3))), x).item() == 0.0


def test_smoothness_hand_value():
    adj = np.array([[0.0, 1.0], [1.0, 0.0]])
    x = np.array([[0.0], [1.0]])
    assert O.reg_smoothness(T.constant(adj), x).item() == pytest.approx(0.5)


def test_sparse_connect_values():
    assert O.reg_sparse_connect(T.constant(np.eye(3))).item() == pytest.approx(3.0)
    assert O.reg_sparse_connect(T.constant(np.zeros((2, 2)))).item() == 0.0
    assert O.reg_sparse_connect(T.constant(np.ones((2, 2)))).item() == pytest.approx(4.0)


def test_log_barrier_ones():
    loss = O.reg_log_barrier(T.constant(np.ones((2, 2))))
    assert loss.item() == pytest.approx(-2.0 * np.log(2.0), abs=1e-12)


def test_log_barrier_zero_row_clamped():
    adj = np.array([[0.0, 0.0], [1.0, 1.0]])
    loss = O.reg_log_barrier(T.constant(adj)).item()
    assert loss == pytest.approx(-np.log(1e-12) - np.log(2.0))
    assert loss > 25.0  # the clamp contributes about +27.6


def test_log_barrier_unit_row_sums():
    adj = np.array([[0.5, 0.5], [0.25, 0.75]])
    assert O.reg_log_barrier(T.constant(adj)).item() == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_regularizer_lower_bounds(seed):
    rng = RNG(seed)
    a = np.abs(rng.normal(size=(5, 5)))
    x = rng.normal(size=(5, 3))
    assert O.reg_closeness(T.constant(a), rng.normal(size=(5, 5))).item() >= 0.0
    assert O.reg_smoothness(T.constant(a), x).item() >= 0.0
    assert O.reg_sparse_connect(T.constant(a)).item() >= 0.0
    max_row = a.sum(axis=1).max()
    assert O.reg_log_barrier(T.constant(a)).item() >= -5 * np.log(max_row) - 1e-9


# --- denoising loss ---------------------------------------------------------------

def test_masked_bce_perfect_reconstruction():
    targets = np.array([[1.0, 0.0], [0.0, 1.0]])
    logits = T.constant(np.where(targets > 0, 50.0, -50.0))
    mask = np.ones((2, 2), dtype=bool)
    assert O.masked_binary_cross_entropy(logits, targets, mask).item() == \
        pytest.approx(0.0, abs=1e-9)


def test_masked_mse_monte_carlo_noise_floor():
    # predictor == corrupted input: the masked error is exactly the noise
    rng = RNG(3)
    sigma = 0.1
    collected = []
    while sum(m.sum() for m in collected) < 10_000:
        mask = rng.random((50, 20)) < 0.3
        x = rng.normal(size=(50, 20))
        noise = np.zeros_like(x)
        noise[mask] = rng.normal(0.0, sigma, size=int(mask.sum()))
        loss = O.masked_mse(T.constant(x + noise), x, mask).item()
        collected.append(mask)
        assert loss == pytest.approx((noise[mask] ** 2).mean())
    pooled = np.concatenate([rng.normal(0.0, sigma, size=10_000)])
    assert (pooled ** 2).mean() == pytest.approx(sigma ** 2, rel=0.1)


def test_dae_mask_rate_sampling_contract():
    rng = RNG(4)
    x = rng.normal(size=(40, 25))
    rate = 0.2
    counts = []
    for seed in range(30):
        mask = O._draw_entry_mask(x.shape, rate, RNG(seed))
        counts.append(mask.sum())
    mean = np.mean(counts)
    expected = rate * x.size
    sd = np.sqrt(x.size * rate * (1 - rate))
    assert abs(mean - expected) < 4 * sd / np.sqrt(len(counts))


def test_dae_loss_runs_both_feature_kinds():
    rng = RNG(5)
    x = (rng.random((8, 6)) < 0.4).astype(float)
    adj = T.constant(np.abs(rng.normal(size=(8, 8))))
    dae = O.init_dae(DaeConfig(mask_rate=0.3, hidden=12), 6, RNG(1))
    binary = O.dae_loss(x, adj, dae, RNG(2), "binary", "relu")
    assert binary.item() > 0.0
    dae2 = O.init_dae(DaeConfig(mask_rate=0.3, hidden=12), 6, RNG(1))
    cont = O.dae_loss(rng.normal(size=(8, 6)), adj, dae2, RNG(2),
                      "continuous", "relu")
    assert np.isfinite(cont.item())


# --- contrastive loss ----------------------------------------------------------------

def test_nt_xent_identical_embeddings_is_log_n():
    n = 5
    emb = np.tile([[1.0, 2.0, 3.0]], (n, 1))
    loss = O.nt_xent(T.constant(emb), T.constant(emb), temperature=0.7)
    assert loss.item() == pytest.approx(np.log(n), abs=1e-9)


def test_nt_xent_two_node_closed_form():
    x = np.array([[1.0, 0.0], [0.0, 1.0]])
    loss = O.nt_xent(T.constant(x), T.constant(x), temperature=1.0)
    assert loss.item() == pytest.approx(np.log(1.0 + np.exp(-1.0)), abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_nt_xent_nonnegative(seed):
    rng = RNG(seed)
    a = rng.normal(size=(6, 4))
    b = rng.normal(size=(6, 4))
    assert O.nt_xent(T.constant(a), T.constant(b), 0.5).item() >= -1e-12


def test_anchor_initializes_to_identity():
    anchor = O.AnchorState.initial(3, tau=0.1)
    np.testing.assert_array_equal(anchor.adjacency, np.eye(3))


def test_anchor_update_contracts_toward_learned():
    rng = RNG(6)
    learned = rng.normal(size=(4, 4))
    anchor = O.AnchorState.initial(4, tau=0.3)
    prev = np.linalg.norm(anchor.adjacency - learned)
    for _ in range(5):
        anchor.update(learned)
        dist = np.linalg.norm(anchor.adjacency - learned)
        assert dist < prev
        prev = dist


def test_contrastive_loss_trains_structure():
    rng = RNG(7)
    x = rng.normal(size=(6, 4))
    adj = T.parameter(np.abs(rng.normal(size=(6, 6))))
    state = O.init_contrastive(ContrastiveConfig(mask_rate=0.2), 6, 4, 8, RNG(1))
    loss = O.contrastive_loss(x, adj, state, RNG(2), "relu", training=True)
    T.backward(loss)
    assert adj.grad is not None and np.abs(adj.grad).sum() > 0


# --- total objective -----------------------------------------------------------------

def _setup_total(unsupervised=(), **lambdas):
    rng = RNG(8)
    n, d, c = 6, 4, 3
    x = rng.normal(size=(n, d))
    labels = rng.integers(0, c, size=n)
    mask = np.ones(n, dtype=bool)
    logits_vals = rng.normal(size=(n, c))
    adj_vals = np.abs(rng.normal(size=(n, n)))
    a0 = np.abs(rng.normal(size=(n, n)))
    cfg = ObjectiveConfig(unsupervised=tuple(unsupervised), **lambdas)
    state = O.init_objective_state(cfg, n, d, 8, RNG(2))
    return x, labels, mask, logits_vals, adj_vals, a0, cfg, state


def test_total_defaults_to_supervised_ce():
    x, labels, mask, logits, adj, a0, cfg, state = _setup_total()
    total = O.total_objective(T.constant(logits), labels, mask,
                              T.constant(adj), a0, x, cfg, state, RNG(3),
                              "continuous", "relu")
    ce = T.softmax_cross_entropy(T.constant(logits), labels, mask)
    assert total.item() == pytest.approx(ce.item())


def test_total_sparse_lambda_adds_scaled_frobenius():
    x, labels, mask, logits, adj, a0, _, _ = _setup_total()
    lam = 2.5
    cfg = ObjectiveConfig(lambda_sparse_connect=lam)
    state = O.ObjectiveState()
    total = O.total_objective(T.constant(logits), labels, mask,
                              T.constant(adj), a0, x, cfg, state, RNG(3),
                              "continuous", "relu")
    ce = T.softmax_cross_entropy(T.constant(logits), labels, mask).item()
    assert total.item() == pytest.approx(ce + lam * (adj ** 2).sum())


def test_total_equals_sum_of_parts():
    x, labels, mask, logits, adj, a0, cfg, state = _setup_total(
        lambda_closeness=1.5, lambda_smoothness=0.5,
        lambda_sparse_connect=2.0, lambda_log_barrier=0.25)
    total = O.total_objective(T.constant(logits), labels, mask,
                              T.constant(adj), a0, x, cfg, state, RNG(3),
                              "continuous", "relu")
    parts = (
        T.softmax_cross_entropy(T.constant(logits), labels, mask).item()
        + 1.5 * O.reg_closeness(T.constant(adj), a0).item()
        + 0.5 * O.reg_smoothness(T.constant(adj), x).item()
        + 2.0 * O.reg_sparse_connect(T.constant(adj)).item()
        + 0.25 * O.reg_log_barrier(T.constant(adj)).item()
    )
    assert total.item() == pytest.approx(parts)


def test_total_objective_gradients_match_finite_differences():
    """End-to-end differentiability of every term on a 6-node instance."""
    rng = RNG(9)
    n, d, c = 6, 4, 3
    x = rng.normal(size=(n, d))
    labels = rng.integers(0, c, size=n)
    mask = np.ones(n, dtype=bool)
    logits_param = T.parameter(rng.normal(size=(n, c)))
    adj_param = T.parameter(np.abs(rng.normal(size=(n, n))) + 0.1)
    a0 = np.abs(rng.normal(size=(n, n)))
    cfg = ObjectiveConfig(lambda_closeness=1.0, lambda_smoothness=1.0,
                          lambda_sparse_connect=1.0, lambda_log_barrier=0.5,
                          unsupervised=("dae", "contrastive"),
                          dae=DaeConfig(mask_rate=0.4, hidden=6),
                          contrastive=ContrastiveConfig(mask_rate=0.2))
    state = O.init_objective_state(cfg, n, d, 6, RNG(4))

    def loss_fn():
        # fresh rng per evaluation keeps the stochastic corruption fixed
        return O.total_objective(T.Tensor(logits_param.values), labels, mask,
                                 T.Tensor(adj_param.values), a0, x, cfg,
                                 state, RNG(5), "continuous", "relu")

    live = O.total_objective(logits_param, labels, mask, adj_param, a0, x,
                             cfg, state, RNG(5), "continuous", "relu")
    T.zero_grads([logits_param, adj_param])
    T.backward(live)
    for p in (logits_param, adj_param):
        fd = finite_difference_gradient(lambda: loss_fn().item(), p.values)
        assert relative_error(p.grad, fd) < 1e-4
