"""Component exploration: one-at-a-time line search and full random search,
plus the reports computed from their results.

Random search samples every trial configuration up front from a single
seeded generator, so the sampled multiset is independent of how many
workers later execute the trials. Failed trials are recorded and count
toward the budget. Results stream to JSONL (one trial per line) and reruns
skip trial ids already present in the output file.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .config import (ContrastiveConfig, DaeConfig, EncoderConfig, GslConfig,
                     ObjectiveConfig, PositionalConfig, ProcessorConfig,
                     ScorerConfig, SparsifierConfig)
from .data import Dataset
from .errors import ConfigurationError, NumericError, ResourceError
from .training import TrialResult, train

logger = logging.getLogger(__name__)

COMPONENTS = ("input", "scorer", "sparsifier", "processor", "encoder",
              "regularizers", "unsupervised", "adjacency_mode")


def _all_subsets(options) -> tuple:
    out = []
    for r in range(len(options) + 1):
        out.extend(itertools.combinations(options, r))
    return tuple(out)


@dataclass
class SearchSpace:
    """Option lists and ranges the sampler draws from. Defaults follow the
    desk-scale setup; epsilon-threshold and Bernoulli sparsifiers are
    excluded from random search by default."""

    positional_kinds: tuple = ("none", "wl", "spectral")
    scorer_kinds: tuple = ("fp", "att", "mlp")
    sparsifier_kinds: tuple = ("knn", "dknn", "random_dknn", "epsnn", "bernoulli")
    excluded_sparsifiers: tuple = ("epsnn", "bernoulli")
    processor_modes: tuple = ("none", "symmetrize", "activation",
                              "activation_symmetrize")
    encoder_kinds: tuple = ("gcn", "gin", "mlp")
    adjacency_modes: tuple = ("one", "per_layer")
    regularizer_subsets: tuple = _all_subsets(
        ("closeness", "smoothness", "sparse_connect", "log_barrier"))
    unsupervised_subsets: tuple = _all_subsets(("dae", "contrastive"))

    k_options: tuple = (15, 20, 25, 30)
    dilation_options: tuple = (2, 3)
    hidden_options: tuple = (16, 32, 64, 128)
    activation_options: tuple = ("relu", "tanh")
    head_options: tuple = (1, 2, 4)
    mlp_depth_options: tuple = (1, 2)
    mlp_width_options: tuple = (500, None)  # None keeps the input width
    fp_init_options: tuple = ("glorot", "cosine")
    wl_iteration_options: tuple = (2, 3)
    pe_dim_options: tuple = (8, 16)
    bootstrap_k: int = 15

    lr_range: tuple = (1e-3, 1e-1)          # sampled log-uniform
    weight_decay_range: tuple = (5e-4, 5e-2)  # sampled log-uniform
    dropout_range: tuple = (0.0, 0.75)
    reg_weight_range: tuple = (0.0, 20.0)
    epsilon_range: tuple = (0.1, 0.9)
    bernoulli_temperature_range: tuple = (0.1, 2.0)
    mask_rate_range: tuple = (0.01, 0.75)
    contrastive_temperature_range: tuple = (0.1, 1.0)
    contrastive_tau_range: tuple = (0.0, 0.2)
    dae_hidden_range: tuple = (512, 1024)

    max_epochs: int = 200
    patience: int = 30

    def active_sparsifiers(self) -> tuple:
        return tuple(k for k in self.sparsifier_kinds
                     if k not in self.excluded_sparsifiers)


def default_search_space(**overrides) -> SearchSpace:
    return replace(SearchSpace(), **overrides)


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _uniform(rng: np.random.Generator, bounds) -> float:
    return float(rng.uniform(bounds[0], bounds[1]))


def _choice(rng: np.random.Generator, options):
    return options[int(rng.integers(len(options)))]


def _sample_scorer(space: SearchSpace, kind: str, input_dim: int | None,
                   rng: np.random.Generator) -> ScorerConfig:
    cfg = ScorerConfig(kind=kind)
    if kind == "fp":
        cfg.init = _choice(rng, space.fp_init_options)
    elif kind == "att":
        cfg.heads = int(_choice(rng, space.head_options))
    else:
        cfg.mlp_depth = int(_choice(rng, space.mlp_depth_options))
        width = _choice(rng, space.mlp_width_options)
        if width is not None and input_dim == width:
            width = width // 2  # keep the wide option distinct from d
        cfg.mlp_width = width
        cfg.init = "identity" if width is None and bool(rng.integers(2)) \
            else "glorot"
    return cfg


def _sample_sparsifier(space: SearchSpace, kind: str,
                       rng: np.random.Generator) -> SparsifierConfig:
    return SparsifierConfig(
        kind=kind,
        k=int(_choice(rng, space.k_options)),
        dilation=int(_choice(rng, space.dilation_options)),
        epsilon=_uniform(rng, space.epsilon_range),
        temperature=_uniform(rng, space.bernoulli_temperature_range),
    )


def _sample_positional(space: SearchSpace, kind: str,
                       rng: np.random.Generator) -> PositionalConfig:
    return PositionalConfig(
        kind=kind,
        wl_iterations=int(_choice(rng, space.wl_iteration_options)),
        pe_dim=int(_choice(rng, space.pe_dim_options)),
        bootstrap_k=space.bootstrap_k,
    )


def _sample_objective(space: SearchSpace, regs: tuple, unsup: tuple,
                      rng: np.random.Generator) -> ObjectiveConfig:
    lambdas = {f"lambda_{name}": (_uniform(rng, space.reg_weight_range)
                                  if name in regs else 0.0)
               for name in ("closeness", "smoothness", "sparse_connect",
                            "log_barrier")}
    return ObjectiveConfig(
        unsupervised=tuple(unsup),
        dae=DaeConfig(mask_rate=_uniform(rng, space.mask_rate_range),
                      hidden=int(rng.integers(space.dae_hidden_range[0],
                                              space.dae_hidden_range[1] + 1))),
        contrastive=ContrastiveConfig(
            mask_rate=_uniform(rng, space.mask_rate_range),
            temperature=_uniform(rng, space.contrastive_temperature_range),
            tau=_uniform(rng, space.contrastive_tau_range)),
        **lambdas,
    )


def sample_config(space: SearchSpace, rng: np.random.Generator,
                  input_dim: int | None = None) -> GslConfig:
    """Draw one complete configuration. Discrete options are uniform over
    their lists; lr and weight decay are log-uniform across their two
    decades; everything else is uniform in range."""
    cfg = GslConfig(
        lr=_log_uniform(rng, *space.lr_range),
        weight_decay=_log_uniform(rng, *space.weight_decay_range),
        dropout=_uniform(rng, space.dropout_range),
        activation=_choice(rng, space.activation_options),
        adjacency_mode=_choice(rng, space.adjacency_modes),
        hidden_units=int(_choice(rng, space.hidden_options)),
        max_epochs=space.max_epochs,
        patience=space.patience,
        positional=_sample_positional(space, _choice(rng, space.positional_kinds),
                                      rng),
        scorer=_sample_scorer(space, _choice(rng, space.scorer_kinds),
                              input_dim, rng),
        sparsifier=_sample_sparsifier(space,
                                      _choice(rng, space.active_sparsifiers()),
                                      rng),
        processor=ProcessorConfig(mode=_choice(rng, space.processor_modes)),
        encoder=EncoderConfig(kind=_choice(rng, space.encoder_kinds)),
        objective=_sample_objective(space,
                                    _choice(rng, space.regularizer_subsets),
                                    _choice(rng, space.unsupervised_subsets),
                                    rng),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# results container and JSONL streaming

@dataclass
class ResultsTable:
    dataset: str
    trials: list = field(default_factory=list)

    def ok_trials(self) -> list:
        return [t for t in self.trials if t.status == "ok"]

    def best_by_val(self) -> TrialResult | None:
        ok = self.ok_trials()
        if not ok:
            return None
        return max(ok, key=lambda t: (t.best_val_accuracy, -t.trial_id))


def append_result_jsonl(result: TrialResult, path) -> None:
    with open(path, "a") as fh:
        fh.write(json.dumps(result.to_dict(), sort_keys=True) + "\n")


def load_results_jsonl(path, dataset: str | None = None) -> ResultsTable:
    trials = []
    name = dataset
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "trial_id" not in record:  # header or foreign line
                continue
            trial = TrialResult.from_dict(record)
            trials.append(trial)
            name = name or trial.dataset
    return ResultsTable(dataset=name or "dataset", trials=trials)


# ---------------------------------------------------------------------------
# the two exploration modes

def _run_trial(dataset: Dataset, config: GslConfig, trial_id: int) -> TrialResult:
    try:
        return train(dataset, config, trial_id=trial_id)
    except (ConfigurationError, NumericError, ResourceError) as err:
        logger.warning("trial %d failed: %s", trial_id, err)
        result = TrialResult(config=config, trial_id=trial_id,
                             dataset=dataset.name, status="failed",
                             error=str(err))
        return result


def sample_trial_configs(space: SearchSpace, n_trials: int, master_seed: int,
                         input_dim: int | None = None) -> list:
    """The exact trial configurations a random search will run: drawn from
    one generator seeded with the master seed, trial seeds derived as
    master_seed + index. Execution order cannot change this list."""
    sampler = np.random.default_rng(master_seed)
    configs = []
    for index in range(n_trials):
        cfg = sample_config(space, sampler, input_dim=input_dim)
        cfg.seed = master_seed + index
        configs.append(cfg)
    return configs


def random_search(dataset: Dataset, space: SearchSpace, n_trials: int,
                  concurrency: int = 1, master_seed: int = 0,
                  jsonl_path=None, completed_ids=()) -> ResultsTable:
    """Run n_trials independently sampled configurations.

    Sampling happens before any trial executes, from one generator seeded
    with the master seed; per-trial seeds are master_seed + trial index.
    Completed trial ids are skipped (resume support); failures are recorded
    as failed rows rather than raised.
    """
    if n_trials < 1:
        raise ConfigurationError("random_search: n_trials must be >= 1")
    configs = sample_trial_configs(space, n_trials, master_seed,
                                   input_dim=dataset.graph.num_features)

    completed = set(completed_ids)
    todo = [(i, cfg) for i, cfg in enumerate(configs) if i not in completed]
    table = ResultsTable(dataset=dataset.name)
    write_lock = threading.Lock()

    def execute(item):
        trial_id, cfg = item
        result = _run_trial(dataset, cfg, trial_id)
        if jsonl_path is not None:
            with write_lock:
                append_result_jsonl(result, jsonl_path)
        return result

    if concurrency <= 1:
        results = [execute(item) for item in todo]
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            results = list(pool.map(execute, todo))
    table.trials.extend(sorted(results, key=lambda t: t.trial_id))
    return table


def _resample_component(base: GslConfig, component: str, option,
                        space: SearchSpace, rng: np.random.Generator,
                        input_dim: int | None) -> GslConfig:
    """Clone the base, swap one component to `option`, and resample that
    component's hyperparameters plus lr and weight decay."""
    cfg = GslConfig.from_dict(base.to_dict())
    cfg.lr = _log_uniform(rng, *space.lr_range)
    cfg.weight_decay = _log_uniform(rng, *space.weight_decay_range)
    if component == "input":
        cfg.positional = _sample_positional(space, option, rng)
    elif component == "scorer":
        cfg.scorer = _sample_scorer(space, option, input_dim, rng)
    elif component == "sparsifier":
        cfg.sparsifier = _sample_sparsifier(space, option, rng)
    elif component == "processor":
        cfg.processor = ProcessorConfig(mode=option)
    elif component == "encoder":
        cfg.encoder = EncoderConfig(kind=option)
        cfg.hidden_units = int(_choice(rng, space.hidden_options))
    elif component == "regularizers":
        cfg.objective = _sample_objective(space, tuple(option),
                                          base.objective.unsupervised, rng)
    elif component == "unsupervised":
        cfg.objective = _sample_objective(
            space, base.objective.regularizer_set(), tuple(option), rng)
    elif component == "adjacency_mode":
        cfg.adjacency_mode = option
    else:
        raise ConfigurationError(
            f"line_search: unknown component {component!r} "
            f"(expected one of {COMPONENTS})")
    return cfg


def line_search(dataset: Dataset, base: GslConfig, component: str,
                options, trials_per_option: int = 3, master_seed: int = 0,
                space: SearchSpace | None = None) -> ResultsTable:
    """Vary one component at a time against a fixed base model; the table
    holds the best-validation trial per option."""
    space = space or SearchSpace()
    rng = np.random.default_rng(master_seed)
    input_dim = dataset.graph.num_features
    table = ResultsTable(dataset=dataset.name)
    trial_id = 0
    for option in options:
        candidates = []
        for _ in range(trials_per_option):
            cfg = _resample_component(base, component, option, space, rng,
                                      input_dim)
            cfg.max_epochs = base.max_epochs
            cfg.patience = base.patience
            cfg.seed = master_seed + trial_id
            candidates.append(_run_trial(dataset, cfg, trial_id))
            trial_id += 1
        ok = [t for t in candidates if t.status == "ok"]
        best = max(ok, key=lambda t: t.best_val_accuracy) if ok else candidates[-1]
        table.trials.append(best)
    return table


# ---------------------------------------------------------------------------
# reports

def _component_value(config: GslConfig, component: str) -> str:
    if component == "input":
        return config.positional.kind
    if component == "scorer":
        return config.scorer.kind
    if component == "sparsifier":
        return config.sparsifier.kind
    if component == "processor":
        return config.processor.mode
    if component == "encoder":
        return config.encoder.kind
    if component == "regularizers":
        return ",".join(sorted(config.objective.regularizer_set())) or "none"
    if component == "unsupervised":
        return ",".join(sorted(config.objective.unsupervised)) or "none"
    if component == "adjacency_mode":
        return config.adjacency_mode
    raise ConfigurationError(f"unknown component {component!r}")


def _quartiles(values) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    qs = np.percentile(arr, [0, 25, 50, 75, 100])
    return {"min": float(qs[0]), "q1": float(qs[1]), "median": float(qs[2]),
            "q3": float(qs[3]), "max": float(qs[4])}


def top_fraction_analysis(results: ResultsTable, fraction: float = 0.05) -> dict:
    """Distribution of component choices among the top trials by validation
    accuracy: ceil(fraction * N) trials, ties resolved by trial id."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError("fraction must lie in (0, 1]")
    n_select = math.ceil(fraction * len(results.trials))
    ranked = sorted(results.ok_trials(),
                    key=lambda t: (-t.best_val_accuracy, t.trial_id))
    selected = ranked[:n_select]
    report = {"selected": [t.trial_id for t in selected], "components": {}}
    for component in COMPONENTS:
        buckets: dict = {}
        for trial in selected:
            value = _component_value(trial.config, component)
            buckets.setdefault(value, []).append(trial.test_accuracy_at_best_val)
        report["components"][component] = {
            value: {"count": len(accs), **_quartiles(accs)}
            for value, accs in sorted(buckets.items())
        }
    return report


def best_architecture_aggregate(results_per_dataset: dict, top_n: int = 5) -> list:
    """Architectures present in every dataset's results, ranked by the mean
    over datasets of their per-dataset best test accuracy."""
    if not results_per_dataset:
        raise ConfigurationError("no results given")
    per_dataset_best: list[dict] = []
    for table in results_per_dataset.values():
        best: dict = {}
        for trial in table.ok_trials():
            key = trial.config.architecture_key()
            if key not in best or trial.test_accuracy_at_best_val > best[key]:
                best[key] = trial.test_accuracy_at_best_val
        per_dataset_best.append(best)
    shared = set(per_dataset_best[0])
    for best in per_dataset_best[1:]:
        shared &= set(best)
    rows = []
    for key in shared:
        scores = [best[key] for best in per_dataset_best]
        rows.append({
            "architecture": key,
            "mean_test_accuracy": float(np.mean(scores)),
            "per_dataset": {name: best[key] for name, best
                            in zip(results_per_dataset, per_dataset_best)},
        })
    rows.sort(key=lambda r: -r["mean_test_accuracy"])
    return rows[:top_n]


def component_best_average(results_per_dataset: dict) -> dict:
    """For each component value: the mean over datasets of the best test
    accuracy among that dataset's trials using the value. Values missing
    from any dataset are omitted with a warning."""
    if not results_per_dataset:
        raise ConfigurationError("no results given")
    report: dict = {}
    for component in COMPONENTS:
        per_value: dict = {}
        for table in results_per_dataset.values():
            best: dict = {}
            for trial in table.ok_trials():
                value = _component_value(trial.config, component)
                if value not in best or \
                        trial.test_accuracy_at_best_val > best[value]:
                    best[value] = trial.test_accuracy_at_best_val
            for value, acc in best.items():
                per_value.setdefault(value, []).append(acc)
        n_datasets = len(results_per_dataset)
        rows = {}
        for value, accs in sorted(per_value.items()):
            if len(accs) < n_datasets:
                logger.warning("component %s=%s missing from %d dataset(s); "
                               "omitted", component, value,
                               n_datasets - len(accs))
                continue
            rows[value] = float(np.mean(accs))
        report[component] = rows
    return report
