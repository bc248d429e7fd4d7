"""Trial orchestration: sweeps, ablations, reports, and embedding export.

A trial is one hyperparameter configuration evaluated on every split;
the sweep samples configurations (seeded random search by default, or an
exhaustive grid), runs them, and selects the winner by mean validation
accuracy, reporting that winner's test accuracy as "mean (std)".

Trials are independent: the only shared state is the read-only dataset,
the splits, and an insert-once factor cache. Serial and multi-process
execution produce identical reports because every random stream is derived
from (sweep seed, trial index) and factor seeds are derived from the cache
key itself.
"""

from __future__ import annotations

import csv
import json
import threading
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .classifier import MlpConfig, TrainedModel, train, _forward_raw
from .data import GraphDataset, Split, build_adjacency
from .models import (
    EmbeddingMatrix,
    HlpConfig,
    column_standardize,
    feature_embedding,
    graph_embedding,
    hlp_aggregate,
    hlp_concat,
    write_embeddings_tsv,
)
from .sparse import SparseMatrix
from .tsvd import TsvdParams, TsvdResult, truncated_svd

__all__ = [
    "MODEL_KINDS",
    "SweepSpec",
    "TrialConfig",
    "TrialResult",
    "Report",
    "TsvdCache",
    "sample_configs",
    "run_trial",
    "sweep",
    "ablation_fixed_vs_variable",
    "ablation_normalization",
    "report_render",
    "write_report_csv",
    "parse_report_csv",
    "canonical_report_json",
    "export_embeddings",
]

MODEL_KINDS = ("lr", "mlp", "hlp_agg", "hlp_concat")

LEARNING_RATES = (0.001, 0.003, 0.005, 0.008, 0.01)
DROPOUTS = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)
WEIGHT_DECAYS = (1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 5e-2, 1e-1)
HIDDEN_DIMS = (16, 32, 64)
RANK_LIMIT = 2048

CSV_COLUMNS = (
    "trial_id",
    "model",
    "k1",
    "k2",
    "graph_type",
    "norm",
    "lr",
    "dropout",
    "weight_decay",
    "hidden_dim",
    "seed",
    "mean_val",
    "mean_test",
    "std_test",
    "diverged",
    "seconds",
)


@dataclass(frozen=True)
class SweepSpec:
    """Search space and budget for one sweep."""

    model_kind: str
    learning_rates: tuple = LEARNING_RATES
    dropouts: tuple = DROPOUTS
    weight_decays: tuple = WEIGHT_DECAYS
    hidden_dims: tuple = HIDDEN_DIMS
    k1_range: tuple[int, int] | None = None
    k2_range: tuple[int, int] | None = None
    graph_types: tuple = ("directed", "undirected")
    norms: tuple = ("none", "row", "sym")
    graph_scalings: tuple = ("none", "sigma")
    feature_scalings: tuple = ("none", "sigma", "sigma_squared")
    budget: int = 200
    strategy: str = "random"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"model_kind must be one of {MODEL_KINDS}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.strategy not in ("random", "grid"):
            raise ValueError("strategy must be random or grid")
        for grid in (
            self.learning_rates,
            self.dropouts,
            self.weight_decays,
            self.hidden_dims,
            self.graph_types,
            self.norms,
        ):
            if len(grid) == 0:
                raise ValueError("empty grid")


@dataclass(frozen=True)
class TrialConfig:
    """One point of the search space, fully determining a trial."""

    trial_id: int
    model: str
    k1: int | None
    k2: int | None
    graph_type: str | None
    norm: str | None
    graph_scaling: str | None
    feature_scaling: str | None
    learning_rate: float
    dropout: float
    weight_decay: float
    hidden_dim: int | None
    seed: int


@dataclass(frozen=True)
class TrialResult:
    config: TrialConfig
    val_accs: tuple[float, ...]
    test_accs: tuple[float, ...]
    split_diverged: tuple[bool, ...]
    seconds: float

    @property
    def mean_val(self) -> float:
        return float(np.mean(self.val_accs))

    @property
    def mean_test(self) -> float:
        return float(np.mean(self.test_accs))

    @property
    def std_test(self) -> float:
        return float(np.std(self.test_accs))

    @property
    def diverged(self) -> bool:
        return any(self.split_diverged)

    @property
    def completed(self) -> bool:
        return not all(self.split_diverged)


@dataclass(frozen=True)
class Report:
    """Sweep outcome: the winner by mean validation accuracy plus all trials."""

    dataset: str
    model: str
    best: TrialResult
    trials: tuple[TrialResult, ...]

    @property
    def mean_test(self) -> float:
        return self.best.mean_test

    @property
    def std_test(self) -> float:
        return self.best.std_test


def _bucket_rank(k: int, cap: int) -> int:
    """Smallest power of two >= k, clamped to the matrix rank cap."""
    if k >= cap:
        return cap
    return min(1 << (k - 1).bit_length(), cap)


class TsvdCache:
    """Insert-once factor cache shared by every trial of a sweep.

    Requested ranks are rounded up to a power of two and served as leading
    slices of that bucket's factorization, so a sweep drawing hundreds of
    distinct ranks pays for at most ~11 decompositions per matrix. The
    decomposition seed is a hash of the bucket key, so a factor is
    bit-identical no matter which trial requests it first or whether a
    fresh cache recomputes it. Lookups are thread-safe.
    """

    def __init__(self, ds: GraphDataset):
        self.ds = ds
        self._lock = threading.Lock()
        self._factors: dict[tuple, TsvdResult] = {}
        self._adjacency: dict[tuple, SparseMatrix] = {}
        self._dense_x: np.ndarray | None = None

    def adjacency(self, graph_type: str, norm: str) -> SparseMatrix:
        key = (graph_type, norm)
        with self._lock:
            hit = self._adjacency.get(key)
        if hit is not None:
            return hit
        a = build_adjacency(self.ds, graph_type, norm)
        with self._lock:
            self._adjacency.setdefault(key, a)
            return self._adjacency[key]

    def graph_factors(self, graph_type: str, norm: str, k: int) -> TsvdResult:
        return self._get(("graph", graph_type, norm, k), self.ds.n)

    def feature_factors(self, k: int) -> TsvdResult:
        return self._get(("feature", "", "", k), min(self.ds.n, self.ds.features.n_cols))

    def standardized_features(self) -> np.ndarray:
        with self._lock:
            if self._dense_x is None:
                raw = EmbeddingMatrix(
                    self.ds.features.to_dense(), self.ds.features.n_cols, "feature"
                )
                self._dense_x = column_standardize(raw).values
            return self._dense_x

    def _get(self, key: tuple, cap: int) -> TsvdResult:
        kind, graph_type, norm, k = key
        if not 1 <= k <= cap:
            raise ValueError(f"rank {k} outside [1, {cap}] for this matrix")
        bucket = _bucket_rank(k, cap)
        bucket_key = (kind, graph_type, norm, bucket)
        with self._lock:
            hit = self._factors.get(bucket_key)
        if hit is None:
            result = compute_factors(self.ds, self, bucket_key)
            with self._lock:
                hit = self._factors.setdefault(bucket_key, result)
        return hit.truncate(k)


def factor_seed(key: tuple) -> int:
    """Decomposition seed derived from the cache key alone."""
    text = "|".join(str(part) for part in key)
    return zlib.crc32(text.encode("utf-8")) & 0x7FFFFFFF


def compute_factors(ds: GraphDataset, cache: "TsvdCache", key: tuple) -> TsvdResult:
    kind, graph_type, norm, k = key
    seed = factor_seed(key)
    if kind == "graph":
        matrix = cache.adjacency(graph_type, norm)
    else:
        matrix = ds.features
    return truncated_svd(matrix, TsvdParams(k=k, seed=seed))


def _log_uniform_int(rng: np.random.Generator, lo: int, hi: int) -> int:
    if lo >= hi:
        return lo
    value = int(np.floor(np.exp(rng.uniform(np.log(lo), np.log(hi + 1)))))
    return int(np.clip(value, lo, hi))


def _rank_caps(ds: GraphDataset) -> tuple[int, int]:
    k1_cap = min(ds.n, RANK_LIMIT)
    k2_cap = min(ds.n, ds.features.n_cols, RANK_LIMIT)
    return k1_cap, k2_cap


def sample_configs(spec: SweepSpec, ds: GraphDataset) -> list[TrialConfig]:
    """Materialize the trial list for a sweep.

    Random strategy: per trial, draw every field from its grid (uniform)
    or rank range (log-uniform integers); the draw order is fixed so two
    specs differing only in grid contents still align their streams.
    Grid strategy: exhaustive product, truncated at the budget.
    """
    k1_cap, k2_cap = _rank_caps(ds)
    k1_lo, k1_hi = spec.k1_range if spec.k1_range else (1, k1_cap)
    k2_lo, k2_hi = spec.k2_range if spec.k2_range else (1, k2_cap)
    k1_hi = min(k1_hi, k1_cap)
    k2_hi = min(k2_hi, k2_cap)
    if not (1 <= k1_lo <= k1_hi and 1 <= k2_lo <= k2_hi):
        raise ValueError("invalid rank range")

    uses_graph = spec.model_kind in ("hlp_agg", "hlp_concat")
    uses_hidden = spec.model_kind != "lr"

    configs = []
    if spec.strategy == "random":
        for i in range(spec.budget):
            rng = np.random.default_rng(np.random.SeedSequence([spec.seed, i]))
            lr = float(rng.choice(spec.learning_rates))
            dropout = float(rng.choice(spec.dropouts))
            wd = float(rng.choice(spec.weight_decays))
            hidden = int(rng.choice(spec.hidden_dims))
            graph_type = str(rng.choice(spec.graph_types))
            norm = str(rng.choice(spec.norms))
            gscale = str(rng.choice(spec.graph_scalings))
            fscale = str(rng.choice(spec.feature_scalings))
            k1 = _log_uniform_int(rng, k1_lo, k1_hi)
            k2 = _log_uniform_int(rng, k2_lo, k2_hi)
            configs.append(
                TrialConfig(
                    trial_id=i,
                    model=spec.model_kind,
                    k1=k1 if uses_graph else None,
                    k2=k2 if uses_graph else None,
                    graph_type=graph_type if uses_graph else None,
                    norm=norm if uses_graph else None,
                    graph_scaling=gscale if uses_graph else None,
                    feature_scaling=fscale if uses_graph else None,
                    learning_rate=lr,
                    dropout=dropout,
                    weight_decay=wd,
                    hidden_dim=hidden if uses_hidden else None,
                    seed=_trial_seed(spec.seed, i),
                )
            )
        return configs

    # exhaustive grid, rank ranges enumerated directly
    import itertools

    k1_values = range(k1_lo, k1_hi + 1) if uses_graph else (None,)
    k2_values = range(k2_lo, k2_hi + 1) if uses_graph else (None,)
    graph_types = spec.graph_types if uses_graph else (None,)
    norms = spec.norms if uses_graph else (None,)
    gscales = spec.graph_scalings if uses_graph else (None,)
    fscales = spec.feature_scalings if uses_graph else (None,)
    hiddens = spec.hidden_dims if uses_hidden else (None,)
    product = itertools.product(
        spec.learning_rates,
        spec.dropouts,
        spec.weight_decays,
        hiddens,
        graph_types,
        norms,
        gscales,
        fscales,
        k1_values,
        k2_values,
    )
    for i, (lr, dropout, wd, hidden, graph_type, norm, gscale, fscale, k1, k2) in enumerate(
        product
    ):
        if i >= spec.budget:
            break
        configs.append(
            TrialConfig(
                trial_id=i,
                model=spec.model_kind,
                k1=k1,
                k2=k2,
                graph_type=graph_type,
                norm=norm,
                graph_scaling=gscale,
                feature_scaling=fscale,
                learning_rate=float(lr),
                dropout=float(dropout),
                weight_decay=float(wd),
                hidden_dim=int(hidden) if hidden else None,
                seed=_trial_seed(spec.seed, i),
            )
        )
    return configs


def _trial_seed(sweep_seed: int, trial_id: int) -> int:
    return int(np.random.SeedSequence([sweep_seed, trial_id]).generate_state(1)[0])


def build_features(
    ds: GraphDataset,
    config: TrialConfig,
    cache: TsvdCache | None = None,
    standardize: bool = True,
) -> np.ndarray:
    """Classifier input matrix for a trial, standardized by default."""
    cache = cache if cache is not None else TsvdCache(ds)
    if config.model in ("lr", "mlp"):
        if standardize:
            return cache.standardized_features()
        return ds.features.to_dense()

    hlp = HlpConfig(
        k1=config.k1,
        k2=config.k2,
        graph_type=config.graph_type,
        norm=config.norm,
        graph_scaling=config.graph_scaling,
        feature_scaling=config.feature_scaling,
    )
    a = cache.adjacency(config.graph_type, config.norm)
    gf = cache.graph_factors(config.graph_type, config.norm, config.k1)
    ff = cache.feature_factors(config.k2)
    if config.model == "hlp_agg":
        emb = hlp_aggregate(
            a, ds.features, hlp, seed=0, graph_factors=gf, feature_factors=ff
        )
    else:
        emb = hlp_concat(
            graph_embedding(a, hlp, seed=0, factors=gf),
            feature_embedding(ds.features, hlp, seed=0, factors=ff),
        )
    if standardize:
        emb = column_standardize(emb)
    return emb.values


def _mlp_config(config: TrialConfig, split_index: int) -> MlpConfig:
    seed = int(
        np.random.SeedSequence([config.seed, split_index]).generate_state(1)[0]
    )
    return MlpConfig(
        hidden_dim=config.hidden_dim,
        dropout=config.dropout,
        weight_decay=config.weight_decay,
        learning_rate=config.learning_rate,
        seed=seed,
    )


def run_trial(
    ds: GraphDataset,
    splits: list[Split],
    model_kind: str,
    config: TrialConfig,
    cache: TsvdCache | None = None,
    standardize: bool = True,
) -> TrialResult:
    """Evaluate one configuration on every split.

    Embedding factors are computed once and shared across splits. Diverged
    splits score 0 and are flagged; they never raise.
    """
    if not splits:
        raise ValueError("splits must be nonempty")
    if model_kind != config.model:
        raise ValueError("model_kind does not match config.model")
    started = time.perf_counter()
    with threadpool_limits(limits=1):
        # float32 halves training cost; factor computation stays float64
        x = build_features(ds, config, cache, standardize).astype(np.float32)
        val_accs, test_accs, flags = [], [], []
        for i, split in enumerate(splits):
            model, metrics = train(x, ds.labels, split, _mlp_config(config, i))
            val_accs.append(metrics["val"].accuracy)
            test_accs.append(metrics["test"].accuracy)
            flags.append(model.diverged)
    return TrialResult(
        config=config,
        val_accs=tuple(val_accs),
        test_accs=tuple(test_accs),
        split_diverged=tuple(flags),
        seconds=time.perf_counter() - started,
    )


def _worker(args) -> TrialResult:
    ds, splits, model_kind, config, standardize = args
    return run_trial(ds, splits, model_kind, config, None, standardize)


def sweep(
    ds: GraphDataset,
    splits: list[Split],
    spec: SweepSpec,
    workers: int = 1,
    standardize: bool = True,
    log=None,
) -> Report:
    """Run the full search and pick the winner by mean validation accuracy.

    Ties go to the lower trial index. With workers > 1 trials run in a
    process pool; results are identical to the serial order because every
    trial is self-contained and deterministic.
    """
    return _sweep_configs(
        ds, splits, spec, sample_configs(spec, ds), workers, standardize, log
    )


def ablation_fixed_vs_variable(
    ds: GraphDataset,
    splits: list[Split],
    spec: SweepSpec,
    workers: int = 1,
    log=None,
) -> tuple[Report, Report]:
    """Shared-rank (k1 = k2) arm versus independent-rank arm, same budget.

    The shared-rank arm reuses the independently sampled configurations
    with k2 overridden to k1, so degenerate rank ranges make the two arms
    coincide exactly.
    """
    if spec.model_kind != "hlp_concat":
        raise ValueError("rank ablation is defined for the hlp_concat model")
    _, k2_cap = _rank_caps(ds)
    fixed_configs = [
        replace(c, k2=min(c.k1, k2_cap)) for c in sample_configs(spec, ds)
    ]
    fixed = _sweep_configs(ds, splits, spec, fixed_configs, workers, True, log)
    variable = sweep(ds, splits, spec, workers, log=log)
    return fixed, variable


def ablation_normalization(
    ds: GraphDataset,
    splits: list[Split],
    spec: SweepSpec,
    workers: int = 1,
    log=None,
) -> tuple[Report, Report]:
    """Undirected+sym-only arm versus free graph_type x norm arm."""
    if spec.model_kind != "hlp_agg":
        raise ValueError("normalization ablation is defined for the hlp_agg model")
    restricted = replace(spec, graph_types=("undirected",), norms=("sym",))
    arm_a = sweep(ds, splits, restricted, workers, log=log)
    arm_b = sweep(ds, splits, spec, workers, log=log)
    return arm_a, arm_b


def _sweep_configs(
    ds: GraphDataset,
    splits: list[Split],
    spec: SweepSpec,
    configs: list[TrialConfig],
    workers: int = 1,
    standardize: bool = True,
    log=None,
) -> Report:
    results: list[TrialResult] = []
    if workers <= 1:
        cache = TsvdCache(ds)
        for config in configs:
            result = run_trial(ds, splits, spec.model_kind, config, cache, standardize)
            results.append(result)
            if log is not None:
                log(result)
    else:
        jobs = [(ds, splits, spec.model_kind, c, standardize) for c in configs]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(_worker, jobs):
                results.append(result)
                if log is not None:
                    log(result)
    completed = [r for r in results if r.completed]
    if not completed:
        raise RuntimeError("zero completed trials")
    best = max(completed, key=lambda r: (r.mean_val, -r.config.trial_id))
    return Report(ds.name, spec.model_kind, best, tuple(results))


def report_render(report: Report) -> str:
    """Human-readable winner line: "<dataset> <model>: <mean> (<std>)" in percent."""
    cfg = report.best.config
    parts = [
        f"{report.dataset} {report.model}: "
        f"{100 * report.mean_test:.2f} ({100 * report.std_test:.2f})",
        f"  best trial {cfg.trial_id}: lr={cfg.learning_rate} dropout={cfg.dropout} "
        f"weight_decay={cfg.weight_decay}",
    ]
    if cfg.hidden_dim is not None:
        parts.append(f"  hidden_dim={cfg.hidden_dim}")
    if cfg.k1 is not None:
        parts.append(
            f"  k1={cfg.k1} k2={cfg.k2} graph={cfg.graph_type}/{cfg.norm} "
            f"scalings={cfg.graph_scaling}/{cfg.feature_scaling}"
        )
    parts.append(f"  mean_val={100 * report.best.mean_val:.2f}")
    return "\n".join(parts)


def _csv_row(result: TrialResult) -> dict:
    cfg = result.config
    return {
        "trial_id": cfg.trial_id,
        "model": cfg.model,
        "k1": "" if cfg.k1 is None else cfg.k1,
        "k2": "" if cfg.k2 is None else cfg.k2,
        "graph_type": cfg.graph_type or "",
        "norm": cfg.norm or "",
        "lr": f"{cfg.learning_rate:.17g}",
        "dropout": f"{cfg.dropout:.17g}",
        "weight_decay": f"{cfg.weight_decay:.17g}",
        "hidden_dim": "" if cfg.hidden_dim is None else cfg.hidden_dim,
        "seed": cfg.seed,
        "mean_val": f"{result.mean_val:.17g}",
        "mean_test": f"{result.mean_test:.17g}",
        "std_test": f"{result.std_test:.17g}",
        "diverged": int(result.diverged),
        "seconds": f"{result.seconds:.3f}",
    }


def write_report_csv(report: Report, path: str) -> None:
    """One row per trial, columns fixed by CSV_COLUMNS."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS))
        writer.writeheader()
        for result in report.trials:
            writer.writerow(_csv_row(result))


def parse_report_csv(path: str) -> list[dict]:
    """Rows back as dicts with numeric fields parsed."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        row["trial_id"] = int(row["trial_id"])
        row["seed"] = int(row["seed"])
        for key in ("lr", "dropout", "weight_decay", "mean_val", "mean_test", "std_test", "seconds"):
            row[key] = float(row[key])
        for key in ("k1", "k2", "hidden_dim"):
            row[key] = int(row[key]) if row[key] else None
        row["diverged"] = bool(int(row["diverged"]))
    return rows


def canonical_report_json(report: Report) -> str:
    """Timing-free serialization; byte-identical across reruns of a sweep."""
    payload = {
        "dataset": report.dataset,
        "model": report.model,
        "best_trial_id": report.best.config.trial_id,
        "mean_test": repr(report.mean_test),
        "std_test": repr(report.std_test),
        "trials": [
            {
                "config": {
                    k: v
                    for k, v in vars(trial.config).items()
                },
                "val_accs": [repr(a) for a in trial.val_accs],
                "test_accs": [repr(a) for a in trial.test_accs],
                "split_diverged": list(trial.split_diverged),
            }
            for trial in report.trials
        ],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def export_embeddings(
    ds: GraphDataset,
    splits: list[Split],
    config: TrialConfig,
    split_index: int,
    out_path: str,
    standardize: bool = True,
) -> TrainedModel:
    """Train one config on one split and write per-node classifier inputs.

    The exported representation is what feeds the final softmax layer:
    hidden activations for MLP heads, the (standardized) input features for
    hidden-less heads. A label column is appended for plotting tools.
    """
    if not 0 <= split_index < len(splits):
        raise ValueError(f"split index {split_index} out of range")
    with threadpool_limits(limits=1):
        x = build_features(ds, config, None, standardize)
        model, _ = train(x, ds.labels, splits[split_index], _mlp_config(config, split_index))
        _, rep = _forward_raw(list(model.params), x, want_hidden=True)
    emb = EmbeddingMatrix(np.ascontiguousarray(rep), rep.shape[1], "concatenated")
    write_embeddings_tsv(out_path, emb, labels=ds.labels)
    return model
