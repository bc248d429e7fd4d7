"""Command-line interface.

Subcommands:

    stats              dataset statistics (counts + homophily)
    splits             generate and store train/val/test splits
    train              train one configuration on one split
    sweep              random/grid hyperparameter search, CSV report
    ablate             paired sweeps: shared-vs-free ranks, or normalization
    export-embeddings  train once and dump per-node classifier inputs
    make-benchmarks    regenerate the bundled synthetic benchmark datasets

Config files are flat ``key=value`` lines ('#' comments allowed); keys match
the dataclass field names (k1, k2, graph_type, norm, graph_scaling,
feature_scaling, hidden_dim, dropout, weight_decay, learning_rate,
lr_decay_factor, lr_decay_every, max_epochs, patience, seed).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import datagen
from .classifier import MlpConfig, train as train_model
from .data import (
    generate_splits,
    load_dataset,
    load_splits,
    save_splits,
    stats,
)
from .harness import (
    MODEL_KINDS,
    SweepSpec,
    TrialConfig,
    ablation_fixed_vs_variable,
    ablation_normalization,
    build_features,
    export_embeddings,
    report_render,
    sweep,
    write_report_csv,
)

_INT_KEYS = {
    "k1",
    "k2",
    "hidden_dim",
    "lr_decay_every",
    "max_epochs",
    "patience",
    "seed",
}
_FLOAT_KEYS = {"dropout", "weight_decay", "learning_rate", "lr_decay_factor"}
_STR_KEYS = {
    "graph_type",
    "norm",
    "graph_scaling",
    "feature_scaling",
    "directed_factors",
    "dropout_on",
}


def parse_config_file(path: str) -> dict:
    """Flat key=value file to a typed dict."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _STR_KEYS:
                out[key] = value
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def _trial_config(model: str, cfg: dict) -> TrialConfig:
    uses_graph = model in ("hlp_agg", "hlp_concat")
    if uses_graph and ("k1" not in cfg or "k2" not in cfg):
        raise ValueError(f"model {model} requires k1 and k2 in the config file")
    return TrialConfig(
        trial_id=0,
        model=model,
        k1=cfg.get("k1") if uses_graph else None,
        k2=cfg.get("k2") if uses_graph else None,
        graph_type=cfg.get("graph_type", "undirected") if uses_graph else None,
        norm=cfg.get("norm", "sym") if uses_graph else None,
        graph_scaling=cfg.get("graph_scaling", "sigma") if uses_graph else None,
        feature_scaling=(
            cfg.get("feature_scaling", "sigma_squared" if model == "hlp_agg" else "sigma")
            if uses_graph
            else None
        ),
        learning_rate=cfg.get("learning_rate", 0.01),
        dropout=cfg.get("dropout", 0.5),
        weight_decay=cfg.get("weight_decay", 5e-4),
        hidden_dim=cfg.get("hidden_dim") if model != "lr" else None,
        seed=cfg.get("seed", 0),
    )


def _load_or_generate_splits(ds, dataset_dir: str, args) -> list:
    splits_dir = os.path.join(dataset_dir, "splits")
    if os.path.isdir(splits_dir) and not getattr(args, "regen_splits", False):
        return load_splits(splits_dir, ds.n)
    sizes = _parse_sizes(getattr(args, "sizes", None))
    return generate_splits(
        ds,
        count=getattr(args, "splits_count", 10),
        seed=getattr(args, "splits_seed", 0),
        sizes=sizes,
    )


def _parse_sizes(text: str | None) -> tuple[int, int, int] | None:
    if not text:
        return None
    parts = [int(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError("--sizes needs three comma-separated integers")
    return tuple(parts)


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError("--ratios needs three comma-separated fractions")
    return tuple(parts)


def cmd_stats(args) -> int:
    ds = load_dataset(args.dataset_dir)
    s = stats(ds)
    print(f"dataset       {s.name}")
    print(f"nodes         {s.n_nodes}")
    print(f"edges         {s.n_edges_directed} directed / {s.n_edges_undirected} undirected")
    print(f"features      {s.n_features}")
    print(f"classes       {s.n_classes}")
    print(f"homophily     {s.homophily:.4f}")
    return 0


def cmd_splits(args) -> int:
    ds = load_dataset(args.dataset_dir)
    splits = generate_splits(
        ds,
        ratios=_parse_ratios(args.ratios),
        count=args.count,
        seed=args.seed,
        sizes=_parse_sizes(args.sizes),
    )
    out_dir = os.path.join(args.dataset_dir, "splits")
    save_splits(splits, out_dir)
    sizes = (len(splits[0].train), len(splits[0].val), len(splits[0].test))
    print(f"wrote {len(splits)} splits (sizes {sizes[0]}/{sizes[1]}/{sizes[2]}) to {out_dir}")
    return 0


def cmd_train(args) -> int:
    ds = load_dataset(args.dataset_dir)
    splits = _load_or_generate_splits(ds, args.dataset_dir, args)
    if not 0 <= args.split < len(splits):
        raise ValueError(f"--split {args.split} out of range (have {len(splits)})")
    cfg = parse_config_file(args.config) if args.config else {}
    trial = _trial_config(args.model, cfg)
    x = build_features(ds, trial, standardize=not args.no_standardize)
    mlp = MlpConfig(
        hidden_dim=trial.hidden_dim,
        dropout=trial.dropout,
        weight_decay=trial.weight_decay,
        learning_rate=trial.learning_rate,
        lr_decay_factor=cfg.get("lr_decay_factor", 0.99),
        lr_decay_every=cfg.get("lr_decay_every", 50),
        max_epochs=cfg.get("max_epochs", 300),
        patience=cfg.get("patience", 30),
        seed=cfg.get("seed", 0),
        dropout_on=cfg.get("dropout_on", "both"),
    )
    model, metrics = train_model(x, ds.labels, splits[args.split], mlp)
    if model.diverged:
        print("training diverged (non-finite loss)")
        return 1
    for tag in ("train", "val", "test"):
        m = metrics[tag]
        print(f"{tag:5s} accuracy {100 * m.accuracy:6.2f}%  loss {m.loss:.4f}")
    print(f"best epoch {model.best_epoch}")
    return 0


def cmd_sweep(args) -> int:
    ds = load_dataset(args.dataset_dir)
    splits = _load_or_generate_splits(ds, args.dataset_dir, args)
    spec = SweepSpec(
        model_kind=args.model,
        budget=args.budget,
        strategy=args.strategy,
        seed=args.seed,
    )
    log = _progress_logger() if args.verbose else None
    report = sweep(ds, splits, spec, workers=args.workers, log=log)
    if args.out:
        write_report_csv(report, args.out)
        print(f"wrote {len(report.trials)} trials to {args.out}")
    print(report_render(report))
    return 0


def cmd_ablate(args) -> int:
    ds = load_dataset(args.dataset_dir)
    splits = _load_or_generate_splits(ds, args.dataset_dir, args)
    os.makedirs(args.out, exist_ok=True)
    log = _progress_logger() if args.verbose else None
    if args.which == "dims":
        spec = SweepSpec(model_kind="hlp_concat", budget=args.budget, seed=args.seed)
        arm_a, arm_b = ablation_fixed_vs_variable(ds, splits, spec, workers=args.workers, log=log)
        names = ("fixed_rank", "variable_rank")
    else:
        spec = SweepSpec(model_kind="hlp_agg", budget=args.budget, seed=args.seed)
        arm_a, arm_b = ablation_normalization(ds, splits, spec, workers=args.workers, log=log)
        names = ("sym_only", "norm_swept")
    for name, report in zip(names, (arm_a, arm_b)):
        path = os.path.join(args.out, f"{name}.csv")
        write_report_csv(report, path)
        print(f"--- {name} ---")
        print(report_render(report))
    delta = 100 * (arm_b.mean_test - arm_a.mean_test)
    print(f"delta (arm B - arm A): {delta:+.2f} points")
    return 0


def cmd_export(args) -> int:
    ds = load_dataset(args.dataset_dir)
    splits = _load_or_generate_splits(ds, args.dataset_dir, args)
    cfg = parse_config_file(args.config) if args.config else {}
    trial = _trial_config(args.model, cfg)
    export_embeddings(ds, splits, trial, args.split, args.out)
    print(f"wrote embeddings for {ds.n} nodes to {args.out}")
    return 0


def cmd_make_benchmarks(args) -> int:
    only = set(args.only.split(",")) if args.only else None
    for name in datagen.BENCHMARK_NAMES:
        if only is not None and name not in only:
            continue
        path = os.path.join(args.out, name)
        ds = datagen.generate_benchmark(name)
        datagen.write_benchmark(ds, path)
        print(f"{name}: n={ds.n} edges={len(ds.edges)} -> {path}")
    return 0


def _progress_logger():
    state = {"done": 0}

    def log(result):
        state["done"] += 1
        cfg = result.config
        print(
            f"[{state['done']:4d}] trial {cfg.trial_id}: "
            f"val {100 * result.mean_val:5.2f} test {100 * result.mean_test:5.2f} "
            f"({result.seconds:.1f}s)",
            flush=True,
        )

    return log


def _add_split_source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--splits-count", type=int, default=10)
    p.add_argument("--splits-seed", type=int, default=0)
    p.add_argument("--sizes", default=None, help="absolute split sizes a,b,c")
    p.add_argument(
        "--regen-splits",
        action="store_true",
        help="ignore stored splits/ and regenerate in memory",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hlpsvd",
        description="Truncated-SVD node embeddings and classifiers for heterophilic graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics")
    p.add_argument("dataset_dir")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("splits", help="generate train/val/test splits")
    p.add_argument("dataset_dir")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--ratios", default="0.48,0.32,0.20")
    p.add_argument("--sizes", default=None, help="absolute sizes a,b,c (overrides ratios)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_splits)

    p = sub.add_parser("train", help="train one configuration on one split")
    p.add_argument("dataset_dir")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--split", type=int, default=0)
    p.add_argument("--no-standardize", action="store_true")
    _add_split_source_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="hyperparameter search")
    p.add_argument("dataset_dir")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--strategy", choices=("random", "grid"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="trial CSV path")
    p.add_argument("--verbose", action="store_true")
    _add_split_source_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="paired ablation sweeps")
    p.add_argument("dataset_dir")
    p.add_argument("--which", choices=("dims", "norm"), required=True)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="directory for the two CSVs")
    p.add_argument("--verbose", action="store_true")
    _add_split_source_args(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("export-embeddings", help="dump per-node classifier inputs")
    p.add_argument("dataset_dir")
    p.add_argument("--model", choices=MODEL_KINDS, default="hlp_concat")
    p.add_argument("--config", default=None)
    p.add_argument("--split", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_split_source_args(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("make-benchmarks", help="regenerate bundled benchmark datasets")
    p.add_argument("--out", default="datasets")
    p.add_argument("--only", default=None, help="comma-separated subset of names")
    p.set_defaults(func=cmd_make_benchmarks)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
