"""Command-line front end.

Subcommands: gen-data, train, grid, compare, eval-exact, sample,
eval-parzen, export-profile. Every output file is written atomically and
is byte-reproducible for identical flags and seed; timing lives in a
separate *_meta.json sidecar. Exit codes: 0 success, 2 usage, 3 missing
input, 4 bad config/format, 5 infeasible enumeration, 6 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import backend
from .datasets import DATASET_NAMES, load_dataset, make_dataset, save_dataset
from .errors import DatasetFormatError, EnumerationLimitError, NonFiniteError
from .exact import (compute_exact_distribution, dataset_loglikelihood,
                    kl_divergence, profile_rows)
from .ioutils import atomic_write_text, format_float
from .model import load_checkpoint, save_checkpoint
from .parzen import (load_sample_set, parzen_ull, sample_model, save_sample_set,
                     ull_curve)
from .training import (ESTIMATORS, GridSpec, RunRecord, TrainConfig,
                       grid_search, paired_comparison, train)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_BAD_CONFIG = 4
EXIT_INFEASIBLE = 5
EXIT_NUMERIC = 6


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _require_file(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise CliError(f"{what} not found: {path}", EXIT_MISSING_INPUT)
    return path


# ---------------------------------------------------------------------------
# config-file handling: defaults < config file < explicit CLI flags

_CONFIG_KEYS = {
    "estimator": str,
    "k": int,
    "hidden": int,
    "sigma": float,
    "lr": float,
    "schedule": str,
    "momentum": float,
    "decay": float,
    "batch": str,
    "epochs": int,
    "seed": int,
    "stride": int,
}

_TRAIN_DEFAULTS = {
    "k": 1,
    "schedule": "fixed",
    "momentum": 0.0,
    "decay": 0.0,
    "batch": "full",
    "seed": 0,
    "stride": 50,
}


def _parse_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}: line {lineno}: expected 'key = value'",
                               EXIT_BAD_CONFIG)
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_KEYS:
                raise CliError(f"{path}: line {lineno}: unknown key {key!r}",
                               EXIT_BAD_CONFIG)
            try:
                values[key] = _CONFIG_KEYS[key](value)
            except ValueError:
                raise CliError(f"{path}: line {lineno}: bad value for {key!r}",
                               EXIT_BAD_CONFIG) from None
    return values


def _parse_batch(value) -> int | None:
    if value is None:
        return None
    text = str(value).lower()
    if text == "full":
        return None
    try:
        batch = int(text)
    except ValueError:
        raise CliError(f"--batch must be an integer or 'full', not {value!r}",
                       EXIT_BAD_CONFIG) from None
    return batch


def _build_train_config(args, config_path: str | None) -> TrainConfig:
    merged = dict(_TRAIN_DEFAULTS)
    if config_path:
        merged.update(_parse_config_file(_require_file(config_path, "config file")))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            merged[key] = flag
    missing = [k for k in ("estimator", "hidden", "sigma", "lr", "epochs")
               if k not in merged]
    if missing:
        raise CliError(f"missing required settings: {', '.join(missing)}",
                       EXIT_BAD_CONFIG)
    try:
        return TrainConfig(
            estimator=merged["estimator"],
            k=int(merged["k"]),
            n_hidden=int(merged["hidden"]),
            init_sigma=float(merged["sigma"]),
            learning_rate=float(merged["lr"]),
            lr_schedule="linear" if merged["schedule"] == "linear" else merged["schedule"],
            momentum=float(merged["momentum"]),
            weight_decay=float(merged["decay"]),
            batch_size=_parse_batch(merged["batch"]),
            epochs=int(merged["epochs"]),
            seed=int(merged["seed"]),
            kl_record_stride=int(merged["stride"]),
        ).validate()
    except ValueError as err:
        raise CliError(str(err), EXIT_BAD_CONFIG) from None


# ---------------------------------------------------------------------------
# serialization helpers

def _trace_csv(record: RunRecord) -> str:
    lines = ["epoch,kl"]
    for epoch, kl in zip(record.kl_epochs.tolist(), record.kl_values.tolist()):
        lines.append(f"{epoch},{format_float(kl)}")
    return "\n".join(lines) + "\n"


def _config_dict(config: TrainConfig) -> dict:
    return {
        "estimator": config.estimator,
        "k": config.k,
        "hidden": config.n_hidden,
        "sigma": config.init_sigma,
        "lr": config.learning_rate,
        "schedule": config.lr_schedule,
        "momentum": config.momentum,
        "decay": config.weight_decay,
        "batch": "full" if config.batch_size is None else config.batch_size,
        "epochs": config.epochs,
        "seed": config.seed,
        "stride": config.kl_record_stride,
    }


def _summary_dict(record: RunRecord) -> dict:
    return {
        "config": _config_dict(record.config),
        "failed": record.failed,
        "error": record.error,
        "best_kl": record.best_kl,
        "best_epoch": record.best_epoch,
        "tail_mean_kl": record.tail_mean_kl(),
        "trace_points": int(record.kl_epochs.size),
    }


def _write_json(path: str, doc) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_gen_data(args) -> int:
    try:
        dataset = make_dataset(args.name, p_ratio=args.p_ratio)
    except ValueError as err:
        raise CliError(str(err), EXIT_BAD_CONFIG) from None
    out = args.out or f"{args.name}.ds"
    save_dataset(dataset, out)
    print(f"gen-data: wrote {len(dataset)} states of {dataset.n_bits} bits -> {out}")
    return EXIT_OK


def _load_dataset_checked(path: str):
    _require_file(path, "dataset")
    try:
        return load_dataset(path)
    except DatasetFormatError as err:
        raise CliError(str(err), EXIT_BAD_CONFIG) from None


def _cmd_train(args) -> int:
    dataset = _load_dataset_checked(args.dataset)
    config = _build_train_config(args, args.config)
    started = time.time()
    try:
        record = train(dataset, config, enumeration_limit=args.enum_limit)
    except EnumerationLimitError as err:
        raise CliError(str(err), EXIT_INFEASIBLE) from None
    os.makedirs(args.out, exist_ok=True)
    atomic_write_text(os.path.join(args.out, "kl_trace.csv"), _trace_csv(record))
    _write_json(os.path.join(args.out, "summary.json"), _summary_dict(record))
    if record.best_params is not None:
        save_checkpoint(record.best_params,
                        os.path.join(args.out, "best_checkpoint.json"))
    if record.final_params is not None:
        save_checkpoint(record.final_params,
                        os.path.join(args.out, "final_checkpoint.json"))
    _write_json(os.path.join(args.out, "run_meta.json"),
                {"wall_time_seconds": record.wall_time,
                 "started_unix": started,
                 "backend": backend.BACKEND})
    if record.failed:
        print(f"train: FAILED ({record.error}); partial trace with "
              f"{record.kl_epochs.size} points -> {args.out}")
        return EXIT_NUMERIC
    print(f"train: {dataset.name} {config.estimator}"
          f"{config.k if config.estimator in ('cd', 'wcd') else ''} "
          f"best KL {record.best_kl:.6g} @ epoch {record.best_epoch} -> {args.out}")
    return EXIT_OK


def _parse_estimator_token(token: str):
    token = token.strip().lower()
    for name in ("wpcd", "wcd", "pcd", "cd", "exact"):
        if token.startswith(name):
            rest = token[len(name):]
            if rest == "":
                return name, 1
            if name in ("cd", "wcd") and rest.isdigit() and int(rest) >= 1:
                return name, int(rest)
            break
    raise CliError(f"bad estimator token {token!r} (use e.g. cd1, wcd10, pcd, wpcd)",
                   EXIT_BAD_CONFIG)


def _cmd_compare(args) -> int:
    dataset = _load_dataset_checked(args.dataset)
    pair = [_parse_estimator_token(tok) for tok in args.estimators.split(",")]
    if not pair:
        raise CliError("no estimators given", EXIT_BAD_CONFIG)
    base = _build_train_config(args, args.config)
    multipliers = [int(m) for m in args.multipliers.split(",")]
    records_by_label, summary = paired_comparison(
        dataset, base, pair, multipliers=multipliers, n_seeds=args.seeds,
        base_seed=base.seed, jobs=args.jobs, enumeration_limit=args.enum_limit)
    os.makedirs(args.out, exist_ok=True)
    lines = ["estimator,hidden,seed,best_kl,best_epoch,tail_mean_kl,failed"]
    for label, records in records_by_label.items():
        for rec in records:
            lines.append(
                f"{label},{rec.config.n_hidden},{rec.config.seed},"
                f"{format_float(rec.best_kl)},{rec.best_epoch},"
                f"{format_float(rec.tail_mean_kl())},{int(rec.failed)}")
    atomic_write_text(os.path.join(args.out, "compare_records.csv"),
                      "\n".join(lines) + "\n")
    _write_json(os.path.join(args.out, "compare_summary.json"),
                {"dataset": dataset.name, "base_config": _config_dict(base),
                 "multipliers": multipliers, "seeds": args.seeds,
                 "estimators": summary})
    _write_json(os.path.join(args.out, "compare_meta.json"),
                {"finished_unix": time.time(), "backend": backend.BACKEND})
    parts = [f"{label} mean best KL {stats['mean_best_kl']:.6g}"
             for label, stats in summary.items()]
    print(f"compare: {dataset.name}: " + "; ".join(parts) + f" -> {args.out}")
    return EXIT_OK


def _cmd_grid(args) -> int:
    dataset = _load_dataset_checked(args.dataset)
    _require_file(args.mesh, "mesh file")
    try:
        with open(args.mesh, "r", encoding="ascii") as fh:
            mesh = json.load(fh)
    except json.JSONDecodeError as err:
        raise CliError(f"{args.mesh}: {err}", EXIT_BAD_CONFIG) from None
    known = {"hidden_multipliers", "sigmas", "lrs", "momenta", "schedules",
             "epochs", "batch", "stride", "decay", "k"}
    unknown = set(mesh) - known
    if unknown:
        raise CliError(f"{args.mesh}: unknown mesh keys {sorted(unknown)}",
                       EXIT_BAD_CONFIG)
    if "epochs" not in mesh:
        raise CliError(f"{args.mesh}: missing required key 'epochs'", EXIT_BAD_CONFIG)
    estimator, k = _parse_estimator_token(args.estimator)
    grid = GridSpec(
        hidden_multipliers=tuple(mesh.get("hidden_multipliers", (1, 2, 3, 4, 5))),
        init_sigmas=tuple(mesh.get("sigmas", (1.0, 0.1, 0.01, 0.001, 0.0001))),
        learning_rates=tuple(mesh.get("lrs", (0.1, 0.01, 0.001, 0.0001, 0.00001))),
        momenta=tuple(mesh.get("momenta", (0.9,))),
        schedules=tuple(mesh.get("schedules", ("fixed",))),
        repetitions=args.seeds,
    )
    try:
        grid.validate()
        records, best_config = grid_search(
            dataset, grid, estimator, int(mesh.get("k", k)),
            epochs=int(mesh["epochs"]),
            batch_size=_parse_batch(mesh.get("batch", "full")),
            kl_record_stride=int(mesh.get("stride", 50)),
            weight_decay=float(mesh.get("decay", 0.0)),
            jobs=args.jobs, enumeration_limit=args.enum_limit)
    except (ValueError, EnumerationLimitError) as err:
        code = EXIT_INFEASIBLE if isinstance(err, EnumerationLimitError) else EXIT_BAD_CONFIG
        raise CliError(str(err), code) from None
    os.makedirs(args.out, exist_ok=True)
    lines = ["hidden,sigma,lr,momentum,schedule,seed,best_kl,best_epoch,failed"]
    for rec in records:
        cfg = rec.config
        lines.append(
            f"{cfg.n_hidden},{format_float(cfg.init_sigma)},"
            f"{format_float(cfg.learning_rate)},{format_float(cfg.momentum)},"
            f"{cfg.lr_schedule},{cfg.seed},{format_float(rec.best_kl)},"
            f"{rec.best_epoch},{int(rec.failed)}")
    atomic_write_text(os.path.join(args.out, "grid_records.csv"),
                      "\n".join(lines) + "\n")
    _write_json(os.path.join(args.out, "best_config.json"),
                None if best_config is None else _config_dict(best_config))
    _write_json(os.path.join(args.out, "grid_meta.json"),
                {"finished_unix": time.time(), "backend": backend.BACKEND})
    n_failed = sum(r.failed for r in records)
    print(f"grid: {len(records)} runs ({n_failed} failed) -> {args.out}")
    return EXIT_OK


def _load_checkpoint_checked(path: str):
    _require_file(path, "model checkpoint")
    try:
        return load_checkpoint(path)
    except (ValueError, KeyError, json.JSONDecodeError) as err:
        raise CliError(f"{path}: {err}", EXIT_BAD_CONFIG) from None


def _cmd_eval_exact(args) -> int:
    params = _load_checkpoint_checked(args.model)
    dataset = _load_dataset_checked(args.dataset)
    try:
        dist = compute_exact_distribution(params, limit=args.enum_limit)
    except EnumerationLimitError as err:
        raise CliError(str(err), EXIT_INFEASIBLE) from None
    kl = kl_divergence(dataset, dist)
    loglik = dataset_loglikelihood(dataset, dist)
    print(f"eval-exact: dataset {dataset.name} kl {format_float(kl)} "
          f"loglik {format_float(loglik)}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    params = _load_checkpoint_checked(args.model)
    sample_set = sample_model(params, args.n, burn_in=args.burn_in,
                              thinning=args.thin, n_chains=args.chains,
                              seed=args.seed)
    sample_set.meta["model"] = os.path.basename(args.model)
    save_sample_set(sample_set, args.out)
    print(f"sample: {len(sample_set)} samples of {params.n_visible} bits -> {args.out}")
    return EXIT_OK


def _cmd_eval_parzen(args) -> int:
    _require_file(args.samples, "sample set")
    try:
        samples = load_sample_set(args.samples)
    except DatasetFormatError as err:
        raise CliError(str(err), EXIT_BAD_CONFIG) from None
    test = _load_dataset_checked(args.test)
    test_points = test.states.astype(np.float64)
    try:
        if args.points:
            points = [int(p) for p in args.points.split(",")]
            curve = ull_curve(test_points, samples, args.sigma, points)
        else:
            curve = [(len(samples), parzen_ull(test_points, samples, args.sigma))]
    except ValueError as err:
        raise CliError(str(err), EXIT_BAD_CONFIG) from None
    lines = ["n_samples,ull"]
    lines.extend(f"{n},{format_float(u)}" for n, u in curve)
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"eval-parzen: uLL at {len(curve)} sample counts "
          f"(final {curve[-1][1]:.6g}) -> {args.out}")
    return EXIT_OK


def _cmd_export_profile(args) -> int:
    params = _load_checkpoint_checked(args.model)
    dataset = _load_dataset_checked(args.dataset)
    try:
        dist = compute_exact_distribution(params, limit=args.enum_limit)
    except EnumerationLimitError as err:
        raise CliError(str(err), EXIT_INFEASIBLE) from None
    if dataset.n_bits != params.n_visible:
        raise CliError("dataset width does not match the checkpoint",
                       EXIT_BAD_CONFIG)
    lines = ["state_index,state_bits,target_prob,model_prob"]
    for idx, bits, target, modelp in profile_rows(dataset, dist):
        lines.append(f"{idx},{bits},{format_float(target)},{format_float(modelp)}")
    atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"export-profile: {len(dataset)} rows -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def _add_train_flags(sub, with_dataset=True):
    if with_dataset:
        sub.add_argument("--dataset", required=True, help="dataset file path")
    sub.add_argument("--config", default=None, help="key = value config file")
    sub.add_argument("--estimator", choices=ESTIMATORS, default=None)
    sub.add_argument("--k", type=int, default=None, help="Gibbs steps for cd/wcd")
    sub.add_argument("--hidden", type=int, default=None)
    sub.add_argument("--sigma", type=float, default=None, help="weight-init std")
    sub.add_argument("--lr", type=float, default=None)
    sub.add_argument("--schedule", choices=("fixed", "linear"), default=None)
    sub.add_argument("--momentum", type=float, default=None)
    sub.add_argument("--decay", type=float, default=None)
    sub.add_argument("--batch", default=None, help="batch size or 'full'")
    sub.add_argument("--epochs", type=int, default=None)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--stride", type=int, default=None,
                     help="epochs between KL evaluations")
    sub.add_argument("--enum-limit", type=int, default=25,
                     help="max visible bits for exact enumeration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcdrbm",
        description="Train and evaluate binary RBMs with the CD estimator family.")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("gen-data", help="generate a benchmark dataset file")
    sub.add_argument("--name", required=True, choices=DATASET_NAMES)
    sub.add_argument("--p-ratio", type=float, default=100.0,
                     help="p_max/p_min for the Gaussian-profile targets")
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=_cmd_gen_data)

    sub = subs.add_parser("train", help="train one model and export its KL trace")
    _add_train_flags(sub)
    sub.add_argument("--out", required=True, help="output directory")
    sub.set_defaults(func=_cmd_train)

    sub = subs.add_parser("grid", help="hyperparameter grid search")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--estimator", required=True,
                     help="estimator token, e.g. cd1, wcd10, pcd")
    sub.add_argument("--mesh", required=True, help="JSON mesh file")
    sub.add_argument("--seeds", type=int, default=10)
    sub.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sub.add_argument("--enum-limit", type=int, default=25)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_grid)

    sub = subs.add_parser("compare",
                          help="matched-parameter comparison of two estimators")
    _add_train_flags(sub)
    sub.add_argument("--estimators", required=True,
                     help="comma-separated tokens, e.g. cd1,wcd1")
    sub.add_argument("--seeds", type=int, default=10)
    sub.add_argument("--multipliers", default="1,2,3,4,5",
                     help="hidden-unit multipliers of the input width")
    sub.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_compare)

    sub = subs.add_parser("eval-exact", help="print exact KL and log-likelihood")
    sub.add_argument("--model", required=True, help="checkpoint path")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--enum-limit", type=int, default=25)
    sub.set_defaults(func=_cmd_eval_exact)

    sub = subs.add_parser("sample", help="draw Gibbs samples from a checkpoint")
    sub.add_argument("--model", required=True)
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--burn-in", type=int, default=1000)
    sub.add_argument("--thin", type=int, default=10)
    sub.add_argument("--chains", type=int, default=100)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_sample)

    sub = subs.add_parser("eval-parzen",
                          help="Parzen-window uLL of a test set given samples")
    sub.add_argument("--samples", required=True, help="sample-set file")
    sub.add_argument("--test", required=True, help="test dataset file")
    sub.add_argument("--sigma", type=float, default=0.2)
    sub.add_argument("--points", default=None,
                     help="comma-separated sample counts for the uLL curve")
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_eval_parzen)

    sub = subs.add_parser("export-profile",
                          help="CSV of target vs model probabilities")
    sub.add_argument("--model", required=True)
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--enum-limit", type=int, default=25)
    sub.add_argument("--out", required=True)
    sub.set_defaults(func=_cmd_export_profile)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except NonFiniteError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_MISSING_INPUT


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
