"""``iedr`` command-line entry point.

Every command reads a JSON run config (optional, defaults otherwise) and
applies ``--set section.key=value`` overrides on top. Exit codes: 0 success,
2 usage or config error, 3 data or checkpoint error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cied import PROBES, ProbeConfig, write_probe_rows
from .data import (
    PRESETS,
    DataError,
    Dataset,
    Vocabulary,
    convert_preset,
    generate_synthetic,
    ingest,
    write_tsv,
)
from .diffcore import CheckpointError
from .eval import disentanglement_report, export_representations, matching_scores
from .experiment import run_synthetic, run_variant, test_report, write_rows
from .factors import weight_block_masses, write_block_masses_csv
from .train import VARIANTS, ConfigError, NumericFailure, RunConfig, fit, load_model, save_model

log = logging.getLogger("iedr")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def load_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        config = config.override(key.strip(), value.strip())
    seed = getattr(args, "seed", None)
    if seed is not None:
        config = config.replace("train", seed=seed).replace("synthetic", seed=seed)
    return config


def load_dataset(path, config: RunConfig, vocab: Vocabulary | None = None) -> Dataset:
    vocab, instances = ingest(path, vocab)
    return Dataset.from_instances(vocab, instances, config.split)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args) -> int:
    config = load_config(args)
    dataset = load_dataset(args.data, config)
    out = _out_dir(args.out)
    config.save(out / "config.json")
    result = fit(dataset, config, log_path=out / "train_log.csv")
    save_model(out / "checkpoint", result.state.model, config, dataset.vocab,
               extra={"best_epoch": result.best_epoch, "best_val": result.best_val})
    report = test_report(result.state.model, dataset, config) if dataset.test else None
    if report is not None:
        (out / "metrics.json").write_text(report.to_json() + "\n")
        report.write_csv(out / "metrics.csv")
        print(report.to_json())
    return EXIT_OK


def _load_checkpoint(path):
    model, config = load_model(path)
    vocab_path = Path(path) / "vocab.json"
    if not vocab_path.exists():
        raise CheckpointError(f"{path} has no vocab.json")
    return model, config, Vocabulary.load(vocab_path).freeze()


def cmd_eval(args) -> int:
    model, config, vocab = _load_checkpoint(args.checkpoint)
    if args.seed is not None:
        config = config.replace("train", seed=args.seed)
    dataset = load_dataset(args.data, config, vocab)
    if not dataset.test:
        raise DataError(f"{args.data}: no test instances after splitting")
    report = test_report(model, dataset, config)
    out = _out_dir(args.out)
    (out / "metrics.json").write_text(report.to_json() + "\n")
    report.write_csv(out / "metrics.csv")
    print(report.to_json())
    return EXIT_OK


def _parse_variants(text: str) -> list[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    unknown = [v for v in names if v not in VARIANTS]
    if not names or unknown:
        raise UsageError(f"unknown variants {unknown}; known: {', '.join(VARIANTS)}")
    return names


def _ablate_one(job) -> dict:
    variant, seed, config, data, extra = job
    if data is None:
        return run_synthetic(variant, seed, config, extra).row()
    return run_variant(load_dataset(data, config), config, variant, seed, extra).row()


def cmd_ablate(args) -> int:
    config = load_config(args)
    variants = _parse_variants(args.variants)
    extra = _parse_variants(args.extra) if args.extra else []
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    base = config.train.seed
    jobs = [(v, base + s, config, args.data, extra) for v in variants for s in range(args.seeds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_ablate_one, jobs))
    else:
        rows = [_ablate_one(j) for j in jobs]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_rows(out, rows)
    for r in rows:
        print(f"{r['variant']}\tseed={r['seed']}\tndcg@10={r['ndcg_at_10']:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    config = load_config(args)
    vocab, instances, truth, _ = generate_synthetic(config.synthetic)
    out = _out_dir(args.out)
    write_tsv(out / "data.tsv", instances, vocab)
    if args.truth:
        truth.save(out / "truth.json")
    print(f"wrote {len(instances)} instances to {out / 'data.tsv'}")
    return EXIT_OK


def read_matrix(path) -> np.ndarray:
    """``.npy`` arrays or comma-separated numbers, with an optional header line."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    if path.suffix == ".npy":
        return np.load(path)
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        try:
            return np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc


def _probe_names(text: str) -> list[str]:
    names = list(PROBES) if text == "both" else [text]
    return names


def cmd_probe(args) -> int:
    probe_cfg = ProbeConfig(seed=args.seed or 0, epochs=args.epochs)
    rows = []
    if args.checkpoint:
        if not args.data:
            raise UsageError("--checkpoint needs --data")
        model, config, vocab = _load_checkpoint(args.checkpoint)
        _, instances = ingest(args.data, vocab)
        users = sorted({i.user_feats for i in instances})[:args.max_users]
        contexts = sorted({i.context_feats for i in instances})[:args.max_contexts]
        if len(users) < 2 or len(contexts) < 2:
            raise DataError("probing needs at least two users and two contexts")
        report = disentanglement_report(model, users, contexts, instances[0].item_feats,
                                        probe_cfg, args.seed or 0)
        d = report.to_dict()
        for name in _probe_names(args.probe):
            rows.append((name, "o_in;c", d[f"{name}_intrinsic"]))
            rows.append((name, "o_ex;c", d[f"{name}_extrinsic"]))
        print(json.dumps(d, indent=2))
    else:
        if not (args.a and args.b):
            raise UsageError("probe needs --a and --b, or --checkpoint and --data")
        a, b = read_matrix(args.a), read_matrix(args.b)
        if len(a) != len(b):
            raise DataError(f"row counts differ: {len(a)} vs {len(b)}")
        for name in _probe_names(args.probe):
            est = PROBES[name](a, b, probe_cfg)
            rows.append((name, "a;b", est))
            print(f"{name}\t{est:.6f}\tnats")
    if not all(np.isfinite(r[2]) for r in rows):
        raise NumericFailure(f"non-finite probe estimate: {rows}")
    if args.out:
        write_probe_rows(args.out, rows)
    return EXIT_OK


def cmd_export(args) -> int:
    model, config, vocab = _load_checkpoint(args.checkpoint)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.what == "blocks":
        gen = model.user_factors if args.side == "user" else model.item_factors
        write_block_masses_csv(out, [(args.side, weight_block_masses(gen))])
        return EXIT_OK
    if not args.data:
        raise UsageError(f"export {args.what} needs --data")
    dataset = load_dataset(args.data, config, vocab)
    instances = {"train": dataset.train, "valid": dataset.valid, "test": dataset.test,
                 "all": dataset.train + dataset.valid + dataset.test}[args.split]
    if args.limit:
        instances = instances[:args.limit]
    if not instances:
        raise DataError(f"no {args.split} instances to export")
    if args.what == "representations":
        rows = export_representations(model, instances, args.which, args.side, out)
        print(f"wrote {len(rows)} rows to {out}")
        return EXIT_OK
    user = next((i for i in instances if i.user_key == args.user), None) if args.user else instances[0]
    if user is None:
        raise DataError(f"user {args.user!r} not found in {args.split} split")
    contexts = sorted({i.context_feats for i in instances})[:args.max_contexts]
    items = list(zip(dataset.catalog.keys, dataset.catalog.feats))
    tables = matching_scores(model, user.user_feats, contexts, items)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("context,factor,rank,item_key,score\n")
        for ci, tab in enumerate(tables):
            for factor in ("intrinsic", "extrinsic"):
                scores = dict(zip(tab.item_keys, getattr(tab, factor)))
                for rank, key in enumerate(tab.top(factor, args.k), start=1):
                    fh.write(f"{ci},{factor},{rank},{key},{float(scores[key])!r}\n")
    return EXIT_OK


def cmd_convert(args) -> int:
    n = convert_preset(args.src, args.dst, args.preset, args.item_meta)
    print(f"wrote {n} lines to {args.dst}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iedr", description="Intrinsic/extrinsic disentangled recommender")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    parser.add_argument("--jobs", type=int, default=1, help="max worker processes (ablate only)")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one config field (repeatable)")
        p.add_argument("--seed", type=int, help="sets train.seed and synthetic.seed")

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    with_config(p)
    p.add_argument("--data", required=True, help="canonical TSV")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="test metrics of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="candidate sampling seed (default: the run seed)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="variant x seed sweep into one CSV")
    with_config(p)
    p.add_argument("--data", help="canonical TSV; synthetic data per seed when omitted")
    p.add_argument("--variants", required=True, help=f"comma list of {', '.join(VARIANTS)}")
    p.add_argument("--extra", help="variants applied on top of every run, e.g. normal_init")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="write a synthetic dataset")
    with_config(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--truth", action="store_true", help="also write the latent ground truth")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("probe", help="MINE/CLUB mutual-information estimates")
    p.add_argument("--a", help="samples of A (.npy or CSV)")
    p.add_argument("--b", help="samples of B (.npy or CSV)")
    p.add_argument("--checkpoint", help="probe a model's user factors against context")
    p.add_argument("--data", help="TSV supplying users and contexts for --checkpoint")
    p.add_argument("--probe", choices=["mine", "club", "both"], default="both")
    p.add_argument("--epochs", type=int, default=ProbeConfig.epochs)
    p.add_argument("--max-users", type=int, default=200)
    p.add_argument("--max-contexts", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV of estimates")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("export", help="representations, matching scores or block masses")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.add_argument("--what", choices=["representations", "matching", "blocks"], default="representations")
    p.add_argument("--which", choices=["intrinsic", "extrinsic", "both"], default="both")
    p.add_argument("--side", choices=["user", "item"], default="user")
    p.add_argument("--split", choices=["train", "valid", "test", "all"], default="test")
    p.add_argument("--limit", type=int)
    p.add_argument("--user", help="user key for --what matching")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--max-contexts", type=int, default=20)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("convert", help="raw log to canonical TSV")
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--item-meta", help="item metadata table (frappe)")
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"iedr {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError, FileNotFoundError) as exc:
        print(f"iedr {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FloatingPointError as exc:
        print(f"iedr {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"iedr {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
