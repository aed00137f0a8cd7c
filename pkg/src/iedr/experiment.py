"""Variant runs on synthetic or file-backed data, shared by the CLI, tests and walkthroughs."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset, SyntheticTruth, entity_features, generate_synthetic, user_history
from .diffcore import substream
from .eval import MetricsReport, evaluate
from .factors import BlockMasses, weight_block_masses
from .train import FitResult, RunConfig, apply_variant, fit

# Desk-scale settings for the synthetic protocol: smaller batches and fewer
# CICL negatives than the library defaults, and Gaussian embeddings so that
# id-only feature sets do not start with vanishing factors. Precision stays
# at float64; pass train.dtype=float32 for quicker exploratory runs.
SYNTHETIC_PROTOCOL: list[tuple[str, dict]] = [
    ("train", {"batch_size": 256, "epochs": 25}),
    ("cicl", {"num_negatives": 10}),
    ("encoder", {"embed_init": "normal"}),
]


def synthetic_config(base: RunConfig | None = None) -> RunConfig:
    config = base or RunConfig()
    for section, changes in SYNTHETIC_PROTOCOL:
        config = config.replace(section, **changes)
    return config


def configure(base: RunConfig, variant: str, seed: int, extra: Sequence[str] = ()) -> RunConfig:
    config = apply_variant(base.replace("train", seed=seed), variant)
    for name in extra:
        config = apply_variant(config, name)
    return config


def test_report(model, dataset: Dataset, config: RunConfig) -> MetricsReport:
    """Test-set metrics with candidates drawn from the run seed's ``test_eval`` stream."""
    history = user_history(dataset.train) if config.train.eval_exclude_train else None
    return evaluate(model, dataset.test, dataset.catalog, substream(config.train.seed, "test_eval"),
                    config.train.eval_negatives, history)


@dataclass
class RunResult:
    variant: str
    seed: int
    config: RunConfig
    fit: FitResult
    dataset: Dataset
    report: MetricsReport
    truth: SyntheticTruth | None = None

    @property
    def model(self):
        return self.fit.state.model

    def block_masses(self) -> BlockMasses | None:
        gen = self.model.user_factors
        return weight_block_masses(gen) if gen.config.variant in ("Linear", "LinearReLU") else None

    def row(self) -> dict:
        r = self.report
        masses = self.block_masses()
        return {
            "variant": self.variant, "seed": self.seed, "config_hash": self.config.hash(),
            "ndcg_at_5": r.ndcg_at_5, "ndcg_at_10": r.ndcg_at_10,
            "recall_at_5": r.recall_at_5, "recall_at_10": r.recall_at_10, "auc": r.auc,
            "best_epoch": self.fit.best_epoch, "best_val": self.fit.best_val,
            "user_block_ratio": masses.user_ratio if masses is not None else float("nan"),
        }


ROW_COLUMNS = ("variant", "seed", "config_hash", "ndcg_at_5", "ndcg_at_10", "recall_at_5",
               "recall_at_10", "auc", "best_epoch", "best_val", "user_block_ratio")


def synthetic_dataset(config: RunConfig, seed: int) -> tuple[Dataset, SyntheticTruth]:
    spec = replace(config.synthetic, seed=seed)
    vocab, instances, truth, catalog = generate_synthetic(spec)
    return Dataset.from_instances(vocab, instances, config.split, catalog), truth


def run_variant(dataset: Dataset, config: RunConfig, variant: str, seed: int,
                extra: Sequence[str] = (), truth: SyntheticTruth | None = None) -> RunResult:
    cfg = configure(config, variant, seed, extra)
    result = fit(dataset, cfg)
    return RunResult(variant, seed, cfg, result, dataset, test_report(result.state.model, dataset, cfg),
                     truth)


def run_synthetic(variant: str, seed: int, base: RunConfig | None = None,
                  extra: Sequence[str] = ()) -> RunResult:
    """Fresh synthetic draw with ``seed`` and a ``variant`` run seeded the same way."""
    config = base if base is not None else synthetic_config()
    dataset, truth = synthetic_dataset(config, seed)
    return run_variant(dataset, config.replace("synthetic", seed=seed), variant, seed, extra, truth)


def synthetic_entities(result: RunResult):
    """Users, contexts and items of a synthetic run in feature-id form."""
    return entity_features(result.dataset.vocab, result.truth.spec)


def write_rows(path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(ROW_COLUMNS)
        for r in rows:
            out.writerow([r[c] if isinstance(r[c], (str, int)) else repr(float(r[c])) for c in ROW_COLUMNS])


def standard_error(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    return float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else float("nan")
