"""Two-step alternating trainer.

Each batch runs one forward pass that produces every loss term. Step 1
updates the variational heads (theta) on detached factors; step 2 updates
everything else (omega) on the combined risk with the heads frozen.
"""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..cied import (
    appr_loss,
    bi_appr_loss,
    bi_dis_loss,
    cicl_batch,
    gen_positive_context,
    split_cicl_batch,
    vclub_loss_asymmetric,
)
from ..data import Batch, Dataset, augment_with_negatives, iterate_batches, user_history
from ..diffcore import (
    Streams,
    Tensor,
    backward,
    load_checkpoint,
    make_optimizer,
    no_grad,
    read_manifest,
    save_checkpoint,
    substream,
)
from ..eval.ranking import evaluate
from .config import RunConfig
from .model import IEDRModel, predict, rp_loss

log = logging.getLogger(__name__)

TERMS = ("L_RP", "L_CICL_u", "L_CICL_v", "L_Dis_u", "L_Dis_v", "L_bi_appr_u", "L_bi_appr_v")
LOG_COLUMNS = ("epoch", *TERMS, "val_NDCG@10", "wall_ms_per_batch")


class NumericFailure(FloatingPointError):
    """A loss term went non-finite; the message lists every term's magnitude."""


@dataclass
class TrainState:
    model: IEDRModel
    config: RunConfig
    theta_opt: object
    omega_opt: object
    streams: Streams
    epoch: int = 0
    step: int = 0


def init_state(model: IEDRModel, config: RunConfig) -> TrainState:
    t = config.train
    return TrainState(model, config,
                      make_optimizer(t.optimizer, model.theta(), t.lr),
                      make_optimizer(t.optimizer, model.omega(), t.lr),
                      Streams(t.seed))


def _set_trainable(params, flag: bool) -> None:
    for p in params:
        p.requires_grad = flag


def _check(report: dict[str, float]) -> None:
    bad = [k for k, v in report.items() if not np.isfinite(v)]
    if bad:
        dump = ", ".join(f"{k}={v:.6g}" for k, v in report.items())
        raise NumericFailure(f"non-finite loss terms {bad}: {dump}")


def heads_loss(model: IEDRModel, fu, fv, mode: str) -> tuple[Tensor, Tensor]:
    """Approximation losses for the four heads on detached factors."""
    in_u, ex_u = fu.intrinsic.detach(), fu.extrinsic.detach()
    in_v, ex_v = fv.intrinsic.detach(), fv.extrinsic.detach()
    if mode == "vCLUB":
        return appr_loss(in_u, ex_u, model.q1_user), appr_loss(in_v, ex_v, model.q1_item)
    return (bi_appr_loss(in_u, ex_u, model.q1_user, model.q2_user),
            bi_appr_loss(in_v, ex_v, model.q1_item, model.q2_item))


def risk_terms(state: TrainState, batch: Batch) -> tuple[dict[str, Tensor], object]:
    """Forward pass with theta frozen; returns the omega-side loss terms and the forward."""
    cfg, model = state.config, state.model
    t = cfg.train
    out = model.forward(batch)
    labels = batch.labels.astype(model.dtype)
    terms: dict[str, Tensor] = {"L_RP": rp_loss(predict(out.fu, out.fv), labels)}
    if t.cicl_on:
        rng = state.streams["cicl"]
        c_pos, _ = gen_positive_context(out.c, batch.ctx_keys, cfg.cicl, rng)
        if cfg.factor.variant == "Split":
            terms["L_CICL_u"] = split_cicl_batch(model.user_factors.net_in, out.u,
                                                 out.fu.intrinsic, cfg.cicl, rng)
            terms["L_CICL_v"] = split_cicl_batch(model.item_factors.net_in, out.v,
                                                 out.fv.intrinsic, cfg.cicl, rng)
        else:
            terms["L_CICL_u"] = cicl_batch(model.user_factors, out.u, out.c, c_pos,
                                           out.fu.intrinsic, cfg.cicl, rng)
            terms["L_CICL_v"] = cicl_batch(model.item_factors, out.v, out.c, c_pos,
                                           out.fv.intrinsic, cfg.cicl, rng)
    if t.dis_on:
        rng = state.streams["dis"]
        n = cfg.dis.num_negatives
        if cfg.dis.mode == "vCLUB":
            terms["L_Dis_u"] = vclub_loss_asymmetric(out.fu.intrinsic, out.fu.extrinsic,
                                                     model.q1_user, n, rng)
            terms["L_Dis_v"] = vclub_loss_asymmetric(out.fv.intrinsic, out.fv.extrinsic,
                                                     model.q1_item, n, rng)
        else:
            terms["L_Dis_u"] = bi_dis_loss(out.fu.intrinsic, out.fu.extrinsic,
                                           model.q1_user, model.q2_user, n, rng)
            terms["L_Dis_v"] = bi_dis_loss(out.fv.intrinsic, out.fv.extrinsic,
                                           model.q1_item, model.q2_item, n, rng)
    return terms, out


def total_risk(terms: dict[str, Tensor], lambda1: float, lambda2: float) -> Tensor:
    total = terms["L_RP"]
    if "L_CICL_u" in terms:
        total = total + (terms["L_CICL_u"] + terms["L_CICL_v"]) * lambda1
    if "L_Dis_u" in terms:
        total = total + (terms["L_Dis_u"] + terms["L_Dis_v"]) * lambda2
    return total


def train_step(state: TrainState, batch: Batch) -> dict[str, float]:
    """One alternation on ``batch``; returns every loss term plus ``total``.

    Afterwards omega grads hold the step-2 gradient and theta grads are zero.
    """
    if len(batch) < 2:
        raise ValueError("train_step needs a batch of at least 2")
    cfg, model = state.config, state.model
    t = cfg.train
    theta = model.theta()
    model.zero_grad()
    _set_trainable(theta, False)
    try:
        terms, out = risk_terms(state, batch)
        total = total_risk(terms, t.lambda1, t.lambda2)
    finally:
        _set_trainable(theta, True)

    report = {k: 0.0 for k in TERMS}
    report.update({k: v.item() for k, v in terms.items()})
    report["total"] = total.item()

    # step 1: heads only, on detached factors
    if t.dis_on:
        run_step1 = state.step % t.step1_every == 0
        if run_step1:
            appr_u, appr_v = heads_loss(model, out.fu, out.fv, cfg.dis.mode)
        else:
            with no_grad():
                appr_u, appr_v = heads_loss(model, out.fu, out.fv, cfg.dis.mode)
        report["L_bi_appr_u"], report["L_bi_appr_v"] = appr_u.item(), appr_v.item()
        _check(report)
        if run_step1:
            backward(appr_u + appr_v)
            state.theta_opt.step()
    _check(report)

    # step 2: everything else. requires_grad is read when backward runs, so
    # theta stays frozen for this pass as well.
    for p in theta:
        p.zero_grad()
    _set_trainable(theta, False)
    try:
        backward(total)
    finally:
        _set_trainable(theta, True)
    state.omega_opt.step()
    state.step += 1
    return report


@dataclass
class FitResult:
    state: TrainState
    log: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_val: float = float("nan")


def validation_score(model, dataset: Dataset, config: RunConfig, history) -> float:
    if not dataset.valid:
        return float("nan")
    rng = substream(config.train.seed, "valid_eval")
    rep = evaluate(model, dataset.valid, dataset.catalog, rng,
                   config.train.eval_negatives, history)
    return rep.ndcg_at_10


def fit(dataset: Dataset, config: RunConfig, log_path=None,
        on_epoch: Callable[[dict], None] | None = None) -> FitResult:
    """Train with per-epoch validation and early stopping; returns the best-validation model."""
    if not dataset.train:
        raise ValueError("empty training set")
    t = config.train
    model = IEDRModel(max(len(dataset.vocab), 1), config)
    state = init_state(model, config)
    train = augment_with_negatives(dataset.train, dataset.catalog,
                                   config.split.train_negatives, state.streams["negatives"])
    history = user_history(dataset.train) if t.eval_exclude_train else None
    result = FitResult(state)
    best_state, stale = None, 0
    for epoch in range(1, t.epochs + 1):
        sums = {k: 0.0 for k in TERMS}
        n_batches, started = 0, time.perf_counter()
        for batch in iterate_batches(train, t.batch_size, state.streams["shuffle"]):
            rep = train_step(state, batch)
            for k in TERMS:
                sums[k] += rep[k]
            n_batches += 1
        wall = (time.perf_counter() - started) * 1000.0 / n_batches
        val = validation_score(model, dataset, config, history)
        row = {"epoch": epoch, **{k: v / n_batches for k, v in sums.items()},
               "val_NDCG@10": val, "wall_ms_per_batch": wall}
        result.log.append(row)
        state.epoch = epoch
        if on_epoch is not None:
            on_epoch(row)
        log.info("epoch %d: L_RP=%.4f val_NDCG@10=%.4f", epoch, row["L_RP"], val)
        if np.isnan(val) or best_state is None or val > result.best_val:
            result.best_val, result.best_epoch = val, epoch
            best_state, stale = model.state_dict(), 0
        else:
            stale += 1
            if stale >= t.patience:
                break
    model.load_state_dict(best_state)
    if log_path is not None:
        write_log(log_path, result.log)
    return result


def write_log(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(LOG_COLUMNS)
        for r in rows:
            out.writerow([r["epoch"], *(repr(float(r[c])) for c in LOG_COLUMNS[1:])])


def read_log(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (int(v) if k == "epoch" else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)]


def save_model(directory, model: IEDRModel, config: RunConfig, vocab=None, extra=None) -> None:
    meta = {"config": config.to_dict(), "vocab_size": int(model.user_encoder.embedding.weight.shape[0])}
    if extra:
        meta.update(extra)
    save_checkpoint(directory, model.state_dict(), config.hash(), extra=meta)
    if vocab is not None:
        vocab.save(Path(directory) / "vocab.json")


def load_model(directory) -> tuple[IEDRModel, RunConfig]:
    manifest = read_manifest(directory)
    config = RunConfig.from_dict(manifest["config"])
    model = IEDRModel(manifest["vocab_size"], config)
    expected = {k: v.shape for k, v in model.state_dict().items()}
    state, _ = load_checkpoint(directory, expected)
    model.load_state_dict(state)
    return model, config
