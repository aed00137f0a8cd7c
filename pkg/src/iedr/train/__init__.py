from .config import VARIANTS, ConfigError, RunConfig, TrainConfig, apply_variant
from .model import IEDRModel, encode_unique, logits, predict, rp_loss
from .trainer import (
    LOG_COLUMNS,
    TERMS,
    FitResult,
    NumericFailure,
    TrainState,
    fit,
    heads_loss,
    init_state,
    load_model,
    read_log,
    risk_terms,
    save_model,
    total_risk,
    train_step,
    write_log,
)

__all__ = [
    "ConfigError", "FitResult", "IEDRModel", "LOG_COLUMNS", "NumericFailure", "RunConfig",
    "TERMS", "TrainConfig", "TrainState", "VARIANTS", "apply_variant", "encode_unique", "fit",
    "heads_loss", "init_state", "load_model", "logits", "predict", "read_log", "risk_terms",
    "rp_loss", "save_model", "total_risk", "train_step", "write_log",
]
