from .losses import (
    DIS_MODES,
    NEGGEN_MODES,
    CiclConfig,
    DisConfig,
    VariationalHead,
    appr_loss,
    bi_appr_loss,
    bi_dis_loss,
    cicl_batch,
    cicl_loss,
    gen_positive_context,
    info_nce,
    sample_other_context,
    sample_other_indices,
    split_cicl_batch,
    vclub_loss_asymmetric,
)
from .probes import PROBES, ProbeConfig, probe_club, probe_mine, write_probe_rows

__all__ = [
    "CiclConfig", "DIS_MODES", "DisConfig", "NEGGEN_MODES", "PROBES", "ProbeConfig",
    "VariationalHead", "appr_loss", "bi_appr_loss", "bi_dis_loss", "cicl_batch", "cicl_loss",
    "gen_positive_context", "info_nce", "probe_club", "probe_mine", "sample_other_context",
    "sample_other_indices", "split_cicl_batch", "vclub_loss_asymmetric", "write_probe_rows",
]
