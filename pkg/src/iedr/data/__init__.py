from .schema import (
    GROUPS,
    UNK,
    DataError,
    Instance,
    ItemCatalog,
    SplitSpec,
    SyntheticSpec,
    Vocabulary,
)
from .io import format_instance, ingest, parse_lines, write_tsv
from .split import bucketize_time, split_leave_last_two
from .sampling import (
    augment_with_negatives,
    sample_eval_candidates,
    sample_train_negatives,
    user_history,
)
from .synthetic import SyntheticTruth, context_index, entity_features, generate_synthetic
from .batching import Batch, iterate_batches, pad
from .dataset import Dataset
from .convert import PRESETS, TableLayout, convert_preset, convert_table

__all__ = [
    "Batch", "DataError", "Dataset", "GROUPS", "Instance", "ItemCatalog", "PRESETS", "SplitSpec",
    "SyntheticSpec", "SyntheticTruth", "TableLayout", "UNK", "Vocabulary",
    "augment_with_negatives", "bucketize_time", "context_index", "convert_preset",
    "convert_table", "entity_features", "format_instance", "generate_synthetic", "ingest", "iterate_batches",
    "pad", "parse_lines", "sample_eval_candidates", "sample_train_negatives",
    "split_leave_last_two", "user_history", "write_tsv",
]
