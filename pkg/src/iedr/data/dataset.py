"""A split dataset bundled with its vocabulary and item catalog."""
from __future__ import annotations

from dataclasses import dataclass

from .schema import Instance, ItemCatalog, SplitSpec, Vocabulary
from .split import split_leave_last_two


@dataclass
class Dataset:
    vocab: Vocabulary
    train: list[Instance]
    valid: list[Instance]
    test: list[Instance]
    catalog: ItemCatalog

    @classmethod
    def from_instances(cls, vocab: Vocabulary, instances: list[Instance],
                       spec: SplitSpec = SplitSpec(),
                       catalog: ItemCatalog | None = None) -> "Dataset":
        """Split the positive records; label-0 lines are ignored (negatives are resampled)."""
        positives = [i for i in instances if i.label == 1]
        train, valid, test = split_leave_last_two(positives, spec)
        if catalog is None:
            catalog = ItemCatalog.from_instances(positives)
        return cls(vocab, train, valid, test, catalog)

    def counts(self, spec: SplitSpec = SplitSpec()) -> dict[str, int]:
        """Raw positive counts next to negative-augmented / candidate-expanded counts."""
        users = {i.user_key for i in self.train + self.valid + self.test}
        n_eval = spec.eval_negatives + 1
        return {
            "users": len(users),
            "items": len(self.catalog),
            "train_positives": len(self.train),
            "train_augmented": len(self.train) * (1 + spec.train_negatives),
            "valid_positives": len(self.valid),
            "valid_candidates": len(self.valid) * n_eval,
            "test_positives": len(self.test),
            "test_candidates": len(self.test) * n_eval,
        }
