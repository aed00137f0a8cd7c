"""Named random substreams derived from one root seed.

Each consumer (``"init"``, ``"dropout"``, ``"sampling"``, ...) draws from its
own generator, so switching one component on or off never shifts the numbers
another component sees.
"""
from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), key]))


class Streams:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._cache: dict[str, np.random.Generator] = {}

    def __getitem__(self, name: str) -> np.random.Generator:
        if name not in self._cache:
            self._cache[name] = substream(self.seed, name)
        return self._cache[name]
