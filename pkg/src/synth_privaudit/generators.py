"""Toy synthesizers used by the simulations.

``swr`` resamples training rows with replacement and so replicates records,
like a synthesizer that does not generalize at all. ``marginal`` draws every
attribute independently from its training marginal and keeps no joint
structure. Neither is meant to produce useful synthetic data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .tabular import Dataset

SWR = "swr"
MARGINAL = "marginal"


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    seed: int
    size: int

    def __post_init__(self):
        if self.kind not in (SWR, MARGINAL):
            raise ConfigError(f"unknown generator {self.kind!r}")
        if self.size <= 0:
            raise ConfigError("generator output size must be positive")

    def generate(self, train: Dataset) -> Dataset:
        fn = swr_generate if self.kind == SWR else marginal_generate
        return fn(train, self.size, self.seed)


def swr_generate(train: Dataset, m: int, seed: int) -> Dataset:
    if len(train) == 0:
        raise ConfigError("training data is empty")
    rng = np.random.default_rng(seed)
    picked = train.take(rng.integers(0, len(train), m))
    return Dataset(train.schema, {n: picked.column(n) for n in train.names})


def marginal_generate(train: Dataset, m: int, seed: int) -> Dataset:
    if len(train) == 0:
        raise ConfigError("training data is empty")
    rng = np.random.default_rng(seed)
    columns = {}
    for name in train.names:
        columns[name] = train.column(name)[rng.integers(0, len(train), m)]
    return Dataset(train.schema, columns)
