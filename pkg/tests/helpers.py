import contextlib

import numpy as np
from hypothesis import strategies as st

from synth_privaudit import _kernel_py, kernels
from synth_privaudit.tabular import (
    CATEGORICAL,
    CONTINUOUS,
    OTHER,
    QUASI_IDENTIFIER,
    SENSITIVE,
    AttributeSchema,
    Dataset,
)

try:
    from synth_privaudit import _kernel_c
except ImportError:  # pragma: no cover
    _kernel_c = None

BACKENDS = {"python": _kernel_py}
if _kernel_c is not None:
    BACKENDS["cython"] = _kernel_c


@contextlib.contextmanager
def use_backend(name):
    mod = BACKENDS[name]
    saved = (kernels.match_flags, kernels.subset_tp_fp, kernels.min_hamming)
    kernels.match_flags, kernels.subset_tp_fp, kernels.min_hamming = (
        mod.match_flags, mod.subset_tp_fp, mod.min_hamming)
    try:
        yield mod
    finally:
        kernels.match_flags, kernels.subset_tp_fp, kernels.min_hamming = saved


def qi_schema(n, prefix="q"):
    return tuple(AttributeSchema(f"{prefix}{i}", CATEGORICAL, QUASI_IDENTIFIER) for i in range(n))


def dataset(rows, schema):
    names = [a.name for a in schema]
    cols = {n: [r[i] for r in rows] for i, n in enumerate(names)}
    return Dataset(schema, cols)


def table(rows, names, roles=None, kinds=None):
    roles = roles or {}
    kinds = kinds or {}
    schema = tuple(
        AttributeSchema(n, kinds.get(n, CATEGORICAL), roles.get(n, QUASI_IDENTIFIER)) for n in names
    )
    return dataset(rows, schema)


@st.composite
def toy_fixture(draw, max_rows=8, max_attrs=5, alphabet="abc"):
    """Attack rows, labels and synthetic rows over 1-5 categorical attributes."""
    k = draw(st.integers(1, max_attrs))
    row = st.tuples(*[st.sampled_from(alphabet)] * k)
    attack = draw(st.lists(row, min_size=1, max_size=max_rows))
    synth = draw(st.lists(row, min_size=1, max_size=max_rows))
    labels = draw(st.lists(st.booleans(), min_size=len(attack), max_size=len(attack)))
    return k, attack, labels, synth


def random_codes(rng, n, k, card):
    return np.ascontiguousarray(rng.integers(0, card, (n, k)).astype(np.int32))


__all__ = [
    "BACKENDS", "use_backend", "qi_schema", "dataset", "table", "toy_fixture", "random_codes",
    "CATEGORICAL", "CONTINUOUS", "QUASI_IDENTIFIER", "SENSITIVE", "OTHER", "AttributeSchema", "Dataset",
]
