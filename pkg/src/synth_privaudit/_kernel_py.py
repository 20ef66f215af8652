"""Pure numpy implementation of the matching kernels.

Same signatures and results as the compiled ``_kernel_c`` module. All code
matrices are ``int32`` (rows x attributes) sharing one vocabulary per column.
"""

import numpy as np

_CHUNK_CELLS = 4_000_000


def _keys(attack, synth, cols):
    """Integer row keys over ``cols`` that are equal iff the rows are equal."""
    sub_a = attack[:, cols].astype(np.int64)
    sub_s = synth[:, cols].astype(np.int64)
    if len(cols) == 0:
        return np.zeros(len(attack), np.int64), np.zeros(len(synth), np.int64)
    hi = 0
    if sub_a.size:
        hi = max(hi, int(sub_a.max()))
    if sub_s.size:
        hi = max(hi, int(sub_s.max()))
    radix = hi + 1
    if radix ** len(cols) < 2**62:
        weights = radix ** np.arange(len(cols) - 1, -1, -1, dtype=np.int64)
        return sub_a @ weights, sub_s @ weights
    _, inv = np.unique(np.concatenate([sub_a, sub_s]), axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    return inv[: len(attack)], inv[len(attack) :]


def _exact_flags(attack, synth, cols):
    ka, ks = _keys(attack, synth, cols)
    return np.isin(ka, ks)


def _hamming_flags(attack, synth, cols, threshold):
    out = np.zeros(len(attack), dtype=bool)
    if len(synth) == 0:
        return out
    sa = attack[:, cols]
    ss = synth[:, cols]
    step = max(1, _CHUNK_CELLS // max(1, len(synth) * max(1, len(cols))))
    for start in range(0, len(attack), step):
        block = sa[start : start + step]
        dist = (block[:, None, :] != ss[None, :, :]).sum(axis=2)
        out[start : start + step] = (dist <= threshold).any(axis=1)
    return out


def match_flags(attack, synth, cols, threshold=0):
    cols = np.asarray(cols, dtype=np.intp)
    if threshold == 0:
        flags = _exact_flags(attack, synth, cols)
    else:
        flags = _hamming_flags(attack, synth, cols, threshold)
    return flags.astype(np.uint8)


def subset_tp_fp(attack, member, synth, masks, threshold=0):
    """True and false positive counts for each attribute subset mask."""
    member = np.asarray(member, dtype=bool)
    out = np.zeros((len(masks), 2), dtype=np.int64)
    for i, mask in enumerate(masks):
        flags = match_flags(attack, synth, np.flatnonzero(mask), threshold).astype(bool)
        out[i, 0] = np.count_nonzero(flags & member)
        out[i, 1] = np.count_nonzero(flags & ~member)
    return out


def min_hamming(src, dst, cols, exclude_self=False):
    """Closest Hamming distance from every ``src`` row to ``dst``.

    With ``exclude_self`` the pair (i, i) is skipped. Rows with no eligible
    partner get ``len(cols) + 1``.
    """
    cols = np.asarray(cols, dtype=np.intp)
    out = np.full(len(src), len(cols) + 1, dtype=np.int32)
    if len(dst) == 0:
        return out
    sa = src[:, cols]
    sd = dst[:, cols]
    step = max(1, _CHUNK_CELLS // max(1, len(dst) * max(1, len(cols))))
    for start in range(0, len(src), step):
        block = sa[start : start + step]
        dist = (block[:, None, :] != sd[None, :, :]).sum(axis=2).astype(np.int32)
        if exclude_self:
            rows = np.arange(start, start + len(block))
            ok = rows < len(dst)
            dist[np.flatnonzero(ok), rows[ok]] = len(cols) + 1
        out[start : start + step] = dist.min(axis=1)
    return out
