"""Hot inner loops, each in a numba-compiled and a pure-numpy flavour.

The public names (``lcs_length``, ``clipped_overlap``, ``rouge12_matrix``,
``hier_mask``) dispatch to the numba versions unless the environment
variable ``FACTSUM_DISABLE_NUMBA`` is set to a truthy value or numba is not
importable. Both flavours stay importable under ``*_nb`` / ``*_np`` so they
can be compared directly.
"""

import os

import numpy as np

_flag = os.environ.get("FACTSUM_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

USE_NUMBA = HAS_NUMBA and not _disabled


# ---------------------------------------------------------------- LCS

def lcs_length_np(a, b):
    """LCS length of two int arrays.

    Row recurrence written as a running maximum:
    dp_i[j] = max_{k<=j} max(dp_{i-1}[k], dp_{i-1}[k-1] + [a_i == b_k]).
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return 0
    if a.size < b.size:
        a, b = b, a
    prev = np.zeros(b.size + 1, dtype=np.int64)
    for x in a:
        diag = prev[:-1] + (b == x)
        cur = np.empty_like(prev)
        cur[0] = 0
        np.maximum(prev[1:], diag, out=cur[1:])
        np.maximum.accumulate(cur, out=cur)
        prev = cur
    return int(prev[-1])


@njit(cache=True)
def lcs_length_nb(a, b):
    n = a.shape[0]
    m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        cur[0] = 0
        ai = a[i]
        for j in range(m):
            if ai == b[j]:
                cur[j + 1] = prev[j] + 1
            elif prev[j + 1] >= cur[j]:
                cur[j + 1] = prev[j + 1]
            else:
                cur[j + 1] = cur[j]
        prev, cur = cur, prev
    return prev[m]


# ---------------------------------------------------------------- multiset overlap

def clipped_overlap_np(a, b):
    """Size of the multiset intersection of two int64 key arrays."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return 0
    ka, ca = np.unique(a, return_counts=True)
    kb, cb = np.unique(b, return_counts=True)
    _, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
    return int(np.minimum(ca[ia], cb[ib]).sum())


@njit(cache=True)
def clipped_overlap_nb(a, b):
    if a.shape[0] == 0 or b.shape[0] == 0:
        return 0
    sa = np.sort(a)
    sb = np.sort(b)
    i = 0
    j = 0
    hits = 0
    while i < sa.shape[0] and j < sb.shape[0]:
        if sa[i] == sb[j]:
            hits += 1
            i += 1
            j += 1
        elif sa[i] < sb[j]:
            i += 1
        else:
            j += 1
    return hits


# ---------------------------------------------------------------- alignment scores

def _f1(overlap, n_cand, n_ref):
    if overlap == 0 or n_cand == 0 or n_ref == 0:
        return 0.0
    p = overlap / n_cand
    r = overlap / n_ref
    return 2.0 * p * r / (p + r)


def rouge12_matrix_np(sum_ids, sum_off, src_ids, src_off, base):
    """ROUGE-1 F1 + ROUGE-2 F1 for every (summary unit, source unit) pair.

    Units are given as one flat int64 id array plus offsets (CSR layout);
    ``base`` must exceed every id so bigram keys ``a * base + b`` are unique.
    """
    n_sum = len(sum_off) - 1
    n_src = len(src_off) - 1
    out = np.zeros((n_sum, n_src))
    for g in range(n_sum):
        x = sum_ids[sum_off[g]:sum_off[g + 1]]
        xb = x[:-1] * base + x[1:]
        for f in range(n_src):
            y = src_ids[src_off[f]:src_off[f + 1]]
            yb = y[:-1] * base + y[1:]
            r1 = _f1(clipped_overlap_np(x, y), x.size, y.size)
            r2 = _f1(clipped_overlap_np(xb, yb), xb.size, yb.size)
            out[g, f] = r1 + r2
    return out


@njit(cache=True)
def _f1_nb(overlap, n_cand, n_ref):
    if overlap == 0 or n_cand == 0 or n_ref == 0:
        return 0.0
    p = overlap / n_cand
    r = overlap / n_ref
    return 2.0 * p * r / (p + r)


@njit(cache=True)
def rouge12_matrix_nb(sum_ids, sum_off, src_ids, src_off, base):
    n_sum = sum_off.shape[0] - 1
    n_src = src_off.shape[0] - 1
    out = np.zeros((n_sum, n_src))
    for g in range(n_sum):
        x = sum_ids[sum_off[g]:sum_off[g + 1]]
        xb = x[:-1] * base + x[1:] if x.shape[0] > 1 else np.empty(0, np.int64)
        for f in range(n_src):
            y = src_ids[src_off[f]:src_off[f + 1]]
            yb = y[:-1] * base + y[1:] if y.shape[0] > 1 else np.empty(0, np.int64)
            r1 = _f1_nb(clipped_overlap_nb(x, y), x.shape[0], y.shape[0])
            r2 = _f1_nb(clipped_overlap_nb(xb, yb), xb.shape[0], yb.shape[0])
            out[g, f] = r1 + r2
    return out


# ---------------------------------------------------------------- hierarchical mask

def hier_mask_np(levels, sent_ids, fact_ids, within_fact):
    """Incoming-edge matrix; entry [i, j] = 1 iff token i receives from token j.

    levels: 1 doc, 2 sentence, 3 fact, 4 word/[seq].
    sent_ids / fact_ids: owning sentence / fact per token, -1 where none.
    """
    lv = np.asarray(levels, dtype=np.int64)
    sid = np.asarray(sent_ids, dtype=np.int64)
    fid = np.asarray(fact_ids, dtype=np.int64)
    li, lj = lv[:, None], lv[None, :]
    same_level = li == lj
    if within_fact:
        word = (li == 4) & same_level
        same_level = np.where(word, fid[:, None] == fid[None, :], same_level)
    child = lj == li + 1
    owns = np.zeros_like(child)
    owns |= (li == 1)
    owns |= (li == 2) & (sid[:, None] == sid[None, :])
    owns |= (li == 3) & (fid[:, None] == fid[None, :])
    m = same_level | (child & owns)
    np.fill_diagonal(m, True)
    return m.astype(np.uint8)


@njit(cache=True)
def hier_mask_nb(levels, sent_ids, fact_ids, within_fact):
    n = levels.shape[0]
    m = np.zeros((n, n), dtype=np.uint8)
    for i in range(n):
        li = levels[i]
        for j in range(n):
            lj = levels[j]
            if i == j:
                m[i, j] = 1
            elif li == lj:
                if li == 4 and within_fact:
                    if fact_ids[i] == fact_ids[j]:
                        m[i, j] = 1
                else:
                    m[i, j] = 1
            elif lj == li + 1:
                if li == 1:
                    m[i, j] = 1
                elif li == 2 and sent_ids[i] == sent_ids[j]:
                    m[i, j] = 1
                elif li == 3 and fact_ids[i] == fact_ids[j]:
                    m[i, j] = 1
    return m


if USE_NUMBA:
    def lcs_length(a, b):
        return int(lcs_length_nb(np.ascontiguousarray(a, dtype=np.int64),
                                 np.ascontiguousarray(b, dtype=np.int64)))

    def clipped_overlap(a, b):
        return int(clipped_overlap_nb(np.ascontiguousarray(a, dtype=np.int64),
                                      np.ascontiguousarray(b, dtype=np.int64)))

    def rouge12_matrix(sum_ids, sum_off, src_ids, src_off, base):
        return rouge12_matrix_nb(sum_ids, sum_off, src_ids, src_off, np.int64(base))

    def hier_mask(levels, sent_ids, fact_ids, within_fact):
        return hier_mask_nb(np.asarray(levels, dtype=np.int64),
                            np.asarray(sent_ids, dtype=np.int64),
                            np.asarray(fact_ids, dtype=np.int64), bool(within_fact))
else:
    lcs_length = lcs_length_np
    clipped_overlap = clipped_overlap_np
    rouge12_matrix = rouge12_matrix_np
    hier_mask = hier_mask_np
