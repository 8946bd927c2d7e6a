"""Hot numeric kernels: median-split partitioning, class-size scans,
nearest-neighbour link counting and confidence-window counting.

Every kernel is written once in numba-compatible numpy style. When numba is
importable the public names are jit-compiled (the default); setting
``KEANON_NUMBA=0`` in the environment keeps the pure-numpy path. Both lanes
execute the same source and return bit-identical results; ``*_py`` aliases
always point at the uncompiled versions for parity tests and benchmarks.
"""

import os

import numpy as np


def mondrian_partition(data, full_ranges, k):
    """Recursive strict median-split partitioning into regions of >= k rows.

    ``data`` is an (n, q) float64 matrix (categoricals pre-mapped to ranks),
    ``full_ranges`` the per-column max-min over the whole matrix. At each
    region the column with the widest normalised range is split at the median
    (lower half takes values <= median); a split leaving either half below k
    is disallowed and the next-widest column is tried. Regions with no
    allowable split become leaves.

    Returns (labels, n_leaves): ``labels[i]`` is the leaf id of row i, leaves
    numbered in depth-first order, lower half first.
    """
    n, q = data.shape
    order = np.arange(n, dtype=np.int64)
    labels = np.full(n, -1, dtype=np.int64)
    cap = 2 * n + 2
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_leaves = 0
    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        m = hi - lo
        members = order[lo:hi]
        widths = np.empty(q, dtype=np.float64)
        for a in range(q):
            vals = data[:, a][members]
            fr = full_ranges[a]
            if fr > 0.0:
                widths[a] = (vals.max() - vals.min()) / fr
            else:
                widths[a] = 0.0
        split_done = False
        tried = np.zeros(q, dtype=np.bool_)
        for _attempt in range(q):
            best_a = -1
            best_w = -1.0
            for a in range(q):
                if not tried[a] and widths[a] > best_w:
                    best_w = widths[a]
                    best_a = a
            if best_a < 0:
                break
            tried[best_a] = True
            vals = data[:, best_a][members]
            sv = np.sort(vals)
            med = 0.5 * (sv[(m - 1) // 2] + sv[m // 2])
            mask = vals <= med
            n_lo = int(np.sum(mask))
            if n_lo >= k and (m - n_lo) >= k:
                lower = members[mask]
                upper = members[~mask]
                order[lo:lo + n_lo] = lower
                order[lo + n_lo:hi] = upper
                stack_lo[top] = lo + n_lo
                stack_hi[top] = hi
                top += 1
                stack_lo[top] = lo
                stack_hi[top] = lo + n_lo
                top += 1
                split_done = True
                break
        if not split_done:
            labels[order[lo:hi]] = n_leaves
            n_leaves += 1
    return labels, n_leaves


def combine_level_codes(code_cols, levels, strides):
    """Mixed-radix record keys for one lattice node.

    ``code_cols[a, l, i]`` is record i's dense token code for attribute a at
    level l; the combined key is ``sum_a code * strides[a]``.
    """
    q = levels.shape[0]
    n = code_cols.shape[2]
    combined = np.zeros(n, dtype=np.int64)
    for a in range(q):
        combined += code_cols[a, levels[a]] * strides[a]
    return combined


def suppressed_below_k(counts, k):
    """Total records sitting in non-empty groups smaller than k."""
    mask = (counts > 0) & (counts < k)
    return int(np.sum(counts[mask]))


def nearest_link_count(orig, noisy):
    """How many records' noisy values are nearest (ties included) to their own
    originals, among all original values of the class."""
    m = orig.shape[0]
    sv = np.sort(orig)
    left = np.searchsorted(sv, noisy)
    ri = np.minimum(left, m - 1)
    li = np.maximum(left - 1, 0)
    d_right = np.abs(sv[ri] - noisy)
    d_left = np.abs(noisy - sv[li])
    best = np.minimum(d_left, d_right)
    own = np.abs(noisy - orig)
    return int(np.sum(own <= best))


def window_counts(orig, noisy, rc):
    """Per record, the number of original values inside [noisy - rc, noisy + rc]."""
    sv = np.sort(orig)
    lo = np.searchsorted(sv, noisy - rc, side="left")
    hi = np.searchsorted(sv, noisy + rc, side="right")
    return hi - lo


mondrian_partition_py = mondrian_partition
combine_level_codes_py = combine_level_codes
suppressed_below_k_py = suppressed_below_k
nearest_link_count_py = nearest_link_count
window_counts_py = window_counts

BACKEND = "numpy"
_flag = os.environ.get("KEANON_NUMBA", "1").strip().lower()
if _flag not in ("0", "false", "no", "off"):
    try:
        from numba import njit
    except ImportError:
        njit = None
    if njit is not None:
        _jit = njit(cache=True, nogil=True)
        mondrian_partition = _jit(mondrian_partition)
        combine_level_codes = _jit(combine_level_codes)
        suppressed_below_k = _jit(suppressed_below_k)
        nearest_link_count = _jit(nearest_link_count)
        window_counts = _jit(window_counts)
        BACKEND = "numba"
