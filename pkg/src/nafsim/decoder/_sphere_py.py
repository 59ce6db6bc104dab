"""Pure-Python sphere decoder kernel, import-time fallback for the
compiled one.  Semantics are identical: exact ML with lexicographic
tie-breaking on the original index vector."""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _lex_less(a, b) -> bool:
    for x, y in zip(a, b):
        if x != y:
            return x < y
    return False


def sphere_search(R, y, alph, sizes, perm, K, init_dist, init_idx):
    """Depth-first search over the upper-triangular system.

    R, y: QR-reduced basis and target (permuted coordinate order).
    alph: (K, max_size) padded per-level sorted values; sizes: valid
    counts.  perm maps level -> original coordinate.  init_dist/init_idx
    seed the radius (Babai point, original coordinate order).

    Returns the best index vector in original coordinate order.
    """
    best_dist = init_dist
    best_idx = np.array(init_idx, dtype=np.int64)

    # per-level state for the zigzag enumeration around the center
    lo = np.zeros(K, dtype=np.int64)
    hi = np.zeros(K, dtype=np.int64)
    center = np.zeros(K)
    partial = np.zeros(K + 1)  # partial[k] = distance accumulated above level k
    chosen = np.zeros(K, dtype=np.int64)  # per-level alphabet index (permuted order)

    def enter(k):
        acc = y[k]
        for j in range(k + 1, K):
            acc -= R[k, j] * alph[j, chosen[j]]
        center[k] = acc / R[k, k]
        ip = int(np.searchsorted(alph[k, : sizes[k]], center[k]))
        lo[k] = ip - 1
        hi[k] = ip

    def next_child(k):
        """Next value index at level k in increasing |value - center| order."""
        l, h = lo[k], hi[k]
        if l < 0 and h >= sizes[k]:
            return -1
        if l < 0:
            pick = h
            hi[k] = h + 1
        elif h >= sizes[k]:
            pick = l
            lo[k] = l - 1
        elif center[k] - alph[k, l] <= alph[k, h] - center[k]:
            pick = l
            lo[k] = l - 1
        else:
            pick = h
            hi[k] = h + 1
        return int(pick)

    k = K - 1
    enter(k)
    while True:
        pick = next_child(k)
        if pick < 0:
            k += 1  # level exhausted, back up
            if k >= K:
                break
            continue
        e = y[k]
        for j in range(k + 1, K):
            e -= R[k, j] * alph[j, chosen[j]]
        e -= R[k, k] * alph[k, pick]
        d = partial[k + 1] + e * e
        if d > best_dist:
            # zigzag order: every later sibling is at least this far
            k += 1
            if k >= K:
                break
            continue
        chosen[k] = pick
        if k == 0:
            cand = np.empty(K, dtype=np.int64)
            cand[perm] = chosen
            if d < best_dist or (d == best_dist and _lex_less(cand, best_idx)):
                best_dist = d
                best_idx = cand
            continue  # try next sibling at level 0
        partial[k] = d
        k -= 1
        enter(k)
    return best_idx, best_dist
