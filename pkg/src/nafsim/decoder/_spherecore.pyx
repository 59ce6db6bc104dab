# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled sphere-decoder kernel: depth-first closest-point search with
zigzag child ordering and lexicographic tie-breaking, identical in
semantics to the pure-Python fallback."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


cdef inline bint _lex_less(cnp.int64_t[::1] a, cnp.int64_t[::1] b, Py_ssize_t n) noexcept:
    cdef Py_ssize_t i
    for i in range(n):
        if a[i] != b[i]:
            return a[i] < b[i]
    return False


def sphere_search(double[:, ::1] R, double[::1] y, double[:, ::1] alph,
                  cnp.int64_t[::1] sizes, cnp.int64_t[::1] perm,
                  Py_ssize_t K, double init_dist, cnp.int64_t[::1] init_idx):
    cdef double best_dist = init_dist
    cdef cnp.ndarray[cnp.int64_t, ndim=1] best_idx_arr = np.array(init_idx, dtype=np.int64)
    cdef cnp.int64_t[::1] best_idx = best_idx_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cand_arr = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] cand = cand_arr

    cdef cnp.ndarray[cnp.int64_t, ndim=1] lo_arr = np.zeros(K, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hi_arr = np.zeros(K, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] chosen_arr = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] lo = lo_arr
    cdef cnp.int64_t[::1] hi = hi_arr
    cdef cnp.int64_t[::1] chosen = chosen_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] center_arr = np.zeros(K)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] partial_arr = np.zeros(K + 1)
    cdef double[::1] center = center_arr
    cdef double[::1] partial = partial_arr

    cdef Py_ssize_t k, j, ip, l, h, pick, i
    cdef double acc, e, d

    k = K - 1
    # enter level k
    acc = y[k]
    for j in range(k + 1, K):
        acc -= R[k, j] * alph[j, chosen[j]]
    center[k] = acc / R[k, k]
    ip = 0
    while ip < sizes[k] and alph[k, ip] < center[k]:
        ip += 1
    lo[k] = ip - 1
    hi[k] = ip

    while True:
        # pick next child at level k in increasing |value - center| order
        l = lo[k]
        h = hi[k]
        if l < 0 and h >= sizes[k]:
            pick = -1
        elif l < 0:
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

        if pick < 0:
            k += 1
            if k >= K:
                break
            continue

        e = y[k]
        for j in range(k + 1, K):
            e -= R[k, j] * alph[j, chosen[j]]
        e -= R[k, k] * alph[k, pick]
        d = partial[k + 1] + e * e
        if d > best_dist:
            k += 1
            if k >= K:
                break
            continue
        chosen[k] = pick
        if k == 0:
            for i in range(K):
                cand[perm[i]] = chosen[i]
            if d < best_dist or (d == best_dist and _lex_less(cand, best_idx, K)):
                best_dist = d
                for i in range(K):
                    best_idx[i] = cand[i]
            continue
        partial[k] = d
        k -= 1
        acc = y[k]
        for j in range(k + 1, K):
            acc -= R[k, j] * alph[j, chosen[j]]
        center[k] = acc / R[k, k]
        ip = 0
        while ip < sizes[k] and alph[k, ip] < center[k]:
            ip += 1
        lo[k] = ip - 1
        hi[k] = ip

    return best_idx_arr, best_dist
