"""Exact ML decoding via sphere search over an equivalent real lattice.

A compiled kernel carries the hot tree search; a pure-Python twin is
selected at import time when the extension is unavailable (or when
NAFSIM_PURE_PYTHON=1 is set).  Both kernels share exact semantics, so
results are bit-identical across backends.
"""

from __future__ import annotations

import os

import numpy as np

from .lattice import (
    LatticeProblem,
    LatticeTemplate,
    build_lattice,
    exhaustive_ml,
    realify_matrix,
    realify_vector,
)
from . import _sphere_py

if os.environ.get("NAFSIM_PURE_PYTHON"):
    _kernel = _sphere_py
else:
    try:
        from . import _spherecore as _kernel
    except ImportError:
        _kernel = _sphere_py

__all__ = [
    "LatticeProblem",
    "LatticeTemplate",
    "build_lattice",
    "exhaustive_ml",
    "sphere_decode",
    "backend_name",
]


def backend_name() -> str:
    """Which sphere kernel is active: 'cython' or 'python'."""
    return _kernel.BACKEND


def _preprocess(p: LatticeProblem):
    """Column sort by norm, QR reduction, Babai seed for the radius."""
    B = p.basis
    K = B.shape[1]
    norms = np.linalg.norm(B, axis=0)
    # largest-norm columns decided first (top of the tree)
    perm = np.argsort(norms, kind="stable")
    Q, R = np.linalg.qr(B[:, perm])
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    R = R * signs[:, None]
    y = (Q * signs[None, :]).conj().T @ p.target

    sizes = np.array([len(p.alphabet[j]) for j in perm], dtype=np.int64)
    max_size = int(sizes.max())
    alph = np.zeros((K, max_size))
    for lev, j in enumerate(perm):
        alph[lev, : sizes[lev]] = p.alphabet[j]

    # Babai: back-substitute, snapping each level to its nearest value
    chosen = np.zeros(K, dtype=np.int64)
    dist = 0.0
    for k in range(K - 1, -1, -1):
        acc = y[k] - R[k, k + 1 :] @ alph[np.arange(k + 1, K), chosen[k + 1 :]]
        c = acc / R[k, k]
        arr = alph[k, : sizes[k]]
        chosen[k] = int(np.argmin(np.abs(arr - c)))
        e = acc - R[k, k] * arr[chosen[k]]
        dist += float(e * e)
    init_idx = np.zeros(K, dtype=np.int64)
    init_idx[perm] = chosen
    return R, y, alph, sizes, np.asarray(perm, dtype=np.int64), init_idx, dist


def sphere_decode(p: LatticeProblem, rank_tol: float = 1e-10) -> np.ndarray:
    """Exact ML index vector for a lattice problem.

    Falls back to the exhaustive oracle if the reduced basis is rank
    deficient beyond tolerance (probability-zero fading draws, identity
    channels at zero SNR, and the like).
    """
    R, y, alph, sizes, perm, init_idx, init_dist = _preprocess(p)
    diag = np.abs(np.diag(R))
    if diag.min() <= rank_tol * max(1.0, diag.max()):
        return exhaustive_ml(p)
    R = np.ascontiguousarray(R)
    y = np.ascontiguousarray(y)
    alph = np.ascontiguousarray(alph)
    best_idx, _ = _kernel.sphere_search(R, y, alph, sizes, perm, len(sizes), init_dist, init_idx)
    return np.asarray(best_idx, dtype=np.int64)
