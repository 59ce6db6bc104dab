"""Real-lattice formulation of ML decoding and the brute-force oracle.

The whitened superframe observation is linear in the information
symbols, so ML detection is a closest-point search in a real lattice
whose basis combines sqrt(SNR), the per-frame equivalent channels and
the code generator.  Complex quantities are realified in interleaved
(re, im) layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..algebra import BudgetError
from ..channel import EquivalentChannel
from ..codes import CodeSpec, Constellation

__all__ = ["LatticeProblem", "LatticeTemplate", "build_lattice", "exhaustive_ml", "realify_matrix", "realify_vector"]


def realify_matrix(A: np.ndarray) -> np.ndarray:
    p, q = A.shape
    out = np.empty((2 * p, 2 * q))
    out[0::2, 0::2] = A.real
    out[0::2, 1::2] = -A.imag
    out[1::2, 0::2] = A.imag
    out[1::2, 1::2] = A.real
    return out


def realify_vector(v: np.ndarray) -> np.ndarray:
    out = np.empty(2 * v.shape[0])
    out[0::2] = v.real
    out[1::2] = v.imag
    return out


def complexify_vector(v: np.ndarray) -> np.ndarray:
    return v[0::2] + 1j * v[1::2]


@dataclass(frozen=True)
class LatticeProblem:
    """Closest-point instance: minimize ||target - basis @ s||."""

    basis: np.ndarray  # real (M, K), full column rank for random fading
    target: np.ndarray  # real (M,)
    alphabet: tuple[np.ndarray, ...]  # per-coordinate sorted candidate values

    def __post_init__(self):
        if self.basis.shape[1] != len(self.alphabet):
            raise ValueError("one alphabet per basis column required")
        if self.basis.shape[0] != self.target.shape[0]:
            raise ValueError("target length must match basis rows")

    @property
    def n_candidates(self) -> int:
        out = 1
        for a in self.alphabet:
            out *= len(a)
        return out

    def values(self, idx: np.ndarray) -> np.ndarray:
        """Per-coordinate real values selected by an index vector."""
        return np.array([a[i] for a, i in zip(self.alphabet, idx)])

    def symbols(self, idx: np.ndarray) -> np.ndarray:
        """Complex symbol vector from an index vector (interleaved layout)."""
        return complexify_vector(self.values(idx))


@dataclass(frozen=True)
class LatticeTemplate:
    """Basis and alphabet for one (code, channel, SNR) triple.

    The template maps transmitted symbols to the noiseless whitened
    observation; attaching a received vector yields a LatticeProblem.
    """

    basis: np.ndarray
    alphabet: tuple[np.ndarray, ...]
    complex_map: np.ndarray  # (M/2, K/2) complex, for cross checks

    def with_target(self, received: np.ndarray) -> LatticeProblem:
        y = realify_vector(np.asarray(received, dtype=complex))
        return LatticeProblem(basis=self.basis, target=y, alphabet=self.alphabet)

    def noiseless(self, symbols: np.ndarray) -> np.ndarray:
        return self.complex_map @ np.asarray(symbols, dtype=complex)


def build_lattice(
    code: CodeSpec,
    ecs: Sequence[EquivalentChannel] | EquivalentChannel,
    snr: float,
    constellation: Constellation,
) -> LatticeTemplate:
    """Compose channel and generator into one real decoding basis.

    Per frame i the whitened observation is sqrt(SNR) * He_i @ Xi_i plus
    white noise; stacking column-major frame by frame makes the map from
    symbols to observations (I kron He_i) applied to the generator rows
    of each block.
    """
    if isinstance(ecs, EquivalentChannel):
        ecs = [ecs]
    if len(ecs) != code.N:
        raise ValueError(f"code {code.id} spans {code.N} frames, got {len(ecs)} channels")
    if constellation.kind != "qam":
        raise ValueError("lattice decoding is wired for QAM grids")
    d = code.block_dim
    K = code.symbols_per_codeword
    rows_out = ecs[0].He.shape[0]
    for ec in ecs:
        if ec.He.shape != (rows_out, d):
            raise ValueError(f"equivalent channel is {ec.He.shape}, expected ({rows_out}, {d})")

    G = code.generator.entries
    parts = []
    for i, ec in enumerate(ecs):
        Gi = G[i * d * d : (i + 1) * d * d, :].reshape(d, d, K)  # (col, row, sym)
        out = np.einsum("rm,cmk->crk", ec.He, Gi)  # (col, out_row, sym)
        parts.append(out.reshape(d * rows_out, K))
    cmap = math.sqrt(snr) * np.vstack(parts)

    side = math.isqrt(constellation.M)
    pam = np.arange(-(side - 1), side, 2) * constellation.energy_scale
    alphabet = tuple(pam.copy() for _ in range(2 * K))
    return LatticeTemplate(basis=realify_matrix(cmap), alphabet=alphabet, complex_map=cmap)


def exhaustive_ml(p: LatticeProblem, budget: int = 1 << 22, chunk: int = 1 << 14) -> np.ndarray:
    """Global argmin by full enumeration, lexicographic tie-break.

    Enumeration runs in lexicographic index order and keeps the first
    strict minimum, which resolves ties toward the smaller index vector.
    """
    total = p.n_candidates
    if total > budget:
        raise BudgetError(f"exhaustive search needs {total} candidates (budget {budget})")
    K = len(p.alphabet)
    sizes = np.array([len(a) for a in p.alphabet], dtype=np.int64)

    best_val = np.inf
    best_idx = None
    pos = 0
    while pos < total:
        n = min(chunk, total - pos)
        flat = pos + np.arange(n)
        digits = np.empty((n, K), dtype=np.int64)
        rem = flat
        for j in range(K - 1, -1, -1):
            digits[:, j] = rem % sizes[j]
            rem = rem // sizes[j]
        vals = np.empty((n, K))
        for j in range(K):
            vals[:, j] = p.alphabet[j][digits[:, j]]
        resid = vals @ p.basis.T - p.target
        dist = np.einsum("ij,ij->i", resid, resid)
        jmin = int(np.argmin(dist))
        if dist[jmin] < best_val:
            best_val = float(dist[jmin])
            best_idx = digits[jmin].copy()
        pos += n
    return best_idx
