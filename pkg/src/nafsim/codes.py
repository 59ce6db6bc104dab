"""Constellations, linear encoding into block-diagonal codewords, and the
splitting of codewords into per-cooperation-frame transmit matrices."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import algebra
from .algebra import GeneratorMatrix, RingId

__all__ = [
    "Constellation",
    "CodeSpec",
    "Codeword",
    "make_constellation",
    "get_code",
    "encode",
    "split_frames",
    "export_codeword_csv",
]


@dataclass(frozen=True)
class Constellation:
    """Unit-mean-energy symbol set on a ring lattice."""

    kind: str  # "qam" or "hex"
    M: int
    points: np.ndarray  # normalized, mean |p|^2 == 1
    lattice_points: np.ndarray  # unnormalized ring elements
    energy_scale: float  # points = lattice_points * energy_scale

    @property
    def bits_per_symbol(self) -> float:
        return math.log2(self.M)

    def integer_differences(self) -> np.ndarray:
        """All pairwise differences of the unnormalized lattice points."""
        diffs = self.lattice_points[:, None] - self.lattice_points[None, :]
        flat = diffs.ravel()
        # deduplicate on the lattice: entries are (near-)exact integers
        keys = np.round(flat.real, 9) + 1j * np.round(flat.imag, 9)
        _, idx = np.unique(keys, return_index=True)
        return flat[np.sort(idx)]


def make_constellation(kind: str, M: int) -> Constellation:
    """Build a QAM (Z[i] grid) or HEX (Z[j] grid) constellation of size M."""
    kind = kind.lower()
    if kind == "qam":
        side = math.isqrt(M)
        if side * side != M or M < 4:
            raise ValueError(f"QAM size must be a perfect square >= 4, got {M}")
        levels = np.arange(-(side - 1), side, 2)  # ..., -3, -1, 1, 3, ...
        re, im = np.meshgrid(levels, levels, indexing="ij")
        lattice = (re + 1j * im).ravel()
    elif kind == "hex":
        if M not in (4, 16, 64):
            raise ValueError(f"HEX sizes supported: 4, 16, 64; got {M}")
        u = RingId.EISENSTEIN.unit
        r = int(math.ceil(math.sqrt(M))) + 2
        a, b = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
        cand = (a + b * u).ravel()
        order = np.lexsort((cand.imag.round(9), cand.real.round(9), np.abs(cand).round(9)))
        lattice = cand[order][:M]
    else:
        raise ValueError(f"constellation kind must be 'qam' or 'hex', got {kind!r}")

    energy = float(np.mean(np.abs(lattice) ** 2))
    scale = 1.0 / math.sqrt(energy)
    return Constellation(kind=kind, M=M, points=lattice * scale, lattice_points=lattice, energy_scale=scale)


@dataclass(frozen=True)
class CodeSpec:
    """One bundled code family plus its generator and dimensions."""

    id: str
    N: int
    ns: int
    generator: GeneratorMatrix
    ring: RingId
    symbols_per_codeword: int

    @property
    def block_dim(self) -> int:
        return 2 * self.ns

    @property
    def frame_uses(self) -> int:
        """Channel uses spanned by one codeword: 4*N*ns."""
        return 4 * self.N * self.ns


def get_code(code_id: str) -> CodeSpec:
    gen = algebra.generator_matrix(code_id)
    ns = gen.block_dim // 2
    return CodeSpec(
        id=code_id,
        N=gen.nblocks,
        ns=ns,
        generator=gen,
        ring=gen.ring,
        symbols_per_codeword=gen.n_symbols,
    )


@dataclass(frozen=True)
class Codeword:
    """Encoded symbols: N diagonal blocks and their block-diagonal assembly."""

    blocks: np.ndarray  # (N, 2ns, 2ns)
    assembled: np.ndarray  # (2ns*N, 2ns*N), zero off the diagonal blocks


def encode(code: CodeSpec, symbols: np.ndarray) -> Codeword:
    """Linear map of K symbols onto the diagonal blocks Xi_1..Xi_N."""
    sym = np.asarray(symbols, dtype=complex)
    if sym.shape != (code.symbols_per_codeword,):
        raise ValueError(
            f"code {code.id} expects {code.symbols_per_codeword} symbols, got shape {sym.shape}"
        )
    blocks = code.generator.blocks_from_symbols(sym)
    d = code.block_dim
    assembled = np.zeros((code.N * d, code.N * d), dtype=complex)
    for i in range(code.N):
        assembled[i * d : (i + 1) * d, i * d : (i + 1) * d] = blocks[i]
    return Codeword(blocks=blocks, assembled=assembled)


def split_frames(cw: Codeword, ns: int) -> list[np.ndarray]:
    """Split each block into its per-frame transmit matrix C_i (ns x 4ns).

    The top ns rows of Xi_i go out in partition 1, the bottom ns rows in
    partition 2, placed side by side.
    """
    d = 2 * ns
    if cw.blocks.shape[-2:] != (d, d):
        raise ValueError(f"blocks are {cw.blocks.shape[-2:]}, expected ({d}, {d})")
    return [np.hstack([b[:ns, :], b[ns:, :]]) for b in cw.blocks]


def export_codeword_csv(cw: Codeword, path) -> None:
    """Dump the assembled codeword as re/im CSV for decoder fixtures."""
    m = cw.assembled
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re", "im"])
        for r in range(m.shape[0]):
            for c in range(m.shape[1]):
                writer.writerow([r, c, repr(m[r, c].real), repr(m[r, c].imag)])
