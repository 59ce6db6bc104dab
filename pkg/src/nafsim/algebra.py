"""Numeric construction of the block-diagonal code generator matrices.

All five bundled codes share one recipe.  The base tower is a cyclotomic
field Q(zeta_n) over Q(i) with n in {4, 8, 16}; on top sits a cyclic
extension generated by a real algebraic number theta, either the golden
ratio (degree 2, one 2x2 block layer) or 2*cos(2*pi/15) (degree 4, 4x4
blocks).  The non-norm unit gamma equals zeta_n, which keeps |gamma| = 1
so the shaping stays unitary.  Embeddings are realised numerically: the
block index substitutes zeta -> zeta^(4i+1), the row index substitutes
theta -> conjugate(theta).  Exactness is recovered only at determinant
time by rounding scaled determinants back to the symbol ring.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "RingId",
    "AlgebraParams",
    "GeneratorMatrix",
    "NvdReport",
    "BudgetError",
    "CODE_IDS",
    "cyclotomic_unit",
    "algebra_params",
    "generator_matrix",
    "round_to_ring",
    "ring_value",
    "integral_determinant",
    "nvd_audit",
    "export_generator_csv",
]

CODE_IDS = ("golden", "c21", "c41", "perfect4", "c22")

#: default cap on determinant evaluations in exhaustive audits
DEFAULT_ENUM_BUDGET = 10**8

#: fixed seed for sampled audits, recorded so reports are reproducible
DEFAULT_AUDIT_SEED = 20240917


class RingId(Enum):
    """Symbol rings: Gaussian integers Z[i] and Eisenstein integers Z[j]."""

    GAUSSIAN = "gaussian"
    EISENSTEIN = "eisenstein"

    @property
    def unit(self) -> complex:
        if self is RingId.GAUSSIAN:
            return 1j
        return cmath.exp(2j * cmath.pi / 3)


class BudgetError(RuntimeError):
    """Raised when an exhaustive enumeration would exceed its budget."""


def cyclotomic_unit(n: int) -> complex:
    """Return exp(2*pi*i/n)."""
    if n < 1:
        raise ValueError(f"root-of-unity order must be >= 1, got {n}")
    return cmath.exp(2j * cmath.pi / n)


@dataclass(frozen=True)
class AlgebraParams:
    """Number-field data behind one code: zeta order, theta, gamma, degrees."""

    zeta_order: int
    theta: float
    gamma: complex
    degrees: tuple[int, int]  # (N blocks, 2*ns block dimension)
    theta_family: str = "golden"  # "golden" or "cos15"
    block_scale: float = 1.0

    def __post_init__(self):
        if self.zeta_order not in (4, 8, 16):
            raise ValueError(f"unsupported zeta order {self.zeta_order}")
        if abs(abs(self.gamma) - 1.0) > 1e-12:
            raise ValueError("gamma must be a unit (|gamma| = 1)")

    def theta_conjugates(self) -> np.ndarray:
        """sigma^m(theta) for m = 0 .. block_dim-1."""
        if self.theta_family == "golden":
            r5 = math.sqrt(5.0)
            return np.array([(1 + r5) / 2, (1 - r5) / 2])
        # theta = 2cos(2pi/15); sigma: zeta_15 -> zeta_15^2
        return np.array([2 * math.cos(2 * math.pi * (2**m) / 15) for m in range(4)])

    def shaping_basis_at(self, theta: float) -> np.ndarray:
        """Values of the shaping lattice basis at one theta conjugate.

        The basis spans a rank-(block_dim) sublattice of the ring of
        integers whose embedding, scaled by block_scale, has exactly
        orthonormal columns.
        """
        if self.theta_family == "golden":
            alpha = 1 + 1j - 1j * theta
            return np.array([alpha, alpha * theta])
        powers = np.array([theta**j for j in range(4)])
        return _COS15_BASIS.T @ powers

    def zeta_conjugates(self) -> np.ndarray:
        """tau_i(zeta) = zeta^(4i+1) for the N embeddings fixing Q(i)."""
        z = cyclotomic_unit(self.zeta_order)
        nblocks = self.degrees[0]
        return np.array([z ** (4 * i + 1) for i in range(nblocks)])


# Orthonormal shaping basis for the 2cos(2pi/15) tower, columns over the
# power basis {1, theta, theta^2, theta^3} of Z[i][theta].  Found by
# short-vector search on the integral trace form: each column has trace
# norm 15 and the columns are pairwise orthogonal, so the canonical
# embedding divided by sqrt(15) is exactly unitary.
_COS15_BASIS = np.array(
    [
        [-3j, -1j, -1 - 1j, -1],
        [-3j, 0, 3 + 4j, 3 - 1j],
        [1j, 1j, 0, 0],
        [1j, 0, -1 - 1j, -1],
    ]
)

_CODE_TABLE = {
    # id: (zeta_order, theta family, ns)
    "golden": (4, "golden", 1),
    "c21": (8, "golden", 1),
    "c41": (16, "golden", 1),
    "perfect4": (4, "cos15", 2),
    "c22": (8, "cos15", 2),
}


def algebra_params(code_id: str) -> AlgebraParams:
    """Number-field parameters for one of the bundled code ids."""
    try:
        zeta_order, family, ns = _CODE_TABLE[code_id]
    except KeyError:
        raise ValueError(f"unknown code id {code_id!r}; expected one of {CODE_IDS}") from None
    nblocks = zeta_order // 4
    dim = 2 * ns
    theta = (1 + math.sqrt(5.0)) / 2 if family == "golden" else 2 * math.cos(2 * math.pi / 15)
    scale = 1 / math.sqrt(5.0) if family == "golden" else 1 / math.sqrt(15.0)
    return AlgebraParams(
        zeta_order=zeta_order,
        theta=theta,
        gamma=cyclotomic_unit(zeta_order),
        degrees=(nblocks, dim),
        theta_family=family,
        block_scale=scale,
    )


@dataclass(frozen=True)
class GeneratorMatrix:
    """Unitary linear map from information symbols to vec'd codeword blocks.

    `entries` maps a length-K symbol vector to the stacked entries of the
    diagonal blocks (column-major inside each block, blocks in index
    order).  Columns are orthonormal; `scale` records the per-block
    algebraic normalisation of the underlying recipe and `det_int_scale`
    is the factor that sends assembled-codeword determinants back into
    the symbol ring.
    """

    code_id: str
    entries: np.ndarray
    scale: float
    nblocks: int
    block_dim: int
    det_int_scale: float
    ring: RingId = RingId.GAUSSIAN
    params: AlgebraParams = field(repr=False, default=None)

    @property
    def n_symbols(self) -> int:
        return self.entries.shape[1]

    def blocks_from_symbols(self, symbols: np.ndarray) -> np.ndarray:
        """Map symbols (K,) or (K, batch) to blocks (batch, N, dim, dim)."""
        sym = np.asarray(symbols, dtype=complex)
        squeeze = sym.ndim == 1
        if squeeze:
            sym = sym[:, None]
        if sym.shape[0] != self.n_symbols:
            raise ValueError(f"expected {self.n_symbols} symbols, got {sym.shape[0]}")
        vec = self.entries @ sym  # (N*dim*dim, batch)
        batch = vec.shape[1]
        n, d = self.nblocks, self.block_dim
        # vec layout: block outer, then column-major (column, row) inside
        blocks = vec.T.reshape(batch, n, d, d).transpose(0, 1, 3, 2)
        return blocks[0] if squeeze else blocks

    def assemble(self, symbols: np.ndarray) -> np.ndarray:
        """Block-diagonal codeword matrix for one symbol vector."""
        blocks = self.blocks_from_symbols(np.asarray(symbols, dtype=complex))
        d = self.block_dim
        out = np.zeros((self.nblocks * d, self.nblocks * d), dtype=complex)
        for i in range(self.nblocks):
            out[i * d : (i + 1) * d, i * d : (i + 1) * d] = blocks[i]
        return out


def generator_matrix(code_id: str) -> GeneratorMatrix:
    """Construct the generator matrix of one bundled code.

    Entry formula for block i, row m, column c of the block:
        scale * tau_i(gamma)^[c<m] * sigma^m(alpha * theta^p * zeta^b)
    feeding symbol (k, p, b) with k = (c - m) mod dim.  The overall
    1/sqrt(N) makes the column set exactly orthonormal.
    """
    p = algebra_params(code_id)
    nblocks, dim = p.degrees
    n_symbols = nblocks * dim * dim
    thetas = p.theta_conjugates()
    zetas = p.zeta_conjugates()
    basis = np.array([p.shaping_basis_at(t) for t in thetas])  # (m, basis idx)

    entries = np.zeros((nblocks * dim * dim, n_symbols), dtype=complex)
    norm = p.block_scale / math.sqrt(nblocks)
    for i in range(nblocks):
        gamma_i = zetas[i]  # gamma = zeta, so tau_i(gamma) = tau_i(zeta)
        for c in range(dim):
            for m in range(dim):
                row = i * dim * dim + c * dim + m
                k = (c - m) % dim
                wrap = gamma_i if c < m else 1.0
                base = norm * wrap
                for mb in range(dim):
                    for b in range(nblocks):
                        col = k * dim * nblocks + mb * nblocks + b
                        entries[row, col] = base * basis[m, mb] * zetas[i] ** b

    # lambda * det(assembled) lands in Z[i]; accounts for the block scale
    # (degree dim*N in the entries) and the 1/sqrt(N) unitarity factor
    det_scale = p.block_scale ** (-dim * nblocks) * nblocks ** (dim * nblocks / 2)
    return GeneratorMatrix(
        code_id=code_id,
        entries=entries,
        scale=p.block_scale,
        nblocks=nblocks,
        block_dim=dim,
        det_int_scale=det_scale,
        ring=RingId.GAUSSIAN,
        params=p,
    )


def round_to_ring(z: complex, ring: RingId) -> tuple[int, int]:
    """Nearest ring element (a, b) meaning a + b*u; ties toward smaller |a|, then |b|."""
    u = ring.unit
    if ring is RingId.GAUSSIAN:
        a0, b0 = z.real, z.imag
    else:
        # invert [[1, -1/2], [0, sqrt(3)/2]]
        b0 = z.imag * 2 / math.sqrt(3.0)
        a0 = z.real + b0 / 2
    best = None
    for a in range(math.floor(a0) - 1, math.floor(a0) + 3):
        for b in range(math.floor(b0) - 1, math.floor(b0) + 3):
            d = abs(z - (a + b * u))
            key = (round(d, 12), abs(a), abs(b), a, b)
            if best is None or key < best[0]:
                best = (key, (a, b))
    return best[1]


def ring_value(elem: tuple[int, int], ring: RingId) -> complex:
    """Complex value of a ring element (a, b)."""
    a, b = elem
    return a + b * ring.unit


def integral_determinant(gen: GeneratorMatrix, symbols: np.ndarray) -> complex:
    """det of the assembled codeword, rescaled onto the symbol-ring lattice.

    For symbols drawn from the ring the result is (up to float error) a
    ring element; the distance to the rounded element witnesses it.
    """
    return gen.det_int_scale * np.linalg.det(gen.assemble(symbols))


@dataclass(frozen=True)
class NvdReport:
    """Result of a determinant audit over a difference alphabet."""

    min_det_sq: float
    argmin: np.ndarray
    min_rank: int
    evaluated: int
    mode: str


def _block_dets(blocks: np.ndarray) -> np.ndarray:
    """Determinants of a (batch, N, d, d) stack, one product per batch row."""
    d = blocks.shape[-1]
    if d == 2:
        dets = blocks[..., 0, 0] * blocks[..., 1, 1] - blocks[..., 0, 1] * blocks[..., 1, 0]
    else:
        dets = np.linalg.det(blocks)
    return dets


def _rank_of(blocks: np.ndarray, tol: float = 1e-9) -> int:
    """Numerical rank of the block-diagonal matrix with the given blocks."""
    return int(sum(np.linalg.matrix_rank(b, tol=tol) for b in blocks))


def nvd_audit(
    gen: GeneratorMatrix,
    difference_alphabet: Sequence[complex],
    mode: str = "exhaustive",
    samples: int = 10**6,
    budget: int = DEFAULT_ENUM_BUDGET,
    seed: int = DEFAULT_AUDIT_SEED,
    chunk: int = 1 << 16,
) -> NvdReport:
    """Scan codeword differences for minimum |det|^2 and minimum rank.

    By linearity, differences of codewords are codewords over the
    symbol-difference alphabet, so the scan enumerates (or samples)
    difference vectors directly.  The reported argmin is deterministic:
    ties resolve to the lexicographically first difference vector.
    """
    alphabet = np.asarray(list(difference_alphabet), dtype=complex)
    K = gen.n_symbols
    nA = len(alphabet)
    full_rank = gen.nblocks * gen.block_dim

    if mode == "exhaustive":
        total = nA**K
        if total > budget:
            raise BudgetError(
                f"exhaustive audit needs {total} determinant evaluations "
                f"(budget {budget}); use mode='sampled'"
            )
    elif mode == "sampled":
        total = samples
    else:
        raise ValueError(f"mode must be 'exhaustive' or 'sampled', got {mode!r}")

    rng = np.random.default_rng(seed)
    best_val = np.inf
    best_vec = None
    min_rank = full_rank
    evaluated = 0

    pos = 0
    while pos < total:
        n = min(chunk, total - pos)
        if mode == "exhaustive":
            # mixed-radix digits of pos..pos+n in C order = lexicographic
            idx = pos + np.arange(n)
            digits = np.empty((n, K), dtype=np.int64)
            rem = idx
            for j in range(K - 1, -1, -1):
                digits[:, j] = rem % nA
                rem = rem // nA
            sym = alphabet[digits]
        else:
            sym = alphabet[rng.integers(0, nA, size=(n, K))]
        pos += n

        nonzero = np.any(sym != 0, axis=1)
        if not np.any(nonzero):
            continue
        sym_nz = sym[nonzero]
        blocks = gen.blocks_from_symbols(sym_nz.T)
        det_sq = np.abs(np.prod(_block_dets(blocks), axis=-1)) ** 2
        evaluated += len(det_sq)

        j = int(np.argmin(det_sq))
        if det_sq[j] < best_val:
            best_val = float(det_sq[j])
            best_vec = sym_nz[j].copy()
        # rank deficiency can only hide where a determinant collapses
        tiny = det_sq < 1e-18
        if np.any(tiny):
            for b in blocks[tiny]:
                min_rank = min(min_rank, _rank_of(b))

    return NvdReport(
        min_det_sq=best_val,
        argmin=best_vec,
        min_rank=min_rank,
        evaluated=evaluated,
        mode=mode,
    )


def export_generator_csv(gen: GeneratorMatrix, path) -> None:
    """Write the generator to CSV: one row per output entry, re/im per symbol.

    Symbol ordering (columns): algebra coefficient z_k outer, then the
    theta-power of the ideal basis, then the zeta-power picking the Q(i)
    coordinate inside the base field.  Row ordering: block index outer,
    column-major inside each block.
    """
    with open(path, "w", newline="") as fh:
        fh.write(f"# code={gen.code_id} blocks={gen.nblocks} block_dim={gen.block_dim}\n")
        fh.write("# columns: symbol index s = (k*dim + theta_pow)*n_blocks + zeta_pow\n")
        fh.write("# rows: output entry r = block*dim^2 + col*dim + row (column-major)\n")
        writer = csv.writer(fh)
        header = ["entry"]
        for s in range(gen.n_symbols):
            header += [f"s{s}_re", f"s{s}_im"]
        writer.writerow(header)
        for r in range(gen.entries.shape[0]):
            row = [r]
            for s in range(gen.n_symbols):
                row += [repr(gen.entries[r, s].real), repr(gen.entries[r, s].imag)]
            writer.writerow(row)
