"""Diversity-multiplexing tradeoff curves and the outage-exponent oracle.

Closed forms: the classical Rayleigh curve, the product-channel curve of
the two-hop cascade, and the relay-channel lower bound assembled from
them.  The oracle solves the underlying exponent minimization directly
(it never touches the closed form): the objective and outage region are
piecewise linear, so an epigraph reformulation turns the whole problem
into one exact LP; a candidate-vertex enumeration is kept as a second,
structurally different solver for cross-checks.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

__all__ = [
    "DmtCurve",
    "ProductChannelDims",
    "rayleigh_dmt",
    "product_dmt",
    "product_dmt_oracle",
    "relay_product_dims",
    "naf_bound",
    "max_diversity_bounds",
    "export_curve_csv",
]


@dataclass(frozen=True)
class DmtCurve:
    """Piecewise-linear tradeoff curve stored by its vertices."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        r = np.array([v[0] for v in self.vertices], dtype=float)
        d = np.array([v[1] for v in self.vertices], dtype=float)
        if len(r) < 2:
            raise ValueError("a tradeoff curve needs at least two vertices")
        if np.any(np.diff(r) <= 0):
            raise ValueError("multiplexing gains must be strictly increasing")
        if np.any(np.diff(d) > 1e-9):
            raise ValueError("diversity must be non-increasing")
        slopes = np.diff(d) / np.diff(r)
        if np.any(np.diff(slopes) < -1e-9):
            raise ValueError("curve must be convex")
        if abs(d[-1]) > 1e-9:
            raise ValueError("curve must terminate at zero diversity")

    def __call__(self, r: float | np.ndarray) -> float | np.ndarray:
        rv = np.array([v[0] for v in self.vertices])
        dv = np.array([v[1] for v in self.vertices])
        return np.interp(r, rv, dv, left=dv[0], right=0.0)

    @property
    def max_diversity(self) -> float:
        return self.vertices[0][1]

    @property
    def max_multiplexing(self) -> float:
        return self.vertices[-1][0]


def _compress(points: list[tuple[float, float]]) -> DmtCurve:
    """Drop collinear interior points, keep endpoints."""
    pts = sorted(points)
    keep = [pts[0]]
    for i in range(1, len(pts) - 1):
        (r0, d0), (r1, d1), (r2, d2) = keep[-1], pts[i], pts[i + 1]
        lhs = (d1 - d0) * (r2 - r0)
        rhs = (d2 - d0) * (r1 - r0)
        if abs(lhs - rhs) > 1e-12:
            keep.append(pts[i])
    keep.append(pts[-1])
    return DmtCurve(tuple(keep))


def rayleigh_dmt(m: int, n: int) -> DmtCurve:
    """Piecewise-linear curve through (k, (m-k)(n-k)), k = 0..min(m,n)."""
    if m < 1 or n < 1:
        raise ValueError("antenna counts must be >= 1")
    q = min(m, n)
    return DmtCurve(tuple((float(k), float((m - k) * (n - k))) for k in range(q + 1)))


@dataclass(frozen=True)
class ProductChannelDims:
    """Dimensions of a two-hop cascade: inner dimension l, outer m and n."""

    m: int
    n: int
    l: int

    def __post_init__(self):
        if self.l < 1 or self.m < self.l or self.n < self.l:
            raise ValueError(f"need m >= l and n >= l >= 1, got {(self.m, self.n, self.l)}")

    @property
    def delta(self) -> int:
        return abs(self.m - self.n)

    @property
    def q(self) -> int:
        return min(self.m, self.n)


def product_dmt(dims: ProductChannelDims) -> DmtCurve:
    """Closed-form tradeoff of the cascade channel at integer vertices."""
    l, q, delta = dims.l, dims.q, dims.delta
    verts = []
    for s in range(l + 1):
        gap = max(l - delta - s, 0)
        d = (l - s) * (q - s) - math.floor(gap * gap / 2) / 2.0
        verts.append((float(s), float(d)))
    return DmtCurve(tuple(verts))


def _exponent_objective(dims: ProductChannelDims, alpha: np.ndarray, beta: np.ndarray) -> float:
    m, n, l = dims.m, dims.n, dims.l
    val = sum((n - i + 1) * alpha[i - 1] for i in range(1, l + 1))
    val += sum((m - n + l - i) * beta[i - 1] for i in range(1, l + 1))
    for j in range(1, l + 1):
        for i in range(1, j):
            val += max(alpha[i - 1] - beta[j - 1], 0.0)
    return float(val)


def _oracle_lp(dims: ProductChannelDims, r: float) -> float:
    """Exact epigraph LP for the exponent minimization.

    Variables [alpha(l), beta(l), u(l), v(l*(l-1)/2)]: u_k majorizes
    (1-alpha_k)^+ inside the rate budget, v_ij majorizes the coupling
    terms (alpha_i - beta_j)^+ in the objective.
    """
    m, n, l = dims.m, dims.n, dims.l
    pairs = [(i, j) for j in range(1, l + 1) for i in range(1, j)]
    nv = len(pairs)
    na = l + l + l + nv  # alpha, beta, u, v

    c = np.zeros(na)
    for i in range(1, l + 1):
        c[i - 1] = n - i + 1
        c[l + i - 1] = m - n + l - i
    c[3 * l :] = 1.0

    A_ub, b_ub = [], []

    def row():
        return np.zeros(na)

    # u_k >= 1 - alpha_k  ->  -alpha_k - u_k <= -1
    for k in range(l):
        a = row()
        a[k] = -1.0
        a[2 * l + k] = -1.0
        A_ub.append(a)
        b_ub.append(-1.0)
    # sum u <= r
    a = row()
    a[2 * l : 3 * l] = 1.0
    A_ub.append(a)
    b_ub.append(r)
    # v_ij >= alpha_i - beta_j
    for t, (i, j) in enumerate(pairs):
        a = row()
        a[i - 1] = 1.0
        a[l + j - 1] = -1.0
        a[3 * l + t] = -1.0
        A_ub.append(a)
        b_ub.append(0.0)
    # ordering alpha_k <= alpha_{k+1}, beta_k <= beta_{k+1}
    for k in range(l - 1):
        a = row()
        a[k] = 1.0
        a[k + 1] = -1.0
        A_ub.append(a)
        b_ub.append(0.0)
        a = row()
        a[l + k] = 1.0
        a[l + k + 1] = -1.0
        A_ub.append(a)
        b_ub.append(0.0)
    # beta_k <= alpha_k
    for k in range(l):
        a = row()
        a[l + k] = 1.0
        a[k] = -1.0
        A_ub.append(a)
        b_ub.append(0.0)

    bounds = [(0, None)] * l + [(0, None)] * l + [(0, None)] * l + [(0, None)] * nv
    res = optimize.linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"exponent LP failed: {res.message}")
    return float(res.fun)


def _oracle_vertices(dims: ProductChannelDims, r: float) -> float:
    """Candidate-vertex enumeration with local refinement.

    Alpha candidates take the shape (0^a, t^b, 1^c) with the rate budget
    tight; beta candidates sit at 0 or at some alpha.  A projected local
    search from the best candidates guards against missed vertices.
    """
    l = dims.l
    best = math.inf
    best_x = None
    for a in range(l + 1):
        for b in range(l - a + 1):
            cnt1 = l - a - b
            if b == 0:
                if abs(a - r) > 1e-12 and a < r:
                    # budget slack is never optimal, but keep feasible a > r? no
                    pass
                if a > r + 1e-12:
                    continue
                alphas = [np.array([0.0] * a + [1.0] * cnt1)] if abs(a - r) < 1e-12 or a <= r else []
            else:
                t = (a + b - r) / b
                if t < -1e-12 or t > 1 + 1e-12:
                    continue
                alphas = [np.array([0.0] * a + [min(max(t, 0.0), 1.0)] * b + [1.0] * cnt1)]
            for alpha in alphas:
                if np.sum(np.maximum(1 - alpha, 0)) > r + 1e-9:
                    continue
                choices = [[0.0] + [alpha[i] for i in range(j + 1)] for j in range(l)]
                for beta in itertools.product(*choices):
                    bv = np.array(beta)
                    if np.any(np.diff(bv) < -1e-12) or np.any(bv > alpha + 1e-12):
                        continue
                    val = _exponent_objective(dims, alpha, bv)
                    if val < best:
                        best = val
                        best_x = np.concatenate([alpha, bv])

    # local refinement from the best vertex (SLSQP on the smoothed problem)
    if best_x is not None:
        m, n = dims.m, dims.n

        def f(x):
            return _exponent_objective(dims, x[:l], x[l:])

        cons = [
            {"type": "ineq", "fun": lambda x: r - np.sum(np.maximum(1 - x[:l], 0))},
            {"type": "ineq", "fun": lambda x: x[:l] - x[l:]},
        ]
        for k in range(l - 1):
            cons.append({"type": "ineq", "fun": lambda x, k=k: x[k + 1] - x[k]})
            cons.append({"type": "ineq", "fun": lambda x, k=k: x[l + k + 1] - x[l + k]})
        res = optimize.minimize(
            f,
            best_x,
            method="SLSQP",
            bounds=[(0, 2)] * (2 * l),
            constraints=cons,
            options={"maxiter": 200, "ftol": 1e-12},
        )
        if res.success and res.fun < best - 1e-12:
            penalty = max(0.0, np.sum(np.maximum(1 - res.x[:l], 0)) - r)
            if penalty < 1e-9:
                best = float(res.fun)
    return best


def product_dmt_oracle(dims: ProductChannelDims, r: float, method: str = "lp") -> float:
    """Outage exponent at multiplexing gain r by direct minimization."""
    if r < -1e-12 or r > dims.l + 1e-12:
        raise ValueError(f"r must lie in [0, {dims.l}], got {r}")
    r = min(max(r, 0.0), float(dims.l))
    if method == "lp":
        return _oracle_lp(dims, r)
    if method == "vertex":
        return _oracle_vertices(dims, r)
    raise ValueError(f"unknown oracle method {method!r}")


def relay_product_dims(ns: int, nr: int, nd: int) -> ProductChannelDims:
    """Cascade dimensions seen through one relay.

    The spatial bottleneck is min(ns, nr); with more relay than source
    antennas the relay projects onto the source subspace, so the extra
    antennas act like the larger outer dimension.
    """
    l = min(ns, nr)
    m = max(ns, nr)
    return ProductChannelDims(m=m, n=nd, l=l)


def _sum_curves(curves: list[DmtCurve], scales: list[float]) -> DmtCurve:
    """Pointwise sum of curves evaluated at r*scale_i, emitted by kinks."""
    kinks = {0.0}
    for curve, s in zip(curves, scales):
        for r, _ in curve.vertices:
            if s > 0:
                kinks.add(r / s)
    r_end = max(c.max_multiplexing / s for c, s in zip(curves, scales) if s > 0)
    kinks = sorted(k for k in kinks if k <= r_end + 1e-12)
    pts = []
    for r in kinks:
        d = sum(float(c(r * s)) for c, s in zip(curves, scales))
        pts.append((r, d))
    return _compress(pts)


def naf_bound(
    ns: int,
    nr: int,
    nd: int,
    N: int,
    relay_dims: list[ProductChannelDims] | None = None,
    grid_step: float | None = None,
) -> DmtCurve:
    """Lower bound on the relay-channel tradeoff.

    Identical relays: d_F(r) + N * d_cascade(2r).  Heterogeneous relays:
    the time-sharing exponent is minimized over the weight simplex on a
    grid, then refined; the summands are convex so the grid minimum is
    already reliable.
    """
    dF = rayleigh_dmt(ns, nd)
    if relay_dims is None:
        dGH = product_dmt(relay_product_dims(ns, nr, nd))
        return _sum_curves([dF] + [dGH] * N, [1.0] + [2.0] * N)

    if len(relay_dims) != N:
        raise ValueError(f"expected {N} relay dims, got {len(relay_dims)}")
    curves = [product_dmt(d) for d in relay_dims]
    if N == 1:
        return _sum_curves([dF, curves[0]], [1.0, 2.0])

    if grid_step is None:
        grid_step = 1e-3 if N == 2 else (1e-2 if N == 3 else 4e-2)

    def relay_term(r: float) -> float:
        if r == 0:
            return sum(c.max_diversity for c in curves)

        def obj(theta_free):
            theta = np.append(theta_free, 1.0 - np.sum(theta_free))
            if theta[-1] < -1e-12:
                return np.inf
            return sum(float(c(2 * N * t * r)) for c, t in zip(curves, theta))

        # simplex grid
        steps = int(round(1.0 / grid_step))
        best, best_th = np.inf, None
        for combo in itertools.product(range(steps + 1), repeat=N - 1):
            if sum(combo) > steps:
                continue
            th = np.array(combo, dtype=float) / steps
            v = obj(th)
            if v < best:
                best, best_th = v, th
        cons = [{"type": "ineq", "fun": lambda th: 1.0 - np.sum(th)}]
        res = optimize.minimize(
            obj, best_th, method="SLSQP", bounds=[(0, 1)] * (N - 1), constraints=cons,
            options={"maxiter": 100},
        )
        if res.success and res.fun < best:
            best = float(res.fun)
        return best

    r_end = max(float(min(ns, nd)), max(d.l for d in relay_dims) / 2.0)
    grid = np.linspace(0.0, r_end, 257)
    pts = [(float(r), float(dF(r)) + relay_term(float(r))) for r in grid]
    # clamp terminal zero against refinement noise
    pts[-1] = (pts[-1][0], 0.0) if abs(pts[-1][1]) < 1e-6 else pts[-1]
    return _compress(pts)


def max_diversity_bounds(ns: int, nr: int, nd: int, N: int) -> tuple[float, float, bool]:
    """(lower, upper) bounds on the maximal diversity order, plus whether
    they provably coincide (all relays satisfy |m-n| >= l-1)."""
    dims = relay_product_dims(ns, nr, nd)
    dF0 = float(ns * nd)
    lower = dF0 + N * product_dmt(dims).max_diversity
    upper = dF0 + N * float(dims.l * dims.q)
    equality = dims.delta >= dims.l - 1
    return lower, upper, equality


def export_curve_csv(curve: DmtCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["r", "d"])
        for r, d in curve.vertices:
            writer.writerow([repr(r), repr(d)])
