"""Fading realizations and the half-duplex relay transmission equations.

Both the literal two-partition signal model and the whitened equivalent
channel are implemented; under shared noise draws they agree to machine
precision, which the tests exploit.  The geometric gain applies only on
the source-relay hop; the relay gain meets its power bound with equality
in the single-antenna case and uses the scaled-identity construction in
the MIMO case.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Topology",
    "PowerAllocation",
    "ChannelRealization",
    "EquivalentChannel",
    "ReceptionResult",
    "SCHEMES",
    "default_power",
    "check_power",
    "sample_realization",
    "relay_gain_single",
    "relay_gain_matrix",
    "relay_gain",
    "equivalent_channel_single",
    "equivalent_channel_mimo",
    "equivalent_channels",
    "superframe_channel",
    "simulate_reception",
    "virtual_relay_expand",
    "select_antenna",
    "apply_shadowing",
    "mutual_information",
    "export_realization_csv",
]

SCHEMES = ("direct", "naf", "virtual_relay", "antenna_selection")


@dataclass(frozen=True)
class Topology:
    """Antenna counts, relay count and cooperation scheme."""

    ns: int = 1
    nr: int = 1
    nd: int = 1
    N: int = 1
    scheme: str = "naf"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if min(self.ns, self.nr, self.nd, self.N) < 1:
            raise ValueError("antenna and relay counts must be >= 1")
        if self.scheme in ("naf", "direct") and self.nd < self.nr:
            raise ValueError("equivalent-channel path assumes nd >= nr")


@dataclass(frozen=True)
class PowerAllocation:
    pi1: float
    pi2: float
    pi3: float

    def __post_init__(self):
        if min(self.pi1, self.pi2, self.pi3) < 0:
            raise ValueError("power allocation factors must be nonnegative")


def _power_sum(pa: PowerAllocation, ns: int, nr: int) -> float:
    if ns == 1 and nr == 1:
        return pa.pi1 + pa.pi2 + pa.pi3
    return ns * (pa.pi1 + pa.pi2) + nr * pa.pi3


def default_power(top: Topology) -> PowerAllocation:
    """pi1 = 2*pi2 = 2*pi3, normalized to the applicable sum constraint.

    The direct scheme silences the relay: pi3 = 0, pi1 = pi2.
    """
    if top.scheme == "direct":
        pi1 = 1.0 / top.ns
        return PowerAllocation(pi1, pi1, 0.0)
    raw = PowerAllocation(2.0, 1.0, 1.0)
    total = _power_sum(raw, top.ns, top.nr)
    c = 2.0 / total
    return PowerAllocation(2.0 * c, c, c)


def check_power(pa: PowerAllocation, top: Topology, tol: float = 1e-9) -> None:
    total = _power_sum(pa, top.ns, top.nr)
    if abs(total - 2.0) > tol:
        raise ValueError(f"power allocation sums to {total}, expected 2")


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all fading matrices for a superframe coherence block."""

    top: Topology
    F: np.ndarray  # nd x ns
    G: tuple[np.ndarray, ...]  # N of nd x nr
    H: tuple[np.ndarray, ...]  # N of nr x ns
    rho: float  # linear geometric gain on the source-relay hop
    shadow: Optional[tuple[float, ...]] = None  # applied amplitudes, for audit


def sample_realization(top: Topology, rho_db: float, rng: np.random.Generator) -> ChannelRealization:
    """Draw all links i.i.d. CN(0,1); the geometric gain stays a scalar."""

    def cn(rows, cols):
        return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2.0)

    F = cn(top.nd, top.ns)
    G = tuple(cn(top.nd, top.nr) for _ in range(top.N))
    H = tuple(cn(top.nr, top.ns) for _ in range(top.N))
    return ChannelRealization(top=top, F=F, G=G, H=H, rho=10.0 ** (rho_db / 10.0))


def apply_shadowing(cr: ChannelRealization, sigma_db: float, rng: np.random.Generator) -> ChannelRealization:
    """Multiply each link by an independent log-normal amplitude 10^(x/20)."""
    if sigma_db < 0:
        raise ValueError("shadowing sigma must be >= 0")
    if sigma_db == 0:
        return cr
    n_links = 1 + 2 * cr.top.N
    amps = 10.0 ** (sigma_db * rng.standard_normal(n_links) / 20.0)
    F = cr.F * amps[0]
    G = tuple(g * amps[1 + i] for i, g in enumerate(cr.G))
    H = tuple(h * amps[1 + cr.top.N + i] for i, h in enumerate(cr.H))
    return replace(cr, F=F, G=G, H=H, shadow=tuple(amps))


def relay_gain_single(h: complex, pa: PowerAllocation, rho: float, snr: float) -> float:
    """Scalar forwarding gain meeting its power bound with equality."""
    return 1.0 / math.sqrt(pa.pi1 * rho * snr * abs(h) ** 2 + 1.0)


def relay_gain_matrix(H: np.ndarray, pa: PowerAllocation, rho: float, snr: float) -> np.ndarray:
    """Scaled-identity gain sqrt(SNR)*B = sqrt(c*min(1/lmax(HH^H), 1))*I."""
    lmax = float(np.linalg.eigvalsh(H @ H.conj().T)[-1])
    c = 1.0 / (1.0 / snr + pa.pi1 * rho)
    b = math.sqrt(c * min(1.0 / lmax if lmax > 0 else np.inf, 1.0) / snr)
    return b * np.eye(H.shape[0])


def relay_gain(H: np.ndarray, pa: PowerAllocation, rho: float, snr: float) -> np.ndarray:
    """Per-relay gain: equality-bound scalar when 1x1, matrix rule otherwise."""
    if H.shape == (1, 1):
        return np.array([[relay_gain_single(H[0, 0], pa, rho, snr)]])
    return relay_gain_matrix(H, pa, rho, snr)


@dataclass(frozen=True)
class EquivalentChannel:
    """Whitened equivalent channel of one cooperation frame."""

    He: np.ndarray  # 2nd x 2ns
    B: np.ndarray  # relay gain
    P: np.ndarray  # sqrt(SNR) * G * B
    Sigma_inv_sqrt: np.ndarray  # whitening factor


def _inv_sqrt_psd(S: np.ndarray, floor: float = 1e-12) -> np.ndarray:
    """Symmetric inverse square root; S >= I here so the floor is inert."""
    w, V = np.linalg.eigh(S)
    w = np.maximum(w, floor)
    return (V / np.sqrt(w)) @ V.conj().T


def _equivalent_channel(F, G, H, B, pa: PowerAllocation, rho: float, snr: float) -> EquivalentChannel:
    nd, ns = F.shape
    P = math.sqrt(snr) * G @ B
    Sigma = np.eye(nd) + pa.pi3 * P @ P.conj().T
    W = _inv_sqrt_psd(Sigma)
    top_row = np.hstack([math.sqrt(pa.pi1) * F, np.zeros((nd, ns))])
    bottom = np.hstack(
        [math.sqrt(pa.pi1 * pa.pi3 * rho) * W @ P @ H, math.sqrt(pa.pi2) * W @ F]
    )
    return EquivalentChannel(He=np.vstack([top_row, bottom]), B=B, P=P, Sigma_inv_sqrt=W)


def equivalent_channel_single(
    cr: ChannelRealization, pa: PowerAllocation, snr: float, relay: int = 0
) -> EquivalentChannel:
    """2x2 whitened channel of the (1,1,1) frame."""
    if cr.top.ns != 1 or cr.top.nr != 1 or cr.top.nd != 1:
        raise ValueError("single-antenna path requires topology (1,1,1)")
    h = cr.H[relay][0, 0]
    b = relay_gain_single(h, pa, cr.rho, snr)
    return _equivalent_channel(cr.F, cr.G[relay], cr.H[relay], np.array([[b]]), pa, cr.rho, snr)


def equivalent_channel_mimo(
    cr: ChannelRealization, pa: PowerAllocation, snr: float, relay: int = 0
) -> EquivalentChannel:
    """2nd x 2ns whitened channel of one cooperation frame."""
    top = cr.top
    if top.nr > top.ns:
        raise ValueError("nr > ns requires virtual_relay_expand or select_antenna first")
    if top.nd < top.nr:
        raise ValueError("equivalent channel assumes nd >= nr")
    B = relay_gain(cr.H[relay], pa, cr.rho, snr)
    return _equivalent_channel(cr.F, cr.G[relay], cr.H[relay], B, pa, cr.rho, snr)


def equivalent_channels(cr: ChannelRealization, pa: PowerAllocation, snr: float) -> list[EquivalentChannel]:
    return [equivalent_channel_mimo(cr, pa, snr, relay=i) for i in range(cr.top.N)]


def superframe_channel(ecs: Sequence[EquivalentChannel]) -> np.ndarray:
    """Block-diagonal assembly of per-frame equivalent channels."""
    if not ecs:
        raise ValueError("need at least one equivalent channel")
    shape = ecs[0].He.shape
    for ec in ecs:
        if ec.He.shape != shape:
            raise ValueError("equivalent channels must share dimensions")
    r, c = shape
    n = len(ecs)
    out = np.zeros((n * r, n * c), dtype=complex)
    for i, ec in enumerate(ecs):
        out[i * r : (i + 1) * r, i * c : (i + 1) * c] = ec.He
    return out


@dataclass(frozen=True)
class ReceptionResult:
    """Literal-model outputs plus the whitened stacked observations."""

    y1: list[np.ndarray]  # per frame, nd x 2ns (partition 1)
    y2: list[np.ndarray]  # per frame, nd x 2ns (partition 2, raw)
    y_whitened: list[np.ndarray]  # per frame, 2nd x 2ns
    noise: list[tuple[np.ndarray, np.ndarray, np.ndarray]]  # (V1, W, V2)
    equivalent: list[EquivalentChannel]

    pi3: float = 0.0

    def stacked(self) -> np.ndarray:
        """Column-major vec of each whitened frame, frames concatenated."""
        return np.concatenate([y.T.ravel() for y in self.y_whitened])

    def whitened_noise(self) -> np.ndarray:
        """The noise carried by stacked(); white by construction.

        Partition 2 sees sqrt(pi3*SNR)*G*B*W + V2 = sqrt(pi3)*P*W + V2,
        whitened by Sigma^(-1/2).
        """
        out = []
        for (v1, w, v2), ec in zip(self.noise, self.equivalent):
            z2 = ec.Sigma_inv_sqrt @ (math.sqrt(self.pi3) * ec.P @ w + v2)
            frame = np.vstack([v1, z2])
            out.append(frame.T.ravel())
        return np.concatenate(out)


def simulate_reception(
    frames: Sequence[np.ndarray],
    cr: ChannelRealization,
    pa: PowerAllocation,
    snr: float,
    rng: np.random.Generator,
) -> ReceptionResult:
    """Run the literal two-partition model over a superframe.

    The relay listens in partition 1 and forwards its scaled observation
    in partition 2 while the source transmits the second half of the
    frame; partition-2 noise is then whitened.  The result satisfies
    y_whitened = sqrt(SNR) * He @ Xi + z with z white.
    """
    top = cr.top
    ns = top.ns
    if len(frames) != top.N:
        raise ValueError(f"expected {top.N} frames, got {len(frames)}")

    def cn(rows, cols):
        return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / math.sqrt(2.0)

    y1_all, y2_all, yw_all, noise_all, ecs = [], [], [], [], []
    for i, C in enumerate(frames):
        if C.shape != (ns, 4 * ns):
            raise ValueError(f"frame {i} has shape {C.shape}, expected {(ns, 4 * ns)}")
        X1, X2 = C[:, : 2 * ns], C[:, 2 * ns :]
        T2 = 2 * ns  # columns per partition
        V1 = cn(top.nd, T2)
        W = cn(top.nr, T2)
        V2 = cn(top.nd, T2)
        B = relay_gain(cr.H[i], pa, cr.rho, snr)

        y1 = math.sqrt(pa.pi1 * snr) * cr.F @ X1 + V1
        yr = math.sqrt(pa.pi1 * cr.rho * snr) * cr.H[i] @ X1 + W
        y2 = (
            math.sqrt(pa.pi3 * snr) * cr.G[i] @ (B @ yr)
            + math.sqrt(pa.pi2 * snr) * cr.F @ X2
            + V2
        )
        ec = _equivalent_channel(cr.F, cr.G[i], cr.H[i], B, pa, cr.rho, snr)
        yw = np.vstack([y1, ec.Sigma_inv_sqrt @ y2])

        y1_all.append(y1)
        y2_all.append(y2)
        yw_all.append(yw)
        noise_all.append((V1, W, V2))
        ecs.append(ec)

    return ReceptionResult(
        y1=y1_all, y2=y2_all, y_whitened=yw_all, noise=noise_all, equivalent=ecs, pi3=pa.pi3
    )


def virtual_relay_expand(cr: ChannelRealization) -> list[ChannelRealization]:
    """Expand a single relay with nr > ns into virtual single-antenna relays.

    For ns = 1 the matched filter at the relay turns the source-relay
    link into the shared gain sqrt(sum |h_i|^2); each virtual relay keeps
    its own relay-destination coefficient.
    """
    top = cr.top
    if top.nr <= top.ns:
        raise ValueError("virtual relay expansion requires nr > ns")
    if top.ns != 1:
        raise NotImplementedError("virtual relay scheme is implemented for ns = 1 only")
    h = cr.H[0][:, 0]
    h_eff = math.sqrt(float(np.sum(np.abs(h) ** 2)))
    vtop = Topology(ns=1, nr=1, nd=top.nd, N=1, scheme="naf")
    out = []
    for i in range(top.nr):
        g_i = cr.G[0][:, i : i + 1]
        out.append(
            ChannelRealization(
                top=vtop,
                F=cr.F,
                G=(g_i,),
                H=(np.array([[h_eff]], dtype=complex),),
                rho=cr.rho,
            )
        )
    return out


def select_antenna(cr: ChannelRealization) -> ChannelRealization:
    """Keep the relay antenna with maximal relay-destination gain.

    Reception at the relay still combines all nr antennas (matched
    filter), so the reduced source-relay gain is sqrt(sum |h_i|^2); only
    the forwarding antenna is selected.  Ties go to the lowest index.
    """
    top = cr.top
    if top.nr <= top.ns:
        raise ValueError("antenna selection requires nr > ns")
    if top.ns != 1:
        raise NotImplementedError("antenna selection is implemented for ns = 1 only")
    gains = np.linalg.norm(cr.G[0], axis=0)
    best = int(np.argmax(gains))  # argmax returns the first maximal index
    h = cr.H[0][:, 0]
    h_eff = math.sqrt(float(np.sum(np.abs(h) ** 2)))
    return ChannelRealization(
        top=Topology(ns=1, nr=1, nd=top.nd, N=1, scheme="naf"),
        F=cr.F,
        G=(cr.G[0][:, best : best + 1],),
        H=(np.array([[h_eff]], dtype=complex),),
        rho=cr.rho,
    )


def mutual_information(He: np.ndarray | EquivalentChannel, snr: float) -> float:
    """log2 det(I + SNR * He * He^H), bits per use of the vector channel."""
    H = He.He if isinstance(He, EquivalentChannel) else He
    n = H.shape[0]
    M = np.eye(n) + snr * H @ H.conj().T
    sign, logdet = np.linalg.slogdet(M)
    return float(logdet / math.log(2.0))


def export_realization_csv(cr: ChannelRealization, path) -> None:
    """Flatten all link matrices into a labelled re/im CSV fixture."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["link", "row", "col", "re", "im"])

        def dump(name, M):
            for r in range(M.shape[0]):
                for c in range(M.shape[1]):
                    writer.writerow([name, r, c, repr(M[r, c].real), repr(M[r, c].imag)])

        dump("F", cr.F)
        for i, g in enumerate(cr.G):
            dump(f"G{i}", g)
        for i, h in enumerate(cr.H):
            dump(f"H{i}", h)
        writer.writerow(["rho", 0, 0, repr(cr.rho), "0.0"])
