"""Experiment configuration, reproducible Monte Carlo and CSV emission.

Every trial draws from its own RNG stream keyed by (seed, snr point,
trial index), so results are bit-identical regardless of worker count
and common-random-numbers mode simply drops the SNR key.  Early
stopping cuts at the exact trial where the target error count is
reached, a rule that does not depend on batching.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import channel, codes, decoder
from .channel import ChannelRealization, PowerAllocation, Topology

__all__ = [
    "ConfigError",
    "InsufficientDataError",
    "SimConfig",
    "FerTable",
    "parse_config",
    "run_fer",
    "run_outage",
    "slope_estimate",
    "emit_csv",
    "read_csv",
    "snr_per_bit_db",
]

DEFAULT_TARGET_ERRORS = 100
DEFAULT_MAX_TRIALS = 1_000_000


class ConfigError(ValueError):
    """Bad or inconsistent simulation configuration."""


class InsufficientDataError(RuntimeError):
    """Not enough usable rows for an estimate."""


@dataclass(frozen=True)
class SimConfig:
    code_id: str
    topology: Topology
    snr_grid_db: tuple[float, ...]
    seed: int
    scheme: str = "naf"
    rho_db: float = 0.0
    power: Optional[PowerAllocation] = None
    constellation: tuple[str, int] = ("qam", 4)
    max_trials: int = DEFAULT_MAX_TRIALS
    target_frame_errors: int = DEFAULT_TARGET_ERRORS
    shadowing_sigma_db: float = 0.0
    crn: bool = False  # share trial randomness across SNR points

    def __post_init__(self):
        if self.code_id not in codes.algebra.CODE_IDS:
            raise ConfigError(f"unknown code_id {self.code_id!r}")
        if len(self.snr_grid_db) == 0 or np.any(np.diff(self.snr_grid_db) <= 0):
            raise ConfigError("snr_grid_db must be non-empty and strictly increasing")
        if self.max_trials < 1 or self.target_frame_errors < 1:
            raise ConfigError("max_trials and target_frame_errors must be >= 1")

    def resolved_power(self) -> PowerAllocation:
        if self.power is not None:
            channel.check_power(self.power, self.topology)
            return self.power
        return channel.default_power(self.topology)

    def validate_scheme(self) -> None:
        top = self.topology
        code = codes.get_code(self.code_id)
        s = top.scheme
        if s in ("naf", "direct"):
            if top.nr > top.ns:
                raise ConfigError("nr > ns needs scheme virtual_relay or antenna_selection")
            if code.N != top.N or code.ns != top.ns:
                raise ConfigError(
                    f"code {self.code_id} covers (N={code.N}, ns={code.ns}), topology has "
                    f"(N={top.N}, ns={top.ns})"
                )
        elif s == "virtual_relay":
            if top.ns != 1 or top.nr <= 1 or top.N != 1:
                raise ConfigError("virtual_relay expects topology (1, nr>1, nd, N=1)")
            if code.N != top.nr or code.ns != 1:
                raise ConfigError(f"virtual_relay over nr={top.nr} antennas needs a {top.nr}-block code")
        elif s == "antenna_selection":
            if top.ns != 1 or top.nr <= 1 or top.N != 1:
                raise ConfigError("antenna_selection expects topology (1, nr>1, nd, N=1)")
            if code.N != 1 or code.ns != 1:
                raise ConfigError("antenna_selection uses a single-frame code")


@dataclass(frozen=True)
class FerRow:
    snr_db: float
    trials: int
    frame_errors: int

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials if self.trials else math.nan

    def wilson_ci(self, z: float = 1.96) -> tuple[float, float]:
        n, k = self.trials, self.frame_errors
        if n == 0:
            return (0.0, 1.0)
        p = k / n
        denom = 1 + z * z / n
        center = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        return (max(center - half, 0.0), min(center + half, 1.0))


@dataclass(frozen=True)
class FerTable:
    rows: tuple[FerRow, ...]

    def __iter__(self):
        return iter(self.rows)

    def fer_at(self, snr_db: float) -> float:
        for r in self.rows:
            if r.snr_db == snr_db:
                return r.fer
        raise KeyError(snr_db)

    def crossing_snr_db(self, fer_level: float) -> float:
        """SNR where log-FER crosses a level, by linear interpolation."""
        pts = [(r.snr_db, r.fer) for r in self.rows if r.frame_errors > 0]
        for (s0, f0), (s1, f1) in zip(pts, pts[1:]):
            if (f0 - fer_level) * (f1 - fer_level) <= 0 and f0 != f1:
                t = (math.log10(f0) - math.log10(fer_level)) / (math.log10(f0) - math.log10(f1))
                return s0 + t * (s1 - s0)
        raise InsufficientDataError(f"no crossing of FER={fer_level} in table")


def _parse_scalar(key: str, value: str, lineno: int, cast):
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f"malformed value for {key!r} on line {lineno}: {value!r}") from None


def parse_config(path) -> SimConfig:
    """Read a flat key=value config file (# starts a comment)."""
    raw: dict[str, tuple[str, int]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
            key, value = (s.strip() for s in stripped.split("=", 1))
            if key in raw:
                raise ConfigError(f"duplicate key {key!r} on line {lineno}")
            raw[key] = (value, lineno)

    known = {
        "code_id", "topology", "scheme", "snr_grid_db", "rho_db", "power",
        "constellation", "max_trials", "target_frame_errors", "seed",
        "shadowing_sigma_db", "crn",
    }
    for key, (_, lineno) in raw.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} on line {lineno}")

    def need(key):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
        return raw[key]

    code_id, _ = need("code_id")
    tval, tline = need("topology")
    parts = [p.strip() for p in tval.split(",")]
    if len(parts) != 4:
        raise ConfigError(f"malformed value for 'topology' on line {tline}: need ns,nr,nd,N")
    ns, nr, nd, N = (_parse_scalar("topology", p, tline, int) for p in parts)
    scheme = raw.get("scheme", ("naf", 0))[0]
    try:
        topology = Topology(ns=ns, nr=nr, nd=nd, N=N, scheme=scheme)
    except ValueError as e:
        raise ConfigError(str(e)) from None

    gval, gline = need("snr_grid_db")
    grid = tuple(_parse_scalar("snr_grid_db", p.strip(), gline, float) for p in gval.split(","))
    sval, sline = need("seed")
    seed = _parse_scalar("seed", sval, sline, int)

    power = None
    if "power" in raw:
        pval, pline = raw["power"]
        parts = [p.strip() for p in pval.split(",")]
        if len(parts) != 3:
            raise ConfigError(f"malformed value for 'power' on line {pline}: need pi1,pi2,pi3")
        power = PowerAllocation(*(_parse_scalar("power", p, pline, float) for p in parts))

    con = ("qam", 4)
    if "constellation" in raw:
        cval, cline = raw["constellation"]
        parts = [p.strip() for p in cval.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"malformed value for 'constellation' on line {cline}: need kind,M")
        con = (parts[0].lower(), _parse_scalar("constellation", parts[1], cline, int))

    def opt(key, default, cast):
        if key not in raw:
            return default
        val, lineno = raw[key]
        if cast is bool:
            low = val.lower()
            if low in ("1", "true", "yes"):
                return True
            if low in ("0", "false", "no"):
                return False
            raise ConfigError(f"malformed value for {key!r} on line {lineno}: {val!r}")
        return _parse_scalar(key, val, lineno, cast)

    return SimConfig(
        code_id=code_id,
        topology=topology,
        snr_grid_db=grid,
        seed=seed,
        scheme=scheme,
        rho_db=opt("rho_db", 0.0, float),
        power=power,
        constellation=con,
        max_trials=opt("max_trials", DEFAULT_MAX_TRIALS, int),
        target_frame_errors=opt("target_frame_errors", DEFAULT_TARGET_ERRORS, int),
        shadowing_sigma_db=opt("shadowing_sigma_db", 0.0, float),
        crn=opt("crn", False, bool),
    )


def _trial_rng(seed: int, snr_index: int, trial: int, crn: bool) -> np.random.Generator:
    snr_key = 0 if crn else snr_index + 1
    return np.random.default_rng(np.random.SeedSequence([seed, snr_key, trial]))


def _scheme_realization(cfg: SimConfig, rng: np.random.Generator) -> ChannelRealization:
    """Sample a channel and apply shadowing plus the cooperation scheme."""
    top = cfg.topology
    cr = channel.sample_realization(top, cfg.rho_db, rng)
    if cfg.shadowing_sigma_db > 0:
        cr = channel.apply_shadowing(cr, cfg.shadowing_sigma_db, rng)
    if top.scheme == "virtual_relay":
        virtual = channel.virtual_relay_expand(cr)
        cr = ChannelRealization(
            top=Topology(ns=1, nr=1, nd=top.nd, N=top.nr, scheme="naf"),
            F=cr.F,
            G=tuple(v.G[0] for v in virtual),
            H=tuple(v.H[0] for v in virtual),
            rho=cr.rho,
        )
    elif top.scheme == "antenna_selection":
        cr = channel.select_antenna(cr)
    return cr


def _fer_batch(cfg: SimConfig, snr_index: int, start: int, count: int) -> np.ndarray:
    """Frame-error flags for trials [start, start+count) at one SNR point."""
    code = codes.get_code(cfg.code_id)
    con = codes.make_constellation(*cfg.constellation)
    pa = cfg.resolved_power()
    snr = 10.0 ** (cfg.snr_grid_db[snr_index] / 10.0)
    side = math.isqrt(con.M)

    errors = np.zeros(count, dtype=bool)
    for t in range(count):
        trial = start + t
        rng = _trial_rng(cfg.seed, snr_index, trial, cfg.crn)
        cr = _scheme_realization(cfg, rng)
        sym_idx = rng.integers(0, con.M, code.symbols_per_codeword)
        sym = con.points[sym_idx]
        cw = codes.encode(code, sym)
        frames = codes.split_frames(cw, code.ns)
        res = channel.simulate_reception(frames, cr, pa, snr, rng)
        tmpl = decoder.build_lattice(code, res.equivalent, snr, con)
        dec_idx = decoder.sphere_decode(tmpl.with_target(res.stacked()))
        # transmitted indices in the decoder's interleaved (re, im) layout
        tx = np.empty(2 * code.symbols_per_codeword, dtype=np.int64)
        tx[0::2] = sym_idx // side
        tx[1::2] = sym_idx % side
        errors[t] = bool(np.any(dec_idx != tx))
    return errors


def _outage_batch(cfg: SimConfig, rate: float, snr_index: int, start: int, count: int) -> np.ndarray:
    code = codes.get_code(cfg.code_id)
    pa = cfg.resolved_power()
    snr = 10.0 ** (cfg.snr_grid_db[snr_index] / 10.0)
    out = np.zeros(count, dtype=bool)
    for t in range(count):
        rng = _trial_rng(cfg.seed, snr_index, start + t, cfg.crn)
        cr = _scheme_realization(cfg, rng)
        mi = sum(
            channel.mutual_information(ec, snr)
            for ec in channel.equivalent_channels(cr, pa, snr)
        )
        out[t] = mi < 2.0 * code.N * rate
    return out


def _monte_carlo_point(cfg, snr_index, batch_fn, workers, batch_size) -> FerRow:
    """Run one SNR point with deterministic early stopping.

    Batches are accumulated in trial order; the stop cut happens at the
    exact trial where the error target is reached, so the result does
    not depend on batch size or worker count.
    """
    target = cfg.target_frame_errors
    errors = 0
    trials = 0
    pending = []
    pos = 0
    while pos < cfg.max_trials:
        n = min(batch_size, cfg.max_trials - pos)
        pending.append((pos, n))
        pos += n

    def consume(flags):
        nonlocal errors, trials
        cum = np.cumsum(flags) + errors
        hit = np.nonzero(cum >= target)[0]
        if hit.size:
            cut = int(hit[0]) + 1
            return FerRow(cfg.snr_grid_db[snr_index], trials + cut, int(cum[hit[0]]))
        errors += int(flags.sum())
        trials += len(flags)
        return None

    if workers <= 1:
        for s, n in pending:
            row = consume(batch_fn(cfg, snr_index, s, n))
            if row is not None:
                return row
        return FerRow(cfg.snr_grid_db[snr_index], trials, errors)

    # submit a sliding window of batches so early stopping saves work,
    # but always consume results in trial order for determinism
    with ProcessPoolExecutor(max_workers=workers) as ex:
        window = 2 * workers
        futures = []
        next_batch = 0
        while next_batch < len(pending) and len(futures) < window:
            s, n = pending[next_batch]
            futures.append(ex.submit(batch_fn, cfg, snr_index, s, n))
            next_batch += 1
        while futures:
            flags = futures.pop(0).result()
            row = consume(flags)
            if row is not None:
                for fut in futures:
                    fut.cancel()
                return row
            if next_batch < len(pending):
                s, n = pending[next_batch]
                futures.append(ex.submit(batch_fn, cfg, snr_index, s, n))
                next_batch += 1
    return FerRow(cfg.snr_grid_db[snr_index], trials, errors)


def run_fer(cfg: SimConfig, workers: int = 1, batch_size: int = 512) -> FerTable:
    """Monte Carlo frame error rate over the SNR grid."""
    cfg.validate_scheme()
    rows = [
        _monte_carlo_point(cfg, i, _fer_batch, workers, batch_size)
        for i in range(len(cfg.snr_grid_db))
    ]
    return FerTable(tuple(rows))


def run_outage(cfg: SimConfig, rate_bits_pcu: float, workers: int = 1, batch_size: int = 4096) -> FerTable:
    """Monte Carlo outage probability at a fixed rate (bits per channel use)."""
    if rate_bits_pcu < 0:
        raise ConfigError("rate must be nonnegative")
    batch = _OutageBatch(rate_bits_pcu)  # picklable for worker pools
    rows = [
        _monte_carlo_point(cfg, i, batch, workers, batch_size)
        for i in range(len(cfg.snr_grid_db))
    ]
    return FerTable(tuple(rows))


class _OutageBatch:
    def __init__(self, rate):
        self.rate = rate

    def __call__(self, cfg, snr_index, start, count):
        return _outage_batch(cfg, self.rate, snr_index, start, count)


def slope_estimate(table: FerTable, fer_window: tuple[float, float], max_rel_ci: float = 0.5) -> float:
    """Diversity estimate: negated LS slope of log10(FER) vs log10(SNR).

    Only rows inside the FER window whose Wilson interval is tight
    relative to the estimate take part.
    """
    hi, lo = fer_window
    xs, ys = [], []
    for r in table:
        if r.trials == 0 or r.frame_errors == 0:
            continue
        if not (lo <= r.fer <= hi):
            continue
        ci_lo, ci_hi = r.wilson_ci()
        if (ci_hi - ci_lo) / r.fer >= max_rel_ci:
            continue
        xs.append(r.snr_db / 10.0)  # log10 of linear SNR
        ys.append(math.log10(r.fer))
    if len(xs) < 2:
        raise InsufficientDataError(
            f"need >= 2 usable rows in FER window [{lo}, {hi}], have {len(xs)}"
        )
    slope = np.polyfit(xs, ys, 1)[0]
    return float(-slope)


def snr_per_bit_db(snr_db: float, code_id: str, M: int) -> float:
    """Receive SNR per bit: SNR minus 10*log10 of bits per channel use."""
    code = codes.get_code(code_id)
    rate = code.ns * math.log2(M)
    return snr_db - 10.0 * math.log10(rate)


def emit_csv(table: FerTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["snr_db", "trials", "frame_errors", "fer", "ci_low", "ci_high"])
        for r in table:
            lo, hi = r.wilson_ci()
            writer.writerow([repr(r.snr_db), r.trials, r.frame_errors, repr(r.fer), repr(lo), repr(hi)])


def read_csv(path) -> FerTable:
    rows = []
    with open(path) as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(FerRow(float(rec["snr_db"]), int(rec["trials"]), int(rec["frame_errors"])))
    return FerTable(tuple(rows))
