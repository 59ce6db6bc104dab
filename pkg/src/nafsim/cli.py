"""Command-line entry point.

Subcommands: dmt (curve CSVs), fer (Monte Carlo frame error rate),
outage, audit (determinant audit), codes (list bundled codes).  Exit
codes: 0 success, 2 configuration error, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import algebra, channel, codes, dmt, harness
from .algebra import BudgetError
from .harness import ConfigError, SimConfig


def _parse_ints(text: str, n: int, what: str) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ConfigError(f"{what} needs {n} comma-separated integers, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{what} needs integers, got {text!r}") from None


def _cmd_dmt(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emitted = []
    for spec in args.rayleigh or []:
        m, n = _parse_ints(spec, 2, "--rayleigh")
        curve = dmt.rayleigh_dmt(m, n)
        path = out / f"rayleigh_{m}x{n}.csv"
        dmt.export_curve_csv(curve, path)
        emitted.append(path)
    for spec in args.product or []:
        m, n, l = _parse_ints(spec, 3, "--product")
        curve = dmt.product_dmt(dmt.ProductChannelDims(m, n, l))
        path = out / f"product_{m}_{n}_{l}.csv"
        dmt.export_curve_csv(curve, path)
        emitted.append(path)
    for spec in args.naf or []:
        ns, nr, nd, N = _parse_ints(spec, 4, "--naf")
        curve = dmt.naf_bound(ns, nr, nd, N)
        path = out / f"naf_{ns}_{nr}_{nd}_N{N}.csv"
        dmt.export_curve_csv(curve, path)
        emitted.append(path)
    if not emitted:
        raise ConfigError("nothing to emit: pass --rayleigh/--product/--naf")
    for p in emitted:
        print(p)
    return 0


def _config_from_args(args) -> SimConfig:
    base: dict = {}
    if args.config:
        cfg = harness.parse_config(args.config)
        base = dict(
            code_id=cfg.code_id,
            topology=cfg.topology,
            snr_grid_db=cfg.snr_grid_db,
            seed=cfg.seed,
            scheme=cfg.scheme,
            rho_db=cfg.rho_db,
            power=cfg.power,
            constellation=cfg.constellation,
            max_trials=cfg.max_trials,
            target_frame_errors=cfg.target_frame_errors,
            shadowing_sigma_db=cfg.shadowing_sigma_db,
            crn=cfg.crn,
        )
    if args.code_id:
        base["code_id"] = args.code_id
    if args.topology:
        ns, nr, nd, N = _parse_ints(args.topology, 4, "--topology")
        base["topology"] = channel.Topology(ns, nr, nd, N, base.get("scheme", args.scheme or "naf"))
    if args.scheme:
        base["scheme"] = args.scheme
        if "topology" in base:
            t = base["topology"]
            base["topology"] = channel.Topology(t.ns, t.nr, t.nd, t.N, args.scheme)
    if args.snr_grid_db:
        try:
            base["snr_grid_db"] = tuple(float(p) for p in args.snr_grid_db.split(","))
        except ValueError:
            raise ConfigError(f"--snr-grid-db needs floats, got {args.snr_grid_db!r}") from None
    if args.seed is not None:
        base["seed"] = args.seed
    if args.rho_db is not None:
        base["rho_db"] = args.rho_db
    if args.max_trials is not None:
        base["max_trials"] = args.max_trials
    if args.target_frame_errors is not None:
        base["target_frame_errors"] = args.target_frame_errors
    if args.constellation:
        kind, M = args.constellation.split(",")
        base["constellation"] = (kind.strip().lower(), int(M))
    if args.shadowing_sigma_db is not None:
        base["shadowing_sigma_db"] = args.shadowing_sigma_db
    if args.crn:
        base["crn"] = True

    for req in ("code_id", "topology", "snr_grid_db"):
        if req not in base:
            raise ConfigError(f"missing {req}: provide --config or the matching flag")
    if "seed" not in base:
        raise ConfigError("a seed is required: pass --seed or set it in the config file")
    return SimConfig(**base)


def _emit_table(table, cfg: SimConfig, out: str | None, per_bit: bool) -> None:
    if out:
        harness.emit_csv(table, out)
        print(out)
        if per_bit:
            shift = harness.snr_per_bit_db(0.0, cfg.code_id, cfg.constellation[1])
            rows = harness.FerTable(
                tuple(
                    harness.FerRow(r.snr_db + shift, r.trials, r.frame_errors) for r in table
                )
            )
            path = str(Path(out).with_suffix("")) + "_per_bit.csv"
            harness.emit_csv(rows, path)
            print(path)
    else:
        print("snr_db,trials,frame_errors,fer,ci_low,ci_high")
        for r in table:
            lo, hi = r.wilson_ci()
            print(f"{r.snr_db},{r.trials},{r.frame_errors},{r.fer:.6g},{lo:.6g},{hi:.6g}")


def _cmd_fer(args) -> int:
    cfg = _config_from_args(args)
    table = harness.run_fer(cfg, workers=args.workers)
    _emit_table(table, cfg, args.out, args.per_bit)
    return 0


def _cmd_outage(args) -> int:
    cfg = _config_from_args(args)
    table = harness.run_outage(cfg, args.rate, workers=args.workers)
    _emit_table(table, cfg, args.out, args.per_bit)
    return 0


def _cmd_audit(args) -> int:
    if args.code not in algebra.CODE_IDS:
        raise ConfigError(f"unknown code {args.code!r}")
    gen = algebra.generator_matrix(args.code)
    if args.export_generator:
        algebra.export_generator_csv(gen, args.export_generator)
        print(args.export_generator)
    kind, M = args.constellation.split(",")
    con = codes.make_constellation(kind.strip(), int(M))
    diffs = con.integer_differences()
    report = algebra.nvd_audit(
        gen, diffs, mode=args.mode, samples=args.samples, budget=args.budget
    )
    print(f"code={args.code} mode={report.mode} evaluated={report.evaluated}")
    print(f"min |det|^2 = {report.min_det_sq:.12e}")
    print(f"min rank    = {report.min_rank} (full = {gen.nblocks * gen.block_dim})")
    print(f"argmin diff = {np.array2string(report.argmin, precision=3)}")
    return 0


def _cmd_codes(args) -> int:
    if args.action != "list":
        raise ConfigError(f"unknown codes action {args.action!r}")
    print(f"{'id':10s} {'blocks':>6s} {'ns':>3s} {'symbols':>8s} {'uses':>5s}  ring")
    for cid in algebra.CODE_IDS:
        c = codes.get_code(cid)
        print(
            f"{cid:10s} {c.N:6d} {c.ns:3d} {c.symbols_per_codeword:8d} "
            f"{c.frame_uses:5d}  {c.ring.value}"
        )
    return 0


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--code-id", dest="code_id", choices=algebra.CODE_IDS)
    p.add_argument("--topology", help="ns,nr,nd,N")
    p.add_argument("--scheme", choices=channel.SCHEMES)
    p.add_argument("--snr-grid-db", dest="snr_grid_db", help="comma-separated dB values")
    p.add_argument("--seed", type=int, help="RNG seed (required for published numbers)")
    p.add_argument("--rho-db", dest="rho_db", type=float)
    p.add_argument("--power", help="pi1,pi2,pi3 (unused: set in config)", default=None)
    p.add_argument("--constellation", default=None, help="kind,M e.g. qam,4")
    p.add_argument("--max-trials", dest="max_trials", type=int)
    p.add_argument("--target-frame-errors", dest="target_frame_errors", type=int)
    p.add_argument("--shadowing-sigma-db", dest="shadowing_sigma_db", type=float)
    p.add_argument("--crn", action="store_true", help="common random numbers across SNR")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--per-bit", action="store_true", help="also emit SNR-per-bit CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nafsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_dmt = sub.add_parser("dmt", help="emit tradeoff curves as CSV")
    p_dmt.add_argument("--rayleigh", action="append", metavar="m,n")
    p_dmt.add_argument("--product", action="append", metavar="m,n,l")
    p_dmt.add_argument("--naf", action="append", metavar="ns,nr,nd,N")
    p_dmt.add_argument("--out", required=True, help="output directory")
    p_dmt.set_defaults(func=_cmd_dmt)

    p_fer = sub.add_parser("fer", help="Monte Carlo frame error rate")
    _add_sim_flags(p_fer)
    p_fer.set_defaults(func=_cmd_fer)

    p_out = sub.add_parser("outage", help="Monte Carlo outage probability")
    _add_sim_flags(p_out)
    p_out.add_argument("--rate", type=float, required=True, help="bits per channel use")
    p_out.set_defaults(func=_cmd_outage)

    p_aud = sub.add_parser("audit", help="determinant / rank audit of a code")
    p_aud.add_argument("--code", required=True)
    p_aud.add_argument("--constellation", default="qam,4")
    p_aud.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p_aud.add_argument("--samples", type=int, default=10**6)
    p_aud.add_argument("--budget", type=int, default=algebra.DEFAULT_ENUM_BUDGET)
    p_aud.add_argument("--export-generator", help="also write the generator CSV here")
    p_aud.set_defaults(func=_cmd_audit)

    p_codes = sub.add_parser("codes", help="inspect bundled codes")
    p_codes.add_argument("action", choices=("list",))
    p_codes.set_defaults(func=_cmd_codes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as e:
        print(f"budget error: {e}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
