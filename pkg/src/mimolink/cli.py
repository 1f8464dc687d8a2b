"""Command line interface: BER sweeps, required-Eb/N0 extraction and
capacity estimation.

All flags can also be supplied through a JSON config file (--config);
explicit flags win.  Worker count is controlled only by the
MIMOLINK_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import capacity as capacity_mod
from . import harness
from .stcodes import Scheme


def _parse_grid(text: str) -> list[float]:
    """Parse 'start:step:stop' (inclusive) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("grid must be start:step:stop")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise argparse.ArgumentTypeError("grid step must be > 0")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(max(n, 1))]
    return [float(p) for p in text.split(",")]


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scheme", choices=[s.value for s in Scheme])
    p.add_argument("--eta", type=int, choices=[2, 4, 6])
    p.add_argument("--rx", type=int, default=2, choices=[2, 3],
                   help="number of receive antennas")
    p.add_argument("--alpha-db", default=None,
                   help="comma-separated per-antenna attenuations in dB "
                        "(first entry 0 by convention); default all 0")
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--frame-info-bits", type=int, default=9600)
    p.add_argument("--seed", type=int, default=0)


def _scenario_from_args(args) -> harness.Scenario:
    if args.scheme is None or args.eta is None:
        raise SystemExit("--scheme and --eta are required")
    if args.alpha_db is None:
        alpha = [0.0] * args.rx
    else:
        alpha = [float(a) for a in str(args.alpha_db).split(",")]
    return harness.resolve_scenario(
        args.scheme, args.eta, m_r=args.rx, alpha_db=alpha,
        iterations=args.iterations, frame_info_bits=args.frame_info_bits,
        seed=args.seed)


def _apply_config(argv: list[str], parser: argparse.ArgumentParser):
    """Parse once to find --config, load JSON defaults, parse again."""
    pre, _ = parser.parse_known_args(argv)
    if getattr(pre, "config", None):
        with open(pre.config) as fh:
            cfg = json.load(fh)
        defaults = {k.replace("-", "_"): v for k, v in cfg.items()}
        # defaults belong to the invoked subcommand's parser
        sub_action = next(a for a in parser._actions
                          if isinstance(a, argparse._SubParsersAction))
        sub = sub_action.choices[pre.command]
        known = {a.dest for a in sub._actions}
        bad = set(defaults) - known
        if bad:
            raise SystemExit(f"unknown config keys: {sorted(bad)}")
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mimolink")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", help="BER vs Eb/N0 curve")
    _add_scenario_args(sp)
    sp.add_argument("--config")
    sp.add_argument("--ebn0", required=False,
                    help="Eb/N0 grid, start:step:stop or comma list")
    sp.add_argument("--min-frame-errors", type=int, default=100)
    sp.add_argument("--max-bits", type=int, default=50_000_000)
    sp.add_argument("--out", help="JSONL output path (appended)")
    sp.add_argument("--csv", help="CSV output path")

    rp = sub.add_parser("required-ebn0",
                        help="Eb/N0 needed to reach a target BER")
    _add_scenario_args(rp)
    rp.add_argument("--config")
    rp.add_argument("--ebn0", help="grid to simulate (start:step:stop)")
    rp.add_argument("--from-jsonl", dest="from_jsonl",
                    help="interpolate a previously saved curve instead")
    rp.add_argument("--target-ber", type=float, default=1e-4)
    rp.add_argument("--min-frame-errors", type=int, default=100)
    rp.add_argument("--max-bits", type=int, default=50_000_000)
    rp.add_argument("--out", help="JSONL output path for simulated points")

    cp = sub.add_parser("capacity", help="mean capacity estimates (CSV)")
    cp.add_argument("--config")
    cp.add_argument("--scheme", choices=[s.value for s in Scheme],
                    action="append", dest="schemes")
    cp.add_argument("--snr-db", default="0:5:20",
                    help="SNR grid, start:step:stop or comma list")
    cp.add_argument("--rx", type=int, default=2, choices=[2, 3])
    cp.add_argument("--alpha-db", default=None)
    cp.add_argument("--trials", type=int, default=100_000)
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--out", help="CSV output path (default stdout)")
    return ap


def cmd_sweep(args) -> int:
    scenario = _scenario_from_args(args)
    if not args.ebn0:
        raise SystemExit("--ebn0 grid is required")
    grid = _parse_grid(args.ebn0)
    stop = harness.StopRule(min_frame_errors=args.min_frame_errors,
                            max_bits=args.max_bits)
    curve = harness.sweep(scenario, grid, stop)
    for p in curve.points:
        flag = " (upper bound)" if p.upper_bound else ""
        print(f"ebn0={p.ebn0_db:6.2f} dB  ber={p.ber:.3e} +-{p.ci95:.1e}  "
              f"bits={p.bits}  frame_errors={p.frame_errors}{flag}")
    if args.out:
        harness.append_jsonl(args.out, curve)
    if args.csv:
        harness.write_csv(args.csv, [curve])
    return 0


def cmd_required_ebn0(args) -> int:
    if args.from_jsonl:
        points = harness.load_points_jsonl(args.from_jsonl)
        req = harness.required_ebn0(points, target_ber=args.target_ber)
    else:
        scenario = _scenario_from_args(args)
        if not args.ebn0:
            raise SystemExit("--ebn0 grid or --from-jsonl is required")
        grid = _parse_grid(args.ebn0)
        stop = harness.StopRule(min_frame_errors=args.min_frame_errors,
                                max_bits=args.max_bits)
        curve = harness.sweep(scenario, grid, stop)
        if args.out:
            harness.append_jsonl(args.out, curve)
        req = harness.required_ebn0(curve, target_ber=args.target_ber)
    if not req.reached:
        print(f"target BER {args.target_ber:g} not bracketed by the curve")
        return 1
    print(f"required_ebn0_db={req.ebn0_db:.3f} +-{req.ci_db:.3f}")
    return 0


def cmd_capacity(args) -> int:
    schemes = args.schemes or [s.value for s in Scheme]
    grid = _parse_grid(args.snr_db)
    alphas = ([1.0] * args.rx if args.alpha_db is None else
              [10 ** (float(a) / 10) for a in str(args.alpha_db).split(",")])
    rows = []
    for scheme in schemes:
        for snr_db in grid:
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=args.seed,
                                       spawn_key=(harness._point_key(snr_db),)))
            mean, se = capacity_mod.mean_capacity(
                scheme, snr_db, args.rx, alphas, args.trials, rng)
            rows.append((scheme, snr_db, mean, se, args.trials))
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("scheme,snr_db,mean_capacity,std_err,n_trials\n")
        for scheme, snr_db, mean, se, n in rows:
            out.write(f"{scheme},{snr_db:g},{mean:.6f},{se:.6f},{n}\n")
    finally:
        if args.out:
            out.close()
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = _apply_config(sys.argv[1:] if argv is None else list(argv), parser)
    try:
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "required-ebn0":
            return cmd_required_ebn0(args)
        if args.command == "capacity":
            return cmd_capacity(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
