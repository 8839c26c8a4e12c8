"""Command-line front end: ``relaysim simulate | analyze | verify``."""

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace
from fractions import Fraction

import numpy as np

from . import acceptance, engine
from .analysis import MgfSpec, asymptotic_ratio, diversity_order_analytic
from .downlink import SchemeId
from .engine import Mode, SimConfig
from .exceptions import NumericalError

__all__ = ["main", "build_parser"]

COLUMNS = ["scheme", "N", "M", "mode", "snr_db", "sep_analytic", "sep_sim",
           "ci_low", "ci_high", "errors", "trials", "seed"]
ANALYZE_COLUMNS = ["scheme", "N", "M", "mode", "snr_db", "sep_analytic"]

_MODES = {"e2e": Mode.END_TO_END, "downlink": Mode.DOWNLINK_ONLY,
          "uplink": Mode.UPLINK_ONLY, "state1": Mode.MAXMIN_STATE1}


class UsageError(Exception):
    pass


def _num(x):
    return format(float(x), ".10g")


def _modulation(text):
    kind, _, order = text.partition(":")
    if kind.lower() != "mpsk" or not order.isdigit():
        raise argparse.ArgumentTypeError(f"expected mpsk:M, got {text!r}")
    return int(order)


def _snr_grid(text):
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, stop, step = map(float, parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise argparse.ArgumentTypeError("need step > 0 and stop >= start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]


def _grid_flags(p):
    p.add_argument("--scheme", action="append", choices=[s.value for s in SchemeId], required=True,
                   help="downlink scheme; repeat for several")
    p.add_argument("--antennas", type=int, default=2, help="relay antennas N")
    p.add_argument("--mod", type=_modulation, default=4, metavar="mpsk:M", help="constellation, e.g. mpsk:4")
    p.add_argument("--snr-db", type=_snr_grid, required=True, metavar="START:STOP:STEP",
                   help="inclusive SNR grid in dB")
    p.add_argument("--mode", choices=list(_MODES), default="e2e")
    p.add_argument("--relay-snr-db", type=float, default=None,
                   help="hold the relay SNR fixed instead of sweeping it")
    p.add_argument("--node-snr-db", type=float, default=None,
                   help="hold the node SNR fixed instead of sweeping it")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="relaysim", description="Two-way relay SEP simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte Carlo SEP sweep")
    _grid_flags(sim)
    sim.add_argument("--trials", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--max-errors", type=int, default=None)
    sim.add_argument("--threads", type=int, default=None, help="worker threads (results do not depend on it)")

    ana = sub.add_parser("analyze", help="analytic SEP, diversity orders and asymptotic ratios")
    _grid_flags(ana)

    ver = sub.add_parser("verify", help="run the acceptance checks")
    ver.add_argument("--quick", action="store_true", help="1e5 trials with widened tolerances")
    ver.add_argument("--only", default=None, help="comma-separated criterion numbers")
    ver.add_argument("--override", action="append", default=[], metavar="NAME=VALUE",
                     help="override one setting, e.g. ratio_rel_tol=0")
    return parser


def _configs(args, trials=1, seed=0, max_errors=None):
    if args.relay_snr_db is not None and args.node_snr_db is not None:
        raise UsageError("--relay-snr-db and --node-snr-db cannot both be fixed")
    mode = _MODES[args.mode]
    out = []
    for name in sorted(set(args.scheme)):
        try:
            cfg = SimConfig(SchemeId.parse(name), args.antennas, args.mod, 0.0, 0.0, trials, seed=seed,
                            mode=mode, max_errors=max_errors)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.relay_snr_db is not None:
            cfg = replace(cfg, zeta_r_db=args.relay_snr_db)
        if args.node_snr_db is not None:
            cfg = replace(cfg, zeta_s_db=args.node_snr_db)
        out.append(cfg)
    return out


def _row(cfg, snr_db):
    return {"scheme": cfg.scheme.value, "N": cfg.N, "M": cfg.M, "mode": cfg.mode.value, "snr_db": _num(snr_db)}


def cmd_simulate(args):
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    rows = []
    for cfg in _configs(args, args.trials, args.seed, args.max_errors):
        points = engine.sweep(cfg, args.snr_db, relay=args.relay_snr_db is None,
                              node=args.node_snr_db is None, workers=args.threads)
        for p in points:
            rows.append({**_row(cfg, p.snr_db), "sep_analytic": _num(p.sep_analytic),
                         "sep_sim": _num(p.sep_simulated), "ci_low": _num(p.ci_low),
                         "ci_high": _num(p.ci_high), "errors": p.errors, "trials": p.trials,
                         "seed": cfg.seed})
    return COLUMNS, rows, None


def cmd_analyze(args):
    rows = []
    for cfg in _configs(args):
        for snr in args.snr_db:
            point = replace(
                cfg,
                zeta_r_db=snr if args.relay_snr_db is None else cfg.zeta_r_db,
                zeta_s_db=snr if args.node_snr_db is None else cfg.zeta_s_db,
            )
            rows.append({**_row(cfg, snr), "sep_analytic": _num(engine.analytic_sep(point))})
    N = args.antennas
    schemes = sorted({SchemeId.parse(s) for s in args.scheme}, key=lambda s: s.value)
    summary = [{"quantity": "diversity_order", "scheme": s.value, "N": N,
                "value": _num(diversity_order_analytic(MgfSpec(s, N, 1.0), args.mod)), "exact": N}
               for s in schemes]
    for a, b in ((SchemeId.TB, SchemeId.MAXMIN_AS_BNC), (SchemeId.STBC_BNC, SchemeId.MAXMIN_AS_BNC),
                 (SchemeId.TB, SchemeId.STBC_BNC)):
        r = asymptotic_ratio(a, b, N)
        summary.append({"quantity": "asymptotic_ratio", "scheme": f"{a.value}/{b.value}", "N": N,
                        "value": _num(r), "exact": str(Fraction(r))})
    return ANALYZE_COLUMNS, rows, summary


def _render(columns, rows, summary, fmt):
    if fmt == "json":
        doc = {"columns": columns, "rows": rows}
        if summary is not None:
            doc["summary"] = summary
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if summary is not None:
        buf.write("\n")
        writer = csv.DictWriter(buf, fieldnames=["quantity", "scheme", "N", "value", "exact"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(summary)
    return buf.getvalue()


def cmd_verify(args):
    settings = acceptance.quick_settings() if args.quick else acceptance.Settings()
    try:
        overrides = dict(item.split("=", 1) for item in args.override)
        settings = settings.override(**overrides)
        only = [int(x) for x in args.only.split(",")] if args.only else None
    except ValueError as exc:
        raise UsageError(f"bad --override/--only: {exc}") from None
    if only and not set(only) <= set(acceptance.CRITERIA):
        raise UsageError(f"criteria are numbered {min(acceptance.CRITERIA)}-{max(acceptance.CRITERIA)}")
    results = acceptance.run_criteria(settings, only, out=lambda line: print(line, flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"# {len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {failed}" if failed else ""))
    return 1 if failed else 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args)
        handler = cmd_simulate if args.command == "simulate" else cmd_analyze
        text = _render(*handler(args), args.format)
    except UsageError as exc:
        parser.error(str(exc))
    except NumericalError as exc:
        print(f"relaysim: numerical failure: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
