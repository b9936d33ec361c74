"""Command-line front end.

Subcommands::

    miso-lab bounds --m 64 --tc 8 --p 10 --kappa 1 [--format csv|json]
    miso-lab simulate --m 64 --tc 8 --p 10 [--constraint fourth --kappa 1]
    miso-lab sweep-alpha --alpha 1 --p 1 --m-list 16,64,256
    miso-lab verify-lemmas --trials 100000

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
Floats are written with 10 significant digits, so reruns with the same
arguments and seed give byte-identical output. ``MISO_LAB_THREADS`` caps the
number of worker threads.
"""

import argparse
import csv
import io
import json
import math
import sys
import warnings

from . import __version__
from .bounds import bound_report, lower_fourth, lower_second, upper_fourth, upper_second
from .channel import ChannelConfig, Constraint
from .errors import MisoLabError
from .montecarlo import DEFAULT_SEED, estimate_scheme_rate, lemma_suite, sweep_gain
from .scheme import SchemeConfig

SCHEMA_VERSION = 1

BOUNDS_COLUMNS = ["M", "T_c", "P", "kappa", "alpha", "T_tau",
                  "ideal_waterfill", "ideal_asymptote",
                  "upper_second", "upper_fourth", "lower_second", "lower_fourth",
                  "lower_second_vacuous", "lower_fourth_vacuous"]
SIMULATE_COLUMNS = ["M", "T_c", "P", "constraint", "kappa", "T_tau", "effective_power",
                    "rate_bits", "stderr", "lower_bound", "upper_bound", "trials", "seed"]
SWEEP_COLUMNS = ["M", "T_c", "T_tau", "rate_bits", "rate_over_log2M", "stderr"]
DEGENERATE = "degenerate"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _num(x):
    """Round a float to the 10 significant digits used in every output."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(f"{x:.10g}")


def _cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _num(obj)


def _csv_text(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _jsonl_text(rows):
    return "".join(json.dumps(_clean(r), sort_keys=True) + "\n" for r in rows)


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands

def bounds_row(m, tc, p, kappa):
    rep = bound_report(m, tc, p, kappa)
    lo2 = DEGENERATE if rep.degenerate else rep.lower_second_bits
    lo4 = DEGENERATE if rep.degenerate else rep.lower_fourth_bits
    return {
        "M": rep.m, "T_c": rep.tc, "P": rep.p, "kappa": rep.kappa, "alpha": rep.alpha,
        "T_tau": DEGENERATE if rep.t_train is None else rep.t_train,
        "ideal_waterfill": rep.ideal_waterfill_bits,
        "ideal_asymptote": rep.ideal_asymptote_bits,
        "upper_second": rep.upper_second_bits,
        "upper_fourth": rep.upper_fourth_bits,
        "lower_second": lo2,
        "lower_fourth": lo4,
        "lower_second_vacuous": rep.lower_second_vacuous,
        "lower_fourth_vacuous": rep.lower_fourth_vacuous,
    }


def cmd_bounds(args):
    row = bounds_row(args.m, args.tc, args.p, args.kappa)
    if args.format == "json":
        text = json.dumps(_clean({"schema_version": SCHEMA_VERSION, **row}),
                          sort_keys=True) + "\n"
    else:
        text = _csv_text(BOUNDS_COLUMNS, [row])
    _emit(text, args.out)
    return EXIT_OK


def simulate_row(m, tc, p, kappa, constraint, trials, seed):
    ch = ChannelConfig(m, tc, p, Constraint(constraint), kappa)
    cfg = SchemeConfig.for_channel(ch)
    est = estimate_scheme_rate(cfg, trials, seed)
    if ch.constraint is Constraint.FOURTH_MOMENT:
        lo, hi = lower_fourth(m, tc, p, kappa), upper_fourth(m, tc, p, kappa)
    else:
        lo, hi = lower_second(m, tc, p), upper_second(m, tc, p)
    return {
        "M": m, "T_c": tc, "P": float(p), "constraint": ch.constraint.value,
        "kappa": float(kappa), "T_tau": cfg.t_train, "effective_power": cfg.effective_power,
        "rate_bits": est.mean, "stderr": est.stderr, "lower_bound": lo, "upper_bound": hi,
        "trials": est.trials, "seed": est.master_seed,
    }


def cmd_simulate(args):
    row = simulate_row(args.m, args.tc, args.p, args.kappa, args.constraint,
                       args.trials, args.seed)
    if args.format == "json":
        text = json.dumps(_clean({"schema_version": SCHEMA_VERSION, **row}),
                          sort_keys=True) + "\n"
    else:
        text = _csv_text(SIMULATE_COLUMNS, [row])
    _emit(text, args.out)
    return EXIT_OK


def cmd_sweep_alpha(args):
    if not args.m_list:
        raise UsageError("--m-list is empty")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = sweep_gain(args.alpha, args.p, args.m_list, args.trials, args.seed)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if not rows:
        print("error: every configuration in --m-list is degenerate", file=sys.stderr)
        return EXIT_USAGE
    table = [{"M": r.m, "T_c": r.tc, "T_tau": r.t_train, "rate_bits": r.rate_bits,
              "rate_over_log2M": r.rate_over_log2m, "stderr": r.stderr} for r in rows]
    if args.format == "json":
        text = _jsonl_text(table)
    else:
        text = _csv_text(SWEEP_COLUMNS, table)
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify_lemmas(args):
    if args.trials < 10_000:
        raise UsageError("verify-lemmas needs --trials >= 10000")
    failed, lines = [], []
    for res in lemma_suite(args.trials, args.seed):
        d = res.to_json_dict()
        d["trials"], d["seed"] = res.trials, res.seed
        lines.append(d)
        if not res.passed:
            failed.append(res)
    _emit(_jsonl_text(lines), args.out)
    for res in failed:
        ctx = ", ".join(f"{k}={v}" for k, v in res.context.items())
        print(f"FAIL {res.lemma_id}: observed {res.observed:.10g} > bound {res.bound:.10g}"
              f" + {3:g} stderr ({ctx})", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parsing

def _positive_int(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _finite(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def _int_list(text):
    parts = [s for s in text.replace(" ", "").split(",") if s]
    try:
        return [int(s, 0) for s in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="miso-lab",
                     description="MISO feedback channel bounds, scheme simulation "
                                 "and lemma checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, fmt=True):
        p.add_argument("--out", default="-", help="output file (default: stdout)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("bounds", help="closed-form bounds for one (M, T_c, P, kappa)")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--tc", type=_positive_int, required=True)
    p.add_argument("--p", type=_finite, required=True)
    p.add_argument("--kappa", type=_finite, default=1.0)
    common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo rate of the training scheme")
    p.add_argument("--m", type=_positive_int, required=True)
    p.add_argument("--tc", type=_positive_int, required=True)
    p.add_argument("--p", type=_finite, required=True)
    p.add_argument("--kappa", type=_finite, default=1.0)
    p.add_argument("--constraint", choices=[c.value for c in Constraint],
                   default=Constraint.SECOND_MOMENT.value)
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-alpha", help="scheme rate over M at T_c = M^alpha")
    p.add_argument("--alpha", type=_finite, required=True)
    p.add_argument("--p", type=_finite, required=True)
    p.add_argument("--m-list", type=_int_list, required=True,
                   help="comma-separated antenna counts, e.g. 16,64,256")
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    common(p)
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("verify-lemmas", help="run every Monte Carlo check (JSON lines)")
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    common(p, fmt=False)
    p.set_defaults(func=cmd_verify_lemmas)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MisoLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
