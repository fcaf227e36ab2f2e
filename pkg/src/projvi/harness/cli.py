"""Command line entry point: ``projvi run|compare|sweep <config.json>``."""

import argparse
import os
import sys

from ..errors import ConfigInvalid, IOFailure
from . import output
from .config import SWEEP_PARAMS, load_config, override_param
from .experiment import build_instance, run_all, summarize, trace_name

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _prepare(args):
    cfg = load_config(args.config)
    if args.record_every is not None:
        if args.record_every < 1:
            raise ConfigInvalid("--record-every must be >= 1")
        cfg = cfg.with_record_every(args.record_every)
    out_dir = args.output_dir or cfg.resolve(cfg.output)
    return cfg, out_dir


def _tolerance(cfg):
    return cfg.tolerance if cfg.tolerance is not None else cfg.stop.f_tol


def _report(summaries, quiet, prefix=""):
    if quiet:
        return
    for s in summaries:
        err = "n/a" if s.final_error is None else f"{s.final_error:.3e}"
        itt = "never" if s.iterations_to_tolerance is None else s.iterations_to_tolerance
        print(f"{prefix}{s.label:<24} iters={s.iterations:<8} error={err:<10} "
              f"to_tol={itt!s:<8} {s.reason:<10} {s.wall_time:.3f}s")


def cmd_run(args):
    cfg, out_dir = _prepare(args)
    inst = build_instance(cfg)
    tol = _tolerance(cfg)
    results = run_all(cfg, inst, args.jobs)
    summaries = []
    for mcfg, (res, wall) in zip(cfg.methods, results):
        output.write_trace(os.path.join(out_dir, trace_name(mcfg.label)), res.records)
        summaries.append(summarize(mcfg, res, wall, tol))
    output.write_summary(os.path.join(out_dir, "summary.csv"), summaries, tol is not None)
    output.write_csv(os.path.join(out_dir, "timing.csv"), ["label", "wall_time_s"],
                     [[s.label, f"{s.wall_time:.6f}"] for s in summaries])
    _report(summaries, args.quiet)
    return EXIT_OK


def cmd_compare(args):
    cfg, out_dir = _prepare(args)
    if len(cfg.methods) < 2:
        raise ConfigInvalid("compare needs at least two entries in config.methods")
    grids = {m.record_every or cfg.record_every for m in cfg.methods}
    if len(grids) != 1:
        raise ConfigInvalid("compare needs the same record_every for every method")
    inst = build_instance(cfg)
    tol = _tolerance(cfg)
    results = run_all(cfg, inst, args.jobs)
    labels = [m.label for m in cfg.methods]
    output.write_compare(os.path.join(out_dir, "compare.csv"), labels, [r for r, _ in results])
    summaries = [summarize(m, r, w, tol) for m, (r, w) in zip(cfg.methods, results)]
    output.write_summary(os.path.join(out_dir, "summary.csv"), summaries, tol is not None)
    _report(summaries, args.quiet)
    return EXIT_OK


def _parse_values(text):
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            vals.append(float(tok))
        except ValueError:
            raise ConfigInvalid(f"--values entry {tok!r} is not a number") from None
    if not vals:
        raise ConfigInvalid("--values must list at least one number")
    return vals


def _value_tag(v):
    return format(v, "g")


def cmd_sweep(args):
    cfg, out_dir = _prepare(args)
    if args.param not in SWEEP_PARAMS:
        raise ConfigInvalid(f"--param must be one of {', '.join(SWEEP_PARAMS)}")
    values = _parse_values(args.values)
    variants = [(v, override_param(cfg, args.param, v)) for v in values]
    inst = build_instance(cfg)
    tol = _tolerance(cfg)
    rows, timing, all_summaries = [], [], []
    for v, vcfg in variants:
        results = run_all(vcfg, inst, args.jobs)
        for mcfg, (res, wall) in zip(vcfg.methods, results):
            suffix = f"_{args.param}={_value_tag(v)}"
            output.write_trace(os.path.join(out_dir, trace_name(mcfg.label, suffix)), res.records)
            s = summarize(mcfg, res, wall, tol)
            all_summaries.append((v, s))
            timing.append([args.param, _value_tag(v), s.label, f"{s.wall_time:.6f}"])

    def rank_key(item):
        v, s = item
        itt = s.iterations_to_tolerance
        return (itt is None, itt if itt is not None else 0, v)

    ranks = {}
    for label in dict.fromkeys(s.label for _, s in all_summaries):
        group = sorted((it for it in all_summaries if it[1].label == label), key=rank_key)
        for r, (v, s) in enumerate(group, start=1):
            ranks[(label, v)] = r
    for v, s in all_summaries:
        rows.append([args.param, _value_tag(v), *output.summary_row(s, tol is not None),
                     str(ranks[(s.label, v)])])
    header = ["param", "value", *output.SUMMARY_HEADER, "rank"]
    output.write_csv(os.path.join(out_dir, "sweep_summary.csv"), header, rows)
    output.write_csv(os.path.join(out_dir, "timing.csv"), ["param", "value", "label", "wall_time_s"], timing)
    if not args.quiet:
        for v, s in all_summaries:
            _report([s], False, prefix=f"{args.param}={_value_tag(v):<6} ")
    return EXIT_OK


def _add_globals(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--output-dir", default=default, help="directory for CSV output")
    parser.add_argument("--record-every", type=int, default=default,
                        help="record every N-th iterate (overrides the config)")
    parser.add_argument("--quiet", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="suppress the console summary")
    parser.add_argument("--jobs", type=int, default=argparse.SUPPRESS if suppress else 1,
                        help="run methods in N worker processes")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="projvi",
        description="Accelerated optimization on the sphere and Stiefel manifold.",
    )
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every configured method, one trace CSV each")
    p_run.add_argument("config")
    _add_globals(p_run, suppress=True)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="align several methods on one iteration grid")
    p_cmp.add_argument("config")
    _add_globals(p_cmp, suppress=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_sw = sub.add_parser("sweep", help="repeat the run over values of one parameter")
    p_sw.add_argument("config")
    p_sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p_sw.add_argument("--values", required=True, help="comma-separated list, e.g. 4,6,8")
    _add_globals(p_sw, suppress=True)
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"projvi: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOFailure as exc:
        print(f"projvi: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
