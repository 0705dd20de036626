"""
Command line - simulate, decode, diagnose-flips, oracle-compare, validate, serve.
Flags mirror the RunConfig fields; a --config key=value file fills in
whatever the flags leave out.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from eqml import __version__
from eqml.code_model import lint_alist, load_alist
from eqml.config import build_run_config, load_config_file, settings, setup_logging

logger = logging.getLogger(__name__)

RUN_FIELDS = [
    "code", "puncture", "decoder", "stop_rule", "jmax", "imax", "i_j", "normalization", "alpha", "metric",
    "modulation", "ebn0", "min_frames", "max_frame_errors", "max_frames", "batch_frames", "seed", "workers",
    "encode", "budget_fair", "out",
]


def _run_flags() -> argparse.ArgumentParser:
    """Flags shared by every command that builds a RunConfig"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="key=value file with run settings")
    parent.add_argument("--code", help="alist file of the parity-check matrix")
    parent.add_argument("--puncture", help="file of 0-based punctured VN indices")
    parent.add_argument("--decoder", choices=["ms", "spa", "abp-nws", "eqml-ews", "sms"])
    parent.add_argument("--stop-rule", dest="stop_rule", choices=["lds", "pps"])
    parent.add_argument("--jmax", type=int, help="maximum reprocessing stages")
    parent.add_argument("--imax", type=int, help="BP iterations per test")
    parent.add_argument("--ij", dest="i_j", help="per-stage budgets for abp-nws, e.g. 30,30,50,50")
    parent.add_argument("--normalization", type=float)
    parent.add_argument("--alpha", type=float, help="saturation magnitude")
    parent.add_argument("--metric", choices=["correlation", "literal", "euclidean"])
    parent.add_argument("--modulation", choices=["bpsk", "qpsk"])
    parent.add_argument("--ebn0", help="a:b:step or a comma list, in dB")
    parent.add_argument("--min-frames", dest="min_frames", type=int)
    parent.add_argument("--max-frame-errors", dest="max_frame_errors", type=int)
    parent.add_argument("--max-frames", dest="max_frames", type=int)
    parent.add_argument("--batch-frames", dest="batch_frames", type=int)
    parent.add_argument("--seed", type=int)
    parent.add_argument("--workers", type=int)
    parent.add_argument("--encode", choices=["zero", "random"])
    parent.add_argument("--budget-fair", dest="budget_fair", action="store_true", default=None)
    parent.add_argument("--out", help="output CSV path")
    parent.add_argument("--quiet", action="store_true", help="no progress bars")
    parent.add_argument("--log-level", dest="log_level", default=None)
    return parent


def build_parser() -> argparse.ArgumentParser:
    run_flags = _run_flags()
    parser = argparse.ArgumentParser(prog="eqml", description="EQML LDPC decoder and Monte Carlo simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[run_flags], help="FER / I_avg sweep to CSV")

    p_decode = sub.add_parser("decode", parents=[run_flags], help="decode one LLR frame from a file")
    p_decode.add_argument("--llr", required=True, help="file of N LLR values")
    p_decode.add_argument("--trace", help="prefix for <prefix>_tests.csv and <prefix>_selections.csv")

    p_flips = sub.add_parser("diagnose-flips", parents=[run_flags], help="V2C sign-flip traces of plain min-sum")
    p_flips.add_argument("--frames", type=int, default=1000)

    sub.add_parser("oracle-compare", parents=[run_flags], help="paired run against exhaustive ML (small codes)")

    p_validate = sub.add_parser("validate", help="lint alist files")
    p_validate.add_argument("files", nargs="+")
    p_validate.add_argument("--log-level", dest="log_level", default=None)

    p_serve = sub.add_parser("serve", help="start the decode API")
    p_serve.add_argument("--host", default=settings.api_host)
    p_serve.add_argument("--port", type=int, default=settings.api_port)
    p_serve.add_argument("--reload", action="store_true")
    p_serve.add_argument("--log-level", dest="log_level", default=None)
    return parser


def run_config_from_args(args: argparse.Namespace, **defaults: Any):
    file_values: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    overrides = {name: getattr(args, name, None) for name in RUN_FIELDS}
    for key, value in defaults.items():
        if overrides.get(key) is None and key not in file_values:
            overrides[key] = value
    return build_run_config(file_values, **overrides)


def _banner(title: str) -> None:
    print("=" * 60)
    print(title)
    print("=" * 60)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args: argparse.Namespace) -> int:
    from eqml.harness import build_context, emit_csv, run_sweep, write_meta

    cfg = run_config_from_args(args)
    if cfg.out is None:
        cfg = cfg.model_copy(update={"out": f"results/{cfg.decoder}.csv"})
    context = build_context(cfg)
    _banner(f"Simulating {cfg.decoder} ({cfg.stop_rule}) on {cfg.code}")

    stats = run_sweep(cfg, progress=not args.quiet, context=context)

    print(f"{'Eb/N0':>7} {'frames':>9} {'errors':>7} {'FER':>11} {'BER':>11} {'I_avg':>9} {'tests':>7}")
    for s in stats:
        print(f"{s.ebn0_db:7.2f} {s.frames:9d} {s.frame_errors:7d} {s.fer:11.4e} {s.ber:11.4e} {s.i_avg:9.3f} {s.avg_tests:7.3f}")

    out = emit_csv(stats, cfg.out)
    meta = write_meta(cfg, context, stats, cfg.out)
    print(f"\n💾 Results saved to: {out} (+ {meta.name})")
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    from eqml.harness import load_llr_frame, write_selection_trace, write_test_trace
    from eqml.router import run_decoder

    cfg = run_config_from_args(args)
    graph = load_alist(cfg.code)
    frame = load_llr_frame(args.llr)
    if len(frame) != graph.n_vars:
        raise ValueError(f"{args.llr}: {len(frame)} LLRs, code has {graph.n_vars} variables")

    outcome = run_decoder(graph, frame, cfg, trace=bool(args.trace))

    _banner(f"Decoded with {cfg.decoder}")
    print(f"status:           {outcome.status}")
    print(f"codeword:         {''.join(str(int(b)) for b in outcome.estimate)}")
    print(f"tests used:       {outcome.tests_used}")
    print(f"total iterations: {outcome.total_iterations}")
    if outcome.t_f is not None:
        print(f"T_F left:         {outcome.t_f} (pruned {outcome.pruned_tests})")

    if args.trace:
        tests = write_test_trace(outcome.trace, f"{args.trace}_tests.csv")
        picks = write_selection_trace(outcome.selections, f"{args.trace}_selections.csv")
        print(f"\n💾 Trace saved to: {tests}, {picks}")
    return 0


def cmd_diagnose_flips(args: argparse.Namespace) -> int:
    from eqml.harness import diagnose_flips, flip_means, write_flip_csv

    cfg = run_config_from_args(args, decoder="ms", ebn0="2.0", out="results/flips.csv")
    _banner(f"V2C sign flips, min-sum at {cfg.ebn0[0]:g} dB")

    traces = diagnose_flips(cfg, args.frames, progress=not args.quiet)
    means = flip_means(traces)
    for outcome, mean in means.items():
        if not mean.size:
            continue
        print(f"{outcome:>10}: final {mean[-1]:.3f}%  peak {mean.max():.3f}%")

    raw, mean_file = write_flip_csv(traces, cfg.out)
    print(f"\n💾 Traces saved to: {raw} (+ {mean_file.name})")
    return 0


def cmd_oracle_compare(args: argparse.Namespace) -> int:
    from eqml.oracle import emit_oracle_csv, oracle_compare, write_oracle_meta

    cfg = run_config_from_args(args, code="codes/hamming_7_4.alist", out="results/oracle.csv")
    _banner(f"ML oracle vs {cfg.decoder} on {cfg.code}")

    stats = oracle_compare(cfg, progress=not args.quiet)
    print(f"{'Eb/N0':>7} {'frames':>9} {'FER ML':>11} {'FER dec':>11} {'disagree':>9} {'events':>7} {'agree':>7}")
    for s in stats:
        print(
            f"{s.ebn0_db:7.2f} {s.frames:9d} {s.fer_ml:11.4e} {s.fer_decoder:11.4e} {s.disagreement_rate:9.4f}"
            f" {s.error_events:7d} {s.event_agreement_rate:7.4f}"
        )

    out = emit_oracle_csv(stats, cfg.out)
    meta = write_oracle_meta(cfg, stats, cfg.out)
    print(f"\n💾 Results saved to: {out} (+ {meta.name})")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    failures = 0
    for name in args.files:
        try:
            report = lint_alist(Path(name).read_text())
        except ValueError as e:
            print(f"❌ {name}: {e}")
            failures += 1
            continue
        print(f"✅ {name}")
        for key, value in report.items():
            print(f"   {key:<12} {value}")
    return 1 if failures else 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    _banner("EQML decoder API")
    print(f"Starting API server on http://{args.host}:{args.port}")
    print(f"Docs available at http://{args.host}:{args.port}/docs")
    uvicorn.run("eqml.api:app", host=args.host, port=args.port, reload=args.reload)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "decode": cmd_decode,
    "diagnose-flips": cmd_diagnose_flips,
    "oracle-compare": cmd_oracle_compare,
    "validate": cmd_validate,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
