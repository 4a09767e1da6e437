"""Command line interface: ``tslab {run,replicate,scaling,audit}``.

Exit codes: 0 ok, 1 configuration error, 2 invariant failure (audit), 3 I/O error.
"""
import argparse
import json
import logging
import sys

from tslab.errors import ConfigError, TSLabError
from tslab.harness.config import ExperimentConfig, load_config

log = logging.getLogger("tslab")


def _int_list(text):
    try:
        return [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="tslab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML experiment file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=("csv", "json", "both"))
        p.add_argument("--thin", type=int, help="keep per-arm vectors every N rounds")
        p.add_argument("--T", type=int, dest="T")
        p.add_argument("--vectors", action="store_true", help="also write thinned per-arm vectors")
        return p

    common(sub.add_parser("run", help="one seeded run"))
    rep = common(sub.add_parser("replicate", help="independent replications"))
    rep.add_argument("--reps", type=int)
    rep.add_argument("--workers", type=int)
    rep.add_argument("--audit", action="store_true", help="run the event audits on the batch")
    sc = common(sub.add_parser("scaling", help="regret growth over a grid"))
    sc.add_argument("--reps", type=int)
    sc.add_argument("--workers", type=int)
    sc.add_argument("--T-grid", type=_int_list, required=True)
    sc.add_argument("--d-grid", type=_int_list)
    sc.add_argument("--N-grid", type=_int_list)
    au = sub.add_parser("audit", help="audit stored traces")
    au.add_argument("traces", help="directory written by replicate")
    au.add_argument("--min-reps", type=int, default=200)
    return parser


def _config(args):
    overrides = {"seed": args.seed, "thin": args.thin, "T": args.T,
                 "reps": getattr(args, "reps", None), "workers": getattr(args, "workers", None)}
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = ExperimentConfig.from_dict({k: v for k, v in overrides.items() if v is not None})
    output = dict(cfg.output)
    if args.out:
        output["dir"] = args.out
    if args.format:
        output["format"] = args.format
    return cfg.replace(output=output)


def _cmd_run(args, reps=None):
    from tslab.diagnostics import AuditReport, event_probability_audit, martingale_drift_audit
    from tslab.harness import emit_output, replicate

    cfg = _config(args)
    results = replicate(cfg, k=1 if reps is None else None)
    audits = {}
    if getattr(args, "audit", False):
        traces = [r.trace for r in results]
        report = event_probability_audit(traces, cfg.delta, min_reps=1)
        martingale_drift_audit(traces, report=report)
        audits = report.as_dict()
        for line in report.lines():
            print(line)
    paths = emit_output(results, cfg, audits=audits, vectors=args.vectors)
    for r in results:
        print(f"rep {r.rep}: R(T)={r.final_regret:.6g} invariants_ok={r.invariants['all_ok']}")
    log.info("wrote %d files to %s", len(paths), cfg.output.get("dir"))
    return 0 if all(r.invariants["all_ok"] for r in results) else 2


def _cmd_scaling(args):
    import os

    from tslab.harness.output import write_json
    from tslab.harness.scaling import scaling_study

    cfg = _config(args)
    report = scaling_study(cfg, args.T_grid, cfg.reps, d_grid=args.d_grid, n_grid=args.N_grid)
    for c in report.cells:
        print(f"{c.key}={c.value} T={c.T}: mean R(T)={c.mean:.6g} (se {c.se:.3g})")
    for value, fit in report.fits.items():
        print(f"{report.key}={value}: beta={fit.beta:.4f} [{fit.ci_low:.4f}, {fit.ci_high:.4f}]")
    out = cfg.output.get("dir", "tslab-out")
    os.makedirs(out, exist_ok=True)
    write_json(report.as_dict(), os.path.join(out, "scaling.json"))
    return 0


def _cmd_audit(args):
    from tslab.harness.audit import audit_directory

    cfg, report, invariants_ok = audit_directory(args.traces, min_reps=args.min_reps)
    for line in report.lines():
        print(line)
    print(json.dumps({"passed": report.passed, "config_digest": cfg.digest()}))
    return 0 if report.passed else 2


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "replicate":
            return _cmd_run(args, reps=True)
        if args.command == "scaling":
            return _cmd_scaling(args)
        if args.command == "audit":
            return _cmd_audit(args)
    except TSLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    raise ConfigError(f"unknown command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
