"""Command-line entry point: ``elmsync {calibrate,train,eval,sweep,selftest}``."""

import argparse
import logging
import sys
from pathlib import Path

from .elm import load_model, save_model
from .errors import ElmSyncError
from .harness import (
    SCENARIOS,
    Estimator,
    collect_training_data,
    evaluate,
    load_config,
    resolve_eta,
    run_experiment_suite,
    train_estimator,
)
from .harness.report import write_curve_csv
from .impairments import calibrate_backoff

log = logging.getLogger("elmsync")


def cmd_calibrate(args):
    cfg = load_config(args.config)
    eta = calibrate_backoff(
        args.target_evm, cfg.saleh, cfg.system, seed=args.seed, trials=args.trials,
    )
    print(f"target_evm={args.target_evm} eta={eta:.6g}")
    return 0


def cmd_train(args):
    cfg = load_config(args.config)
    if cfg.estimator == "sc_corr":
        log.error("estimator sc_corr has nothing to train")
        return 2
    feature = "raw" if cfg.estimator == "ts_learn" else "metric"
    data = collect_training_data(cfg, features=(feature,))
    est = train_estimator(cfg, cfg.estimator, data, cfg.label_scheme)
    save_model(est.model, args.out)
    print(f"trained {cfg.estimator}/{cfg.label_scheme} on {cfg.n_train} windows "
          f"(L={data['L']}, eta={data['eta']:.4g}) -> {args.out}")
    return 0


def cmd_eval(args):
    cfg = load_config(args.config)
    model = load_model(args.model) if args.model else None
    est = Estimator(
        cfg.estimator,
        model,
        label_scheme=cfg.label_scheme if cfg.estimator != "sc_corr" else "",
        L_train=cfg.L_train if model is not None else None,
        eta_train=resolve_eta(cfg, cfg.eta_train) if model is not None else None,
    )
    curve = evaluate(cfg, [est], scenario=args.scenario)[0]
    write_curve_csv(curve, args.out)
    for row in curve.rows:
        print(f"{row.snr_db:6.1f} dB  p_error={row.p_error:.4g}  [{row.ci_low:.4g}, {row.ci_high:.4g}]")
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    paths = run_experiment_suite(args.scenario, cfg, args.outdir, render=not args.no_figures)
    for p in paths:
        print(p)
    return 0


def cmd_selftest(args):
    from .selftest import run_selftest

    results = run_selftest(verbose=args.verbose)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"\n      {detail}" if detail else ""))
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="elmsync", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="find the HPA back-off for a target EVM")
    p.add_argument("--target-evm", type=float, required=True, help="percent")
    p.add_argument("--config", type=Path)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train", help="train an ELM and write the model file")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="error probability versus SNR for one estimator")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--model", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--scenario", default="eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run an experiment family and write CSVs and figures")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), required=True)
    p.add_argument("--config", type=Path)
    p.add_argument("--outdir", type=Path, required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="run the property checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ElmSyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
