"""Command-line front end.

Subcommands: sweep, crb, aq-trace, detect-ser, rate.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Default output directory: --out-dir flag, else config, else $ONEBIT_MIMO_OUT,
else ./results.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .crb import crb_report, crb_nq_trace
from .errors import ConfigError, NumericalError
from .experiments import (AQ_AGG_COLUMNS, AQ_TRACE_COLUMNS, ExperimentConfig,
                          run_aq_trace, run_sweep, summarize, trial_seed_seq,
                          write_dict_csv, write_json, write_trials_csv)
from .model import (ComplexSystem, generate_channel, generate_pilots_orthogonal,
                    power_for_snr, realify)
from .quant import thresholds_fixed, thresholds_oracle, thresholds_random

ENV_OUT = "ONEBIT_MIMO_OUT"


def _add_common(sp):
    sp.add_argument("--config", type=Path, help="YAML experiment config")
    sp.add_argument("--out-dir", type=Path, help="output directory")
    sp.add_argument("--seed", type=int, help="master seed override")
    sp.add_argument("--trials", type=int, help="trials per cell override")
    sp.add_argument("--schemes", type=str, help="comma-separated scheme list override")
    sp.add_argument("--threads", type=int, help="worker processes (default 1)")
    sp.add_argument("--timing", action="store_true",
                    help="record per-trial wall time (makes reruns differ byte-wise)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="onebit-mimo",
        description="One-bit ADC massive MIMO channel estimation experiments",
    )
    sub = p.add_subparsers(dest="command", required=True)
    for name, desc in [
        ("sweep", "Monte Carlo MSE sweep over (scheme, L, SNR, trial)"),
        ("crb", "CRB traces per threshold policy and the quantized/ideal ratio"),
        ("aq-trace", "per-iteration MSE of the adaptive-threshold scheme"),
        ("detect-ser", "symbol error rate with estimated channels"),
        ("rate", "achievable rate with estimated channels"),
    ]:
        _add_common(sub.add_parser(name, help=desc))
    return p


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_yaml(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.schemes is not None:
        overrides["schemes"] = args.schemes
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.timing:
        overrides["timing"] = True
    if args.out_dir is not None:
        overrides["out_dir"] = str(args.out_dir)
    if overrides:
        cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def resolve_out_dir(cfg: ExperimentConfig) -> Path:
    out = cfg.out_dir or os.environ.get(ENV_OUT) or "results"
    return Path(out)


def cmd_sweep(cfg: ExperimentConfig) -> int:
    out = resolve_out_dir(cfg)
    rows = run_sweep(cfg)
    write_trials_csv(rows, out / "sweep.csv")
    summary = summarize(cfg, rows)
    write_json(summary, out / "sweep.json")
    for cell in summary["cells"]:
        print(f"{cell['scheme']:>4s}  L={cell['L']:<4d} snr={cell['snr_db']:g} dB  "
              f"median MSE {cell['median_mse']:.4g}  ({cell['n_converged']}/{cell['n']} converged)")
    print(f"wrote {out / 'sweep.csv'} and {out / 'sweep.json'}")
    return 0


def cmd_crb(cfg: ExperimentConfig) -> int:
    """CRB traces per policy on a reference instance of each cell.

    The quantized-oracle and unquantized traces are channel- and
    pilot-independent given orthogonal pilots; the fixed/random-threshold
    traces are evaluated at a seeded reference channel draw.
    """
    out = resolve_out_dir(cfg)
    entries = []
    for L in cfg.L:
        for snr in cfg.snr_db:
            ss = trial_seed_seq(cfg.seed, "REF", cfg.M, cfg.K, L, snr, 0)
            rng = np.random.default_rng(ss)
            P = power_for_snr(snr, cfg.K, L, cfg.sigma2)
            X = generate_pilots_orthogonal(cfg.K, L, P, rng_seed=rng, method=cfg.pilot_method)
            model = realify(ComplexSystem(M=cfg.M, K=cfg.K, L=L, X=X, sigma2=cfg.sigma2, P=P))
            ch = generate_channel(cfg.M, cfg.K, cfg.sigma_h2, rng_seed=rng)
            denom = cfg.M * cfg.K
            entry = {"M": cfg.M, "K": cfg.K, "L": L, "snr_db": snr, "policies": {}}
            oq = crb_report(model, thresholds_oracle(model, ch.h), ch.h)
            nq = crb_nq_trace(model)
            entry["policies"]["OQ"] = {"trace": oq.crb_trace, "per_coeff": oq.crb_trace / denom}
            entry["policies"]["NQ"] = {"trace": nq, "per_coeff": nq / denom}
            if "FQ" in cfg.schemes:
                fq = crb_report(model, thresholds_fixed(model.N, 0.0), ch.h)
                entry["policies"]["FQ"] = {"trace": fq.crb_trace, "per_coeff": fq.crb_trace / denom}
            if "RQ" in cfg.schemes:
                rq = crb_report(model, thresholds_random(model, cfg.sigma_h2, rng), ch.h)
                entry["policies"]["RQ"] = {"trace": rq.crb_trace, "per_coeff": rq.crb_trace / denom}
            entry["ratio_oq_nq"] = oq.crb_trace / nq
            entries.append(entry)
            print(f"L={L:<4d} snr={snr:g} dB  tr(CRB_OQ)={oq.crb_trace:.6g}  "
                  f"tr(CRB_NQ)={nq:.6g}  ratio={entry['ratio_oq_nq']:.12f}")
    write_json({"config": cfg.to_dict(), "entries": entries}, out / "crb.json")
    print(f"wrote {out / 'crb.json'}")
    return 0


def cmd_aq_trace(cfg: ExperimentConfig) -> int:
    out = resolve_out_dir(cfg)
    trial_rows, agg_rows = run_aq_trace(cfg)
    write_dict_csv(agg_rows, AQ_AGG_COLUMNS, out / "aq_trace.csv")
    write_dict_csv(trial_rows, AQ_TRACE_COLUMNS, out / "aq_trace_trials.csv")
    for r in agg_rows:
        print(f"L={r['L']:<4d} snr={r['snr_db']:g} dB  iter {r['iteration']}: "
              f"median MSE {r['median_mse']:.4g} (floor {r['crb_oq_per_coeff']:.4g})")
    print(f"wrote {out / 'aq_trace.csv'} and {out / 'aq_trace_trials.csv'}")
    return 0


def cmd_detect(cfg: ExperimentConfig, filename: str, metric: str) -> int:
    out = resolve_out_dir(cfg)
    if cfg.n_frames == 0:
        cfg = replace(cfg, n_frames=2000)
    rows = run_sweep(cfg)
    write_trials_csv(rows, out / filename)
    summary = summarize(cfg, rows)
    write_json(summary, out / (Path(filename).stem + ".json"))
    key = f"median_{metric}"
    for cell in summary["cells"]:
        if key in cell:
            print(f"{cell['scheme']:>4s}  L={cell['L']:<4d} snr={cell['snr_db']:g} dB  "
                  f"median {metric} {cell[key]:.4g}")
    print(f"wrote {out / filename}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        if args.command == "crb":
            return cmd_crb(cfg)
        if args.command == "aq-trace":
            return cmd_aq_trace(cfg)
        if args.command == "detect-ser":
            return cmd_detect(cfg, "detect_ser.csv", "ser")
        if args.command == "rate":
            return cmd_detect(cfg, "rate.csv", "rate")
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
