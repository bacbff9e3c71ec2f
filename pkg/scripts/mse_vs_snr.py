#!/usr/bin/env python3
"""MSE vs SNR at a fixed pilot length (desk scale)."""
import argparse

from onebit_mimo.experiments import (ExperimentConfig, run_sweep, summarize,
                                     write_json, write_trials_csv)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=16)
    ap.add_argument("--K", type=int, default=8)
    ap.add_argument("--L", type=int, default=96)
    ap.add_argument("--snr-db", type=float, nargs="+",
                    default=[-5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    ap.add_argument("--schemes", nargs="+", default=["NQ", "OQ", "AQ", "RQ", "FQ"])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()

    cfg = ExperimentConfig.from_dict(dict(
        M=args.M, K=args.K, L=[args.L], snr_db=args.snr_db, schemes=args.schemes,
        trials=args.trials, seed=args.seed, threads=args.threads,
    )).validate()
    rows = run_sweep(cfg)
    write_trials_csv(rows, f"{args.out_dir}/mse_vs_snr.csv")
    summary = summarize(cfg, rows)
    write_json(summary, f"{args.out_dir}/mse_vs_snr.json")
    for cell in summary["cells"]:
        print(f"{cell['scheme']:>4s} snr={cell['snr_db']:<6g} median MSE {cell['median_mse']:.4g}")


if __name__ == "__main__":
    main()
