"""Monte Carlo sweep engine: trial seeding, execution, aggregation, output.

Per-trial seeds are derived from (master seed, scheme id, M, K, L, SNR,
trial) through numpy's SeedSequence, so every trial is a pure function
of its cell coordinates: adding a scheme or reordering sweep lists never
perturbs another scheme's random stream, and results are identical for
any --threads value.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .crb import crb_nq_trace, crb_trace
from .detect import QPSK, achievable_rate, detect_frames, simulate_frames
from .errors import ConfigError
from .mle import ChannelEstimate
from .model import (ComplexSystem, channel_mse, generate_channel,
                    generate_pilots_orthogonal, power_for_snr, real_to_channel, realify)
from .quant import thresholds_oracle
from .schemes import run_aq, run_fq, run_nq, run_oq, run_rq

# Stable scheme ids; seed derivation depends on these, never on list order.
SCHEME_IDS = {"FQ": 0, "RQ": 1, "AQ": 2, "OQ": 3, "NQ": 4, "PCSI": 5}
_REF_ID = 9  # pseudo-scheme id for CRB reference models

CSV_COLUMNS = ["scheme", "M", "K", "L", "snr_db", "trial", "seed", "mse",
               "converged", "iters", "ser", "rate", "wall_ms"]

AQ_TRACE_COLUMNS = ["M", "K", "L", "snr_db", "trial", "seed", "iteration",
                    "mse", "converged", "threshold_rel_err"]

AQ_AGG_COLUMNS = ["M", "K", "L", "snr_db", "iteration", "n", "median_mse",
                  "mean_mse", "crb_oq_per_coeff", "crb_nq_per_coeff"]


@dataclass
class ExperimentConfig:
    """Declarative sweep description (YAML file and/or CLI flags)."""

    M: int = 16
    K: int = 8
    L: list = field(default_factory=lambda: [32])
    snr_db: list = field(default_factory=lambda: [15.0])
    schemes: list = field(default_factory=lambda: ["NQ", "OQ", "AQ", "RQ", "FQ"])
    i_max: int = 5
    trials: int = 100
    seed: int = 0
    sigma_h2: float = 1.0
    sigma2: float = 1.0
    pilot_method: str = "qr"
    n_frames: int = 0       # data-phase frames per trial; 0 skips SER/rate
    rate_cap: float = 20.0
    threads: int = 1
    timing: bool = False    # wall_ms column stays empty unless enabled (keeps CSV reruns byte-identical)
    out_dir: str | None = None

    KNOWN = None  # filled after class body

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - cls.KNOWN
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        cfg = cls(**data)
        cfg.normalize()
        return cfg

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        import yaml

        with open(path) as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        return cls.from_dict(data)

    def normalize(self):
        if isinstance(self.L, (int, np.integer)):
            self.L = [int(self.L)]
        self.L = [int(v) for v in self.L]
        if isinstance(self.snr_db, (int, float, np.floating)):
            self.snr_db = [float(self.snr_db)]
        self.snr_db = [float(v) for v in self.snr_db]
        if isinstance(self.schemes, str):
            self.schemes = [s.strip() for s in self.schemes.split(",") if s.strip()]
        self.schemes = [str(s).upper() for s in self.schemes]

    def validate(self):
        self.normalize()
        if self.M < 1:
            raise ConfigError("M: must be >= 1")
        if self.K < 1:
            raise ConfigError("K: must be >= 1")
        if not self.L:
            raise ConfigError("L: sweep list is empty")
        for L in self.L:
            if L < self.K:
                raise ConfigError(f"L: every value must be >= K (got L={L} < K={self.K})")
        if not self.snr_db:
            raise ConfigError("snr_db: sweep list is empty")
        if not self.schemes:
            raise ConfigError("schemes: list is empty")
        bad = [s for s in self.schemes if s not in SCHEME_IDS]
        if bad:
            raise ConfigError(f"schemes: unknown {', '.join(bad)} (choose from {', '.join(SCHEME_IDS)})")
        if self.i_max < 1:
            raise ConfigError("i_max: must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed: must be non-negative")
        if self.sigma_h2 <= 0:
            raise ConfigError("sigma_h2: must be positive")
        if self.sigma2 <= 0:
            raise ConfigError("sigma2: must be positive")
        if self.pilot_method not in ("qr", "dft"):
            raise ConfigError("pilot_method: must be 'qr' or 'dft'")
        if self.n_frames < 0:
            raise ConfigError("n_frames: must be non-negative")
        if self.threads < 1:
            raise ConfigError("threads: must be >= 1")
        return self

    def to_dict(self) -> dict:
        return {
            "M": self.M, "K": self.K, "L": list(self.L), "snr_db": list(self.snr_db),
            "schemes": list(self.schemes), "i_max": self.i_max, "trials": self.trials,
            "seed": self.seed, "sigma_h2": self.sigma_h2, "sigma2": self.sigma2,
            "pilot_method": self.pilot_method, "n_frames": self.n_frames,
            "rate_cap": self.rate_cap, "threads": self.threads, "timing": self.timing,
            "out_dir": self.out_dir,
        }


ExperimentConfig.KNOWN = frozenset(ExperimentConfig().to_dict())


@dataclass
class TrialResult:
    """One scheme run on one random instance; maps 1:1 to a CSV row."""

    scheme: str
    M: int
    K: int
    L: int
    snr_db: float
    trial: int
    seed: int
    mse: float
    converged: bool
    iters: int
    ser: float | None = None
    rate: float | None = None
    wall_ms: float | None = None


def trial_seed_seq(master: int, scheme: str, M: int, K: int, L: int,
                   snr_db: float, trial: int) -> np.random.SeedSequence:
    """Deterministic per-trial seed; cell values (not indices) enter the entropy."""
    scheme_id = SCHEME_IDS[scheme] if scheme in SCHEME_IDS else _REF_ID
    snr_key = int(round(snr_db * 1000.0)) + 2**31
    return np.random.SeedSequence(
        entropy=(int(master), scheme_id, int(M), int(K), int(L), snr_key, int(trial))
    )


def run_trial(scheme: str, M: int, K: int, L: int, snr_db: float, trial: int,
              master_seed: int, sigma2: float = 1.0, sigma_h2: float = 1.0,
              i_max: int = 5, pilot_method: str = "qr", n_frames: int = 0,
              rate_cap: float = 20.0, timing: bool = False) -> TrialResult:
    """Draw pilots + channel, run one scheme, optionally run the data phase."""
    ss = trial_seed_seq(master_seed, scheme, M, K, L, snr_db, trial)
    seed_repr = int(ss.generate_state(1)[0])
    rng = np.random.default_rng(ss)
    t0 = time.perf_counter() if timing else None

    P = power_for_snr(snr_db, K, L, sigma2)
    X = generate_pilots_orthogonal(K, L, P, rng_seed=rng, method=pilot_method)
    sys = ComplexSystem(M=M, K=K, L=L, X=X, sigma2=sigma2, P=P)
    model = realify(sys)
    ch = generate_channel(M, K, sigma_h2, rng_seed=rng)

    if scheme == "FQ":
        est = run_fq(model, ch.h, rng)
    elif scheme == "RQ":
        est = run_rq(model, ch.h, sigma_h2, rng)
    elif scheme == "AQ":
        est, _ = run_aq(model, ch.h, i_max, rng, sigma_h2=sigma_h2)
    elif scheme == "OQ":
        est = run_oq(model, ch.h, rng)
    elif scheme == "NQ":
        est = run_nq(model, ch.h, rng)
    elif scheme == "PCSI":
        est = ChannelEstimate(h_hat=ch.h.copy(), iterations=0, grad_norm=0.0,
                              converged=True, objective=np.nan)
    else:
        raise ConfigError(f"schemes: unknown scheme {scheme!r}")

    ser = rate = None
    if n_frames > 0:
        H_est = real_to_channel(est.h_hat, M, K)
        symbol_power = 10.0 ** (snr_db / 10.0) * sigma2
        s_idx, b = simulate_frames(ch.H, sigma2, symbol_power, n_frames, rng)
        det = detect_frames(H_est, b, sigma2, symbol_power=symbol_power)
        ser = float((det != s_idx).mean())
        rr = achievable_rate(QPSK[s_idx], QPSK[det], cap=rate_cap)
        rate = float(rr.rate.mean())

    wall_ms = (time.perf_counter() - t0) * 1e3 if timing else None
    return TrialResult(
        scheme=scheme, M=M, K=K, L=L, snr_db=snr_db, trial=trial, seed=seed_repr,
        mse=channel_mse(est.h_hat, ch.h, M, K), converged=bool(est.converged),
        iters=int(est.iterations), ser=ser, rate=rate, wall_ms=wall_ms,
    )


def _trial_worker(kwargs: dict) -> TrialResult:
    return run_trial(**kwargs)


def sweep_tasks(cfg: ExperimentConfig) -> list:
    """Deterministic cell order: L (outer), SNR, scheme, trial (inner)."""
    tasks = []
    for L in cfg.L:
        for snr in cfg.snr_db:
            for scheme in cfg.schemes:
                for trial in range(cfg.trials):
                    tasks.append(dict(
                        scheme=scheme, M=cfg.M, K=cfg.K, L=L, snr_db=snr,
                        trial=trial, master_seed=cfg.seed, sigma2=cfg.sigma2,
                        sigma_h2=cfg.sigma_h2, i_max=cfg.i_max,
                        pilot_method=cfg.pilot_method, n_frames=cfg.n_frames,
                        rate_cap=cfg.rate_cap, timing=cfg.timing,
                    ))
    return tasks


def run_sweep(cfg: ExperimentConfig) -> list:
    """Run every (scheme x L x SNR x trial) cell; rows come back in task order."""
    tasks = sweep_tasks(cfg)
    if cfg.threads <= 1:
        return [run_trial(**t) for t in tasks]
    chunk = max(1, len(tasks) // (cfg.threads * 8))
    with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(_trial_worker, tasks, chunksize=chunk))


def reference_floors(cfg: ExperimentConfig, L: int, snr_db: float) -> dict:
    """Per-coefficient CRB floors for the quantized-oracle and unquantized cases.

    Orthogonal pilots make both traces pilot- and channel-independent, so
    a reference model built from a derived seed represents the whole cell.
    """
    ss = trial_seed_seq(cfg.seed, "REF", cfg.M, cfg.K, L, snr_db, 0)
    P = power_for_snr(snr_db, cfg.K, L, cfg.sigma2)
    X = generate_pilots_orthogonal(cfg.K, L, P, rng_seed=np.random.default_rng(ss),
                                   method=cfg.pilot_method)
    model = realify(ComplexSystem(M=cfg.M, K=cfg.K, L=L, X=X, sigma2=cfg.sigma2, P=P))
    h0 = np.zeros(model.dim)
    oq = crb_trace(model, thresholds_oracle(model, h0), h0)
    nq = crb_nq_trace(model)
    denom = cfg.M * cfg.K
    return {"L": L, "snr_db": snr_db, "crb_oq_trace": oq, "crb_nq_trace": nq,
            "crb_oq_per_coeff": oq / denom, "crb_nq_per_coeff": nq / denom,
            "ratio_oq_nq": oq / nq}


def summarize(cfg: ExperimentConfig, rows: list) -> dict:
    """Aggregate medians/means per cell plus the CRB reference curves.

    Every aggregate is recomputable from the CSV rows alone.
    """
    cells = []
    for L in cfg.L:
        for snr in cfg.snr_db:
            for scheme in cfg.schemes:
                sel = [r for r in rows if r.scheme == scheme and r.L == L and r.snr_db == snr]
                if not sel:
                    continue
                mses = np.array([r.mse for r in sel])
                cell = {
                    "scheme": scheme, "M": cfg.M, "K": cfg.K, "L": L, "snr_db": snr,
                    "n": len(sel), "median_mse": float(np.median(mses)),
                    "mean_mse": float(mses.mean()),
                    "n_converged": int(sum(r.converged for r in sel)),
                }
                if any(r.ser is not None for r in sel):
                    sers = np.array([r.ser for r in sel if r.ser is not None])
                    cell["median_ser"] = float(np.median(sers))
                    cell["mean_ser"] = float(sers.mean())
                if any(r.rate is not None for r in sel):
                    rates = np.array([r.rate for r in sel if r.rate is not None])
                    cell["median_rate"] = float(np.median(rates))
                    cell["mean_rate"] = float(rates.mean())
                cells.append(cell)
    refs = [reference_floors(cfg, L, snr) for L in cfg.L for snr in cfg.snr_db]
    return {"config": cfg.to_dict(), "cells": cells, "crb": refs}


def run_aq_trace(cfg: ExperimentConfig):
    """Per-iteration AQ records for every (L, SNR, trial), plus aggregates."""
    trial_rows = []
    for L in cfg.L:
        for snr in cfg.snr_db:
            for trial in range(cfg.trials):
                ss = trial_seed_seq(cfg.seed, "AQ", cfg.M, cfg.K, L, snr, trial)
                seed_repr = int(ss.generate_state(1)[0])
                rng = np.random.default_rng(ss)
                P = power_for_snr(snr, cfg.K, L, cfg.sigma2)
                X = generate_pilots_orthogonal(cfg.K, L, P, rng_seed=rng, method=cfg.pilot_method)
                model = realify(ComplexSystem(M=cfg.M, K=cfg.K, L=L, X=X,
                                              sigma2=cfg.sigma2, P=P))
                ch = generate_channel(cfg.M, cfg.K, cfg.sigma_h2, rng_seed=rng)
                _, state = run_aq(model, ch.h, cfg.i_max, rng, sigma_h2=cfg.sigma_h2)
                for it in state.history:
                    trial_rows.append({
                        "M": cfg.M, "K": cfg.K, "L": L, "snr_db": snr,
                        "trial": trial, "seed": seed_repr, "iteration": it.index,
                        "mse": it.mse, "converged": it.converged,
                        "threshold_rel_err": it.threshold_rel_err,
                    })
    agg_rows = []
    for L in cfg.L:
        for snr in cfg.snr_db:
            ref = reference_floors(cfg, L, snr)
            for i in range(1, cfg.i_max + 1):
                sel = [r["mse"] for r in trial_rows
                       if r["L"] == L and r["snr_db"] == snr and r["iteration"] == i]
                if not sel:
                    continue
                agg_rows.append({
                    "M": cfg.M, "K": cfg.K, "L": L, "snr_db": snr, "iteration": i,
                    "n": len(sel), "median_mse": float(np.median(sel)),
                    "mean_mse": float(np.mean(sel)),
                    "crb_oq_per_coeff": ref["crb_oq_per_coeff"],
                    "crb_nq_per_coeff": ref["crb_nq_per_coeff"],
                })
    return trial_rows, agg_rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trials_csv(rows: list, path) -> None:
    """One row per trial, stable column order, shortest-roundtrip floats."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])


def write_dict_csv(rows: list, columns: list, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def write_json(obj: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")
