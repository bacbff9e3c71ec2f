"""End-to-end estimation policies: FQ, RQ, AQ, OQ (oracle), NQ (unquantized).

Each run_* draws its own pilot-phase noise from the supplied seed and
returns a ChannelEstimate; run_aq additionally returns the per-iteration
state used by the convergence experiments.  Runs are pure functions of
(model, h, seed), so trials parallelize freely.

Fairness note: an adaptive run with i_max rounds consumes i_max * N
binary measurements, versus N for the single-shot schemes.  AqState
keeps the accounting explicit (bits_used), and the CLI reports both
per-pilot-symbol and per-bit views.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mle import ChannelEstimate, LikelihoodProblem, solve_ml, solve_nq
from .model import RealModel, as_rng, channel_mse, generate_noisy_observation
from .quant import ThresholdVector, quantize, thresholds_fixed, thresholds_oracle, thresholds_random


@dataclass
class AqIterate:
    """Snapshot after one adaptive round."""

    index: int
    mse: float
    converged: bool
    grad_norm: float
    threshold_rel_err: float  # ||tau_new - A h|| / ||A h||


@dataclass
class AqState:
    """Running state of the adaptive-threshold loop."""

    i: int
    i_max: int
    batches: list
    tau: ThresholdVector
    h_hat: np.ndarray | None
    history: list = field(default_factory=list)

    @property
    def bits_used(self) -> int:
        return sum(batch.b.size for batch in self.batches)


def run_fq(model: RealModel, h: np.ndarray, rng_seed=None, c: float = 0.0) -> ChannelEstimate:
    """Fixed threshold c on every comparator (c = 0 is the conventional ADC)."""
    rng = as_rng(rng_seed)
    tau = thresholds_fixed(model.N, c)
    y = generate_noisy_observation(model, h, rng)
    return solve_ml(LikelihoodProblem([quantize(y, tau, model)], model))


def run_rq(model: RealModel, h: np.ndarray, sigma_h2: float = 1.0, rng_seed=None) -> ChannelEstimate:
    """Random thresholds drawn from the channel prior, then one-shot ML."""
    rng = as_rng(rng_seed)
    tau = thresholds_random(model, sigma_h2, rng)
    y = generate_noisy_observation(model, h, rng)
    return solve_ml(LikelihoodProblem([quantize(y, tau, model)], model))


def run_oq(model: RealModel, h: np.ndarray, rng_seed=None) -> ChannelEstimate:
    """Thresholds set on the true noiseless signal (testing benchmark only)."""
    rng = as_rng(rng_seed)
    tau = thresholds_oracle(model, h)
    y = generate_noisy_observation(model, h, rng)
    return solve_ml(LikelihoodProblem([quantize(y, tau, model)], model))


def run_nq(model: RealModel, h: np.ndarray, rng_seed=None) -> ChannelEstimate:
    """Unquantized observations, closed-form least squares."""
    rng = as_rng(rng_seed)
    y = generate_noisy_observation(model, h, rng)
    return solve_nq(model, y)


def run_aq(model: RealModel, h: np.ndarray, i_max: int, rng_seed=None,
           sigma_h2: float = 1.0) -> tuple[ChannelEstimate, AqState]:
    """Adaptive thresholds: quantize, refit, move thresholds to A h_hat.

    Starts from zero thresholds.  Every round draws fresh noise, appends
    the new batch, and refits the ML estimate on all accumulated batches
    (the rounds are independent, so their log-likelihood terms add).

    Identifiability fallback: an antenna whose accumulated sign data are
    still separable has its likelihood supremum at infinity along a ray;
    any radius on that ray fits the data equally well, so the working
    estimate keeps the fitted direction but is pulled back to the
    prior-typical radius sqrt(K * sigma_h2).  That keeps the next round's
    thresholds near the plausible signal range, which is what lets new
    batches pin the amplitude down.  Rounds where this happened are
    visible in the history (converged=False for the attempt).
    """
    if i_max < 1:
        raise ValueError("i_max must be >= 1")
    rng = as_rng(rng_seed)

    state = AqState(i=0, i_max=i_max, batches=[],
                    tau=ThresholdVector(np.zeros(model.N), "adaptive", iteration=0),
                    h_hat=None)
    ah_true = model.apply(h)
    ah_norm = float(np.linalg.norm(ah_true))
    radius = np.sqrt(model.K * sigma_h2)

    cur = np.zeros((model.M, 2 * model.K))
    attempt = None
    for i in range(1, i_max + 1):
        y = generate_noisy_observation(model, h, rng)
        state.batches.append(quantize(y, state.tau, model))
        attempt = solve_ml(LikelihoodProblem(list(state.batches), model),
                           h0=cur.reshape(-1))
        cur = attempt.h_hat.reshape(model.M, 2 * model.K).copy()
        bad = ~attempt.antenna_converged
        if bad.any():
            norms = np.linalg.norm(cur[bad], axis=1)
            shrink = np.where(norms > radius, radius / np.maximum(norms, 1e-30), 1.0)
            cur[bad] *= shrink[:, None]

        state.i = i
        state.h_hat = cur.reshape(-1)
        tau_new = model.apply(state.h_hat)
        state.tau = ThresholdVector(tau_new, "adaptive", iteration=i)
        rel_err = float(np.linalg.norm(tau_new - ah_true)) / ah_norm if ah_norm > 0 else np.nan
        state.history.append(AqIterate(
            index=i,
            mse=channel_mse(state.h_hat, h, model.M, model.K),
            converged=attempt.converged,
            grad_norm=attempt.grad_norm,
            threshold_rel_err=rel_err,
        ))
    final = ChannelEstimate(
        h_hat=state.h_hat, iterations=attempt.iterations,
        grad_norm=attempt.grad_norm, converged=attempt.converged,
        objective=attempt.objective, antenna_converged=attempt.antenna_converged,
    )
    return final, state
