"""One-bit maximum-likelihood channel estimation.

Log-likelihood, analytic gradient and curvature, and a damped Newton
solver.  Because A = I_M kron A_tilde and the log-likelihood is a sum
over measurements, the joint problem separates exactly into M
independent 2K-dimensional concave problems; the solver iterates all of
them together as batched array operations, with per-antenna step sizes
and stopping decisions.

All CDF ratios go through gauss.mills_ratio / gauss.norm_logcdf: with
b in {-1,+1} and s = b * (a^T h - tau) / sigma,

    log-likelihood term   log Phi(s)
    d/dz  term            b * mills(s) / sigma
    d2/dz2 term           -mills(s) * (s + mills(s)) / sigma^2

which are finite and well-scaled arbitrarily deep into both tails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .gauss import mills_ratio, norm_logcdf
from .model import RealModel
from .quant import QuantizedBatch

GRAD_TOL = 1e-8    # converged when per-antenna ||grad|| <= GRAD_TOL * measurements
MAX_ITER = 100
ARMIJO_C1 = 1e-4
BACKTRACK = 0.5
MAX_BACKTRACKS = 60
NORM_CAP = 1e3     # per-antenna estimate norm beyond which the MLE is treated as unbounded

# An antenna whose final per-antenna log-likelihood exceeds this fitted every
# observed sign with probability ~1: the data are separable along the fitted
# ray and the likelihood has no interior maximum there (sup = 0, unattained).
# A genuine interior optimum keeps a bundle of near-threshold measurements at
# p ~ 1/2, each costing ~log 2, so the two cases are far apart.
SEPARABLE_LL_TOL = -1e-2


@dataclass
class LikelihoodProblem:
    """Quantized data for the estimator; batches accumulate across adaptive rounds.

    Each batch must come from an independent noise draw on the same model
    (the log-likelihood below simply sums the batches' terms).
    """

    batches: list
    model: RealModel
    clamp_eps: float = 1e-300  # final probability guard; the log-space paths never hit it

    def __post_init__(self):
        if isinstance(self.batches, QuantizedBatch):
            self.batches = [self.batches]
        if not self.batches:
            raise ValueError("need at least one quantized batch")
        for batch in self.batches:
            if batch.b.shape != (self.model.N,):
                raise ValueError("batch length does not match the model's N")


@dataclass
class ChannelEstimate:
    """An estimate plus solver diagnostics.

    antenna_converged marks, per independent antenna subproblem, that the
    gradient test passed and neither the norm cap nor the separable-data
    detector fired; converged is their conjunction.
    """

    h_hat: np.ndarray
    iterations: int
    grad_norm: float
    converged: bool
    objective: float
    antenna_converged: np.ndarray | None = None


def _stacked(prob: LikelihoodProblem):
    """Batch data as (n_batches, M, 2L) sign and threshold arrays."""
    m = prob.model
    B = np.stack([b.b.astype(float).reshape(m.M, 2 * m.L) for b in prob.batches])
    T = np.stack([b.tau.tau.reshape(m.M, 2 * m.L) for b in prob.batches])
    return B, T


def log_likelihood(prob: LikelihoodProblem, h: np.ndarray) -> float:
    """Sum over batches and measurements of log Phi(b*(a^T h - tau)/sigma)."""
    m = prob.model
    B, T = _stacked(prob)
    Z = np.asarray(h, dtype=float).reshape(m.M, 2 * m.K) @ m.A_tilde.T
    S = B * (Z[None, :, :] - T) / np.sqrt(m.sigma2)
    return float(norm_logcdf(S).sum())


def gradient(prob: LikelihoodProblem, h: np.ndarray) -> np.ndarray:
    """Analytic score: sum_n (dl/dz_n) a_n, assembled per antenna block."""
    m = prob.model
    sigma = np.sqrt(m.sigma2)
    B, T = _stacked(prob)
    Z = np.asarray(h, dtype=float).reshape(m.M, 2 * m.K) @ m.A_tilde.T
    S = B * (Z[None, :, :] - T) / sigma
    W = B * mills_ratio(S) / sigma
    return (W.sum(axis=0) @ m.A_tilde).reshape(-1)


def hessian_action(prob: LikelihoodProblem, h: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Apply the (negative semidefinite) Hessian to v without forming it."""
    m = prob.model
    B, T = _stacked(prob)
    Z = np.asarray(h, dtype=float).reshape(m.M, 2 * m.K) @ m.A_tilde.T
    S = B * (Z[None, :, :] - T) / np.sqrt(m.sigma2)
    lam = mills_ratio(S)
    curv = (lam * (S + lam)).sum(axis=0) / m.sigma2  # -d2l/dz2 per measurement, summed over batches
    V = np.asarray(v, dtype=float).reshape(m.M, 2 * m.K)
    ZV = V @ m.A_tilde.T
    return -((curv * ZV) @ m.A_tilde).reshape(-1)


def solve_ml(prob: LikelihoodProblem, h0: np.ndarray | None = None,
             grad_tol: float = GRAD_TOL, max_iter: int = MAX_ITER,
             norm_cap: float = NORM_CAP) -> ChannelEstimate:
    """Damped Newton ascent on the concave log-likelihood.

    Concavity means any stationary point is the global maximum, so the
    solver only needs monotone ascent (Armijo backtracking) to be safe.
    An antenna whose data are one-sided in some direction has no finite
    maximizer; its estimate is clamped at norm_cap and the result is
    flagged converged=False rather than returned silently.
    """
    m = prob.model
    At = m.A_tilde
    sigma = np.sqrt(m.sigma2)
    B, T = _stacked(prob)
    M, K2 = m.M, 2 * m.K
    meas_per_antenna = B.shape[0] * 2 * m.L
    tol = grad_tol * meas_per_antenna

    H = np.zeros((M, K2)) if h0 is None else np.asarray(h0, dtype=float).reshape(M, K2).copy()
    eye = np.eye(K2)

    def ll_rows(Hr, Br, Tr):
        S = Br * (Hr @ At.T - Tr) / sigma
        return norm_logcdf(S).sum(axis=(0, 2))

    active = np.ones(M, dtype=bool)
    capped = np.zeros(M, dtype=bool)
    iters_used = 0

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        iters_used += 1

        Hs, Bs, Ts = H[idx], B[:, idx], T[:, idx]
        Z = Hs @ At.T
        S = Bs * (Z[None, :, :] - Ts) / sigma
        lam = mills_ratio(S)
        G = (Bs * lam).sum(axis=0) @ At / sigma
        gn = np.linalg.norm(G, axis=1)

        done = gn <= tol
        if done.any():
            active[idx[done]] = False
            keep = ~done
            if not keep.any():
                continue
            idx = idx[keep]
            Hs, Bs, Ts = Hs[keep], Bs[:, keep], Ts[:, keep]
            S, lam, G = S[:, keep], lam[:, keep], G[keep]

        curv = (lam * (S + lam)).sum(axis=0) / m.sigma2
        Hneg = np.einsum("ar,ri,rj->aij", curv, At, At)
        try:
            step = np.linalg.solve(Hneg, G[..., None])[..., 0]
        except np.linalg.LinAlgError:
            ridge = 1e-10 * np.maximum(np.trace(Hneg, axis1=1, axis2=2), 1.0)
            step = np.linalg.solve(Hneg + ridge[:, None, None] * eye, G[..., None])[..., 0]

        ll0 = norm_logcdf(S).sum(axis=(0, 2))
        slope = (G * step).sum(axis=1)

        t = np.ones(idx.size)
        Hnew = Hs.copy()
        accepted = np.zeros(idx.size, dtype=bool)
        pend = np.arange(idx.size)
        for _bt in range(MAX_BACKTRACKS):
            if pend.size == 0:
                break
            trial = Hs[pend] + t[pend, None] * step[pend]
            llt = ll_rows(trial, Bs[:, pend], Ts[:, pend])
            ok = llt >= ll0[pend] + ARMIJO_C1 * t[pend] * slope[pend]
            good = pend[ok]
            Hnew[good] = trial[ok]
            accepted[good] = True
            t[pend[~ok]] *= BACKTRACK
            pend = pend[~ok]

        H[idx] = Hnew

        norms = np.linalg.norm(Hnew, axis=1)
        blown = norms > norm_cap
        if blown.any():
            H[idx[blown]] = Hnew[blown] * (norm_cap / norms[blown])[:, None]
            capped[idx[blown]] = True
            active[idx[blown]] = False

        stalled = ~accepted & ~blown
        if stalled.any():
            # Armijo could not improve: either at the optimum to rounding or
            # genuinely stuck; final gradient check below decides which.
            active[idx[stalled]] = False

    h_flat = H.reshape(-1)
    g_final = gradient(prob, h_flat).reshape(M, K2)
    per_antenna = np.linalg.norm(g_final, axis=1)
    S_final = B * ((H @ At.T)[None, :, :] - T) / sigma
    ll_per_antenna = norm_logcdf(S_final).sum(axis=(0, 2))
    separable = ll_per_antenna > SEPARABLE_LL_TOL
    antenna_ok = (per_antenna <= tol) & ~capped & ~separable
    return ChannelEstimate(
        h_hat=h_flat,
        iterations=iters_used,
        grad_norm=float(np.linalg.norm(g_final)),
        converged=bool(antenna_ok.all()),
        objective=float(ll_per_antenna.sum()),
        antenna_converged=antenna_ok,
    )


def solve_nq(model: RealModel, y: np.ndarray) -> ChannelEstimate:
    """Closed-form least squares (A^T A)^{-1} A^T y via per-antenna blocks.

    This is the ML estimator when the unquantized observations are
    available; also the Gaussian log-density at the solution is reported
    as the objective.
    """
    AtA = model.gram()
    K2 = 2 * model.K
    if np.linalg.matrix_rank(AtA) < K2:
        raise NumericalError(
            "A_tilde^T A_tilde is rank deficient; unquantized least squares "
            "needs L >= K with linearly independent pilot rows"
        )
    Y = np.asarray(y, dtype=float).reshape(model.M, 2 * model.L)
    H_hat = np.linalg.solve(AtA, model.A_tilde.T @ Y.T).T
    h_flat = H_hat.reshape(-1)
    resid = y - model.apply(h_flat)
    objective = -0.5 * float(np.dot(resid, resid)) / model.sigma2 \
        - 0.5 * model.N * np.log(2.0 * np.pi * model.sigma2)
    return ChannelEstimate(h_hat=h_flat, iterations=0, grad_norm=0.0,
                           converged=True, objective=objective,
                           antenna_converged=np.ones(model.M, dtype=bool))
