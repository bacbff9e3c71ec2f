"""Fisher information, Cramer-Rao bounds, and the threshold-design laws.

Everything is computed per antenna block (2K x 2K) -- block diagonality
of A makes that exact, and it keeps the cost linear in M.  Ill-conditioned
blocks raise instead of being silently regularized: a pseudo-inverted
"bound" is not a bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import NumericalError
from .gauss import SQRT_2, mills_ratio
from .model import RealModel
from .quant import ThresholdVector

COND_LIMIT = 1e12


@dataclass
class CrbReport:
    """Per-antenna Fisher blocks plus inverse-based summaries when computed."""

    fim_blocks: np.ndarray  # (M, 2K, 2K)
    worst_condition: float
    worst_block: int
    near_singular: bool
    crb_trace: float | None = None
    crb_diag: np.ndarray | None = None


def g_weight(u, sigma2: float):
    """Fisher weight f^2 / (F (1-F)) of one sign measurement at offset u.

    u is the gap between the noiseless signal and the threshold.  The
    weight peaks at u = 0 with value 2/(pi sigma2) and decays roughly as
    exp(-(1 - 2/pi) u^2/sigma2); evaluating it as a product of two
    inverse Mills ratios keeps both tails finite and positive.
    """
    if sigma2 <= 0.0:
        raise ValueError("sigma2 must be positive")
    t = np.asarray(u, dtype=float) / np.sqrt(sigma2)
    return mills_ratio(t) * mills_ratio(-t) / sigma2


def fim(model: RealModel, tau, h: np.ndarray) -> CrbReport:
    """Fisher information sum_n g(u_n) a_n a_n^T as per-antenna blocks."""
    tau_arr = tau.tau if isinstance(tau, ThresholdVector) else np.asarray(tau, dtype=float)
    if tau_arr.shape != (model.N,):
        raise ValueError("tau length does not match the model's N")
    u = (model.apply(h) - tau_arr).reshape(model.M, 2 * model.L)
    g = g_weight(u, model.sigma2)
    blocks = np.einsum("mr,ri,rj->mij", g, model.A_tilde, model.A_tilde)
    conds = np.linalg.cond(blocks)
    worst = int(np.argmax(conds))
    worst_cond = float(conds[worst])
    near = bool(not np.isfinite(worst_cond) or worst_cond > COND_LIMIT)
    return CrbReport(fim_blocks=blocks, worst_condition=worst_cond,
                     worst_block=worst, near_singular=near)


def _invert_blocks(report: CrbReport) -> CrbReport:
    if report.near_singular:
        raise NumericalError(
            f"FIM block {report.worst_block} has condition number "
            f"{report.worst_condition:.3g} (limit {COND_LIMIT:g}); the CRB is "
            "unreliable -- check pilots (need L >= K) and threshold offsets"
        )
    inv = np.linalg.inv(report.fim_blocks)
    diag = np.diagonal(inv, axis1=1, axis2=2)
    report.crb_trace = float(diag.sum())
    report.crb_diag = diag.reshape(-1)
    return report


def crb_report(model: RealModel, tau, h: np.ndarray) -> CrbReport:
    """FIM blocks together with the CRB trace and diagonal."""
    return _invert_blocks(fim(model, tau, h))


def crb_trace(model: RealModel, tau, h: np.ndarray) -> float:
    """Trace of the CRB matrix for the given thresholds at channel h."""
    return crb_report(model, tau, h).crb_trace


def crb_nq_trace(model: RealModel) -> float:
    """CRB trace with unquantized observations: sigma2 * tr((A^T A)^{-1})."""
    AtA = model.gram()
    cond = float(np.linalg.cond(AtA))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalError(
            f"A_tilde^T A_tilde has condition number {cond:.3g} "
            f"(limit {COND_LIMIT:g}); need L >= K with independent pilot rows"
        )
    return model.sigma2 * model.M * float(np.trace(np.linalg.inv(AtA)))


def gaussian_cdf_bound(x):
    """Standard normal half-CDF Phi(x) - 1/2 and its closed-form upper bound.

    The bound is (1/2) sqrt(1 - exp(-2 x^2 / pi)); equality holds at x = 0
    and both sides tend to 1/2 as x grows.  Defined for x >= 0.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0):
        raise ValueError("x must be non-negative")
    fbar = 0.5 * erf(x / SQRT_2)
    bound = 0.5 * np.sqrt(-np.expm1(-2.0 * x * x / np.pi))
    return fbar, bound


def g_bar_bound(x):
    """Unit-variance Fisher weight and its bound (2/pi) exp(-(1 - 2/pi) x^2)."""
    x = np.asarray(x, dtype=float)
    gbar = g_weight(x, 1.0)
    bound = (2.0 / np.pi) * np.exp(-(1.0 - 2.0 / np.pi) * x * x)
    return gbar, bound
