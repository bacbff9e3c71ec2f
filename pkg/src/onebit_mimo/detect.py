"""One-bit QPSK detection, symbol-error-rate measurement, and the
correlation-based achievable-rate metric.

The data phase quantizes with zero thresholds (the comparators have no
side information about payload symbols).  Detection is exhaustive ML
over all 4^K QPSK hypotheses; per channel estimate the per-measurement
log Phi tables are precomputed once, after which scoring a frame is a
single matrix product over hypotheses.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import NamedTuple

import numpy as np

from .gauss import norm_logcdf
from .model import as_rng

# Fixed constellation order; ties in the likelihood resolve to the first
# (lexicographically smallest) hypothesis under this indexing.
QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)
K_MAX_DEFAULT = 8

_HYP_CACHE: dict[int, np.ndarray] = {}


@dataclass(frozen=True)
class SymbolFrame:
    """One time slot of transmitted (or detected) QPSK symbols."""

    s: np.ndarray  # (K,) complex, entries exactly on the QPSK constellation
    t: int = 0

    def __post_init__(self):
        s = np.asarray(self.s, dtype=complex)
        if not np.isin(s, QPSK).all():
            raise ValueError("symbols must lie exactly on the unit-energy QPSK constellation")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)


def hypothesis_indices(K: int) -> np.ndarray:
    """All 4^K constellation index tuples, in lexicographic order."""
    if K not in _HYP_CACHE:
        idx = np.array(list(product(range(4), repeat=K)), dtype=np.uint8)
        idx.setflags(write=False)
        _HYP_CACHE[K] = idx
    return _HYP_CACHE[K]


def _loglik_tables(H_hat: np.ndarray, sigma2: float, symbol_power: float):
    """log Phi(+u/sigma) and log Phi(-u/sigma) for every hypothesis.

    u stacks [Re, Im] of H_hat @ s over the 2M comparators: (4^K, 2M).
    """
    K = H_hat.shape[1]
    S = QPSK[hypothesis_indices(K)] * np.sqrt(symbol_power)  # (4^K, K)
    R = S @ H_hat.T                                          # (4^K, M)
    U = np.concatenate([R.real, R.imag], axis=1) / np.sqrt(sigma2)
    return norm_logcdf(U), norm_logcdf(-U)


def detect_frames(H_hat: np.ndarray, b_frames: np.ndarray, sigma2: float,
                  symbol_power: float = 1.0, k_max: int = K_MAX_DEFAULT,
                  chunk: int = 256) -> np.ndarray:
    """Exhaustive one-bit ML detection of many frames against one channel.

    b_frames is (F, 2M) of signs with the [Re block, Im block] comparator
    order.  Returns (F, K) constellation indices.
    """
    H_hat = np.asarray(H_hat, dtype=complex)
    M, K = H_hat.shape
    if K > k_max:
        raise ValueError(
            f"K={K} needs 4^{K} hypotheses, beyond the exhaustive-search "
            f"limit k_max={k_max}; reduce the number of users"
        )
    b_frames = np.atleast_2d(np.asarray(b_frames))
    if b_frames.shape[1] != 2 * M:
        raise ValueError(f"frames must have 2M={2 * M} sign entries")

    log_pos, log_neg = _loglik_tables(H_hat, sigma2, symbol_power)
    base = log_neg.sum(axis=1)      # score if every sign were -1
    delta = log_pos - log_neg       # added when a sign is +1
    hyp = hypothesis_indices(K)

    out = np.empty((b_frames.shape[0], K), dtype=np.uint8)
    for lo in range(0, b_frames.shape[0], chunk):
        sl = slice(lo, lo + chunk)
        pos_mask = (b_frames[sl] > 0).astype(float)
        scores = base[None, :] + pos_mask @ delta.T   # (f, 4^K)
        out[sl] = hyp[np.argmax(scores, axis=1)]
    return out


def detect_ml_onebit(H_hat: np.ndarray, b_frame: np.ndarray, sigma2: float,
                     symbol_power: float = 1.0, k_max: int = K_MAX_DEFAULT) -> SymbolFrame:
    """Detect a single frame; see detect_frames for conventions."""
    idx = detect_frames(H_hat, np.asarray(b_frame)[None, :], sigma2,
                        symbol_power=symbol_power, k_max=k_max)[0]
    return SymbolFrame(s=QPSK[idx])


def simulate_frames(H: np.ndarray, sigma2: float, symbol_power: float,
                    n_frames: int, rng_seed=None):
    """Draw QPSK frames, pass them through H with AWGN, quantize at zero.

    Returns (constellation indices (F, K), one-bit data (F, 2M)).
    """
    rng = as_rng(rng_seed)
    H = np.asarray(H, dtype=complex)
    M, K = H.shape
    idx = rng.integers(0, 4, size=(n_frames, K))
    S = QPSK[idx] * np.sqrt(symbol_power)
    noise = rng.normal(0.0, np.sqrt(sigma2), size=(n_frames, M)) \
        + 1j * rng.normal(0.0, np.sqrt(sigma2), size=(n_frames, M))
    R = S @ H.T + noise
    b = np.where(np.concatenate([R.real, R.imag], axis=1) >= 0.0, 1, -1).astype(np.int8)
    return idx, b


class SerResult(NamedTuple):
    per_user: np.ndarray
    average: float


def measure_ser(H_true: np.ndarray, H_est: np.ndarray, sigma2: float,
                symbol_power: float, n_frames: int, rng_seed=None,
                k_max: int = K_MAX_DEFAULT) -> SerResult:
    """Monte Carlo symbol error rate of the exhaustive one-bit detector."""
    idx, b = simulate_frames(H_true, sigma2, symbol_power, n_frames, rng_seed)
    det = detect_frames(H_est, b, sigma2, symbol_power=symbol_power, k_max=k_max)
    per_user = (det != idx).mean(axis=0)
    return SerResult(per_user=per_user, average=float(per_user.mean()))


class RateResult(NamedTuple):
    rate: np.ndarray
    capped: np.ndarray


def achievable_rate(s: np.ndarray, s_hat: np.ndarray, cap: float = 20.0) -> RateResult:
    """Per-user rate log2(1 + |E[s* s_hat]|^2 / (E[|s_hat|^2] - |E[s* s_hat]|^2)).

    Expectations are sample means over the paired sequences (T,) or (T, K).
    A non-positive denominator means perfect correlation; the configured
    cap is returned with the capped flag set.
    """
    s = np.asarray(s, dtype=complex)
    s_hat = np.asarray(s_hat, dtype=complex)
    if s.size == 0:
        raise ValueError("empty sample sequences")
    if s.shape != s_hat.shape:
        raise ValueError("s and s_hat must have matching shapes")
    squeeze = s.ndim == 1
    if squeeze:
        s, s_hat = s[:, None], s_hat[:, None]
    corr = (np.conj(s) * s_hat).mean(axis=0)
    num = np.abs(corr) ** 2
    power = (np.abs(s_hat) ** 2).mean(axis=0)
    den = power - num
    # den is a difference of O(power) quantities; below rounding noise it
    # means perfect correlation, not an astronomically large SINR
    capped = den <= 1e-12 * power
    safe = np.where(capped, 1.0, den)
    rate = np.where(capped, float(cap), np.log2(1.0 + num / safe))
    if squeeze:
        return RateResult(rate=rate[0], capped=capped[0])
    return RateResult(rate=rate, capped=capped)
