"""Complex pilot model, its real block-structured equivalent, and random draws.

The complex training model Y = H X + W is handled throughout in its real
vectorized form y = A h + w with A = I_M (kron) A_tilde.  A is never
materialized: every product routes through the shared 2L x 2K factor
A_tilde, one antenna block at a time, which makes each matvec O(M*L*K)
instead of O(M^2*L*K).

Layout conventions (used consistently by every module):
  h stacks per-antenna subvectors [Re(H[m, :]), Im(H[m, :])], m = 0..M-1;
  y stacks per-antenna subvectors [Re(Y[m, :]), Im(Y[m, :])].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POWER_RTOL = 1e-9


def as_rng(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence, an existing Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class ComplexSystem:
    """Uplink training setup: M antennas, K users, L pilot symbols."""

    M: int
    K: int
    L: int
    X: np.ndarray  # K x L complex pilot matrix
    sigma2: float  # noise variance per real component (complex variance is 2*sigma2)
    P: float       # pilot power budget, tr(X X^H) <= P

    def __post_init__(self):
        if min(self.M, self.K, self.L) < 1:
            raise ValueError("M, K, L must all be positive")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")
        if self.P <= 0.0:
            raise ValueError("P must be positive")
        X = np.asarray(self.X, dtype=complex)
        if X.shape != (self.K, self.L):
            raise ValueError(f"X must have shape ({self.K}, {self.L}), got {X.shape}")
        used = float(np.sum(np.abs(X) ** 2))
        if used > self.P * (1.0 + POWER_RTOL):
            raise ValueError(f"pilot power {used:.9g} exceeds budget P={self.P:.9g}")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)


@dataclass(frozen=True)
class RealModel:
    """Real form of the training model: y = A h + w with A = I_M kron A_tilde."""

    A_tilde: np.ndarray  # 2L x 2K
    M: int
    K: int
    L: int
    sigma2: float

    def __post_init__(self):
        A = np.asarray(self.A_tilde, dtype=float)
        if A.shape != (2 * self.L, 2 * self.K):
            raise ValueError(f"A_tilde must be {2 * self.L}x{2 * self.K}, got {A.shape}")
        A.setflags(write=False)
        object.__setattr__(self, "A_tilde", A)

    @property
    def N(self) -> int:
        """Total number of real measurements, 2*M*L."""
        return 2 * self.M * self.L

    @property
    def dim(self) -> int:
        """Length of the real channel vector, 2*M*K."""
        return 2 * self.M * self.K

    def apply(self, h: np.ndarray) -> np.ndarray:
        """A @ h without forming A (independent per-antenna products)."""
        H = np.asarray(h, dtype=float).reshape(self.M, 2 * self.K)
        return (H @ self.A_tilde.T).reshape(-1)

    def apply_t(self, v: np.ndarray) -> np.ndarray:
        """A.T @ v without forming A."""
        V = np.asarray(v, dtype=float).reshape(self.M, 2 * self.L)
        return (V @ self.A_tilde).reshape(-1)

    def gram(self) -> np.ndarray:
        """A_tilde^T A_tilde, the repeated diagonal block of A^T A."""
        return self.A_tilde.T @ self.A_tilde

    def row_norms_sq(self) -> np.ndarray:
        """||a_n||^2 for every row of A (the pattern repeats per antenna)."""
        per_block = np.sum(self.A_tilde**2, axis=1)
        return np.tile(per_block, self.M)


@dataclass(frozen=True)
class ChannelRealization:
    """A channel draw in both complex (M x K) and real (2MK) coordinates."""

    H: np.ndarray
    h: np.ndarray
    sigma_h2: float

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        h = np.asarray(self.h, dtype=float)
        if h.shape != (2 * H.shape[0] * H.shape[1],):
            raise ValueError("h must have length 2*M*K")
        H.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)


def channel_to_real(H: np.ndarray) -> np.ndarray:
    """Complex M x K channel -> real 2MK vector (per-antenna [Re, Im] blocks)."""
    H = np.asarray(H, dtype=complex)
    return np.hstack([H.real, H.imag]).reshape(-1)


def real_to_channel(h: np.ndarray, M: int, K: int) -> np.ndarray:
    """Inverse of channel_to_real; the round trip is exact."""
    Hm = np.asarray(h, dtype=float).reshape(M, 2 * K)
    return Hm[:, :K] + 1j * Hm[:, K:]


def realify(sys: ComplexSystem) -> RealModel:
    """Build the real 2L x 2K pilot operator from the complex pilot matrix.

    A_tilde = [[Re X, Im X], [-Im X, Re X]]^T, so that applying A_tilde to
    an antenna's [Re, Im] channel block reproduces exactly the real and
    imaginary parts of that antenna's row of H X.
    """
    Xr, Xi = sys.X.real, sys.X.imag
    A_tilde = np.block([[Xr, Xi], [-Xi, Xr]]).T
    return RealModel(A_tilde=A_tilde, M=sys.M, K=sys.K, L=sys.L, sigma2=sys.sigma2)


def generate_channel(M: int, K: int, sigma_h2: float = 1.0, rng_seed=None) -> ChannelRealization:
    """i.i.d. circularly symmetric complex Gaussian channel.

    Each complex entry has variance sigma_h2 (so sigma_h2/2 per real part).
    Deterministic for a fixed seed.
    """
    if M < 1 or K < 1:
        raise ValueError("M and K must be positive")
    if sigma_h2 <= 0.0:
        raise ValueError("sigma_h2 must be positive")
    rng = as_rng(rng_seed)
    scale = np.sqrt(sigma_h2 / 2.0)
    H = rng.normal(0.0, scale, size=(M, K)) + 1j * rng.normal(0.0, scale, size=(M, K))
    return ChannelRealization(H=H, h=channel_to_real(H), sigma_h2=sigma_h2)


def generate_pilots_orthogonal(K: int, L: int, P: float, rng_seed=None, method: str = "qr") -> np.ndarray:
    """Random K x L pilot matrix with X X^H = (P/K) I_K.

    method="qr" takes K orthonormal rows from the Q factor of a complex
    Gaussian matrix; method="dft" takes the first K rows of the unitary
    DFT matrix. Both spend the power budget exactly: tr(X X^H) = P.
    """
    if L < K:
        raise ValueError(f"orthogonal pilots need L >= K (got K={K}, L={L})")
    if method == "qr":
        rng = as_rng(rng_seed)
        G = rng.normal(size=(L, K)) + 1j * rng.normal(size=(L, K))
        Q, _ = np.linalg.qr(G)
        X = np.sqrt(P / K) * Q.conj().T
    elif method == "dft":
        n = np.arange(L)
        F = np.exp(-2j * np.pi * np.outer(np.arange(K), n) / L) / np.sqrt(L)
        X = np.sqrt(P / K) * F
    else:
        raise ValueError(f"unknown pilot method {method!r} (use 'qr' or 'dft')")
    return X


def generate_noisy_observation(model, h: np.ndarray, rng_seed=None) -> np.ndarray:
    """y = A h + w with w ~ N(0, sigma2 I_N), sigma2 per real component."""
    if isinstance(model, ComplexSystem):
        model = realify(model)
    rng = as_rng(rng_seed)
    y = model.apply(h)
    if model.sigma2 > 0.0:
        y = y + rng.normal(0.0, np.sqrt(model.sigma2), size=model.N)
    return y


def snr_of(sys: ComplexSystem) -> float:
    """Training SNR P / (K L sigma2)."""
    return sys.P / (sys.K * sys.L * sys.sigma2)


def power_for_snr(snr_db: float, K: int, L: int, sigma2: float = 1.0) -> float:
    """Pilot power budget that realizes a target SNR in dB."""
    return 10.0 ** (snr_db / 10.0) * K * L * sigma2


def channel_mse(h_hat: np.ndarray, h_true: np.ndarray, M: int, K: int) -> float:
    """||H - H_hat||_F^2 / (K M), evaluated on the real coordinates."""
    e = np.asarray(h_hat, dtype=float) - np.asarray(h_true, dtype=float)
    return float(np.dot(e, e)) / (M * K)


def build_system(M: int, K: int, L: int, snr_db: float, sigma2: float = 1.0,
                 rng_seed=None, pilot_method: str = "qr") -> ComplexSystem:
    """Convenience constructor: orthogonal pilots at the power a target SNR implies."""
    P = power_for_snr(snr_db, K, L, sigma2)
    X = generate_pilots_orthogonal(K, L, P, rng_seed=rng_seed, method=pilot_method)
    return ComplexSystem(M=M, K=K, L=L, X=X, sigma2=sigma2, P=P)
