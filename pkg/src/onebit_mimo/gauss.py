"""Stable evaluation of Gaussian CDF/PDF ratios.

Single source of truth for every probit-style quantity in the package.
Naive Phi(x) underflows past ~8 sigma and turns Newton steps and Fisher
weights into 0/0; everything here routes through scipy's erfcx/log_ndtr,
which stay accurate over the whole real line.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfcx, log_ndtr, ndtr

SQRT_2 = float(np.sqrt(2.0))
SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))


def norm_pdf(t):
    """Standard normal density."""
    t = np.asarray(t, dtype=float)
    return np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)


def norm_cdf(t):
    """Standard normal CDF."""
    return ndtr(np.asarray(t, dtype=float))


def norm_logcdf(t):
    """log Phi(t), finite for any finite t (no underflow in the left tail)."""
    return log_ndtr(np.asarray(t, dtype=float))


def mills_ratio(t):
    """Inverse Mills ratio phi(t)/Phi(t).

    Evaluated as sqrt(2/pi)/erfcx(-t/sqrt(2)): exact to rounding for all
    finite t, and grows like |t| for t -> -inf instead of degenerating
    to 0/0.
    """
    t = np.asarray(t, dtype=float)
    return SQRT_2_OVER_PI / erfcx(-t / SQRT_2)
