"""Standard normal density and distribution function."""

import numpy as np
from scipy import special

SQRT2 = np.sqrt(2.0)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def norm_cdf(x):
    """Phi(x) through erfc, accurate in both tails."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / SQRT2)
