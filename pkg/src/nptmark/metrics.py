"""Image quality metrics: PSNR and normalised correlation."""

import math

import numpy as np

from .errors import ShapeError, UndefinedMetric

PSNR_CAP = 99.0


def psnr(a, b) -> float:
    """PSNR in dB of two [0, 1] images measured on the 0-255 scale.

    Identical images give ``PSNR_CAP`` instead of infinity.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((255.0 * (a - b)) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 20.0 * math.log10(255.0 / math.sqrt(mse)))


def ideal_psnr(alpha: float) -> float:
    """Predicted PSNR 20*log10(alpha / (1 - alpha)) of an NPT-transformed image."""
    if alpha >= 1.0:
        return math.inf
    return 20.0 * math.log10(alpha / (1.0 - alpha))


def ncorr(original, extracted, centered: bool = False) -> float:
    """Normalised correlation sum(a*b) / (|a| |b|).

    ``centered=True`` subtracts each mean first; it is a diagnostic variant,
    the default matches the usual watermarking definition.
    """
    a = np.asarray(original, dtype=float)
    b = np.asarray(extracted, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if centered:
        a = a - a.mean()
        b = b - b.mean()
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise UndefinedMetric("normalised correlation is undefined for an all-zero input")
    value = float(np.sum(a * b)) / (na * nb)
    return max(-1.0, min(1.0, value))
