"""Discrete Hartley transform and the natural preserving transform (NPT).

The NPT operator blends the identity with the orthonormal Hartley matrix,

    psi(alpha) = alpha * I + (1 - alpha) * H,

and is applied on both sides of a square image.  Because H is symmetric and
involutory (H @ H == I) the operator has only two eigenvalues, 1 and
2*alpha - 1, which gives a closed-form inverse of the same shape
a*I + b*H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, InvalidArgument, ShapeError

DEFAULT_MAX_ITER = 200


def cas(x):
    return np.cos(x) + np.sin(x)


@lru_cache(maxsize=16)
def _hartley(order: int) -> np.ndarray:
    k = np.arange(order)
    # reducing k*j mod N keeps the phase in [0, 2pi) so large orders stay accurate
    phase = 2.0 * np.pi * (np.outer(k, k) % order) / order
    h = cas(phase) / math.sqrt(order)
    h.setflags(write=False)
    return h


def dht_matrix(order: int) -> np.ndarray:
    """Orthonormal DHT matrix ``H[k, j] = cas(2*pi*k*j/N) / sqrt(N)`` (read-only)."""
    if isinstance(order, bool) or not isinstance(order, (int, np.integer)) or order < 1:
        raise InvalidArgument(f"order must be a positive integer, got {order!r}")
    return _hartley(int(order))


@dataclass(frozen=True, eq=False)
class NptOperator:
    order: int
    alpha: float
    psi: np.ndarray
    hartley: np.ndarray

    @classmethod
    def unchecked(cls, order: int, alpha: float) -> "NptOperator":
        """Build psi without the (0.5, 1] domain check.

        Only meant for tests of the alpha == 0 projection case; the inverse
        helpers are undefined for alpha <= 0.5.
        """
        h = dht_matrix(order)
        psi = alpha * np.eye(order) + (1.0 - alpha) * h
        psi.setflags(write=False)
        return cls(int(order), float(alpha), psi, h)

    @property
    def inverse_coefficients(self) -> tuple[float, float]:
        """(a, b) with psi^-1 == a*I + b*H."""
        a = self.alpha
        d = 2.0 * a - 1.0
        return a / d, -(1.0 - a) / d

    def inverse_matrix(self) -> np.ndarray:
        a, b = self.inverse_coefficients
        return a * np.eye(self.order) + b * self.hartley

    def eigenvalues(self) -> tuple[float, float]:
        return 1.0, 2.0 * self.alpha - 1.0


def validate_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or not 0.5 < alpha <= 1.0:
        raise InvalidArgument(f"alpha must lie in (0.5, 1], got {alpha!r}")
    return alpha


def npt_operator(order: int, alpha: float) -> NptOperator:
    return NptOperator.unchecked(order, validate_alpha(alpha))


def _check_square(image: np.ndarray, order: int | None = None, name: str = "image") -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ShapeError(f"{name} must be a square matrix, got shape {image.shape}")
    if order is not None and image.shape[0] != order:
        raise ShapeError(f"{name} has side {image.shape[0]}, operator order is {order}")
    return image


def npt_forward(op: NptOperator, image: np.ndarray) -> np.ndarray:
    image = _check_square(image, op.order)
    return op.psi @ image @ op.psi


def npt_inverse_direct(op: NptOperator, transformed: np.ndarray) -> np.ndarray:
    transformed = _check_square(transformed, op.order, "transformed")
    inv = op.inverse_matrix()
    return inv @ transformed @ inv


def npt_inverse_series(
    op: NptOperator,
    transformed: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, int]:
    """Invert the NPT with the Neumann series of psi.

    psi^-1 = (1/alpha) * sum_k (-(1-alpha)/alpha * H)^k, truncated once the
    geometric tail bound guarantees a max-abs error of at most ``tol`` on the
    reconstructed image.  Returns the image and the number of series terms.
    """
    transformed = _check_square(transformed, op.order, "transformed")
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    if max_iter < 1:
        raise InvalidArgument("max_iter must be at least 1")
    alpha = op.alpha
    if not 0.5 < alpha <= 1.0:
        raise InvalidArgument(f"series diverges for alpha={alpha}")

    ratio = (1.0 - alpha) / alpha
    inv_norm = 1.0 / (2.0 * alpha - 1.0)
    image_norm = float(np.linalg.norm(transformed))
    term = np.eye(op.order) / alpha
    total = term.copy()
    bound = math.inf
    for k in range(1, max_iter + 1):
        tail = ratio**k / (alpha * (1.0 - ratio))
        bound = tail * image_norm * (2.0 * inv_norm + tail)
        if bound <= tol:
            return total @ transformed @ total, k
        term = -ratio * (op.hartley @ term)
        total += term
    raise ConvergenceError("Neumann series did not converge", bound, max_iter)


def dht_apply_2d(image: np.ndarray) -> np.ndarray:
    image = _check_square(image)
    h = dht_matrix(image.shape[0])
    return h @ image @ h


@dataclass
class OpCount:
    multiplications: int = 0
    additions: int = 0


def _naive_matmul(a, b, n, count):
    out = [[0.0] * n for _ in range(n)]
    muls = adds = 0
    for i in range(n):
        for j in range(n):
            acc = a[i][0] * b[0][j]
            muls += 1
            for k in range(1, n):
                acc += a[i][k] * b[k][j]
                muls += 1
                adds += 1
            out[i][j] = acc
    count.multiplications += muls
    count.additions += adds
    return out


def dht_apply_2d_naive(image: np.ndarray) -> tuple[np.ndarray, OpCount]:
    """Two-sided DHT by schoolbook matrix products, counting scalar operations."""
    image = _check_square(image)
    n = image.shape[0]
    h = dht_matrix(n).tolist()
    count = OpCount()
    left = _naive_matmul(h, image.tolist(), n, count)
    result = _naive_matmul(left, h, n, count)
    return np.array(result), count
