"""Deterministic robustness attacks: additive noise, cropping, compression.

Noise uses numpy's PCG64 bit generator with its ziggurat standard normal
sampler (``np.random.Generator(np.random.PCG64(seed)).standard_normal``), so a
seed reproduces the same image on any platform numpy supports.

Compression is a fixed block-transform quantiser rather than a real codec:
8x8 orthonormal DCT-II per block, every coefficient rounded (half to even)
to a multiple of ``step = (101 - quality) / 1024`` in [0, 1] pixel units,
inverse DCT, clamp to [0, 1].  Sides that are not multiples of 8 are padded
by mirror reflection (edge pixel repeated) and cropped back afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

BLOCK = 8
ATTACK_KINDS = ("noise", "crop", "compress")


def _dct_matrix(n: int = BLOCK) -> np.ndarray:
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    c = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * i + 1) * k / (2 * n))
    c[0] /= np.sqrt(2.0)
    return c


_DCT = _dct_matrix()


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    sigma: float = 0.0
    rect: tuple[int, int, int, int] = (0, 0, 0, 0)
    fill: str = "zero"
    quality: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise InvalidArgument(f"unknown attack {self.kind!r}; expected one of {ATTACK_KINDS}")
        if self.sigma < 0:
            raise InvalidArgument("sigma must be non-negative")
        if self.fill not in ("zero", "mean"):
            raise InvalidArgument("fill must be 'zero' or 'mean'")
        if not 1 <= self.quality <= 100:
            raise InvalidArgument("quality must lie in [1, 100]")

    @property
    def intensity(self) -> float:
        """Scalar strength used for sorting and the CSV ``param`` column."""
        if self.kind == "noise":
            return float(self.sigma)
        if self.kind == "compress":
            return float(self.quality)
        return float(self.rect[2] * self.rect[3])

    def apply(self, image: np.ndarray) -> np.ndarray:
        if self.kind == "noise":
            return attack_noise(image, self.sigma, self.seed)
        if self.kind == "crop":
            return attack_crop(image, self.rect, self.fill)
        return attack_compress(image, self.quality)


def attack_noise(image, sigma: float, seed: int = 0) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if sigma < 0:
        raise InvalidArgument("sigma must be non-negative")
    if sigma == 0:
        return image.copy()
    rng = np.random.Generator(np.random.PCG64(seed))
    return np.clip(image + sigma * rng.standard_normal(image.shape), 0.0, 1.0)


def attack_crop(image, rect, fill: str = "zero") -> np.ndarray:
    """Blank the rectangle ``rect = (row, col, height, width)``.

    ``fill='mean'`` uses the mean of the whole image before cropping.
    """
    image = np.asarray(image, dtype=float)
    row, col, height, width = (int(v) for v in rect)
    if (
        min(row, col, height, width) < 0
        or row + height > image.shape[0]
        or col + width > image.shape[1]
    ):
        raise InvalidArgument(f"crop rectangle {rect} lies outside a {image.shape} image")
    if fill not in ("zero", "mean"):
        raise InvalidArgument("fill must be 'zero' or 'mean'")
    value = 0.0 if fill == "zero" else float(image.mean())
    out = image.copy()
    out[row : row + height, col : col + width] = value
    return out


def attack_compress(image, quality: int) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if not 1 <= int(quality) <= 100:
        raise InvalidArgument("quality must lie in [1, 100]")
    step = (101 - int(quality)) / 1024.0
    rows, cols = image.shape
    pad_r = -rows % BLOCK
    pad_c = -cols % BLOCK
    padded = np.pad(image, ((0, pad_r), (0, pad_c)), mode="symmetric")
    h, w = padded.shape
    blocks = padded.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK)
    coef = np.einsum("ij,ajbk,lk->aibl", _DCT, blocks, _DCT)
    coef = np.rint(coef / step) * step
    back = np.einsum("ji,ajbk,kl->aibl", _DCT, coef, _DCT).reshape(h, w)
    return np.clip(back[:rows, :cols], 0.0, 1.0)
