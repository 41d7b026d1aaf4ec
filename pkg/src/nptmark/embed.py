"""Embed a grayscale logo into a host image with the NPT.

Every placement follows the same recipe: overwrite a region of the host with
the logo payload, apply psi on both sides, then copy the original host pixels
back over that region.  The payload survives only as the small spread-out
perturbation the transform leaves in the rest of the image.

Placements
----------
bottom
    The logo is flattened row-major into ``r = m*n/N`` rows of width N that
    replace the last r host rows.
top_left
    The logo, padded to a square m x m block, replaces the top-left block.
optimum
    As top_left, but at the host block closest (Frobenius norm) to the logo.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgument, LogoTooLarge, ShapeError, SizeRestrictionError
from .transforms import NptOperator, npt_operator

PAD_VALUE = 0.5
PLACEMENTS = ("bottom", "top_left", "optimum")


@dataclass(frozen=True)
class Placement:
    """Where the payload went.

    ``row, col, height, width`` describe the replaced (and later restored)
    host region; ``logo_shape`` is the true (m, n) of the logo so padded or
    reshaped payloads can be turned back into it.
    """

    kind: str
    row: int
    col: int
    height: int
    width: int
    logo_shape: tuple[int, int]
    distance: float | None = None

    @property
    def rows(self) -> np.ndarray:
        return np.arange(self.row, self.row + self.height)

    @property
    def cols(self) -> np.ndarray:
        return np.arange(self.col, self.col + self.width)

    @property
    def region(self) -> tuple[slice, slice]:
        return slice(self.row, self.row + self.height), slice(self.col, self.col + self.width)

    def check_inside(self, order: int) -> None:
        if (
            self.height < 1
            or self.width < 1
            or self.row < 0
            or self.col < 0
            or self.row + self.height > order
            or self.col + self.width > order
        ):
            raise ShapeError(f"placement region {self.region} does not fit a {order}x{order} host")


@dataclass(frozen=True, eq=False)
class WatermarkedImage:
    data: np.ndarray
    placement: Placement
    alpha: float
    host_digest: str


def host_digest(host: np.ndarray) -> str:
    data = np.ascontiguousarray(host, dtype="<f8")
    return hashlib.sha256(data.tobytes()).hexdigest()


def _as_host(host) -> np.ndarray:
    host = np.asarray(host, dtype=float)
    if host.ndim != 2 or host.shape[0] != host.shape[1]:
        raise ShapeError(f"host must be square, got shape {host.shape}")
    if not np.all(np.isfinite(host)):
        raise InvalidArgument("host contains non-finite pixels")
    return host


def _as_logo(logo) -> np.ndarray:
    logo = np.asarray(logo, dtype=float)
    if logo.ndim != 2 or logo.size == 0:
        raise ShapeError(f"logo must be a non-empty 2-D array, got shape {logo.shape}")
    if not np.all(np.isfinite(logo)):
        raise InvalidArgument("logo contains non-finite pixels")
    return logo


def logo_rows(logo_shape: tuple[int, int], host_order: int) -> int:
    """Number of host rows r = m*n/N a reshaped logo occupies."""
    m, n = logo_shape
    if (m * n) % host_order:
        raise ShapeError(f"logo of {m}x{n} pixels does not fill whole rows of width {host_order}")
    r = m * n // host_order
    if r >= host_order:
        raise LogoTooLarge(f"logo needs {r} rows, host has only {host_order}")
    return r


def reshape_logo(logo, host_order: int) -> np.ndarray:
    logo = _as_logo(logo)
    r = logo_rows(logo.shape, host_order)
    return logo.reshape(r, host_order).copy()


def unreshape_logo(block, logo_shape: tuple[int, int]) -> np.ndarray:
    block = np.asarray(block, dtype=float)
    if block.size != logo_shape[0] * logo_shape[1]:
        raise ShapeError(f"block of {block.size} pixels cannot hold a {logo_shape} logo")
    return block.reshape(logo_shape).copy()


def square_logo(logo) -> np.ndarray:
    """Pad a rectangular logo to a square with mid-gray on the right/bottom."""
    logo = _as_logo(logo)
    m = max(logo.shape)
    if logo.shape == (m, m):
        return logo.copy()
    out = np.full((m, m), PAD_VALUE)
    out[: logo.shape[0], : logo.shape[1]] = logo
    return out


def embed_region(host, payload, op: NptOperator, placement: Placement) -> np.ndarray:
    """Replace, transform, restore.  Returns the watermarked pixel array."""
    placement.check_inside(op.order)
    region = placement.region
    spm = np.array(host, dtype=float)
    spm[region] = payload
    out = op.psi @ spm @ op.psi
    out[region] = host[region]
    return out


def embed_bottom(host, logo, alpha: float) -> WatermarkedImage:
    host = _as_host(host)
    logo = _as_logo(logo)
    n = host.shape[0]
    block = reshape_logo(logo, n)
    r = block.shape[0]
    placement = Placement("bottom", n - r, 0, r, n, logo.shape)
    op = npt_operator(n, alpha)
    data = embed_region(host, block, op, placement)
    return WatermarkedImage(data, placement, op.alpha, host_digest(host))


def _block_geometry(host: np.ndarray, logo: np.ndarray) -> tuple[np.ndarray, int]:
    block = square_logo(logo)
    m = block.shape[0]
    if 2 * m > host.shape[0]:
        raise SizeRestrictionError(
            f"logo block side {m} exceeds half the host side {host.shape[0]}; "
            "the least-squares extraction would be underdetermined"
        )
    return block, m


def embed_topleft(host, logo, alpha: float) -> WatermarkedImage:
    host = _as_host(host)
    logo = _as_logo(logo)
    block, m = _block_geometry(host, logo)
    placement = Placement("top_left", 0, 0, m, m, logo.shape)
    op = npt_operator(host.shape[0], alpha)
    data = embed_region(host, block, op, placement)
    return WatermarkedImage(data, placement, op.alpha, host_digest(host))


def default_stride(order: int) -> int:
    return 1 if order <= 128 else 4


def find_optimum_block(host, logo, stride: int | None = None) -> Placement:
    """Host block closest to the (squared) logo in Frobenius distance.

    Offsets are scanned on a ``stride`` grid; ties go to the smallest
    (row, col) in lexicographic order.
    """
    host = _as_host(host)
    logo = _as_logo(logo)
    block, m = _block_geometry(host, logo)
    if stride is None:
        stride = default_stride(host.shape[0])
    if stride < 1:
        raise InvalidArgument("stride must be a positive integer")
    dist = kernels.block_sq_distances(host, block, stride)
    # argmin returns the first minimum in row-major order, which is the tie-break rule
    a, b = np.unravel_index(int(np.argmin(dist)), dist.shape)
    return Placement(
        "optimum",
        int(a) * stride,
        int(b) * stride,
        m,
        m,
        logo.shape,
        float(np.sqrt(dist[a, b])),
    )


def embed_optimum(host, logo, alpha: float, stride: int | None = None) -> WatermarkedImage:
    host = _as_host(host)
    logo = _as_logo(logo)
    placement = find_optimum_block(host, logo, stride)
    block = square_logo(logo)
    op = npt_operator(host.shape[0], alpha)
    data = embed_region(host, block, op, placement)
    return WatermarkedImage(data, placement, op.alpha, host_digest(host))


def canonical_placement(name: str) -> str:
    """Map accepted spellings (``topleft``, ``top-left``) onto :data:`PLACEMENTS`."""
    kind = str(name).lower().replace("-", "_")
    kind = "top_left" if kind == "topleft" else kind
    if kind not in PLACEMENTS:
        raise InvalidArgument(f"unknown placement {name!r}; expected one of {PLACEMENTS}")
    return kind


def embed(host, logo, alpha: float, placement: str = "bottom", stride: int | None = None) -> WatermarkedImage:
    kind = canonical_placement(placement)
    if kind == "bottom":
        return embed_bottom(host, logo, alpha)
    if kind == "top_left":
        return embed_topleft(host, logo, alpha)
    if kind == "optimum":
        return embed_optimum(host, logo, alpha, stride)
    raise InvalidArgument(f"unknown placement {placement!r}; expected one of {PLACEMENTS}")


def payload_for(logo, placement: Placement, host_order: int) -> np.ndarray:
    """The array that was written into the placement region for ``logo``."""
    if placement.kind == "bottom":
        return reshape_logo(logo, host_order)
    return square_logo(logo)


def logo_from_payload(payload, placement: Placement) -> np.ndarray:
    """Inverse of :func:`payload_for`: unreshape or crop the padding away."""
    m, n = placement.logo_shape
    if placement.kind == "bottom":
        return unreshape_logo(payload, (m, n))
    return np.asarray(payload, dtype=float)[:m, :n].copy()
