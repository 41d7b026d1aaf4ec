"""Recover the logo from a watermarked image.

Non-blind extraction knows the host, so every pixel outside the restored
region is a linear equation in the unknown payload p:

    A_pm[known] = (psi @ S0 @ psi)[known] + (psi[:, R] @ p @ psi[C, :])[known]

where S0 is the host with the region (rows R, columns C) zeroed.  The known
entries split into three blocks ((R, ~C), (~R, C), (~R, ~C)).  Writing
psi = alpha*I + beta*H with H symmetric and involutory, every psi sub-block
that touches p is a function of the Hartley sub-blocks H[R, R] and H[C, C]:

    psi[R, R]   = alpha + beta*H_RR          psi[C, C] likewise
    psi[~R, R]^T psi[~R, R] = beta^2 (I - H_RR^2)

so the eigenvectors of H_RR (left) and H_CC (right) diagonalise all three
blocks at once and the least-squares problem decouples into independent
scalar problems, one per entry of p in the rotated basis.  The solution is
exact least squares over all known pixels and costs O(N^3).

Quasi-blind extraction (bottom placement only) does not know the host.  The
first N-r rows of the watermarked image give

    A_op @ psi^-1 = psi11 @ S1 + psi12 @ p1,

a projector L with L^T psi12 = 0 removes the logo term, and a few known host
rows inside S1 pin down the r free directions per column.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .embed import (
    Placement,
    WatermarkedImage,
    host_digest,
    logo_from_payload,
    logo_rows,
)
from .errors import (
    DegenerateExtraction,
    DetectionFailure,
    InvalidArgument,
    RankError,
    ShapeError,
    SolverError,
    TamperSuspected,
)
from .metrics import ncorr, psnr
from .transforms import NptOperator, npt_operator

RANK_RTOL = 1e-10
TAMPER_RTOL = 1e-6
MIN_DETECTED_AREA = 4


@dataclass(eq=False)
class ExtractionReport:
    logo: np.ndarray
    payload: np.ndarray
    mode: str
    placement: Placement
    alpha: float
    psnr_db: float
    solver_residual: float
    rank: int
    ncorr: float | None = None
    recovered_host_region: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class PsiPartition:
    psi11: np.ndarray
    psi12: np.ndarray
    psi21: np.ndarray
    psi22: np.ndarray

    @classmethod
    def split(cls, psi: np.ndarray, r: int) -> "PsiPartition":
        k = psi.shape[0] - r
        return cls(psi[:k, :k], psi[:k, k:], psi[k:, :k], psi[k:, k:])

    def assemble(self) -> np.ndarray:
        return np.block([[self.psi11, self.psi12], [self.psi21, self.psi22]])


@dataclass(frozen=True, eq=False)
class NullProjector:
    L: np.ndarray
    rank: int


def _unpack(watermarked, alpha, placement):
    if isinstance(watermarked, WatermarkedImage):
        data = watermarked.data
        alpha = watermarked.alpha if alpha is None else alpha
        placement = watermarked.placement if placement is None else placement
    else:
        data = watermarked
    if alpha is None:
        raise InvalidArgument("alpha is required for a bare pixel array")
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise ShapeError(f"watermarked image must be square, got {data.shape}")
    op = npt_operator(data.shape[0], alpha)
    if op.alpha == 1.0:
        raise DegenerateExtraction("alpha == 1: the watermarked image equals the host, no payload is recoverable")
    return data, op, placement


def _side_factors(h_sub: np.ndarray, outer: np.ndarray, alpha: float):
    """Eigenbasis of a Hartley sub-block and the matching psi factors.

    ``outer`` is the off-region psi block on this side; its columns in the
    eigenbasis are orthogonal with norms sigma, normalised here into V.
    """
    h_vals, vecs = np.linalg.eigh(h_sub)
    mu = alpha + (1.0 - alpha) * h_vals
    mapped = outer @ vecs
    # column norms instead of beta*sqrt(1 - h^2): no cancellation near |h| = 1
    sigma = np.linalg.norm(mapped, axis=0)
    basis = np.zeros_like(mapped)
    ok = sigma > RANK_RTOL * (1.0 - alpha)
    basis[:, ok] = mapped[:, ok] / sigma[ok]
    return vecs, mu, sigma, basis


def solve_region(op: NptOperator, data: np.ndarray, host_outside: np.ndarray, placement: Placement):
    """Least-squares payload for a known host outside ``placement``.

    Returns ``(payload, residual, rank)``.  ``host_outside`` only needs to be
    correct outside the placement region.
    """
    n = op.order
    placement.check_inside(n)
    rows, cols = placement.rows, placement.cols
    region = placement.region
    alpha, psi, h = op.alpha, op.psi, op.hartley

    s0 = np.array(host_outside, dtype=float)
    s0[region] = 0.0
    known_part = psi @ s0 @ psi
    d = data - known_part

    row_mask = np.ones(n, bool)
    row_mask[rows] = False
    col_mask = np.ones(n, bool)
    col_mask[cols] = False

    ul, mul, sl, vl = _side_factors(h[np.ix_(rows, rows)], psi[np.ix_(row_mask, rows)], alpha)
    ur, mur, sr, vr = _side_factors(h[np.ix_(cols, cols)], psi[np.ix_(cols, col_mask)].T, alpha)

    num = np.zeros((rows.size, cols.size))
    den = np.zeros_like(num)
    if col_mask.any():
        e1 = ul.T @ d[np.ix_(rows, col_mask)] @ vr
        w = np.outer(mul, sr)
        num += w * e1
        den += w * w
    if row_mask.any():
        e2 = vl.T @ d[np.ix_(row_mask, cols)] @ ur
        w = np.outer(sl, mur)
        num += w * e2
        den += w * w
    if row_mask.any() and col_mask.any():
        e3 = vl.T @ d[np.ix_(row_mask, col_mask)] @ vr
        w = np.outer(sl, sr)
        num += w * e3
        den += w * w

    scale = np.sqrt(den)
    usable = scale > RANK_RTOL * max(float(scale.max()), 1e-300)
    rank = int(usable.sum())
    if rank < usable.size:
        raise SolverError("payload system is rank deficient", rank, usable.size)
    q = num / den
    payload = ul @ q @ ur.T

    predicted = known_part + psi[:, rows] @ payload @ psi[cols, :]
    known = np.ones((n, n), bool)
    known[region] = False
    residual = float(np.linalg.norm((predicted - data)[known]))
    return payload, residual, rank


def extract_nonblind(
    watermarked,
    host,
    alpha: float | None = None,
    placement: Placement | None = None,
    reference_logo=None,
) -> ExtractionReport:
    """Recover the logo knowing the exact host image.

    ``watermarked`` is a :class:`WatermarkedImage` or a bare array; a bare
    array needs ``alpha`` and ``placement``.
    """
    data, op, placement = _unpack(watermarked, alpha, placement)
    if placement is None:
        raise InvalidArgument("placement is required to extract from a bare pixel array")
    host = np.asarray(host, dtype=float)
    if host.shape != data.shape:
        raise ShapeError(f"host shape {host.shape} differs from watermarked shape {data.shape}")
    if isinstance(watermarked, WatermarkedImage) and host_digest(host) != watermarked.host_digest:
        raise InvalidArgument("host does not match the digest recorded at embed time")

    payload, residual, rank = solve_region(op, data, host, placement)
    logo = logo_from_payload(payload, placement)
    return ExtractionReport(
        logo=logo,
        payload=payload,
        mode="non_blind",
        placement=placement,
        alpha=op.alpha,
        psnr_db=psnr(host, data),
        solver_residual=residual,
        rank=rank,
        ncorr=None if reference_logo is None else ncorr(reference_logo, logo),
    )


def extract_nonblind_bottom(watermarked, host, alpha=None, placement=None, reference_logo=None):
    report = extract_nonblind(watermarked, host, alpha, placement, reference_logo)
    if report.placement.kind != "bottom":
        raise InvalidArgument(f"expected a bottom placement, got {report.placement.kind}")
    return report


def extract_nonblind_topleft(watermarked, host, alpha=None, placement=None, reference_logo=None):
    report = extract_nonblind(watermarked, host, alpha, placement, reference_logo)
    if report.placement.kind not in ("top_left", "optimum"):
        raise InvalidArgument(f"expected a block placement, got {report.placement.kind}")
    return report


def build_null_projector(partition: PsiPartition) -> NullProjector:
    """Orthonormal basis L of the complement of range(psi12), so L^T psi12 == 0."""
    psi12 = partition.psi12
    top, r = psi12.shape
    if r == 0:
        return NullProjector(np.eye(top), top)
    if top - r <= 0:
        raise InvalidArgument(f"r={r} leaves no room for a null projector (need r < N/2)")
    s = np.linalg.svd(psi12, compute_uv=False)
    rank = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    if rank < r:
        raise RankError("psi12 must have full column rank", rank, r)
    q, _ = np.linalg.qr(psi12, mode="complete")
    return NullProjector(q[:, r:].copy(), top - r)


def spread_rows(order: int, r: int, count: int | None = None) -> np.ndarray:
    """Evenly spaced host row indices inside the transformed band [0, N-r).

    Evenly spread rows keep the quasi-blind system well conditioned; a
    contiguous band of rows does not.
    """
    count = r if count is None else count
    usable = order - r
    if not 1 <= count <= usable:
        raise InvalidArgument(f"cannot pick {count} rows out of {usable}")
    return np.linspace(0, usable - 1, count).round().astype(int)


def extract_quasiblind_bottom(
    watermarked,
    known_rows,
    alpha: float | None = None,
    *,
    logo_shape: tuple[int, int] | None = None,
    row_index=None,
    reference_logo=None,
    tamper_rtol: float = TAMPER_RTOL,
) -> ExtractionReport:
    """Recover both the hidden host rows and the logo of a bottom embedding.

    Parameters
    ----------
    watermarked : WatermarkedImage or ndarray
    known_rows : (k, N) array
        Host rows known to the receiver.  At least r of them must come from
        the transformed band [0, N-r); rows from the restored band [N-r, N)
        are only checked against the watermarked image.
    row_index : sequence of int, optional
        Host row of each entry of ``known_rows``; defaults to
        ``spread_rows(N, r, k)``.
    tamper_rtol : float
        Relative residual above which the known data is declared
        inconsistent with the watermarked image.

    Raises
    ------
    TamperSuspected
        The known rows disagree with the watermarked image.
    """
    placement = watermarked.placement if isinstance(watermarked, WatermarkedImage) else None
    data, op, placement = _unpack(watermarked, alpha, placement)
    n = op.order
    if placement is None:
        if logo_shape is None:
            raise InvalidArgument("logo_shape is required to extract from a bare pixel array")
        if logo_shape[0] * logo_shape[1] == 0:
            raise InvalidArgument("r = 0: nothing was embedded")
        r = logo_rows(tuple(logo_shape), n)
        placement = Placement("bottom", n - r, 0, r, n, tuple(logo_shape))
    if placement.kind != "bottom":
        raise InvalidArgument("quasi-blind extraction supports the bottom placement only")
    r = placement.height
    if r == 0:
        raise InvalidArgument("r = 0: nothing was embedded")

    known_rows = np.atleast_2d(np.asarray(known_rows, dtype=float))
    if known_rows.shape[1] != n:
        raise ShapeError(f"known rows must have width {n}, got {known_rows.shape}")
    if row_index is None:
        row_index = spread_rows(n, r, known_rows.shape[0])
    row_index = np.asarray(row_index, dtype=int)
    if row_index.shape != (known_rows.shape[0],):
        raise ShapeError("row_index must give one host row per known row")
    if np.any(row_index < 0) or np.any(row_index >= n) or np.unique(row_index).size != row_index.size:
        raise InvalidArgument("row_index must hold distinct host rows")

    known_scale = max(float(np.linalg.norm(known_rows)), 1e-300)
    threshold = tamper_rtol * known_scale
    restored = row_index >= n - r
    if restored.any():
        gap = float(np.linalg.norm(known_rows[restored] - data[row_index[restored]]))
        if gap > threshold:
            raise TamperSuspected("known rows disagree with the restored band of the watermarked image", gap, threshold)
    inner = ~restored
    if inner.sum() < r:
        raise SolverError(
            f"need at least r={r} known host rows from the band [0, {n - r}) to fix the "
            "free directions of each column"
        )

    part = PsiPartition.split(op.psi, r)
    proj = build_null_projector(part)
    top = n - r
    c = data[:top] @ op.inverse_matrix()

    pin = np.zeros((int(inner.sum()), top))
    pin[np.arange(pin.shape[0]), row_index[inner]] = 1.0
    g = np.vstack([proj.L.T @ part.psi11, pin])
    rhs = np.vstack([proj.L.T @ c, known_rows[inner]])
    s1, _, g_rank, _ = np.linalg.lstsq(g, rhs, rcond=None)
    if g_rank < top:
        raise SolverError("known rows do not determine the hidden host rows", g_rank, top)
    host_residual = float(np.linalg.norm(g @ s1 - rhs))
    if host_residual > threshold:
        raise TamperSuspected("known rows are inconsistent with the watermarked image", host_residual, threshold)

    rest = c - part.psi11 @ s1
    p1, _, _, _ = np.linalg.lstsq(part.psi12, rest, rcond=None)
    logo_residual = float(np.linalg.norm(part.psi12 @ p1 - rest))

    logo = logo_from_payload(p1, placement)
    host_estimate = np.vstack([s1, data[top:]])
    return ExtractionReport(
        logo=logo,
        payload=p1,
        mode="quasi_blind",
        placement=placement,
        alpha=op.alpha,
        psnr_db=psnr(host_estimate, data),
        solver_residual=float(np.hypot(host_residual, logo_residual)),
        rank=int(g_rank),
        ncorr=None if reference_logo is None else ncorr(reference_logo, logo),
        recovered_host_region=s1,
    )


def estimate_logo_size(watermarked, host) -> Placement:
    """Locate the restored region as the largest block where image == host.

    A full-width band touching the bottom edge is reported as a bottom
    placement with ``logo_shape == (r, N)``; any other rectangle as a block
    placement whose ``logo_shape`` is the block size (padding, if any,
    cannot be told apart from logo pixels).
    """
    data = watermarked.data if isinstance(watermarked, WatermarkedImage) else np.asarray(watermarked, dtype=float)
    host = np.asarray(host, dtype=float)
    if data.shape != host.shape:
        raise ShapeError(f"host shape {host.shape} differs from watermarked shape {data.shape}")
    top, left, height, width = kernels.largest_true_rectangle(data == host)
    if height * width < MIN_DETECTED_AREA:
        raise DetectionFailure("no region of the image matches the host exactly; the image may have been attacked")
    n = data.shape[0]
    if width == n and top + height == n:
        return Placement("bottom", top, 0, height, n, (height, n))
    kind = "top_left" if (top, left) == (0, 0) else "optimum"
    return Placement(kind, top, left, height, width, (height, width))
