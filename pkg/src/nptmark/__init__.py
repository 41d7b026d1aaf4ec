"""Grayscale watermarking with the Non-Separable Parameterized Transform (NPT).

The transform is psi = alpha*I + (1 - alpha)*H with H the orthonormal
discrete Hartley matrix.  A logo replaces part of the host, the image is
transformed on both sides, and the replaced region is restored so the
watermark is invisible in the pixel domain yet recoverable by least squares.
"""

__version__ = "0.1.0"

from .attacks import AttackSpec, attack_compress, attack_crop, attack_noise
from .embed import (
    PLACEMENTS,
    Placement,
    WatermarkedImage,
    canonical_placement,
    embed,
    embed_bottom,
    embed_optimum,
    embed_topleft,
    find_optimum_block,
)
from .errors import (
    ConvergenceError,
    DegenerateExtraction,
    DetectionFailure,
    InvalidArgument,
    NptError,
    SolverError,
    TamperSuspected,
)
from .extract import (
    ExtractionReport,
    estimate_logo_size,
    extract_nonblind,
    extract_nonblind_bottom,
    extract_nonblind_topleft,
    extract_quasiblind_bottom,
    spread_rows,
)
from .face import FaceFeature, Gallery, evaluate_split, extract_features, match, preprocess
from .imageio import load_gray, save_gray
from .metrics import ideal_psnr, ncorr, psnr
from .sweep import RobustnessRow, robustness_sweep
from .transforms import (
    NptOperator,
    dht_apply_2d,
    dht_matrix,
    npt_forward,
    npt_inverse_direct,
    npt_inverse_series,
    npt_operator,
)
