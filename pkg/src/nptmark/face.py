"""Face recognition on fractional Hartley coefficients.

Faces are resized to 128x128, transformed with the 2-D DHT, and described by
the four s x s corner squares of the coefficient plane (top-left, top-right,
bottom-left, bottom-right, each flattened row-major).  A query takes the
label of the enrolled feature at the smallest Euclidean distance.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidArgument, ShapeError
from .imageio import atomic_outputs
from .transforms import dht_apply_2d, npt_forward, npt_operator

FACE_SIZE = 128
MANIFEST = "manifest.txt"


def _resize_matrix(n_in: int, n_out: int) -> np.ndarray:
    # pixel-centre convention: out pixel i samples input coordinate (i + 0.5) * n_in / n_out - 0.5
    x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    x = np.clip(x, 0.0, n_in - 1)
    lo = np.floor(x).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = x - lo
    w = np.zeros((n_out, n_in))
    np.add.at(w, (np.arange(n_out), lo), 1.0 - frac)
    np.add.at(w, (np.arange(n_out), hi), frac)
    return w


def resize_bilinear(image, shape: tuple[int, int]) -> np.ndarray:
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or image.size == 0:
        raise ShapeError(f"expected a non-empty 2-D image, got shape {image.shape}")
    if image.shape == tuple(shape):
        return image.copy()
    return _resize_matrix(image.shape[0], shape[0]) @ image @ _resize_matrix(image.shape[1], shape[1]).T


def preprocess(image, size: int = FACE_SIZE) -> np.ndarray:
    return np.clip(resize_bilinear(image, (size, size)), 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class FaceFeature:
    corner_size: int
    vector: np.ndarray


def corner_blocks(coeffs: np.ndarray, s: int) -> np.ndarray:
    return np.concatenate(
        [
            coeffs[:s, :s].ravel(),
            coeffs[:s, -s:].ravel(),
            coeffs[-s:, :s].ravel(),
            coeffs[-s:, -s:].ravel(),
        ]
    )


def extract_features(image, corner_size: int, transform: str = "hartley", alpha: float = 0.991) -> FaceFeature:
    """Fractional-coefficient feature of a preprocessed face.

    ``transform='npt'`` swaps the Hartley transform for psi(alpha) on both
    sides, for side-by-side comparisons.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ShapeError(f"face must be square, got {image.shape}")
    half = image.shape[0] // 2
    if not 1 <= corner_size <= half:
        raise InvalidArgument(f"corner size must lie in [1, {half}], got {corner_size}")
    if transform == "hartley":
        coeffs = dht_apply_2d(image)
    elif transform == "npt":
        coeffs = npt_forward(npt_operator(image.shape[0], alpha), image)
    else:
        raise InvalidArgument(f"unknown transform {transform!r}")
    return FaceFeature(int(corner_size), corner_blocks(coeffs, corner_size))


@dataclass
class Gallery:
    corner_size: int
    entries: list[tuple[str, FaceFeature]] = field(default_factory=list)

    def enroll(self, label: str, feature: FaceFeature) -> None:
        if feature.corner_size != self.corner_size:
            raise ShapeError(f"feature corner size {feature.corner_size} != gallery {self.corner_size}")
        if not label or any(c in label for c in "\t\n\r"):
            raise InvalidArgument(f"label {label!r} must be non-empty and free of tabs/newlines")
        self.entries.append((label, feature))

    def __len__(self):
        return len(self.entries)

    def matrix(self) -> np.ndarray:
        return np.stack([f.vector for _, f in self.entries])

    def save(self, directory) -> None:
        """Write ``manifest.txt`` plus one feature file per entry, all or nothing."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        lines = []
        with atomic_outputs() as out:
            for i, (label, feat) in enumerate(self.entries):
                name = f"{i:05d}.feat"
                out.add(directory / name, encode_feature(feat.vector))
                lines.append(f"{label}\t{name}\t{feat.corner_size}\t{feat.vector.size}\n")
            out.add(directory / MANIFEST, "".join(lines))

    @classmethod
    def load(cls, directory) -> "Gallery":
        directory = Path(directory)
        try:
            text = (directory / MANIFEST).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read gallery manifest: {exc}") from None
        gallery = None
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ConfigError(f"{MANIFEST}:{lineno}: expected 4 tab-separated fields")
            label, name, s, length = parts[0], parts[1], int(parts[2]), int(parts[3])
            vector = read_feature(directory / name)
            if vector.size != length or length != 4 * s * s:
                raise ConfigError(f"{MANIFEST}:{lineno}: feature length {vector.size} does not match s={s}")
            if gallery is None:
                gallery = cls(s)
            gallery.enroll(label, FaceFeature(s, vector))
        if gallery is None:
            raise ConfigError("gallery manifest is empty")
        return gallery


def encode_feature(vector) -> bytes:
    """Little-endian uint64 element count followed by float64 values."""
    vector = np.ascontiguousarray(vector, dtype="<f8")
    return struct.pack("<Q", vector.size) + vector.tobytes()


def write_feature(path, vector) -> None:
    with atomic_outputs() as out:
        out.add(path, encode_feature(vector))


def read_feature(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ConfigError(f"{path}: truncated feature file")
    (count,) = struct.unpack("<Q", raw[:8])
    if len(raw) != 8 + 8 * count:
        raise ConfigError(f"{path}: expected {count} values, file holds {(len(raw) - 8) / 8}")
    return np.frombuffer(raw[8:], dtype="<f8").astype(float)


def match(query: FaceFeature, gallery: Gallery) -> tuple[str, float]:
    """Nearest enrolled label; ties go to the earliest enrolment."""
    if not len(gallery):
        raise InvalidArgument("gallery is empty")
    if query.corner_size != gallery.corner_size:
        raise ShapeError(f"query corner size {query.corner_size} != gallery {gallery.corner_size}")
    dist = np.linalg.norm(gallery.matrix() - query.vector, axis=1)
    best = int(np.argmin(dist))
    return gallery.entries[best][0], float(dist[best])


def evaluate_split(
    images,
    labels,
    split,
    corner_sizes,
    transform: str = "hartley",
    alpha: float = 0.991,
) -> dict[int, float]:
    """Rank-1 accuracy per corner size.

    ``split[i]`` is ``'train'``, ``'test'`` or ``'both'`` for image i.
    Images are preprocessed and transformed once; only the corner crop
    changes between sizes.
    """
    if not (len(images) == len(labels) == len(split)):
        raise ConfigError("images, labels and split must have the same length")
    train = [i for i, s in enumerate(split) if s in ("train", "both")]
    test = [i for i, s in enumerate(split) if s in ("test", "both")]
    bad = set(split) - {"train", "test", "both"}
    if bad:
        raise ConfigError(f"unknown split tags {sorted(bad)}")
    if not test:
        raise ConfigError("split has no test images")
    orphans = {labels[i] for i in test} - {labels[i] for i in train}
    if orphans:
        raise ConfigError(f"test identities without trainee images: {sorted(orphans)}")

    faces = [preprocess(img) for img in images]
    if transform == "hartley":
        coeffs = [dht_apply_2d(f) for f in faces]
    else:
        op = npt_operator(FACE_SIZE, alpha)
        coeffs = [npt_forward(op, f) for f in faces]

    table = {}
    for s in corner_sizes:
        if not 1 <= s <= FACE_SIZE // 2:
            raise InvalidArgument(f"corner size must lie in [1, {FACE_SIZE // 2}], got {s}")
        gallery = Gallery(int(s))
        for i in train:
            gallery.enroll(labels[i], FaceFeature(int(s), corner_blocks(coeffs[i], s)))
        hits = sum(match(FaceFeature(int(s), corner_blocks(coeffs[i], s)), gallery)[0] == labels[i] for i in test)
        table[int(s)] = hits / len(test)
    return table
