"""Exit criteria, each run at its stated tolerance and time budget.

Every check records a line through the ``criterion`` fixture; the pytest
terminal summary prints one PASS/FAIL line per criterion.
"""

import json
import time

import numpy as np
import pytest

from nptmark.attacks import attack_compress, attack_crop, attack_noise
from nptmark.cli import cli_main
from nptmark.embed import embed
from nptmark.extract import (
    PsiPartition,
    build_null_projector,
    extract_nonblind,
    extract_quasiblind_bottom,
    spread_rows,
)
from nptmark.face import Gallery, evaluate_split, extract_features, match, preprocess
from nptmark.imageio import save_gray
from nptmark.metrics import ideal_psnr, psnr
from nptmark.transforms import (
    dht_apply_2d_naive,
    dht_matrix,
    npt_forward,
    npt_inverse_direct,
    npt_inverse_series,
    npt_operator,
)

from .oracles import dense_quasiblind, dense_region_lstsq
from .test_face import synthetic_faces

pytestmark = pytest.mark.acceptance

ALPHA = 0.991


@pytest.fixture(scope="module")
def logo32():
    """32x32 8-bit logo: the coins test image, downsampled."""
    from skimage import data, transform

    small = transform.resize(data.coins() / 255.0, (32, 32), anti_aliasing=True)
    return np.round(small * 255) / 255.0


def test_c1_hartley_involution(criterion):
    start = time.perf_counter()
    worst = max(np.abs(dht_matrix(n) @ dht_matrix(n) - np.eye(n)).max() for n in (2, 4, 8, 16, 64, 128, 256))
    elapsed = time.perf_counter() - start
    ok = criterion(1, "H.H = I", worst <= 1e-10 and elapsed < 5, f"max err {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_c2_npt_round_trip(criterion):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    for alpha in (0.8, 0.9, 0.991):
        op = npt_operator(128, alpha)
        for _ in range(5):
            s = rng.random((128, 128))
            back = npt_inverse_direct(op, npt_forward(op, s))
            worst = max(worst, np.linalg.norm(back - s) / np.linalg.norm(s))
    elapsed = time.perf_counter() - start
    ok = criterion(2, "round trip", worst <= 1e-8 and elapsed < 5, f"max rel err {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_c3_series_inverse(criterion, camera256):
    op = npt_operator(256, ALPHA)
    start = time.perf_counter()
    t = npt_forward(op, camera256)
    img, terms = npt_inverse_series(op, t, tol=1e-10, max_iter=200)
    err = np.abs(img - npt_inverse_direct(op, t)).max()
    elapsed = time.perf_counter() - start
    ok = criterion(3, "series", err <= 1e-10 and terms <= 10 and elapsed < 2, f"{terms} terms, max err {err:.2e}, {elapsed:.2f}s")
    assert ok


def test_c4_camera_experiment(criterion, camera256, logo32):
    start = time.perf_counter()
    w = embed(camera256, logo32, ALPHA, "bottom")
    rep = extract_nonblind(w, camera256, reference_logo=logo32)
    value = psnr(camera256, w.data)
    elapsed = time.perf_counter() - start
    ok = criterion(
        4,
        "camera 256, 32x32 logo, bottom",
        abs(rep.ncorr - 1.0) <= 1e-6 and 30 <= value <= 45 and w.placement.height == 4 and elapsed < 30,
        f"r={w.placement.height}, ncorr={rep.ncorr:.9f}, psnr={value:.2f} dB, {elapsed:.2f}s",
    )
    assert ok


def test_c5_ideal_psnr(criterion, camera256, logo32):
    predicted = ideal_psnr(ALPHA)
    measured = psnr(camera256, embed(camera256, logo32, ALPHA, "bottom").data)
    ok = criterion(
        5,
        "ideal psnr",
        abs(predicted - 40.84) <= 0.01 and abs(measured - predicted) <= 10,
        f"predicted {predicted:.3f} dB, measured {measured:.2f} dB",
    )
    assert ok


def test_c6_quasi_blind(criterion, camera256):
    rng = np.random.default_rng(6)
    cam64 = camera256.reshape(64, 4, 64, 4).mean(axis=(1, 3))
    hosts = [cam64] + [rng.random((64, 64)) for _ in range(4)]
    start = time.perf_counter()
    worst_ncorr, worst_psnr = 1.0, np.inf
    rows = spread_rows(64, 2)
    for host in hosts:
        logo = rng.random((16, 8))
        w = embed(host, logo, ALPHA, "bottom")
        rep = extract_quasiblind_bottom(w, host[rows], row_index=rows, reference_logo=logo)
        worst_ncorr = min(worst_ncorr, rep.ncorr)
        worst_psnr = min(worst_psnr, psnr(host[:62], rep.recovered_host_region))
    part = PsiPartition.split(npt_operator(64, ALPHA).psi, 2)
    proj = build_null_projector(part)
    annihilation = np.abs(proj.L.T @ part.psi12).max()
    rank = np.linalg.matrix_rank(proj.L)
    elapsed = time.perf_counter() - start
    ok = criterion(
        6,
        "quasi-blind 64x64, 16x8",
        worst_ncorr >= 0.99 and worst_psnr >= 35 and annihilation <= 1e-9 and rank == 60 and elapsed < 10,
        f"min ncorr {worst_ncorr:.6f}, min host psnr {worst_psnr:.1f} dB, |L'psi12| {annihilation:.1e}, "
        f"rank {rank}, {elapsed:.2f}s",
    )
    assert ok


def test_c7_dense_oracle(criterion):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    worst_nb = worst_qb = 0.0
    instances = 0
    for i in range(24):
        n = [8, 16, 32][i % 3]
        alpha = rng.choice([0.8, 0.9, 0.991])
        placement = ["bottom", "top_left", "optimum"][i % 3 if n < 32 else (i // 3) % 3]
        host = rng.random((n, n))
        logo = rng.random((n // 4, n // 2) if placement == "bottom" else (n // 4, n // 4))
        w = embed(host, logo, alpha, placement, stride=1)
        p = w.placement
        data = w.data + 1e-4 * rng.standard_normal(w.data.shape)
        rep = extract_nonblind(data, host, alpha, p)
        oracle = dense_region_lstsq(data, host, alpha, p.row, p.col, p.height, p.width)
        worst_nb = max(worst_nb, np.abs(rep.payload - oracle).max())
        if placement == "bottom" and n <= 16:
            r = p.height
            rows = spread_rows(n, r, r + 1)
            q = extract_quasiblind_bottom(w, host[rows], row_index=rows)
            s1, p1 = dense_quasiblind(w.data, alpha, r, host[rows], rows)
            worst_qb = max(worst_qb, np.abs(q.payload - p1).max(), np.abs(q.recovered_host_region - s1).max())
        instances += 1
    elapsed = time.perf_counter() - start
    ok = criterion(
        7,
        "dense oracle",
        instances >= 20 and worst_nb <= 1e-8 and worst_qb <= 1e-8 and elapsed < 60,
        f"{instances} instances, non-blind {worst_nb:.1e}, quasi-blind {worst_qb:.1e}, {elapsed:.2f}s",
    )
    assert ok


class TestC8Robustness:
    def test_noise_monotone(self, criterion, camera256, logo32):
        w = embed(camera256, logo32, ALPHA, "bottom")
        sigmas = (0.0, 0.01, 0.05)
        start = time.perf_counter()
        table = np.array(
            [
                [extract_nonblind(attack_noise(w.data, s, seed), camera256, ALPHA, w.placement, reference_logo=logo32).ncorr for s in sigmas]
                for seed in range(30)
            ]
        )
        means = table.mean(axis=0)
        violations = int(np.sum(np.any(np.diff(table, axis=1) > 0, axis=1)))
        elapsed = time.perf_counter() - start
        ok = criterion(
            8,
            "noise",
            means[0] >= means[1] >= means[2] and violations <= 2,
            f"mean ncorr {means[0]:.3f}/{means[1]:.3f}/{means[2]:.3f}, {violations} violations of 30, {elapsed:.1f}s",
        )
        assert ok

    def test_crop_outside_region(self, criterion, camera256):
        from skimage import data, transform

        logo = np.round(transform.resize(data.coins() / 255.0, (64, 64), anti_aliasing=True) * 255) / 255
        w = embed(camera256, logo, ALPHA, "top_left")
        # 58x58 = 5.1% of the image, inside the restored 64x64 block
        attacked = attack_crop(w.data, (3, 3, 58, 58), "zero")
        value = extract_nonblind(attacked, camera256, ALPHA, w.placement, reference_logo=logo).ncorr
        ok = criterion(8, "5% crop", value >= 0.9, f"ncorr {value:.6f}")
        assert ok

    def test_compress_q90(self, criterion, camera256, logo32):
        values = {}
        for placement in ("bottom", "top_left"):
            w = embed(camera256, logo32, ALPHA, placement)
            attacked = attack_compress(w.data, 90)
            values[placement] = extract_nonblind(attacked, camera256, ALPHA, w.placement, reference_logo=logo32).ncorr
        ok = criterion(
            8,
            "compress q90",
            values["bottom"] >= 0.95,
            f"ncorr bottom {values['bottom']:.4f}, top-left {values['top_left']:.4f} (need >= 0.95)",
        )
        assert ok


def test_c9_face_recognizer(criterion):
    rng = np.random.default_rng(9)
    start = time.perf_counter()
    images, labels = synthetic_faces(rng, 10, 3, 0.1)
    faces = [preprocess(img) for img in images]
    gallery = Gallery(8)
    feats = [extract_features(f, 8) for f in faces]
    for lab, f in zip(labels, feats):
        gallery.enroll(lab, f)
    self_dist = max(match(f, gallery)[1] for f in feats)
    table = evaluate_split(images, labels, ["both"] * len(images), [4, 8, 16])
    elapsed = time.perf_counter() - start
    counts = {n: dht_apply_2d_naive(rng.random((n, n)))[1] for n in (4, 8, 16)}
    ops_ok = all(c.multiplications == 2 * n**3 and c.additions == 2 * n * n * (n - 1) for n, c in counts.items())
    ok = criterion(
        9,
        "face recognizer",
        self_dist == 0.0 and all(v == 1.0 for v in table.values()) and ops_ok and elapsed < 30,
        f"self distance {self_dist}, accuracy {table}, op counts exact: {ops_ok}, {elapsed:.2f}s",
    )
    assert ok


def test_c10_cli_determinism(criterion, tmp_path, camera256, logo32):
    rng = np.random.default_rng(10)
    save_gray(camera256, tmp_path / "host.pgm")
    save_gray(logo32, tmp_path / "logo.pgm")
    faces = tmp_path / "faces"
    images, labels = synthetic_faces(rng, 3, 2, 0.05)
    split = []
    for k, (img, lab) in enumerate(zip(images, labels)):
        (faces / lab).mkdir(parents=True, exist_ok=True)
        save_gray(img, faces / lab / f"{k}.pgm")
        split.append(f"{lab}/{k}.pgm {'train' if k % 2 == 0 else 'test'}")
    (tmp_path / "split.txt").write_text("\n".join(split) + "\n")
    (tmp_path / "cfg.json").write_text(
        json.dumps({"placements": ["bottom", "top_left"], "attacks": [
            {"kind": "noise", "sigma": 0.01, "trials": 3},
            {"kind": "crop", "rect": [0, 0, 20, 20], "fill": "mean"},
            {"kind": "compress", "quality": 75}]})
    )

    def commands(out):
        h, lg = tmp_path / "host.pgm", tmp_path / "logo.pgm"
        return [
            ["embed", "--host", h, "--logo", lg, "--alpha", "0.991", "--placement", "bottom", "--out", out / "wm.npy",
             "--meta", out / "wm.meta", "--known-rows-out", out / "rows.npy"],
            ["embed", "--host", h, "--logo", lg, "--alpha", "0.991", "--placement", "optimum", "--out", out / "opt.pgm"],
            ["extract", "--watermarked", out / "wm.npy", "--alpha", "0.991", "--mode", "nonblind", "--host", h,
             "--meta", out / "wm.meta", "--out-logo", out / "nb.pgm", "--report", out / "nb.txt", "--reference-logo", lg],
            ["extract", "--watermarked", out / "wm.npy", "--alpha", "0.991", "--mode", "quasiblind", "--known-rows",
             out / "rows.npy", "--meta", out / "wm.meta", "--out-logo", out / "qb.npy", "--out-host", out / "qh.npy",
             "--report", out / "qb.txt"],
            ["attack", "--in", out / "wm.npy", "--kind", "noise", "--sigma", "0.02", "--seed", "5", "--out", out / "n.npy"],
            ["attack", "--in", out / "wm.npy", "--kind", "crop", "--rect", "0,0,30,40", "--fill", "mean", "--out", out / "c.pgm"],
            ["attack", "--in", out / "wm.npy", "--kind", "compress", "--quality", "70", "--out", out / "j.npy"],
            ["sweep", "--host", h, "--logo", lg, "--alpha", "0.991", "--config", tmp_path / "cfg.json", "--out-csv", out / "s.csv"],
            ["recognize", "enroll", "--dir", faces, "--corner-size", "8", "--gallery", out / "gallery"],
            ["recognize", "eval", "--dir", faces, "--split", tmp_path / "split.txt", "--sizes", "4,8", "--out", out / "acc.txt"],
        ]

    runs = []
    codes = []
    for name in ("run1", "run2"):
        out = tmp_path / name
        out.mkdir()
        codes += [cli_main([str(a) for a in cmd]) for cmd in commands(out)]
        runs.append({p.relative_to(out).as_posix(): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    same = runs[0] == runs[1]
    ok = criterion(
        10,
        "cli determinism",
        same and not any(codes) and len(runs[0]) >= 14,
        f"{len(runs[0])} output files, byte-identical: {same}, exit codes {sorted(set(codes))}",
    )
    assert ok
