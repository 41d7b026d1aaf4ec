import json

import numpy as np
import pytest

from nptmark.attacks import AttackSpec
from nptmark.errors import ConfigError
from nptmark.sweep import CSV_HEADER, load_sweep_config, robustness_sweep, rows_to_csv


@pytest.fixture
def scene(rng):
    return rng.random((64, 64)), rng.random((16, 16))


class TestSweep:
    def test_baseline_only(self, scene):
        host, logo = scene
        rows = robustness_sweep(host, logo, 0.991, ["bottom", "topleft"], [])
        assert [r.placement for r in rows] == ["bottom", "top_left"]
        assert all(r.attack is None and r.ncorr_after == pytest.approx(1.0) for r in rows)

    def test_sorted_and_deterministic(self, scene):
        host, logo = scene
        attacks = [AttackSpec("noise", sigma=s, seed=k) for s in (0.05, 0.01) for k in (1, 0)]
        attacks.append(AttackSpec("compress", quality=50))
        rows = robustness_sweep(host, logo, 0.991, ["top_left", "bottom"], attacks)
        keys = [r.sort_key() for r in rows]
        assert keys == sorted(keys)
        again = robustness_sweep(host, logo, 0.991, ["top_left", "bottom"], attacks)
        assert rows_to_csv(rows) == rows_to_csv(again)

    def test_failed_rows_marked(self, scene):
        host, logo = scene
        # a 40x40 block breaks the N/2 size rule for block placements only
        rows = robustness_sweep(host, np.ones((40, 40)) * 0.3, 0.9, ["top_left"], [])
        assert rows[0].error is not None
        assert "error,error" in rows_to_csv(rows)
        rows = robustness_sweep(host, logo, 0.9, ["bottom", "top_left"], [AttackSpec("crop", rect=(60, 60, 10, 10))])
        crop = [r for r in rows if r.attack is not None]
        assert all(r.error is not None for r in crop)

    def test_noise_monotone(self, scene):
        host, logo = scene
        attacks = [AttackSpec("noise", sigma=s, seed=k) for s in (0.0, 0.01, 0.05) for k in range(30)]
        rows = robustness_sweep(host, logo, 0.991, ["bottom"], attacks)
        means = [np.mean([r.ncorr_after for r in rows if r.attack and r.attack.sigma == s]) for s in (0.0, 0.01, 0.05)]
        assert means[0] >= means[1] >= means[2]

    def test_crop_outside_region(self, rng):
        host, logo = rng.random((128, 128)), rng.random((32, 32))
        # 5% of 128x128 inside the restored top-left block
        rows = robustness_sweep(host, logo, 0.991, ["top_left"], [AttackSpec("crop", rect=(2, 2, 29, 28), fill="mean")])
        assert rows[-1].ncorr_after >= 0.9


class TestCsv:
    def test_format(self, scene):
        host, logo = scene
        rows = robustness_sweep(host, logo, 0.991, ["bottom"], [AttackSpec("noise", sigma=0.01, seed=3)])
        text = rows_to_csv(rows)
        lines = text.split("\n")
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[-1] == "" and "\r" not in text
        assert lines[1].startswith("bottom,none,0,0,1,")
        fields = lines[2].split(",")
        assert fields[:4] == ["bottom", "noise", "0.01", "3"]
        assert len(fields[4].replace(".", "").lstrip("0")) <= 6


class TestConfig:
    def test_trials_expand(self):
        cfg = {"placements": ["bottom", "top-left"], "stride": 2, "attacks": [{"kind": "noise", "sigma": 0.01, "seed": 5, "trials": 3}, {"kind": "crop", "rect": [0, 0, 2, 2], "fill": "mean"}]}
        placements, attacks, stride = load_sweep_config(json.dumps(cfg))
        assert placements == ["bottom", "top_left"]
        assert stride == 2
        assert [a.seed for a in attacks[:3]] == [5, 6, 7]
        assert attacks[3].rect == (0, 0, 2, 2)

    @pytest.mark.parametrize(
        "text",
        [
            "{not json",
            "[]",
            '{"placements": []}',
            '{"placements": ["middle"]}',
            '{"stride": 0}',
            '{"attacks": [{"kind": "blur"}]}',
            '{"attacks": [{"kind": "noise", "bogus": 1}]}',
            '{"attacks": [3]}',
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            load_sweep_config(text)
