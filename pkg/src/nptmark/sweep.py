"""Embed / attack / extract sweeps producing degradation tables."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .attacks import AttackSpec
from .embed import canonical_placement, embed
from .errors import ConfigError, NptError
from .extract import extract_nonblind
from .metrics import psnr

CSV_HEADER = ("placement", "attack", "param", "seed", "ncorr", "psnr_db")
ERROR_MARKER = "error"


@dataclass(frozen=True)
class RobustnessRow:
    placement: str
    attack: AttackSpec | None
    ncorr_after: float
    psnr_watermarked_after: float
    error: str | None = None

    @property
    def attack_name(self) -> str:
        return "none" if self.attack is None else self.attack.kind

    def sort_key(self):
        if self.attack is None:
            return (self.placement, "", 0.0, 0)
        return (self.placement, self.attack.kind, self.attack.intensity, self.attack.seed)


def robustness_sweep(host, logo, alpha: float, placements, attacks, stride: int | None = None) -> list[RobustnessRow]:
    """One clean baseline row per placement plus one row per (placement, attack).

    Extraction is non-blind.  A failure in one row is recorded in that row's
    ``error`` field and the sweep carries on.
    """
    host = np.asarray(host, dtype=float)
    logo = np.asarray(logo, dtype=float)
    rows = []
    for placement in placements:
        placement = canonical_placement(placement)
        try:
            marked = embed(host, logo, alpha, placement, stride)
        except NptError as exc:
            rows.append(RobustnessRow(placement, None, np.nan, np.nan, str(exc)))
            continue
        for attack in [None, *attacks]:
            try:
                attacked = marked.data if attack is None else attack.apply(marked.data)
                report = extract_nonblind(attacked, host, alpha, marked.placement, reference_logo=logo)
                rows.append(RobustnessRow(placement, attack, report.ncorr, psnr(host, attacked)))
            except NptError as exc:
                rows.append(RobustnessRow(placement, attack, np.nan, np.nan, str(exc)))
    return sorted(rows, key=RobustnessRow.sort_key)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        attack = row.attack
        param = "0" if attack is None else _fmt(attack.intensity)
        seed = "0" if attack is None else str(attack.seed)
        if row.error is None:
            metrics = [_fmt(row.ncorr_after), _fmt(row.psnr_watermarked_after)]
        else:
            metrics = [ERROR_MARKER, ERROR_MARKER]
        writer.writerow([row.placement, row.attack_name, param, seed, *metrics])
    return buf.getvalue()


def load_sweep_config(text: str) -> tuple[list[str], list[AttackSpec], int | None]:
    """Parse a JSON sweep config.

    ::

        {"placements": ["bottom", "top_left"],
         "stride": 4,
         "attacks": [
             {"kind": "noise", "sigma": 0.01, "seed": 0, "trials": 30},
             {"kind": "crop", "rect": [0, 0, 16, 16], "fill": "mean"},
             {"kind": "compress", "quality": 90}]}

    ``trials`` repeats a noise attack with seeds ``seed, seed+1, ...``.
    """
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sweep config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("sweep config must be a JSON object")
    placements = cfg.get("placements", ["bottom"])
    if not isinstance(placements, list) or not placements:
        raise ConfigError("'placements' must be a non-empty list")
    try:
        placements = [canonical_placement(p) for p in placements]
    except NptError as exc:
        raise ConfigError(str(exc)) from None
    stride = cfg.get("stride")
    if stride is not None and (not isinstance(stride, int) or stride < 1):
        raise ConfigError(f"'stride' must be a positive integer, got {stride!r}")
    attacks = []
    for entry in cfg.get("attacks", []):
        if not isinstance(entry, dict):
            raise ConfigError(f"attack entries must be objects, got {entry!r}")
        entry = dict(entry)
        trials = int(entry.pop("trials", 1))
        seed = int(entry.pop("seed", 0))
        if "rect" in entry:
            entry["rect"] = tuple(int(v) for v in entry["rect"])
        try:
            for t in range(trials):
                attacks.append(AttackSpec(seed=seed + t, **entry))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad attack entry {entry}: {exc}") from None
    return placements, attacks, stride
