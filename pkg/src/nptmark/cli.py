"""Command line interface.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical or
solver failure, 4 quasi-blind tamper check failed.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .attacks import AttackSpec
from .embed import Placement, canonical_placement, embed, host_digest, logo_rows
from .errors import InvalidArgument, NptError, TamperSuspected
from .extract import estimate_logo_size, extract_nonblind, extract_quasiblind_bottom, spread_rows
from .face import Gallery, evaluate_split, extract_features, match, preprocess
from .imageio import atomic_outputs, encode_gray, load_gray
from .metrics import psnr
from .sweep import load_sweep_config, robustness_sweep, rows_to_csv
from .transforms import validate_alpha

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_TAMPER = 4
IMAGE_SUFFIXES = (".pgm", ".png", ".npy")

META_KEYS = (
    "placement",
    "alpha",
    "host_order",
    "logo_rows",
    "logo_cols",
    "region_row",
    "region_col",
    "region_height",
    "region_width",
    "host_digest",
    "quasi_rows",
)


def _int_list(text: str, count: int | None = None, name: str = "value") -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise click.BadParameter(f"{name} must be comma-separated integers, got {text!r}") from None
    if count is not None and len(values) != count:
        raise click.BadParameter(f"{name} needs {count} integers, got {len(values)}")
    return values


def _alpha(ctx, param, value):
    if value is None:
        return None
    try:
        return validate_alpha(value)
    except InvalidArgument as exc:
        raise click.BadParameter(str(exc)) from None


def _placement_name(value: str) -> str:
    return canonical_placement(value)


def format_meta(marked, quasi_rows) -> str:
    p = marked.placement
    values = {
        "placement": p.kind,
        "alpha": repr(marked.alpha),
        "host_order": marked.data.shape[0],
        "logo_rows": p.logo_shape[0],
        "logo_cols": p.logo_shape[1],
        "region_row": p.row,
        "region_col": p.col,
        "region_height": p.height,
        "region_width": p.width,
        "host_digest": marked.host_digest,
        "quasi_rows": ",".join(str(int(i)) for i in quasi_rows),
    }
    return "".join(f"{k}={values[k]}\n" for k in META_KEYS)


def parse_meta(text: str) -> dict[str, str]:
    meta = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidArgument(f"meta line {lineno} is not key=value: {line!r}")
        meta[key.strip()] = value.strip()
    missing = [k for k in META_KEYS if k not in meta and k != "quasi_rows"]
    if missing:
        raise InvalidArgument(f"meta file lacks keys {missing}")
    return meta


def placement_from_meta(meta: dict[str, str]) -> Placement:
    return Placement(
        meta["placement"],
        int(meta["region_row"]),
        int(meta["region_col"]),
        int(meta["region_height"]),
        int(meta["region_width"]),
        (int(meta["logo_rows"]), int(meta["logo_cols"])),
    )


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidArgument(f"cannot read {path}: {exc}") from None


def _check_suffix(path: str, name: str) -> None:
    if Path(path).suffix.lower() not in IMAGE_SUFFIXES:
        raise click.BadParameter(f"{name} must end in one of {IMAGE_SUFFIXES}")


@click.group()
@click.version_option(__version__, prog_name="nptmark")
def main():
    """NPT/Hartley grayscale watermarking and Hartley-feature face recognition."""


@main.command("embed")
@click.option("--host", "host_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--logo", "logo_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", required=True, type=float, callback=_alpha)
@click.option("--placement", type=click.Choice(["bottom", "topleft", "top_left", "optimum"]), default="bottom", show_default=True)
@click.option("--stride", type=click.IntRange(min=1), default=None, help="Optimum search stride (default 1 for N<=128, else 4).")
@click.option("--out", "out_path", required=True, help="Watermarked image (.npy keeps it exact).")
@click.option("--meta", "meta_path", default=None, help="Sidecar with placement, alpha, logo size and host digest.")
@click.option("--known-rows-out", default=None, help="Write the host rows a quasi-blind receiver needs.")
def embed_cmd(host_path, logo_path, alpha, placement, stride, out_path, meta_path, known_rows_out):
    """Embed a logo into a host image."""
    _check_suffix(out_path, "--out")
    host = load_gray(host_path)
    logo = load_gray(logo_path)
    marked = embed(host, logo, alpha, _placement_name(placement), stride)
    p = marked.placement
    n = host.shape[0]
    # 2r rows: r pin the free directions, the other r make tampering visible
    quasi = spread_rows(n, p.height, min(2 * p.height, n - p.height)) if p.kind == "bottom" and 2 * p.height < n else []
    with atomic_outputs() as out:
        out.add(out_path, encode_gray(marked.data, Path(out_path).suffix))
        if meta_path:
            out.add(meta_path, format_meta(marked, quasi))
        if known_rows_out:
            if p.kind != "bottom":
                raise InvalidArgument("--known-rows-out applies to the bottom placement only")
            _check_suffix(known_rows_out, "--known-rows-out")
            out.add(known_rows_out, encode_gray(host[quasi], Path(known_rows_out).suffix))
    click.echo(f"placement={p.kind} region={p.row},{p.col},{p.height},{p.width} psnr_db={psnr(host, marked.data):.6f}")


def _resolve_placement(meta, placement, logo_shape, offset, n):
    if meta is not None:
        return placement_from_meta(meta)
    if placement is None or logo_shape is None:
        return None
    kind = _placement_name(placement)
    m, k = logo_shape
    if kind == "bottom":
        r = logo_rows((m, k), n)
        return Placement("bottom", n - r, 0, r, n, (m, k))
    side = max(m, k)
    row, col = (0, 0) if kind == "top_left" else (offset or (None, None))
    if row is None:
        raise click.BadParameter("--offset is required for the optimum placement without --meta")
    return Placement(kind, row, col, side, side, (m, k))


def format_report(report, reference_given: bool) -> str:
    p = report.placement
    lines = [
        f"mode={report.mode}",
        f"placement={p.kind}",
        f"alpha={report.alpha!r}",
        f"logo_rows={p.logo_shape[0]}",
        f"logo_cols={p.logo_shape[1]}",
        f"region={p.row},{p.col},{p.height},{p.width}",
        f"ncorr={report.ncorr:.6f}" if reference_given else "ncorr=nan",
        f"psnr_db={report.psnr_db:.6f}",
        f"solver_residual={report.solver_residual:.6e}",
        f"rank={report.rank}",
    ]
    return "\n".join(lines) + "\n"


@main.command("extract")
@click.option("--watermarked", "wm_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", required=True, type=float, callback=_alpha)
@click.option("--mode", required=True, type=click.Choice(["nonblind", "quasiblind"]))
@click.option("--host", "host_path", type=click.Path(exists=True, dir_okay=False), help="Original host (non-blind).")
@click.option("--known-rows", "rows_path", type=click.Path(exists=True, dir_okay=False), help="Known host rows (quasi-blind).")
@click.option("--known-row-index", default=None, help="Host row index of each known row, comma-separated.")
@click.option("--meta", "meta_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--placement", type=click.Choice(["bottom", "topleft", "top_left", "optimum"]), default=None)
@click.option("--logo-shape", default=None, help="Logo rows,cols when no --meta is given.")
@click.option("--offset", default=None, help="Block row,col for the optimum placement without --meta.")
@click.option("--detect", is_flag=True, help="Non-blind only: locate the restored region by exact comparison with the host.")
@click.option("--reference-logo", "ref_path", type=click.Path(exists=True, dir_okay=False), help="True logo, for the NCORR field.")
@click.option("--out-logo", required=True)
@click.option("--out-host", default=None, help="Recovered hidden host rows (quasi-blind).")
@click.option("--report", "report_path", default=None)
def extract_cmd(wm_path, alpha, mode, host_path, rows_path, known_row_index, meta_path, placement,
                logo_shape, offset, detect, ref_path, out_logo, out_host, report_path):
    """Extract a logo non-blind (host known) or quasi-blind (a few host rows known)."""
    _check_suffix(out_logo, "--out-logo")
    if out_host:
        _check_suffix(out_host, "--out-host")
    data = load_gray(wm_path)
    n = data.shape[0]
    meta = parse_meta(_read_text(meta_path)) if meta_path else None
    if meta is not None and float(meta["alpha"]) != alpha:
        raise InvalidArgument(f"--alpha {alpha} differs from the meta file's {meta['alpha']}")
    shape = _int_list(logo_shape, 2, "--logo-shape") if logo_shape else None
    off = _int_list(offset, 2, "--offset") if offset else None
    where = _resolve_placement(meta, placement, shape, off, n)
    reference = load_gray(ref_path) if ref_path else None

    if mode == "nonblind":
        if not host_path:
            raise click.UsageError("--mode nonblind requires --host")
        host = load_gray(host_path)
        if meta is not None:
            if host_digest(host) != meta["host_digest"]:
                raise InvalidArgument("host does not match the digest recorded at embed time")
        if where is None:
            if not detect:
                raise click.UsageError("give --meta, --placement with --logo-shape, or --detect")
            where = estimate_logo_size(data, host)
        report = extract_nonblind(data, host, alpha, where, reference_logo=reference)
    else:
        if not rows_path:
            raise click.UsageError("--mode quasiblind requires --known-rows")
        if where is None:
            raise click.UsageError("quasi-blind extraction needs --meta or --placement bottom --logo-shape m,n")
        known = load_gray(rows_path)
        if known_row_index:
            index = _int_list(known_row_index, name="--known-row-index")
        elif meta is not None and meta.get("quasi_rows"):
            index = _int_list(meta["quasi_rows"], name="quasi_rows")
        else:
            index = None
        report = extract_quasiblind_bottom(
            data, known, alpha, logo_shape=where.logo_shape, row_index=index, reference_logo=reference
        )

    with atomic_outputs() as out:
        out.add(out_logo, encode_gray(report.logo, Path(out_logo).suffix))
        if out_host:
            if report.recovered_host_region is None:
                raise click.UsageError("--out-host is only produced by quasi-blind extraction")
            out.add(out_host, encode_gray(report.recovered_host_region, Path(out_host).suffix))
        if report_path:
            out.add(report_path, format_report(report, reference is not None))
    click.echo(format_report(report, reference is not None), nl=False)


@main.command("attack")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", required=True, type=click.Choice(["noise", "crop", "compress"]))
@click.option("--sigma", type=click.FloatRange(min=0.0), default=0.0)
@click.option("--rect", default=None, help="row,col,height,width")
@click.option("--fill", type=click.Choice(["zero", "mean"]), default="zero")
@click.option("--quality", type=click.IntRange(1, 100), default=90)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True)
def attack_cmd(in_path, kind, sigma, rect, fill, quality, seed, out_path):
    """Apply a noise, crop or compression attack."""
    _check_suffix(out_path, "--out")
    if kind == "crop" and rect is None:
        raise click.UsageError("--kind crop requires --rect")
    spec = AttackSpec(
        kind,
        sigma=sigma,
        rect=_int_list(rect, 4, "--rect") if rect else (0, 0, 0, 0),
        fill=fill,
        quality=quality,
        seed=seed,
    )
    attacked = spec.apply(load_gray(in_path))
    with atomic_outputs() as out:
        out.add(out_path, encode_gray(attacked, Path(out_path).suffix))


@main.command("sweep")
@click.option("--host", "host_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--logo", "logo_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", required=True, type=float, callback=_alpha)
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-csv", required=True)
def sweep_cmd(host_path, logo_path, alpha, config_path, out_csv):
    """Run an embed/attack/extract robustness sweep and write a CSV table."""
    placements, attacks, stride = load_sweep_config(_read_text(config_path))
    rows = robustness_sweep(
        load_gray(host_path),
        load_gray(logo_path),
        alpha,
        [_placement_name(p) for p in placements],
        attacks,
        stride,
    )
    with atomic_outputs() as out:
        out.add(out_csv, rows_to_csv(rows))
    failed = sum(r.error is not None for r in rows)
    click.echo(f"rows={len(rows)} failed={failed}")


@main.group("recognize")
def recognize():
    """Hartley fractional-coefficient face recognition."""


def _dataset(directory):
    """(relative path, label) for every image under ``directory/<label>/``."""
    root = Path(directory)
    items = []
    for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(label_dir.iterdir()):
            if f.suffix.lower() in IMAGE_SUFFIXES:
                items.append((f"{label_dir.name}/{f.name}", label_dir.name))
    if not items:
        raise InvalidArgument(f"no images found under {root}/<label>/")
    return items


@recognize.command("enroll")
@click.option("--dir", "directory", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--corner-size", required=True, type=click.IntRange(1, 64))
@click.option("--gallery", "gallery_dir", required=True)
def enroll_cmd(directory, corner_size, gallery_dir):
    """Enroll every image in DIR/<label>/ into a gallery directory."""
    gallery = Gallery(corner_size)
    for rel, label in _dataset(directory):
        face = preprocess(load_gray(Path(directory) / rel))
        gallery.enroll(label, extract_features(face, corner_size))
    gallery.save(gallery_dir)
    click.echo(f"enrolled={len(gallery)} corner_size={corner_size}")


@recognize.command("match")
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gallery", "gallery_dir", required=True, type=click.Path(exists=True, file_okay=False))
def match_cmd(image_path, gallery_dir):
    """Print the nearest enrolled label and its distance."""
    gallery = Gallery.load(gallery_dir)
    feature = extract_features(preprocess(load_gray(image_path)), gallery.corner_size)
    label, distance = match(feature, gallery)
    click.echo(f"label={label}\ndistance={distance:.6f}")


@recognize.command("eval")
@click.option("--dir", "directory", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--split", "split_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Lines of '<label>/<file> train|test|both'.")
@click.option("--sizes", required=True, help="Corner sizes, comma-separated.")
@click.option("--transform", type=click.Choice(["hartley", "npt"]), default="hartley")
@click.option("--alpha", type=float, default=0.991, callback=_alpha)
@click.option("--out", "out_path", default=None)
def eval_cmd(directory, split_path, sizes, transform, alpha, out_path):
    """Rank-1 accuracy per corner size over a trainee/test split."""
    tags = {}
    for lineno, line in enumerate(_read_text(split_path).splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.rsplit(None, 1)
        if len(parts) != 2:
            raise InvalidArgument(f"split line {lineno} must be '<path> <train|test|both>'")
        tags[parts[0]] = parts[1]
    items = [(rel, label) for rel, label in _dataset(directory) if rel in tags]
    if not items:
        raise InvalidArgument("split file names none of the dataset images")
    images = [load_gray(Path(directory) / rel) for rel, _ in items]
    table = evaluate_split(
        images,
        [label for _, label in items],
        [tags[rel] for rel, _ in items],
        _int_list(sizes, name="--sizes"),
        transform=transform,
        alpha=alpha,
    )
    text = "".join(f"corner_size={s} accuracy={acc:.6f}\n" for s, acc in table.items())
    if out_path:
        with atomic_outputs() as out:
            out.add(out_path, text)
    click.echo(text, nl=False)


def cli_main(argv=None) -> int:
    """Run the CLI and return its exit code instead of exiting."""
    try:
        main.main(args=argv, prog_name="nptmark", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("nptmark: aborted", err=True)
        return 1
    except TamperSuspected as exc:
        click.echo(f"nptmark: tamper suspected: {exc}", err=True)
        return EXIT_TAMPER
    except InvalidArgument as exc:
        click.echo(f"nptmark: error: {exc}", err=True)
        return EXIT_USAGE
    except NptError as exc:
        click.echo(f"nptmark: numerical failure: {exc}", err=True)
        return EXIT_NUMERIC
    except OSError as exc:
        click.echo(f"nptmark: error: {exc}", err=True)
        return EXIT_USAGE
    except np.linalg.LinAlgError as exc:
        click.echo(f"nptmark: numerical failure: {exc}", err=True)
        return EXIT_NUMERIC
    return 0


def run():
    sys.exit(cli_main())
