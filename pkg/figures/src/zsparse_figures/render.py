"""Render publication-style figures from zsparse pipeline artifacts.

This package never computes science: every number it draws (points, the
fitted line, the slope annotation, the sparseness-ratio threshold) is read
from the primary pipeline's outputs. If the inputs disagree with each other
the renderer refuses to plot rather than re-deriving anything.

Renderer settings are pinned (Agg backend, fixed figure geometry, no
variable metadata) so a fixed input renders to byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

#: Reference slopes overlaid on the scaling figure, labelled by the class
#: exponent alpha = slope/2 they correspond to at fixed viscosity.
LANDMARK_SLOPES = {
    "Z_1/3": 2.0 / 3.0,
    "Z_2/5": 4.0 / 5.0,
    "Z_1/2": 1.0,
    "Z_3/5": 6.0 / 5.0,
}

_SCALING_COLUMNS = ["t", "omega_inf", "d", "r", "set_id"]

_SAVEFIG = dict(dpi=100, facecolor="white", metadata={"Software": None})


class RenderInputError(Exception):
    """Missing, malformed, or mutually inconsistent inputs."""


@dataclass
class FigureSpec:
    scaling_csv: Path
    fit_json: Path
    out_path: Path
    landmarks: dict = field(default_factory=lambda: dict(LANDMARK_SLOPES))
    x_label: str = "diffusion scale d"
    y_label: str = "sparseness scale r"


def read_scaling_rows(path: Path) -> list[dict]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise RenderInputError(f"cannot read {path}: {exc}") from exc
    with fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in _SCALING_COLUMNS:
            if col not in header:
                raise RenderInputError(f"{path}: schema mismatch: missing column '{col}'")
        rows = []
        for rec in reader:
            rows.append(
                {
                    "t": float(rec["t"]),
                    "omega_inf": float(rec["omega_inf"]),
                    "d": float(rec["d"]),
                    "r": float(rec["r"]) if rec["r"] not in ("", None) else None,
                    "set_id": rec["set_id"],
                }
            )
    if not rows:
        raise RenderInputError(f"{path}: no data rows")
    return rows


def read_fit(path: Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise RenderInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RenderInputError(f"{path}: not valid JSON: {exc}") from exc
    needed = {"beta", "alpha", "intercept", "set_id", "n_used", "n_excluded", "n_rows", "window"}
    missing = needed - payload.keys()
    if missing:
        raise RenderInputError(f"{path}: schema mismatch: missing keys {sorted(missing)}")
    return payload


def _check_consistency(rows: list[dict], fit: dict, csv_path: Path) -> list[dict]:
    """Cross-check the fit's declared row counts against the CSV."""
    subset = [row for row in rows if row["set_id"] == fit["set_id"]]
    if len(subset) != fit["n_rows"]:
        raise RenderInputError(
            f"{csv_path}: {len(subset)} rows with set_id '{fit['set_id']}' "
            f"but the fit declares {fit['n_rows']}"
        )
    window = fit["window"]
    in_window = [row for row in subset if window["t_lo"] <= row["t"] <= window["t_hi"]]
    usable = [row for row in in_window if row["r"] is not None and row["r"] > 0]
    if len(usable) != fit["n_used"] or len(in_window) - len(usable) != fit["n_excluded"]:
        raise RenderInputError(
            f"{csv_path}: window holds {len(usable)} usable rows "
            f"(+{len(in_window) - len(usable)} excluded) but the fit declares "
            f"{fit['n_used']} (+{fit['n_excluded']})"
        )
    return subset


def build_scaling_figure(spec: FigureSpec):
    """Log-log scatter of (d, r), the fitted line, and landmark slope guides."""
    rows = read_scaling_rows(spec.scaling_csv)
    fit = read_fit(spec.fit_json)
    subset = _check_consistency(rows, fit, spec.scaling_csv)
    points = [(row["d"], row["r"]) for row in subset if row["r"] is not None and row["r"] > 0]
    if not points:
        raise RenderInputError(f"{spec.scaling_csv}: no usable (d, r) points to plot")
    d = np.array([p[0] for p in points])
    r = np.array([p[1] for p in points])

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.scatter(d, r, s=22, color="#1f4e79", zorder=3, label="measured")

    window = fit["window"]
    in_window = np.array([window["t_lo"] <= row["t"] <= window["t_hi"] for row in subset
                          if row["r"] is not None and row["r"] > 0])
    if in_window.any():
        ax.scatter(d[in_window], r[in_window], s=40, facecolors="none",
                   edgecolors="#c23b22", zorder=4, label="fit window")

    span = np.array([d.min() * 0.85, d.max() * 1.15])
    fitted = np.exp(fit["intercept"]) * span ** fit["beta"]
    ax.plot(span, fitted, color="#c23b22", lw=1.8, zorder=5,
            label=f"fitted slope {fit['beta']:.3f}")

    # dashed guides with the landmark slopes, anchored at the data centroid
    cx = math.exp(float(np.mean(np.log(d))))
    cy = math.exp(float(np.mean(np.log(r))))
    for name, slope in sorted(spec.landmarks.items(), key=lambda kv: kv[1]):
        guide = cy * (span / cx) ** slope
        ax.plot(span, guide, ls="--", lw=0.9, color="gray", zorder=2)
        ax.annotate(name, (span[-1], guide[-1]), fontsize=8, color="gray",
                    xytext=(2, 0), textcoords="offset points")

    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    ax.set_title(f"scale of 3D sparseness vs diffusion scale (set {fit['set_id']})")
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    return fig


def render_scaling_figure(spec: FigureSpec) -> Path:
    fig = build_scaling_figure(spec)
    try:
        fig.savefig(spec.out_path, **_SAVEFIG)
    finally:
        plt.close(fig)
    return spec.out_path


def build_fraction_curves_figure(report_path: Path, snapshot_index: int = 0):
    """Per-set max ball fraction vs radius for one snapshot, with the
    sparseness-ratio threshold as a horizontal line."""
    try:
        payload = json.loads(Path(report_path).read_text())
    except OSError as exc:
        raise RenderInputError(f"cannot read {report_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RenderInputError(f"{report_path}: not valid JSON: {exc}") from exc
    snapshots = payload.get("snapshots", [])
    if not snapshots:
        raise RenderInputError(f"{report_path}: report holds no snapshots")
    if not 0 <= snapshot_index < len(snapshots):
        raise RenderInputError(
            f"{report_path}: snapshot index {snapshot_index} out of range [0, {len(snapshots)})"
        )
    snap = snapshots[snapshot_index]
    sets = snap.get("sets", [])
    if not sets:
        raise RenderInputError(f"{report_path}: snapshot {snapshot_index} has no level-set curves")

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.set_xscale("log")
    for entry in sets:
        ax.plot(entry["curve_radii"], entry["curve_max_fractions"], lw=1.4,
                label=entry["set_id"])
    delta = snap["delta"]
    ax.axhline(delta, color="black", ls="--", lw=1.0)
    ax.annotate(f"ratio {delta:g}", (ax.get_xlim()[0], delta), fontsize=8,
                xytext=(4, 4), textcoords="offset points")
    ax.set_xlabel("ball radius r")
    ax.set_ylabel("max ball fraction")
    ax.set_ylim(-0.02, 1.05)
    ax.set_title(f"semi-mixedness curves at t = {snap['t']:g}")
    ax.legend(loc="best", fontsize=9, ncol=2)
    fig.tight_layout()
    return fig


def render_fraction_curves(report_path: Path, out_path: Path, snapshot_index: int = 0) -> Path:
    fig = build_fraction_curves_figure(report_path, snapshot_index)
    try:
        fig.savefig(out_path, **_SAVEFIG)
    finally:
        plt.close(fig)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render zsparse pipeline artifacts to figures."
    )
    parser.add_argument("--scaling", metavar="CSV", help="scaling.csv from the diagnose step")
    parser.add_argument("--fit", metavar="JSON", help="fit.json from the fit step")
    parser.add_argument("--report", metavar="JSON", help="report.json from the diagnose step")
    parser.add_argument("--index", type=int, default=0, help="snapshot index within the report")
    parser.add_argument("--out", metavar="PATH", required=True, help="output image path")
    args = parser.parse_args(argv)

    try:
        if args.report is not None:
            if args.scaling or args.fit:
                parser.error("--report cannot be combined with --scaling/--fit")
            out = render_fraction_curves(Path(args.report), Path(args.out), args.index)
        elif args.scaling is not None and args.fit is not None:
            spec = FigureSpec(
                scaling_csv=Path(args.scaling), fit_json=Path(args.fit), out_path=Path(args.out)
            )
            out = render_scaling_figure(spec)
        else:
            parser.error("provide either --scaling with --fit, or --report")
            return 2
    except RenderInputError as exc:
        print(f"render: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
