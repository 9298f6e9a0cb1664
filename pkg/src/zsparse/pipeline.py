"""Pipeline commands tying solver -> sparseness -> bounds -> scaling together.

Each command reads/writes the package's canonical artifacts: ZSPARSE1
snapshots, schema-versioned CSV files, and JSON reports that embed the
constants block and the configuration hash for provenance.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bounds, scaling, solver, sparseness
from .config import ConfigError, RunConfig
from .fields import VectorField, curl, divergence_inf, fft_forward, l2_norm, max_norm
from .snapshots import Snapshot, SnapshotFormatError, read_snapshot, write_snapshot
from .solver import SCHEMA_LINE

logger = logging.getLogger(__name__)

SCALING_COLUMNS = ["t", "omega_inf", "d", "r", "set_id"]
CURVE_COLUMNS = ["set_id", "r", "max_fraction"]


def _fmt(v: float) -> str:
    return repr(float(v))


def constants_block(lam: float, delta: float) -> dict:
    """The frozen constants and the duality constants for (lam, delta)."""
    fc = bounds.frozen_constants()
    lc = bounds.lemma_constants(lam, delta)
    return {
        "h_star": fc.h_star,
        "M": fc.M,
        "lambda_cut": fc.lambda_cut,
        "lambda": lam,
        "delta": delta,
        "eta": lc.eta,
        "c_cutoff": lc.c_cutoff,
        "c_star": lc.c_star,
    }


def cmd_simulate(cfg: RunConfig, out_dir: Path | None = None) -> solver.RunResult:
    """Run the configured simulation, writing snapshots and trajectory.csv."""
    out = out_dir if out_dir is not None else cfg.output_dir()
    sc = cfg.solver_config()
    re_estimate = max_norm(solver.initial_state(sc).velocity()) * sc.grid.L / sc.nu
    logger.info("simulate: n=%d nu=%g t_end=%g Re~%.3g", sc.grid.n, sc.nu, sc.t_end, re_estimate)
    return solver.run(sc, out)


def _diagnose_one(
    snap: Snapshot,
    lam: float,
    delta: float,
    radii: np.ndarray,
    lc: bounds.LemmaConstants,
) -> sparseness.SparsenessReport:
    grid = snap.velocity.grid
    omega = curl(snap.velocity)
    omega_inf = max_norm(omega)
    if omega_inf == 0.0:
        return sparseness.SparsenessReport(
            t=snap.t,
            nu=snap.nu,
            n=grid.n,
            L=grid.L,
            omega_inf=0.0,
            h_minus1=0.0,
            lambda_cut=lam,
            delta=delta,
            diffusion_scale=None,
            guaranteed_scale=None,
            guaranteed_scale_energy=None,
            guaranteed_scale_flagged=False,
            headline_scale=None,
            sets=[],
            skipped=True,
        )

    h1 = bounds.h_minus1_norm(omega)
    u_l2 = l2_norm(snap.velocity)
    guaranteed = bounds.guaranteed_sparseness_scale(omega, lc, u0_l2=u_l2)
    sets = sparseness.superlevel_sets(omega, lam)

    set_reports: list[sparseness.SetReport] = []
    measured: list[float | None] = []
    for s in sets:
        scan = sparseness.sparseness_scale(s, delta, radii)
        rep = sparseness.SetReport(
            set_id=s.set_id,
            delta=delta,
            measured_scale=scan.scale,
            curve_radii=[float(v) for v in scan.radii],
            curve_max_fractions=[float(v) for v in scan.max_fractions],
        )
        if not guaranteed.flagged:
            ok, top = sparseness.is_semi_mixed(s, guaranteed.r_star, delta)
            rep.fraction_at_guaranteed = top
            rep.semi_mixed_at_guaranteed = ok
        set_reports.append(rep)
        measured.append(scan.scale)

    headline = None if any(m is None for m in measured) else max(measured)
    return sparseness.SparsenessReport(
        t=snap.t,
        nu=snap.nu,
        n=grid.n,
        L=grid.L,
        omega_inf=omega_inf,
        h_minus1=h1,
        lambda_cut=lam,
        delta=delta,
        diffusion_scale=float(scaling.diffusion_scale(omega_inf, snap.nu)),
        guaranteed_scale=guaranteed.r_star,
        guaranteed_scale_energy=guaranteed.r_star_energy,
        guaranteed_scale_flagged=guaranteed.flagged,
        headline_scale=headline,
        sets=set_reports,
    )


def cmd_diagnose(
    snapshot_paths, cfg: RunConfig, out_dir: Path | None = None
) -> list[sparseness.SparsenessReport]:
    """Sparseness diagnostics for each snapshot; writes report.json, per-snapshot
    fraction-curve CSVs, and scaling.csv."""
    out = out_dir if out_dir is not None else cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    paths = [Path(p) for p in snapshot_paths]
    if not paths:
        raise ConfigError("diagnose: no snapshots given")
    stride = int(cfg.get("diagnostics", "stride"))
    snaps = [read_snapshot(p) for p in sorted(paths)]
    snaps.sort(key=lambda s: s.t)
    snaps = snaps[::stride]
    grids = {s.velocity.grid for s in snaps}
    if len(grids) != 1:
        raise SnapshotFormatError(f"grid mismatch across snapshots: {sorted((g.n, g.L) for g in grids)}")
    grid = snaps[0].velocity.grid

    lam = cfg.cut_fraction()
    delta = float(cfg.get("diagnostics", "delta"))
    radii = cfg.radii(grid)
    lc = bounds.lemma_constants(lam, delta)
    workers = max(1, int(cfg.get("diagnostics", "workers")))

    if workers == 1:
        reports = [_diagnose_one(s, lam, delta, radii, lc) for s in snaps]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(lambda s: _diagnose_one(s, lam, delta, radii, lc), snaps))

    # deterministic outputs, assembled in time order
    for i, rep in enumerate(reports):
        curve_path = out / f"curves_{i:06d}.csv"
        with open(curve_path, "w", newline="") as fh:
            fh.write(SCHEMA_LINE + "\n")
            w = csv.writer(fh)
            w.writerow(CURVE_COLUMNS)
            for s in rep.sets:
                for r, frac in zip(s.curve_radii, s.curve_max_fractions):
                    w.writerow([s.set_id, _fmt(r), _fmt(frac)])

    with open(out / "scaling.csv", "w", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        w = csv.writer(fh)
        w.writerow(SCALING_COLUMNS)
        for rep in reports:
            if rep.skipped:
                continue
            for s in rep.sets:
                r = "" if s.measured_scale is None else _fmt(s.measured_scale)
                w.writerow([_fmt(rep.t), _fmt(rep.omega_inf), _fmt(rep.diffusion_scale), r, s.set_id])
            r = "" if rep.headline_scale is None else _fmt(rep.headline_scale)
            w.writerow([_fmt(rep.t), _fmt(rep.omega_inf), _fmt(rep.diffusion_scale), r, "max"])

    payload = {
        "schema": "zsparse report v1",
        "config_hash": cfg.config_hash,
        "constants": constants_block(lam, delta),
        "snapshots": [asdict(rep) for rep in reports],
    }
    with open(out / "report.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return reports


def read_scaling_csv(path: str | Path) -> list[dict]:
    """Rows of scaling.csv with typed fields; r is None when unmeasured."""
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in SCALING_COLUMNS:
            if col not in header:
                raise ConfigError(f"{path}: schema error: missing column '{col}'")
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
    return rows


def cmd_fit(scaling_csv: str | Path, cfg: RunConfig, out_dir: Path | None = None) -> dict:
    """Power-law fit of r against d over the growth window; writes fit.json."""
    out = out_dir if out_dir is not None else cfg.output_dir()
    out.mkdir(parents=True, exist_ok=True)
    set_id = str(cfg.get("diagnostics", "set_id"))
    rows = [row for row in read_scaling_csv(scaling_csv) if row["set_id"] == set_id]
    if not rows:
        raise ConfigError(f"no rows with set_id '{set_id}' in {scaling_csv}")

    # refuse cross-viscosity fits: nu is recoverable as d^2 * omega_inf
    nus = np.array([row["d"] ** 2 * row["omega_inf"] for row in rows])
    if nus.max() - nus.min() > 1e-6 * nus.max():
        raise ConfigError("cross-viscosity fit refused: d^2 * omega_inf varies across rows")

    t = np.array([row["t"] for row in rows])
    w = np.array([row["omega_inf"] for row in rows])
    t_lo, t_hi = scaling.growth_window(t, w)
    in_window = [row for row in rows if t_lo <= row["t"] <= t_hi]
    usable = [row for row in in_window if row["r"] is not None and row["r"] > 0]
    if len(usable) < 2:
        raise ConfigError(
            f"not enough usable rows in window [{t_lo:g}, {t_hi:g}]: "
            f"{len(usable)} of {len(in_window)}"
        )
    fit = scaling.fit_power_law([row["d"] for row in usable], [row["r"] for row in usable])
    alpha = scaling.alpha_from_slope(fit.slope)
    payload = {
        "schema": "zsparse fit v1",
        "config_hash": cfg.config_hash,
        "constants": constants_block(cfg.cut_fraction(), float(cfg.get("diagnostics", "delta"))),
        "set_id": set_id,
        "beta": fit.slope,
        "alpha": alpha,
        "intercept": fit.intercept,
        "residual_rms": fit.residual_rms,
        "n_used": fit.n_used,
        "n_excluded": len(in_window) - len(usable),
        "n_rows": len(rows),
        "window": {"t_lo": t_lo, "t_hi": t_hi, "mode": "growth"},
        "label": scaling.class_label(alpha),
        "z_label": scaling.z_label(alpha),
        "landmark_slopes": [scaling.slope_from_alpha(a) for a in scaling.ALPHA_LANDMARKS],
    }
    with open(out / "fit.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def read_sidecar_header(path: str | Path) -> dict:
    """Key-value sidecar declaring n, L, nu, t for a raw ingest payload."""
    path = Path(path)
    needed = {"n", "l", "nu", "t"}
    values: dict[str, float] = {}
    for line_no, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: expected 'key = value' at line {line_no}")
        key, _, raw = stripped.partition("=")
        key = key.strip().lower()
        if key not in needed:
            raise ConfigError(f"{path}: unknown key '{key.strip()}' at line {line_no}")
        try:
            values[key] = float(raw.strip())
        except ValueError:
            raise ConfigError(f"{path}: bad number for '{key}' at line {line_no}")
    missing = needed - values.keys()
    if missing:
        raise ConfigError(f"{path}: missing keys {sorted(missing)}")
    return values


def cmd_ingest(
    input_path: str | Path, header_path: str | Path | None, out_path: str | Path
) -> Path:
    """Convert raw little-endian f64 velocity triples to a canonical snapshot.

    The payload holds n^3 (u1, u2, u3) triples in C-order (i, j, k); the
    sidecar text header declares n, L, nu, t. Solenoidality is measured and
    reported, not enforced.
    """
    input_path = Path(input_path)
    header_path = Path(header_path) if header_path else input_path.with_suffix(input_path.suffix + ".hdr")
    header = read_sidecar_header(header_path)
    n = int(header["n"])
    raw = input_path.read_bytes()
    expected = 3 * n**3 * 8
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"{input_path}: payload size mismatch for n={n}: expected {expected} bytes, got {len(raw)}"
        )
    triples = np.frombuffer(raw, dtype="<f8").reshape(n, n, n, 3)
    data = np.moveaxis(triples, -1, 0)
    from .fields import Grid

    field = VectorField(Grid(n, header["l"]), data)
    div = divergence_inf(fft_forward(field))
    sup = max_norm(field)
    if sup > 0 and div > 1e-10 * sup:
        logger.warning(
            "ingest: input is not solenoidal: max |k.u_hat| / |u|_inf = %.3e", div / sup
        )
    return write_snapshot(out_path, field, header["nu"], header["t"])


def cmd_verify_constants(lam: float | None = None, delta: float = 0.75) -> dict:
    """The constants block as a machine-readable dict (CLI prints it as JSON)."""
    if lam is None:
        lam = bounds.frozen_constants().lambda_cut
    return constants_block(lam, delta)


def cmd_criterion_check(snapshot_path: str | Path, cfg: RunConfig) -> dict:
    """Run the pointwise 1D-sparseness criterion check on one snapshot."""
    snap = read_snapshot(snapshot_path)
    omega = curl(snap.velocity)
    report = sparseness.regularity_criterion_check(
        omega,
        c_m=float(cfg.get("diagnostics", "c_m")),
        lam=cfg.cut_fraction(),
        n_points=int(cfg.get("diagnostics", "n_points")),
        n_dir=int(cfg.get("diagnostics", "n_dir")),
        m_line=int(cfg.get("diagnostics", "m_line")),
    )
    return {
        "schema": "zsparse criterion v1",
        "config_hash": cfg.config_hash,
        "snapshot": str(snapshot_path),
        "t": snap.t,
        "fraction_passing": report.fraction_passing,
        "scale_budget": report.scale_budget,
        "lambda": report.lam,
        "delta1": report.delta1,
        "c_m": report.c_m,
        "points": [
            {
                "index": list(p.index),
                "set_id": p.set_id,
                "passed": p.passed,
                "witness_scale": p.witness_scale,
                "witness_direction": None
                if p.witness_direction is None
                else [float(v) for v in p.witness_direction],
                "best_fraction": p.best_fraction,
            }
            for p in report.points
        ],
    }
