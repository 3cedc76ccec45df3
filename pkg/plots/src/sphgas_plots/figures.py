"""Deterministic figures from sphgas run outputs.

Reads the documented series CSV and snapshot JSON files (docs/csv_schema.md
in the simulator repo) and writes fixed-size 150 dpi PNGs.  Rendering is
read-only with respect to inputs and reproducible byte-for-byte: fixed figure
geometry, sorted snapshot globs, no timestamps.
"""
from __future__ import annotations

import glob
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["FigureRequest", "SchemaError", "load_series", "render", "KNOWN_KINDS"]

KNOWN_KINDS = ("energy", "bounds", "radius", "profiles", "convergence")

SERIES_COLUMNS = (
    "t", "kinetic", "potential", "d_mu", "d_lambda", "cumulative_dissipation",
    "identity_residual", "radius", "max_jacobian_ratio", "max_v_over_r",
    "max_vx_over_rx", "gx_l2", "boundary_stress_residual",
)

_FIGSIZE = (7.0, 4.5)
_DPI = 150


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


def load_series(path) -> Dict[str, np.ndarray]:
    """Parse a series CSV into column arrays, validating the schema."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    missing = [c for c in SERIES_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    rows = [[float(tok) for tok in line.split(",")] for line in lines[1:]]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


@dataclass(frozen=True)
class FigureRequest:
    """What to render and where from."""

    series_path: str
    output_dir: str
    snapshot_glob: Optional[str] = None
    which: Sequence[str] = ("energy", "bounds", "radius", "profiles")
    rates_path: Optional[str] = None
    alpha_cfg: float = 2.0
    beta_cfg: float = 0.1

    def __post_init__(self):
        if not self.which:
            raise ValueError("which: at least one figure kind is required")
        unknown = [k for k in self.which if k not in KNOWN_KINDS]
        if unknown:
            raise ValueError(f"which: unknown figure kind(s) {unknown}")
        if not Path(self.series_path).exists():
            raise FileNotFoundError(f"series not found: {self.series_path}")


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig, path):
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return Path(path)


def _annotate_empty(ax):
    ax.text(0.5, 0.5, "no records", ha="center", va="center",
            transform=ax.transAxes)


def _fig_energy(series, out):
    fig, ax = _new_axes("Energy budget", "t", "energy")
    if series["t"].size:
        t = series["t"]
        kin, pot, cum = series["kinetic"], series["potential"], series["cumulative_dissipation"]
        e0 = kin[0] + pot[0]
        ax.plot(t, kin, label="kinetic")
        ax.plot(t, pot, label="potential")
        ax.plot(t, cum, label="cumulative dissipation")
        ax.plot(t, kin + pot + cum, label="sum")
        ax.axhline(e0, color="k", linestyle="--", linewidth=0.8,
                   label="initial energy")
        ax.legend(loc="center right", fontsize=8)
    else:
        _annotate_empty(ax)
    return _save(fig, out / "energy.png")


def _fig_bounds(series, req, out):
    fig, ax = _new_axes("A-priori bound quantities", "t", "max over cells")
    if series["t"].size:
        t = series["t"]
        ax.plot(t, series["max_jacobian_ratio"], label="x^2/(r^2 r_x)")
        ax.plot(t, series["max_v_over_r"], label="|v/r|")
        ax.plot(t, series["max_vx_over_rx"], label="|v_x/r_x|")
        ax.axhline(req.alpha_cfg**3, color="k", linestyle="--", linewidth=0.8,
                   label="alpha_cfg^3")
        ax.axhline(req.beta_cfg, color="gray", linestyle=":", linewidth=0.8,
                   label="beta_cfg")
        ax.legend(loc="center right", fontsize=8)
    else:
        _annotate_empty(ax)
    return _save(fig, out / "bounds.png")


def _fig_radius(series, out):
    fig, ax = _new_axes("Interface radius", "t", "R(t)")
    if series["t"].size:
        ax.plot(series["t"], series["radius"])
    else:
        _annotate_empty(ax)
    return _save(fig, out / "radius.png")


def _load_snapshots(pattern) -> List[dict]:
    docs = []
    for name in sorted(glob.glob(pattern)):
        doc = json.loads(Path(name).read_text())
        if "density" not in doc or "r" not in doc:
            raise SchemaError(f"{name}: missing column(s) density/r")
        docs.append(doc)
    return docs


def _fig_profiles(req, out):
    fig, ax = _new_axes("Density profiles", "radius r", "density")
    docs = _load_snapshots(req.snapshot_glob) if req.snapshot_glob else []
    if docs:
        # At most six profiles, evenly thinned, always first and last.
        idx = np.unique(np.linspace(0, len(docs) - 1, min(6, len(docs))).astype(int))
        for i in idx:
            doc = docs[i]
            r = np.asarray(doc["r"])
            centers = 0.5 * (r[:-1] + r[1:])
            ax.plot(centers, doc["density"], label=f"t={doc['t']:.4g}")
        ax.legend(fontsize=8)
    else:
        _annotate_empty(ax)
    return _save(fig, out / "profiles.png")


def _fig_convergence(req, out):
    fig, ax = _new_axes("Convergence study", "dx or dt", "L2 error of v")
    if req.rates_path and Path(req.rates_path).exists():
        lines = Path(req.rates_path).read_text().strip().splitlines()
        header = lines[0].split(",")
        need = {"kind", "n_cells", "dt", "err_l2_v"}
        if not need.issubset(header):
            raise SchemaError(f"{req.rates_path}: missing column(s) "
                              f"{', '.join(sorted(need - set(header)))}")
        ki, ni, di, ei = (header.index(c) for c in ("kind", "n_cells", "dt", "err_l2_v"))
        rows = [line.split(",") for line in lines[1:]]
        for kind, xsel in (("spatial", lambda r: 1.0 / float(r[ni])),
                           ("temporal", lambda r: float(r[di]))):
            pts = [(xsel(r), float(r[ei])) for r in rows if r[ki] == kind]
            if pts:
                xs, ys = zip(*sorted(pts))
                ax.loglog(xs, ys, marker="o", label=kind)
        ax.legend(fontsize=8)
    else:
        _annotate_empty(ax)
    return _save(fig, out / "convergence.png")


def render(req: FigureRequest) -> List[Path]:
    """Write one PNG per requested kind; returns the written paths."""
    series = load_series(req.series_path)
    out = Path(req.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for kind in req.which:
        if kind == "energy":
            written.append(_fig_energy(series, out))
        elif kind == "bounds":
            written.append(_fig_bounds(series, req, out))
        elif kind == "radius":
            written.append(_fig_radius(series, out))
        elif kind == "profiles":
            written.append(_fig_profiles(req, out))
        elif kind == "convergence":
            written.append(_fig_convergence(req, out))
    return written
