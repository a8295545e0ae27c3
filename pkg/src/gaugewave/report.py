"""Figure rendering for run records.

Takes the delimited output of a run (the versioned CSV) and renders a small
set of diagnostic figures next to it: energy drift, constraint residual,
field norms, and growth-bound slacks.  File names are fixed so downstream
tooling can link to them; an all-nan column (the neutral field of the 3D
system) is simply left off its figure.
"""
from __future__ import annotations

import io
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .evolve import COLUMNS

_NORM_COLUMNS = ("l2_A", "l2_phi", "l2_N", "h1dot_A", "h1dot_phi")
_SLACK_COLUMNS = ("bound37_slack", "bound39_slack", "bound52_slack")


def load_record_csv(path: str) -> dict:
    """Read a run CSV back into named columns; validates the schema line."""
    with open(path) as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != "# schema=1":
        raise ValueError(f"{path}: missing schema line (not a run CSV?)")
    if len(lines) < 2 or lines[1].split(",") != list(COLUMNS):
        raise ValueError(f"{path}: header does not match the run schema")
    data = np.genfromtxt(io.StringIO(text), delimiter=",", names=True,
                         skip_header=1)
    data = np.atleast_1d(data)
    return {name: np.asarray(data[name], dtype=float) for name in COLUMNS}


def _new_axes(title: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.0, 3.6), constrained_layout=True)
    ax.set_title(title)
    ax.set_xlabel("t")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, outdir: str, name: str, paths: list) -> None:
    path = os.path.join(outdir, name)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)


def render_record_figures(csv_path: str, outdir=None) -> list:
    """Render the diagnostic figures for one run CSV; returns written paths."""
    cols = load_record_csv(csv_path)
    if outdir is None:
        outdir = os.path.dirname(os.path.abspath(csv_path))
    os.makedirs(outdir, exist_ok=True)
    t = cols["t"]
    paths = []

    fig, ax = _new_axes("Total energy", "E")
    ax.plot(t, cols["E"], marker=".", lw=1.0)
    _save(fig, outdir, "energy.png", paths)

    fig, ax = _new_axes("Relative energy drift", "|E - E0| / E0")
    drift = np.abs(cols["E"] - cols["E"][0]) / np.abs(cols["E"][0])
    ax.semilogy(t, np.maximum(drift, 1e-18), marker=".", lw=1.0)
    _save(fig, outdir, "energy_drift.png", paths)

    fig, ax = _new_axes("Constraint residual", "L2 residual")
    ax.semilogy(t, np.maximum(cols["gauss_l2"], 1e-18), marker=".", lw=1.0)
    _save(fig, outdir, "constraint.png", paths)

    fig, ax = _new_axes("Field norms", "norm")
    for name in _NORM_COLUMNS:
        if np.isfinite(cols[name]).all():
            ax.plot(t, cols[name], marker=".", lw=1.0, label=name)
    ax.legend(fontsize=8)
    _save(fig, outdir, "norms.png", paths)

    fig, ax = _new_axes("Growth-bound slack", "bound - norm")
    for name in _SLACK_COLUMNS:
        if np.isfinite(cols[name]).all():
            ax.plot(t, cols[name], marker=".", lw=1.0, label=name)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.legend(fontsize=8)
    _save(fig, outdir, "slacks.png", paths)
    return paths
