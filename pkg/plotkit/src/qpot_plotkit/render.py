"""The four figure kinds rendered from a result directory.

Each render writes the image plus a sidecar JSON recording the data files
and value ranges used; rendering never writes into the result directory.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .reader import ResultDir, ResultFormatError

log = logging.getLogger("qpot_plotkit")

FIGURE_KINDS = ("spacetime_density", "potential_surface", "trajectories", "stripes_overlay")


@dataclass
class PlotJob:
    result_dir: str | Path
    figure: str
    out_path: str | Path
    colormap: str = "Blues"
    dpi: int = 150
    style: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURE_KINDS:
            raise ResultFormatError(f"unknown figure kind {self.figure!r}; choose from {FIGURE_KINDS}")


def _stack_matrix(times, fields):
    mat = np.stack([f.values for f in fields])
    return mat


def _sidecar(job: PlotJob, inputs: list[str], ranges: dict, notes: list[str]) -> dict:
    return {
        "figure": job.figure,
        "result_dir": str(Path(job.result_dir)),
        "inputs": sorted(inputs),
        "ranges": ranges,
        "style": {"colormap": job.colormap, "dpi": job.dpi, **job.style},
        "notes": sorted(notes),
    }


def render(job: PlotJob) -> dict:
    """Render one figure; returns the sidecar payload (also written to disk)."""
    res = ResultDir(job.result_dir)
    out_path = Path(job.out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    notes: list[str] = []
    inputs = ["manifest.json", "fields/index.json"]

    fig, ax = plt.subplots(figsize=(7.2, 5.4))
    try:
        if job.figure == "spacetime_density":
            ranges = _draw_spacetime(res, ax, job, inputs, notes)
        elif job.figure == "potential_surface":
            ranges = _draw_potential(res, ax, job, inputs, notes)
        elif job.figure == "trajectories":
            ranges = _draw_trajectories(res, ax, inputs, notes)
        else:
            ranges = _draw_stripes(res, ax, job, inputs, notes)
        fig.savefig(out_path, dpi=job.dpi)
    finally:
        plt.close(fig)

    payload = _sidecar(job, inputs, ranges, notes)
    sidecar_path = out_path.with_suffix(out_path.suffix + ".json")
    sidecar_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return payload


def _draw_spacetime(res: ResultDir, ax, job: PlotJob, inputs, notes) -> dict:
    times, fields = res.load_stack("P")
    inputs.extend(res.index["stacks"]["P"])
    mat = _stack_matrix(times, fields)
    x = fields[0].x
    ax.imshow(
        mat,
        origin="lower",
        aspect="auto",
        extent=(x[0], x[-1], times[0], times[-1]),
        cmap=job.colormap,
    )
    ax.set_xlabel("position")
    ax.set_ylabel("time")
    ax.set_title(f"{res.scenario}: probability density")

    barrier = res.barrier_extent()
    if barrier is not None:
        for edge in barrier:
            ax.axvline(edge, color="red", lw=1.2)
        inputs.append("config.json")

    traj = None
    try:
        traj = res.load_trajectories()
    except ResultFormatError as exc:
        notes.append(f"trajectory layer skipped: {exc}")
        log.info("trajectory layer skipped: %s", exc)
    if traj is not None and traj.count:
        ax.plot(traj.positions, traj.times, color="gold", lw=0.7, alpha=0.9)
        inputs.append("trajectories.csv")
    elif traj is not None:
        notes.append("trajectory layer skipped: no trajectories in file")
        log.info("trajectory layer skipped: empty trajectory file")
    return {
        "density_min": float(np.nanmin(mat)),
        "density_max": float(np.nanmax(mat)),
        "x": [float(x[0]), float(x[-1])],
        "t": [float(times[0]), float(times[-1])],
    }


def _draw_potential(res: ResultDir, ax, job: PlotJob, inputs, notes) -> dict:
    times, fields = res.load_stack("U")
    inputs.extend(res.index["stacks"]["U"])
    x = fields[0].x
    mat = _stack_matrix(times, fields)
    finite = np.isfinite(mat)
    if len(times) == 1:
        ax.plot(x, mat[0], lw=1.0)
        ax.set_xlabel("position")
        ax.set_ylabel("quantum potential")
    else:
        ax.pcolormesh(x, times, np.where(finite, mat, np.nan), cmap=job.colormap, shading="nearest")
        ax.set_xlabel("position")
        ax.set_ylabel("time")
    ax.set_title(f"{res.scenario}: quantum potential")
    if not finite.all():
        notes.append("masked cells left blank")
    return {
        "u_min": float(np.nanmin(mat)),
        "u_max": float(np.nanmax(mat)),
        "u_interior_spread": float(np.nanmax(mat[:, 5:-5]) - np.nanmin(mat[:, 5:-5])),
    }


def _draw_trajectories(res: ResultDir, ax, inputs, notes) -> dict:
    traj = res.load_trajectories()
    if traj is None:
        raise ResultFormatError(f"{res.root}: no trajectories.csv to plot")
    inputs.append("trajectories.csv")
    if traj.count:
        ax.plot(traj.times, traj.positions, color="black", lw=0.7, alpha=0.8)
    else:
        notes.append("no trajectories in file; empty axes rendered")
    ax.set_xlabel("time")
    ax.set_ylabel("position")
    ax.set_title(f"{res.scenario}: trajectories ({traj.count})")
    return {
        "count": traj.count,
        "t": [float(traj.times[0]), float(traj.times[-1])] if traj.times.size else [],
    }


def _draw_stripes(res: ResultDir, ax, job: PlotJob, inputs, notes) -> dict:
    times, fields = res.load_stack("P")
    stripes = res.load_stripes()
    if stripes is None:
        raise ResultFormatError(f"{res.root}: no stripes.json to overlay")
    inputs.append("stripes.json")
    idx = stripes.get("interaction_index") or 0
    inputs.append(res.index["stacks"]["P"][idx])
    fld = fields[idx]
    ax.plot(fld.x, fld.values, lw=1.0, color="steelblue")
    entry = stripes["entries"][idx]
    marker_count = 0
    for ext in entry["extrema"]:
        marker = "^" if ext["kind"] == "accumulation" else "v"
        color = "crimson" if ext["kind"] == "accumulation" else "navy"
        ax.plot([ext["position"]], [ext["value"]], marker=marker, color=color, ms=8)
        marker_count += 1
    ax.set_xlabel("position")
    ax.set_ylabel("probability density")
    ax.set_title(f"{res.scenario}: accumulation/depletion zones at t={entry['time']:.3g}")
    return {
        "time": float(entry["time"]),
        "stripe_count": int(entry["stripe_count"]),
        "markers": marker_count,
    }
