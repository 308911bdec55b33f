"""Readers for the qpot result-directory formats.

Field CSV:   `# grid: dim=<d> axis0=<min>,<max>,<n> ... quantity=<q> time=<t>`
             then `index0[,index1],re[,im]` rows; `masked` marks excluded cells.
Trajectories: `# trajectories count=<n> scheme=<s> dt=<dt>` then
             `t, x_1..x_n, v_1..v_n` rows with the same sentinel.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MASK_SENTINEL = "masked"

_FIELD_HEADER = re.compile(
    r"^# grid: dim=(?P<dim>[12]) (?P<axes>(axis\d+=\S+ ?)+)quantity=(?P<q>\S+) time=(?P<t>\S+)\s*$"
)
_TRAJ_HEADER = re.compile(r"^# trajectories count=(?P<n>\d+) scheme=(?P<s>\S+) dt=(?P<dt>\S+)\s*$")


class ResultFormatError(RuntimeError):
    """A result file is missing or does not match the documented format."""


@dataclass
class FieldData:
    x: np.ndarray  # axis-0 coordinates
    y: np.ndarray | None
    values: np.ndarray  # NaN where masked, for plotting only
    mask: np.ndarray
    quantity: str
    time: float


def read_field_csv(path: Path) -> FieldData:
    path = Path(path)
    if not path.exists():
        raise ResultFormatError(f"missing field CSV: {path}")
    with open(path) as fh:
        header = fh.readline()
        m = _FIELD_HEADER.match(header)
        if not m:
            raise ResultFormatError(
                f"{path}: bad header {header!r}; expected '# grid: dim=<d> axis0=<min>,<max>,<n> "
                "... quantity=<q> time=<t>'"
            )
        dim = int(m.group("dim"))
        axes = []
        for part in m.group("axes").split():
            lo, hi, n = part.split("=", 1)[1].split(",")
            axes.append(np.linspace(float(lo), float(hi), int(n)))
        shape = tuple(len(a) for a in axes)
        values = np.full(shape, np.nan)
        mask = np.zeros(shape, dtype=bool)
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) < dim + 1:
                raise ResultFormatError(f"{path}: malformed row {line!r}")
            idx = tuple(int(i) for i in cells[:dim])
            if cells[dim] == MASK_SENTINEL:
                mask[idx] = True
            else:
                values[idx] = float(cells[dim])  # real part; plots ignore im columns
    return FieldData(
        x=axes[0],
        y=axes[1] if dim == 2 else None,
        values=values,
        mask=mask,
        quantity=m.group("q"),
        time=float(m.group("t")),
    )


@dataclass
class TrajectoryData:
    times: np.ndarray
    positions: np.ndarray  # (n_times, n_traj), NaN past a trajectory's freeze point
    velocities: np.ndarray
    scheme: str
    dt: float

    @property
    def count(self) -> int:
        return self.positions.shape[1] if self.positions.size else 0


def read_trajectories_csv(path: Path) -> TrajectoryData:
    path = Path(path)
    if not path.exists():
        raise ResultFormatError(f"missing trajectory CSV: {path}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ResultFormatError(f"{path}: empty file; expected '# trajectories count=...' header")
    m = _TRAJ_HEADER.match(lines[0])
    if not m:
        raise ResultFormatError(
            f"{path}: bad header {lines[0]!r}; expected '# trajectories count=<n> scheme=<s> dt=<dt>'"
        )
    n = int(m.group("n"))
    times, pos, vel = [], [], []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 1 + 2 * n:
            raise ResultFormatError(f"{path}: row has {len(cells)} columns, expected {1 + 2*n}")
        times.append(float(cells[0]))
        row = [np.nan if c == MASK_SENTINEL else float(c) for c in cells[1:]]
        pos.append(row[:n])
        vel.append(row[n:])
    return TrajectoryData(
        times=np.asarray(times),
        positions=np.asarray(pos).reshape(len(times), n),
        velocities=np.asarray(vel).reshape(len(times), n),
        scheme=m.group("s"),
        dt=float(m.group("dt")),
    )


class ResultDir:
    """Validated view of one scenario result directory."""

    def __init__(self, root):
        self.root = Path(root)
        manifest_path = self.root / "manifest.json"
        if not manifest_path.exists():
            raise ResultFormatError(f"{self.root} has no manifest.json")
        self.manifest = json.loads(manifest_path.read_text())
        listed = {row["path"] for row in self.manifest.get("files", [])}
        index_path = self.root / "fields" / "index.json"
        if "fields/index.json" not in listed or not index_path.exists():
            raise ResultFormatError(f"{self.root}: manifest does not list fields/index.json")
        self.index = json.loads(index_path.read_text())
        self.config = {}
        if (self.root / "config.json").exists():
            self.config = json.loads((self.root / "config.json").read_text())

    @property
    def scenario(self) -> str:
        return self.manifest.get("scenario", "unknown")

    def stack_labels(self) -> list[str]:
        return sorted(self.index["stacks"])

    def load_stack(self, label: str) -> tuple[np.ndarray, list[FieldData]]:
        if label not in self.index["stacks"]:
            raise ResultFormatError(f"{self.root}: no '{label}' stack in fields/index.json")
        fields = [read_field_csv(self.root / rel) for rel in self.index["stacks"][label]]
        times = np.asarray(self.index["times"], dtype=float)
        if len(times) != len(fields):
            raise ResultFormatError(f"{self.root}: index times do not match the {label} stack length")
        return times, fields

    def load_trajectories(self) -> TrajectoryData | None:
        path = self.root / "trajectories.csv"
        return read_trajectories_csv(path) if path.exists() else None

    def load_stripes(self) -> dict | None:
        path = self.root / "stripes.json"
        return json.loads(path.read_text()) if path.exists() else None

    def barrier_extent(self) -> tuple[float, float] | None:
        pot = self.config.get("potential", {})
        if pot.get("kind") == "square_barrier":
            return float(pot["left"]), float(pot["right"])
        return None
