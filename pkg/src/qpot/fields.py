"""Uniform-grid scalar fields (1D/2D) and the finite-difference operators.

Conventions:
  * grids are uniform tensor products, values stored row-major with axis
    order (x, y);
  * interior stencils are second-order central, boundary rows use
    second-order one-sided formulas and are flagged low-accuracy;
  * masked cells (mask == True) are excluded cells (e.g. wavefunction
    nodes); their stored value is a finite placeholder and serialization
    writes a sentinel token instead of a number.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Sequence

import numpy as np

from .errors import FieldError, NonFiniteSampleError

#: token written to CSV in place of a number for masked cells
MASK_SENTINEL = "masked"

#: boundary cells flagged as low accuracy by the one-sided stencils
BOUNDARY_STENCIL_DEPTH = 1


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise FieldError(f"axis needs >= 8 points, got {self.n}")
        if not self.hi > self.lo:
            raise FieldError(f"axis extent must satisfy hi > lo, got [{self.lo}, {self.hi}]")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def coords(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class Grid:
    """Uniform 1D or 2D tensor-product grid."""

    axes: tuple[Axis, ...]

    def __post_init__(self):
        if len(self.axes) not in (1, 2):
            raise FieldError(f"only 1D/2D grids supported, got {len(self.axes)} axes")

    @classmethod
    def line(cls, lo: float, hi: float, n: int) -> "Grid":
        return cls((Axis(lo, hi, n),))

    @classmethod
    def plane(cls, xaxis: tuple[float, float, int], yaxis: tuple[float, float, int]) -> "Grid":
        return cls((Axis(*xaxis), Axis(*yaxis)))

    @property
    def dimension(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n for a in self.axes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(a.spacing for a in self.axes)

    def coords(self, axis: int = 0) -> np.ndarray:
        return self.axes[axis].coords()

    def meshes(self) -> list[np.ndarray]:
        return list(np.meshgrid(*(a.coords() for a in self.axes), indexing="ij"))

    def cell_volume(self) -> float:
        out = 1.0
        for a in self.axes:
            out *= a.spacing
        return out


class Field:
    """Scalar samples on a grid, plus an optional exclusion mask."""

    dtype: type = np.float64

    def __init__(self, grid: Grid, values, label: str = "", mask=None, meta: dict | None = None):
        values = np.asarray(values, dtype=self.dtype)
        if values.shape != grid.shape:
            raise FieldError(f"value shape {values.shape} does not match grid shape {grid.shape}")
        self.grid = grid
        self.values = values
        self.label = label
        self.mask = None if mask is None else np.asarray(mask, dtype=bool)
        if self.mask is not None and self.mask.shape != grid.shape:
            raise FieldError("mask shape does not match grid shape")
        self.meta = dict(meta or {})

    def copy(self, values=None, label=None, mask="keep") -> "Field":
        return type(self)(
            self.grid,
            self.values.copy() if values is None else values,
            self.label if label is None else label,
            mask=(self.mask if mask == "keep" else mask),
            meta=dict(self.meta),
        )

    def check_finite(self) -> None:
        """Reject non-finite samples, naming the first offending index."""
        bad = ~np.isfinite(self.values)
        if self.mask is not None:
            bad &= ~self.mask
        if bad.any():
            flat = int(np.flatnonzero(bad.ravel())[0])
            idx = np.unravel_index(flat, self.values.shape)
            raise NonFiniteSampleError(self.label or type(self).__name__, tuple(int(i) for i in idx))

    def integrate(self) -> float | complex:
        """Trapezoidal quadrature over the whole grid."""
        out = self.values
        for ax in range(self.grid.dimension - 1, -1, -1):
            out = np.trapezoid(out, dx=self.grid.spacing[ax], axis=ax)
        return out.item() if isinstance(out, np.generic) or getattr(out, "ndim", 1) == 0 else out


class RealField(Field):
    dtype = np.float64


class ComplexField(Field):
    dtype = np.complex128

    def abs2(self, label: str = "P") -> RealField:
        return RealField(self.grid, np.abs(self.values) ** 2, label=label)

    def norm(self) -> float:
        return float(np.sqrt(np.real(self.abs2().integrate())))


def _same_kind(f: Field, values, label: str) -> Field:
    cls = ComplexField if np.iscomplexobj(values) else RealField
    out = cls(f.grid, values, label=label, mask=None if f.mask is None else f.mask.copy())
    out.meta["boundary_low_accuracy_cells"] = BOUNDARY_STENCIL_DEPTH
    return out


def _first_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    # np.gradient: central interior, second-order one-sided at boundaries
    return np.gradient(values, h, axis=axis, edge_order=2)


def _second_derivative(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    inv = 1.0 / (h * h)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) * inv
    # one-sided second-order second derivative at the edges
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * inv
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) * inv
    return np.moveaxis(out, 0, axis)


def gradient(f: Field) -> list[Field]:
    """Per-axis first derivatives; central interior, one-sided boundaries."""
    f.check_finite()
    return [
        _same_kind(f, _first_derivative(f.values, f.grid.spacing[ax], ax), f"d{f.label or 'f'}/dx{ax}")
        for ax in range(f.grid.dimension)
    ]


def laplacian(f: Field) -> Field:
    """3-point (1D) / 5-point (2D) Laplacian; boundary rows low-accuracy."""
    f.check_finite()
    out = sum(_second_derivative(f.values, f.grid.spacing[ax], ax) for ax in range(f.grid.dimension))
    return _same_kind(f, out, f"lap({f.label or 'f'})")


def divergence(components: Sequence[Field]) -> Field:
    """Divergence of a vector field given as per-axis component fields."""
    if not components:
        raise FieldError("divergence needs at least one component")
    grid = components[0].grid
    if len(components) != grid.dimension:
        raise FieldError(f"expected {grid.dimension} components, got {len(components)}")
    total = None
    for ax, comp in enumerate(components):
        if comp.grid is not grid and comp.grid != grid:
            raise FieldError("component grids differ")
        comp.check_finite()
        term = _first_derivative(comp.values, grid.spacing[ax], ax)
        total = term if total is None else total + term
    return _same_kind(components[0], total, "div")


@dataclass
class FieldStack:
    """Time series of fields sharing one grid, with strictly increasing times."""

    grid: Grid
    times: np.ndarray
    fields: list[Field] = dc_field(default_factory=list)
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) != len(self.fields):
            raise FieldError("times and fields must have matching lengths")
        if len(self.times) >= 2 and not np.all(np.diff(self.times) > 0):
            raise FieldError("stack times must be strictly increasing")
        for fld in self.fields:
            if fld.grid != self.grid:
                raise FieldError("all stack fields must share the stack grid")

    def __len__(self) -> int:
        return len(self.fields)

    def __getitem__(self, i: int) -> Field:
        return self.fields[i]

    def values_array(self) -> np.ndarray:
        return np.stack([f.values for f in self.fields])


def time_derivative(stack: FieldStack, index: int) -> Field:
    """Second-order d/dt of a stack at one sample (one-sided at the ends)."""
    nt = len(stack)
    if nt < 2:
        raise FieldError("time derivative needs a stack with at least 2 samples")
    if not 0 <= index < nt:
        raise FieldError(f"index {index} out of range for stack of length {nt}")
    t = stack.times
    f = stack.fields

    def two_point(i, j):
        return (f[j].values - f[i].values) / (t[j] - t[i])

    if nt == 2:
        vals = two_point(0, 1)
    elif index == 0:
        vals = _lagrange_derivative(t[0], t[:3], [f[i].values for i in range(3)])
    elif index == nt - 1:
        vals = _lagrange_derivative(t[-1], t[-3:], [f[i].values for i in range(nt - 3, nt)])
    else:
        vals = _lagrange_derivative(
            t[index], t[index - 1 : index + 2], [f[i].values for i in range(index - 1, index + 2)]
        )
    for fld in (f[max(index - 1, 0)], f[index], f[min(index + 1, nt - 1)]):
        fld.check_finite()
    return _same_kind(f[index], vals, f"d({f[index].label or 'f'})/dt")


def _lagrange_derivative(t0: float, ts, vals) -> np.ndarray:
    """Derivative at t0 of the quadratic through (ts[i], vals[i])."""
    a, b, c = ts
    num = [
        (2 * t0 - b - c) / ((a - b) * (a - c)),
        (2 * t0 - a - c) / ((b - a) * (b - c)),
        (2 * t0 - a - b) / ((c - a) * (c - b)),
    ]
    return num[0] * vals[0] + num[1] * vals[1] + num[2] * vals[2]


# ---------------------------------------------------------------------------
# CSV serialization
#
# Header: `# grid: dim=<d> axis0=<min>,<max>,<n> [axis1=...] quantity=<label> time=<t>`
# Rows:   `index0[,index1],re[,im]`, 17 significant digits (bit-exact round trip).
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field_csv(f: Field, path_or_buf, time: float = 0.0) -> None:
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    buf = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        axes = " ".join(
            f"axis{i}={_fmt(a.lo)},{_fmt(a.hi)},{a.n}" for i, a in enumerate(f.grid.axes)
        )
        quantity = f.label or ("psi" if isinstance(f, ComplexField) else "f")
        buf.write(f"# grid: dim={f.grid.dimension} {axes} quantity={quantity} time={_fmt(time)}\n")
        complex_kind = isinstance(f, ComplexField)
        mask = f.mask if f.mask is not None else np.zeros(f.grid.shape, dtype=bool)
        for idx in np.ndindex(*f.grid.shape):
            head = ",".join(str(i) for i in idx)
            if mask[idx]:
                cells = [MASK_SENTINEL, MASK_SENTINEL] if complex_kind else [MASK_SENTINEL]
            else:
                v = f.values[idx]
                cells = [_fmt(v.real), _fmt(v.imag)] if complex_kind else [_fmt(v)]
            buf.write(head + "," + ",".join(cells) + "\n")
    finally:
        if own:
            buf.close()


_HEADER_RE = re.compile(
    r"^# grid: dim=(?P<dim>[12]) (?P<axes>(axis\d+=[^ ]+ ?)+)quantity=(?P<q>\S+) time=(?P<t>\S+)\s*$"
)


def read_field_csv(path_or_buf) -> tuple[Field, float]:
    """Read a field CSV; returns (field, time)."""
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    buf = open(path_or_buf, "r") if own else path_or_buf
    try:
        header = buf.readline()
        m = _HEADER_RE.match(header)
        if not m:
            raise FieldError(f"malformed field CSV header: {header!r}")
        dim = int(m.group("dim"))
        axes = []
        for part in m.group("axes").split():
            spec = part.split("=", 1)[1]
            lo, hi, n = spec.split(",")
            axes.append(Axis(float(lo), float(hi), int(n)))
        if len(axes) != dim:
            raise FieldError("axis count does not match declared dimension")
        grid = Grid(tuple(axes))
        time = float(m.group("t"))
        label = m.group("q")

        rows = [line.strip().split(",") for line in buf if line.strip()]
        ncell = len(rows[0]) - dim
        if ncell not in (1, 2):
            raise FieldError("rows must carry one (real) or two (re,im) value columns")
        cls = ComplexField if ncell == 2 else RealField
        values = np.zeros(grid.shape, dtype=cls.dtype)
        mask = np.zeros(grid.shape, dtype=bool)
        for row in rows:
            idx = tuple(int(i) for i in row[:dim])
            if row[dim] == MASK_SENTINEL:
                mask[idx] = True
            elif ncell == 2:
                values[idx] = float(row[dim]) + 1j * float(row[dim + 1])
            else:
                values[idx] = float(row[dim])
        out = cls(grid, values, label=label, mask=mask if mask.any() else None)
        return out, time
    finally:
        if own:
            buf.close()


def field_csv_text(f: Field, time: float = 0.0) -> str:
    buf = io.StringIO()
    write_field_csv(f, buf, time=time)
    return buf.getvalue()


def stack_from_fields(grid: Grid, times: Iterable[float], fields: Iterable[Field]) -> FieldStack:
    return FieldStack(grid, np.asarray(list(times), dtype=float), list(fields))
