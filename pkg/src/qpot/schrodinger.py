"""Wavefunction sources: analytic free Gaussian packets and a Crank-Nicolson solver.

Width convention: a packet's `width` is the standard deviation of |psi|^2 at
t = 0, i.e. psi ~ exp(-(x - x0)^2 / (4 width^2)).  Free spreading then reads
std(t) = width * sqrt(1 + (hbar t / (2 m width^2))^2) with no stray factors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .constants import PhysicalConstants
from .errors import FieldError, NumericalAbort, QpotError
from .fields import ComplexField, FieldStack, Grid

__all__ = [
    "WavePacketSpec",
    "PotentialSpec",
    "gaussian_packet",
    "packet_centroid",
    "packet_std",
    "superpose",
    "potential_values",
    "crank_nicolson_evolve",
    "adi_evolve_2d",
]


@dataclass(frozen=True)
class WavePacketSpec:
    """Analytic Gaussian packet: center, |psi|^2 std, mean wavenumber, weight, phase."""

    center: float = 0.0
    width: float = 1.0
    wavenumber: float = 0.0
    weight: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.width > 0:
            raise QpotError("packet width must be positive")
        if self.weight < 0:
            raise QpotError("packet weight must be nonnegative")


@dataclass(frozen=True)
class PotentialSpec:
    """External potential: free space, a sharp square barrier, or an infinite well."""

    kind: str = "free"
    height: float = 0.0
    left: float = 0.0
    right: float = 0.0
    smoothing_cells: int = 0

    KINDS = ("free", "square_barrier", "infinite_well")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise QpotError(f"unknown potential kind {self.kind!r}")
        if self.kind != "free" and not self.left < self.right:
            raise QpotError("potential requires left < right")
        if not np.isfinite(self.height):
            raise QpotError("barrier height must be finite")

    @classmethod
    def free(cls) -> "PotentialSpec":
        return cls()

    @classmethod
    def barrier(cls, height: float, left: float, right: float, smoothing_cells: int = 0) -> "PotentialSpec":
        return cls("square_barrier", height, left, right, smoothing_cells)

    @classmethod
    def infinite_well(cls, left: float, right: float) -> "PotentialSpec":
        return cls("infinite_well", 0.0, left, right)


def packet_centroid(spec: WavePacketSpec, c: PhysicalConstants, t: float) -> float:
    return spec.center + c.hbar * spec.wavenumber / c.mass * t


def packet_std(spec: WavePacketSpec, c: PhysicalConstants, t: float) -> float:
    tau = c.hbar * t / (2.0 * c.mass * spec.width**2)
    return spec.width * np.sqrt(1.0 + tau * tau)


def gaussian_packet(
    spec: WavePacketSpec, c: PhysicalConstants, t: float, grid: Grid, normalize: bool = True
) -> ComplexField:
    """Free-particle Gaussian at time t (closed-form propagator solution).

    Valid for free evolution only (V = 0).  The result is renormalized by
    grid quadrature; a `truncated` flag is set when the grid cannot hold
    6 std(t) around the moving centroid.
    """
    if grid.dimension != 1:
        raise FieldError("analytic packets are 1D; use the 2D solver modes for planes")
    x = grid.coords(0)
    sigma = spec.width
    tau = c.hbar * t / (2.0 * c.mass * sigma**2)
    gamma = 1.0 + 1j * tau
    drift = c.hbar * spec.wavenumber / c.mass * t
    xi = x - spec.center - drift
    envelope = np.exp(-(xi**2) / (4.0 * sigma**2 * gamma))
    plane = np.exp(
        1j * (spec.wavenumber * (x - spec.center) - c.hbar * spec.wavenumber**2 * t / (2.0 * c.mass))
    )
    psi = (2.0 * np.pi * sigma**2) ** (-0.25) / np.sqrt(gamma) * envelope * plane
    psi = psi * np.exp(1j * spec.phase)

    centroid = spec.center + drift
    half_window = 6.0 * packet_std(spec, c, t)
    truncated = centroid - half_window < grid.axes[0].lo or centroid + half_window > grid.axes[0].hi

    out = ComplexField(grid, psi, label="psi", meta={"truncated": bool(truncated), "time": t})
    if normalize:
        nrm = out.norm()
        if nrm == 0.0:
            raise NumericalAbort("packet evaluates to zero on this grid")
        out.values /= nrm
    return out


def superpose(packets, c: PhysicalConstants, grid: Grid) -> ComplexField:
    """Normalized weighted superposition of packets, each given as (spec, t).

    Each packet is evaluated with its own phase factor, so the sum is
    sum_i w_i e^{i phi_i} psi_i with psi_i the phase-free packet.
    """
    packets = list(packets)
    if not packets:
        raise QpotError("superpose needs at least one packet")
    if all(spec.weight == 0 for spec, _ in packets):
        raise QpotError("superpose: all packet weights are zero")
    total = None
    truncated = False
    for spec, t in packets:
        part = gaussian_packet(spec, c, t, grid, normalize=False)
        truncated = truncated or part.meta["truncated"]
        contrib = spec.weight * part.values
        total = contrib if total is None else total + contrib
    out = ComplexField(grid, total, label="psi", meta={"truncated": truncated})
    nrm = out.norm()
    if nrm == 0.0:
        raise NumericalAbort("superposition vanishes identically on this grid")
    out.values /= nrm
    return out


def potential_values(spec: PotentialSpec, grid: Grid) -> np.ndarray:
    """Potential samples on the grid (the infinite well contributes via walls, not V)."""
    x = grid.coords(0)
    v = np.zeros_like(x)
    if spec.kind == "square_barrier":
        if spec.smoothing_cells <= 0:
            v[(x >= spec.left) & (x <= spec.right)] = spec.height
        else:
            w = spec.smoothing_cells * grid.spacing[0]
            v = spec.height * 0.5 * (np.tanh((x - spec.left) / w) - np.tanh((x - spec.right) / w))
    return v


def _well_bounds(spec: PotentialSpec, grid: Grid) -> tuple[int, int]:
    """Grid indices of the infinite-well walls (nearest points)."""
    x = grid.coords(0)
    i0 = int(np.argmin(np.abs(x - spec.left)))
    i1 = int(np.argmin(np.abs(x - spec.right)))
    if i1 - i0 < 8:
        raise FieldError("infinite well must span at least 8 grid points")
    return i0, i1


def crank_nicolson_evolve(
    psi0: ComplexField,
    potential: PotentialSpec,
    c: PhysicalConstants,
    dt: float,
    n_steps: int,
    output_stride: int = 1,
) -> FieldStack:
    """Crank-Nicolson evolution with Dirichlet psi = 0 ends.

    Each step solves the tridiagonal trapezoidal system
    (1 + i dt H / 2 hbar) psi' = (1 - i dt H / 2 hbar) psi, which is
    unitary up to roundoff for real potentials.  The returned stack
    includes psi0 and every `output_stride`-th step.
    """
    if dt == 0:
        raise QpotError("dt must be nonzero")
    if n_steps < 1:
        raise QpotError("n_steps must be >= 1")
    grid = psi0.grid
    if grid.dimension != 1:
        raise FieldError("crank_nicolson_evolve is 1D; use adi_evolve_2d for planes")
    psi0.check_finite()
    h = grid.spacing[0]

    cfl_warning = abs(dt) > h * h * c.mass / c.hbar
    if cfl_warning:
        warnings.warn(
            f"time step {abs(dt):.3g} exceeds the h^2 m / hbar sanity scale {h*h*c.mass/c.hbar:.3g}",
            stacklevel=2,
        )

    if potential.kind == "infinite_well":
        i0, i1 = _well_bounds(potential, grid)
    else:
        i0, i1 = 0, grid.shape[0] - 1
    v = potential_values(potential, grid)

    # Hamiltonian on interior points of the active region
    sl = slice(i0 + 1, i1)
    n_int = i1 - i0 - 1
    kin = c.hbar**2 / (2.0 * c.mass * h * h)
    diag_h = 2.0 * kin + v[sl]
    off_h = -kin
    r = 1j * dt / (2.0 * c.hbar)

    ab = np.zeros((3, n_int), dtype=complex)
    ab[0, 1:] = r * off_h
    ab[1, :] = 1.0 + r * diag_h
    ab[2, :-1] = r * off_h
    b_diag = 1.0 - r * diag_h
    b_off = -r * off_h

    psi = psi0.values.astype(complex).copy()
    psi[: i0 + 1] = 0.0
    psi[i1:] = 0.0

    def record(step: int) -> ComplexField:
        return ComplexField(grid, psi.copy(), label="psi", meta={"step": step})

    times = [0.0]
    fields = [record(0)]
    norm0 = float(np.sum(np.abs(psi) ** 2))
    max_drift = 0.0
    u = psi[sl]
    for step in range(1, n_steps + 1):
        rhs = b_diag * u
        rhs[1:] += b_off * u[:-1]
        rhs[:-1] += b_off * u[1:]
        u = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(u)):
            raise NumericalAbort("Crank-Nicolson produced non-finite values", step=step)
        psi[sl] = u
        if step % output_stride == 0 or step == n_steps:
            drift = abs(float(np.sum(np.abs(psi) ** 2)) - norm0) / norm0
            max_drift = max(max_drift, drift)
            # the stack's time axis is the elapsed integration parameter, so
            # reversed runs (dt < 0) still produce a valid stack
            times.append(step * abs(dt))
            fields.append(record(step))

    stack = FieldStack(grid, np.asarray(times), fields)
    stack.meta.update(
        {
            "scheme": "crank-nicolson",
            "dt": dt,
            "output_stride": output_stride,
            "norm_drift": max_drift,
            "cfl_warning": bool(cfl_warning),
        }
    )
    return stack


def adi_evolve_2d(
    psi0: ComplexField,
    v: np.ndarray,
    c: PhysicalConstants,
    dt: float,
    n_steps: int,
    output_stride: int = 1,
) -> FieldStack:
    """Alternating-direction-implicit Crank-Nicolson sweeps on a 2D grid.

    The potential is split evenly between the two one-dimensional
    half-step operators; walls are Dirichlet on the grid boundary.
    """
    grid = psi0.grid
    if grid.dimension != 2:
        raise FieldError("adi_evolve_2d needs a 2D grid")
    psi0.check_finite()
    v = np.asarray(v, dtype=float)
    if v.shape != grid.shape:
        raise FieldError("potential array shape must match the grid")

    psi = psi0.values.astype(complex).copy()
    psi[0, :] = psi[-1, :] = 0.0
    psi[:, 0] = psi[:, -1] = 0.0

    # Peaceman-Rachford: each sub-stage pairs one implicit and one explicit
    # direction over half a step, with coefficient i dt / (2 hbar).
    r = 1j * dt / (2.0 * c.hbar)
    v_int = v[1:-1, 1:-1] * 0.5  # potential split between the two sweeps

    def banded(axis: int):
        """Implicit half-step operator along `axis`: diag (leading axis = solve
        direction) and the banded LHS stack, one matrix per transverse line."""
        h = grid.spacing[axis]
        kin = c.hbar**2 / (2.0 * c.mass * h * h)
        diag = 2.0 * kin + (v_int if axis == 0 else v_int.T)
        ab = np.zeros((3,) + diag.shape, dtype=complex)
        ab[0, 1:, :] = -r * kin
        ab[1] = 1.0 + r * diag
        ab[2, :-1, :] = -r * kin
        return diag, -kin, ab

    diag_x, off_x, ab_x = banded(0)
    diag_y, off_y, ab_y = banded(1)

    def explicit(u: np.ndarray, diag: np.ndarray, off: float) -> np.ndarray:
        """(1 - i dt H_axis0 / 4 hbar) applied along the leading axis."""
        rhs = (1.0 - r * diag) * u
        rhs[1:] += -r * off * u[:-1]
        rhs[:-1] += -r * off * u[1:]
        return rhs

    def implicit(rhs: np.ndarray, ab: np.ndarray) -> np.ndarray:
        out = np.empty_like(rhs)
        for j in range(rhs.shape[1]):
            out[:, j] = solve_banded((1, 1), ab[:, :, j], rhs[:, j])
        return out

    u = psi[1:-1, 1:-1]
    times = [0.0]
    fields = [ComplexField(grid, psi.copy(), label="psi")]
    for step in range(1, n_steps + 1):
        # explicit in y, implicit in x; then explicit in x, implicit in y
        u = implicit(explicit(u.T, diag_y, off_y).T, ab_x)
        u = implicit(explicit(u, diag_x, off_x).T, ab_y).T
        if not np.all(np.isfinite(u)):
            raise NumericalAbort("ADI sweep produced non-finite values", step=step)
        if step % output_stride == 0 or step == n_steps:
            psi[1:-1, 1:-1] = u
            times.append(step * dt)
            fields.append(ComplexField(grid, psi.copy(), label="psi"))

    stack = FieldStack(grid, np.asarray(times), fields)
    stack.meta.update({"scheme": "adi", "dt": dt, "output_stride": output_stride})
    return stack
