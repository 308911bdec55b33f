"""Bohmian guidance: velocity fields, trajectory ensembles, equation-of-motion audit.

The integrator propagates the first-order guidance law v = grad(S)/m with
RK4 in time and linear spatial interpolation; the second-order form
m dv/dt = -grad(V + U) is an audit along the computed paths, never the
propagator.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .constants import PhysicalConstants
from .errors import FieldError, QpotError
from .fields import ComplexField, FieldStack, Grid, RealField, gradient
from .qpotential import DEFAULT_NODE_EPS, dilate_mask
from .schrodinger import PotentialSpec, potential_values

MASK_VALUE = "masked"


def velocity_field(
    psi: ComplexField, c: PhysicalConstants, eps_node: float = DEFAULT_NODE_EPS
) -> RealField:
    """Guidance velocity (hbar/m) Im(grad psi / psi), node cells filled by interpolation."""
    if psi.grid.dimension != 1:
        raise FieldError("trajectory machinery is 1D")
    psi.check_finite()
    p = np.abs(psi.values) ** 2
    mask = p < eps_node * p.max()
    g = gradient(psi)[0].values
    v = np.zeros_like(p)
    np.divide(
        g.imag * psi.values.real - g.real * psi.values.imag, p, out=v, where=~mask
    )
    v *= c.hbar / c.mass
    if mask.any() and (~mask).any():
        x = psi.grid.coords(0)
        v[mask] = np.interp(x[mask], x[~mask], v[~mask])
    out = RealField(psi.grid, v, label="v")
    out.meta["node_mask"] = mask
    return out


def seed_from_density(p0: RealField, count: int, method: str = "quantile", seed=None) -> np.ndarray:
    """Initial positions distributed per a density.

    quantile: deterministic positions at cumulative levels (i - 1/2)/count;
    uniform: evenly spaced across the extent; random: inverse-CDF sampling
    behind an explicit seed.
    """
    if count < 1:
        raise QpotError("need at least one seed")
    if p0.grid.dimension != 1:
        raise FieldError("seeding is 1D")
    x = p0.grid.coords(0)
    if method == "uniform":
        lo, hi = p0.grid.axes[0].lo, p0.grid.axes[0].hi
        return lo + (np.arange(count) + 0.5) / count * (hi - lo)

    vals = np.clip(p0.values, 0.0, None)
    total = np.trapezoid(vals, x)
    if not np.isfinite(total) or total <= 0.0:
        raise QpotError("density is not normalizable")
    from scipy.integrate import cumulative_trapezoid

    cdf = np.concatenate([[0.0], cumulative_trapezoid(vals, x)]) / total
    if method == "quantile":
        levels = (np.arange(count) + 0.5) / count
    elif method == "random":
        if seed is None:
            raise QpotError("random seeding requires an explicit seed")
        levels = np.sort(np.random.default_rng(seed).uniform(size=count))
    else:
        raise QpotError(f"unknown seeding method {method!r}")
    return np.interp(levels, cdf, x)


@dataclass
class TrajectoryEnsemble:
    """Trajectory bundle: shared times, per-trajectory positions and velocities."""

    times: np.ndarray
    positions: np.ndarray  # (n_times, n_traj)
    velocities: np.ndarray
    seeds: np.ndarray
    method: str
    scheme: str
    dt: float
    incomplete: np.ndarray  # bool per trajectory
    freeze_index: np.ndarray  # first invalid time index (len(times) if complete)
    events: list = dc_field(default_factory=list)
    meta: dict = dc_field(default_factory=dict)

    @property
    def count(self) -> int:
        return self.positions.shape[1]

    def write_csv(self, path_or_buf) -> None:
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        buf = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            buf.write(f"# trajectories count={self.count} scheme={self.scheme} dt={format(self.dt, '.17g')}\n")
            for j, t in enumerate(self.times):
                cells = [format(t, ".17g")]
                for arr in (self.positions, self.velocities):
                    for i in range(self.count):
                        if j >= self.freeze_index[i]:
                            cells.append(MASK_VALUE)
                        else:
                            cells.append(format(arr[j, i], ".17g"))
                buf.write(",".join(cells) + "\n")
        finally:
            if own:
                buf.close()


def _thread_count() -> int:
    raw = os.environ.get("QPOT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def integrate_trajectories(
    psistack: FieldStack,
    seeds: np.ndarray,
    c: PhysicalConstants,
    scheme: str = "rk4",
    method: str = "quantile",
    eps_node: float = DEFAULT_NODE_EPS,
    boundary_margin: int = 3,
    max_halvings: int = 20,
    substeps: int = 0,
) -> TrajectoryEnsemble:
    """Integrate seeds through the guidance field of a wavefunction stack.

    RK4 over each stack interval with the velocity field interpolated
    linearly in space and time.  `substeps` RK4 substeps are taken per
    interval (0 picks a velocity-scale heuristic).  Trajectories reaching
    the boundary margin are clamped (event recorded); a step landing in a
    node-masked cell is retried with halved substeps, and after
    `max_halvings` the trajectory is flagged incomplete and frozen while
    the run continues.
    """
    if scheme != "rk4":
        raise QpotError(f"unknown scheme {scheme!r}")
    grid = psistack.grid
    if grid.dimension != 1:
        raise FieldError("trajectory integration is 1D")
    seeds = np.asarray(seeds, dtype=float)
    x = grid.coords(0)
    lo, hi = x[0], x[-1]
    if np.any(seeds < lo) or np.any(seeds > hi):
        raise QpotError("seed outside the grid extent")
    order = np.argsort(seeds, kind="stable")
    if not np.array_equal(order, np.arange(len(seeds))):
        seeds = seeds[order]

    h = grid.spacing[0]
    times = psistack.times
    nt, n = len(times), len(seeds)
    vfields, masks, near = [], [], []
    for fld in psistack.fields:
        vf = velocity_field(fld, c, eps_node=eps_node)
        vfields.append(vf.values)
        masks.append(vf.meta["node_mask"])
        near.append(dilate_mask(vf.meta["node_mask"], 2))

    dt_all = np.diff(times)
    vmax = max(float(np.max(np.abs(v))) for v in vfields)
    if vmax * np.max(dt_all) > 4.0 * h:
        warnings.warn(
            f"stack time step lets trajectories move {vmax*np.max(dt_all)/h:.1f} cells per step (> 4)",
            stacklevel=2,
        )
    if substeps < 1:
        # robust velocity scale: spikes near nodes are handled by halving,
        # the bulk flow sets the substep count
        v_scale = float(np.percentile(np.abs(np.stack(vfields)), 95))
        substeps = int(np.clip(np.ceil(v_scale * np.max(dt_all) / (2.0 * h)), 1, 64))

    clamp_lo, clamp_hi = lo + boundary_margin * h, hi - boundary_margin * h
    events: list = []

    def vel(j0: int, j1: int, frac: float, pos: np.ndarray) -> np.ndarray:
        va = np.interp(pos, x, vfields[j0])
        vb = np.interp(pos, x, vfields[j1])
        return (1.0 - frac) * va + frac * vb

    def rk4(pos: np.ndarray, j: int, t0_frac: float, t1_frac: float, dt: float) -> np.ndarray:
        mid = 0.5 * (t0_frac + t1_frac)
        k1 = vel(j, j + 1, t0_frac, pos)
        k2 = vel(j, j + 1, mid, pos + 0.5 * dt * k1)
        k3 = vel(j, j + 1, mid, pos + 0.5 * dt * k2)
        k4 = vel(j, j + 1, t1_frac, pos + dt * k3)
        return pos + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def in_cells(pos: np.ndarray, mask: np.ndarray) -> np.ndarray:
        idx = np.clip(np.rint((pos - lo) / h).astype(int), 0, len(x) - 1)
        return mask[idx]

    positions = np.empty((nt, n))
    velocities = np.empty((nt, n))
    positions[0] = seeds
    incomplete = np.zeros(n, dtype=bool)
    freeze_index = np.full(n, nt, dtype=int)

    pool_size = min(_thread_count(), n)

    def march(pos: np.ndarray, j: int, n_sub: int) -> np.ndarray:
        dt = dt_all[j]
        out = pos
        for s in range(n_sub):
            out = rk4(out, j, s / n_sub, (s + 1) / n_sub, dt / n_sub)
        return out

    def advance_chunk(sel: np.ndarray, j: int) -> np.ndarray:
        pos = positions[j, sel]
        cand = march(pos, j, substeps)
        trouble = in_cells(pos, near[j]) | in_cells(cand, near[j + 1])
        if trouble.any():
            for w in np.flatnonzero(trouble):
                n_sub, ok = 2 * substeps, False
                while n_sub <= substeps * 2**max_halvings:
                    pw = march(np.array([pos[w]]), j, n_sub)[0]
                    if not in_cells(np.array([pw]), masks[j + 1])[0]:
                        cand[w] = pw
                        ok = True
                        events.append({"time": float(times[j + 1]), "trajectory": int(sel[w]), "kind": "node_halving", "substeps": n_sub})
                        break
                    n_sub *= 2
                if not ok:
                    gi = sel[w]
                    incomplete[gi] = True
                    freeze_index[gi] = min(freeze_index[gi], j + 1)
                    cand[w] = pos[w]
                    events.append({"time": float(times[j + 1]), "trajectory": int(gi), "kind": "node_incomplete"})
        return cand

    for j in range(nt - 1):
        if pool_size > 1:
            chunks = np.array_split(np.arange(n), pool_size)
            with ThreadPoolExecutor(max_workers=pool_size) as pool:
                results = list(pool.map(lambda sel: advance_chunk(sel, j), chunks))
            new = np.concatenate(results)
        else:
            new = advance_chunk(np.arange(n), j)

        clipped = np.clip(new, clamp_lo, clamp_hi)
        hit = clipped != new
        for gi in np.flatnonzero(hit):
            events.append({"time": float(times[j + 1]), "trajectory": int(gi), "kind": "boundary_clamp"})
        frozen = freeze_index <= j + 1
        positions[j + 1] = np.where(frozen, positions[j], clipped)

    for j in range(nt):
        velocities[j] = np.interp(positions[j], x, vfields[j])

    ens = TrajectoryEnsemble(
        times=times.copy(),
        positions=positions,
        velocities=velocities,
        seeds=seeds,
        method=method,
        scheme=scheme,
        dt=float(np.max(dt_all)),
        incomplete=incomplete,
        freeze_index=freeze_index,
        events=events,
    )
    ens.meta["threads"] = pool_size
    ens.meta["substeps"] = substeps
    return ens


def empirical_cdf_distance(samples: np.ndarray, exact_cdf, grid: Grid) -> float:
    """Extent-normalized L1 distance between the sample CDF and an exact CDF."""
    x = grid.coords(0)
    sorted_samples = np.sort(samples)
    emp = np.searchsorted(sorted_samples, x, side="right") / len(samples)
    diff = np.abs(emp - exact_cdf(x))
    return float(np.trapezoid(diff, x) / (x[-1] - x[0]))


def heat_term_ratio(q: RealField, c: PhysicalConstants, lap_values: np.ndarray | None = None) -> dict:
    """Ratio of the diffusion-length force term -(L/2)^2 lap Q to the
    period-averaged potential -(hbar/2 m omega) lap Q.

    Measured pointwise off near-zero curvature and reported; the two
    coefficients differ by a factor the audit documents rather than fixes.
    """
    from .fields import laplacian

    lap = laplacian(q).values if lap_values is None else np.asarray(lap_values)
    term_dwf = -((c.diffusion_length() / 2.0) ** 2) * lap
    term_mean = -(c.hbar / (2.0 * c.mass * c.omega)) * lap
    usable = np.abs(term_mean) > 1e-12 * np.max(np.abs(term_mean))
    ratio = term_dwf[usable] / term_mean[usable]
    return {
        "median_ratio": float(np.median(ratio)),
        "max_abs_deviation": float(np.max(np.abs(ratio - 0.5))),
        "points": int(usable.sum()),
    }


def second_order_audit(
    ensemble: TrajectoryEnsemble,
    u_stack: FieldStack,
    potential: PotentialSpec | np.ndarray | None,
    c: PhysicalConstants,
    boundary_margin: int = 3,
    heat_field: RealField | None = None,
    heat_lap_values: np.ndarray | None = None,
) -> dict:
    """Compare m dv/dt along each trajectory with -grad(V + U) from the stacks.

    Incomplete trajectories are excluded from the statistics but counted.
    When a heat field is supplied, the diffusion-length force-term ratio is
    reported alongside.
    """
    grid = u_stack.grid
    x = grid.coords(0)
    if potential is None:
        v_pot = np.zeros(grid.shape)
    elif isinstance(potential, PotentialSpec):
        v_pot = potential_values(potential, grid)
    else:
        v_pot = np.asarray(potential, dtype=float)

    if len(u_stack) != len(ensemble.times) or not np.allclose(u_stack.times, ensemble.times):
        raise QpotError("audit needs the potential stack sampled at the ensemble times")

    force = []
    usable_cells = []
    margin_sel = np.zeros(grid.shape, dtype=bool)
    margin_sel[boundary_margin:-boundary_margin] = True
    for fld in u_stack.fields:
        total = fld.values + v_pot
        force.append(-gradient(RealField(grid, total))[0].values)
        bad = dilate_mask(fld.mask, 2) if fld.mask is not None else np.zeros(grid.shape, dtype=bool)
        usable_cells.append(margin_sel & ~bad)

    times = ensemble.times
    active = ~ensemble.incomplete
    abs_mismatch, rhs_scale, lhs_scale = [], 0.0, 0.0
    for j in range(1, len(times) - 1):
        dvdt = (ensemble.velocities[j + 1] - ensemble.velocities[j - 1]) / (times[j + 1] - times[j - 1])
        rhs = np.interp(ensemble.positions[j], x, force[j])
        ok = active & in_region(ensemble.positions[j], x, usable_cells[j])
        if not ok.any():
            continue
        rhs_scale = max(rhs_scale, float(np.max(np.abs(rhs[ok]))))
        lhs_scale = max(lhs_scale, float(np.max(np.abs(c.mass * dvdt[ok]))))
        abs_mismatch.append(np.abs(c.mass * dvdt[ok] - rhs[ok]))
    allm = np.concatenate(abs_mismatch) if abs_mismatch else np.array([0.0])
    scale = max(rhs_scale, lhs_scale)
    rel = allm / scale if scale > 0 else allm
    report = {
        "points": int(allm.size),
        "median_relative_mismatch": float(np.median(rel)),
        "max_relative_mismatch": float(np.max(rel)),
        "max_absolute_mismatch": float(np.max(allm)),
        "force_scale": rhs_scale,
        "acceleration_scale": lhs_scale,
        "incomplete_trajectories": int(ensemble.incomplete.sum()),
    }
    if heat_field is not None:
        report["heat_term"] = heat_term_ratio(heat_field, c, lap_values=heat_lap_values)
    return report


def in_region(pos: np.ndarray, x: np.ndarray, cell_ok: np.ndarray) -> np.ndarray:
    h = x[1] - x[0]
    idx = np.clip(np.rint((pos - x[0]) / h).astype(int), 0, len(x) - 1)
    return cell_ok[idx]
