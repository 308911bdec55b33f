"""Quantum potential in all its renderings, and the identity/residual audits.

The canonical quantum potential is the amplitude-curvature form
U = -(hbar^2/2m) lap(R)/R; the density form
U = (hbar^2/4m) [ (1/2)(grad P / P)^2 - lap(P)/P ] is algebraically equal and
kept as a cross-check.  Two further renderings are audited against it:

  * a velocity rendering built from the stochastic drift u = -(hbar/2m) grad P / P
    and its wavenumber k_u = -(1/2) grad P / P, evaluated exactly as printed
    in its source; it measures -1 times the canonical form;
  * a heat rendering built from the heat field Q tied to the density by
    P = P_ref exp(-Q/(hbar omega)).  Its "forward" reading differentiates the
    log-density heat field honestly and measures -1 times the canonical form;
    its "osmotic" (dissipative-branch) reading substitutes the density ratios
    grad P / P and lap P / P for the heat derivatives and measures +1 times
    the canonical form.

The audits report those measured signs; nothing is silently corrected.
All ratio quantities are masked on wavefunction nodes (P < eps * max P) and
exports write a sentinel there, never NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .constants import PhysicalConstants
from .errors import FieldError, QpotError
from .fields import (
    ComplexField,
    FieldStack,
    Grid,
    RealField,
    divergence,
    gradient,
    laplacian,
    time_derivative,
)
from .schrodinger import PotentialSpec, potential_values

DEFAULT_NODE_EPS = 1e-8


def dilate_mask(mask: np.ndarray, cells: int) -> np.ndarray:
    """Grow a boolean mask by `cells` cells along every axis."""
    out = mask.copy()
    for axis in range(mask.ndim):
        for shift in range(1, cells + 1):
            rolled = np.zeros_like(mask)
            src = [slice(None)] * mask.ndim
            dst = [slice(None)] * mask.ndim
            src[axis], dst[axis] = slice(shift, None), slice(None, -shift)
            rolled[tuple(dst)] |= mask[tuple(src)]
            src[axis], dst[axis] = slice(None, -shift), slice(shift, None)
            rolled[tuple(dst)] |= mask[tuple(src)]
            out |= rolled
    return out


def interior_region(shape: tuple[int, ...], margin: int) -> np.ndarray:
    """Boolean selector excluding `margin` cells at every boundary."""
    sel = np.zeros(shape, dtype=bool)
    sel[tuple(slice(margin, n - margin) for n in shape)] = True
    return sel


# ---------------------------------------------------------------------------
# Madelung decomposition and velocity fields
# ---------------------------------------------------------------------------


@dataclass
class MadelungDecomposition:
    """Amplitude/density/phase-gradient split of a wavefunction.

    The phase enters only through its gradient (computed cellwise from
    grad(psi)/psi), which sidesteps 2 pi unwrapping entirely.
    """

    psi: ComplexField
    amplitude: RealField
    density: RealField
    phase_gradient: list[RealField]
    node_mask: np.ndarray
    eps_node: float

    @property
    def grid(self) -> Grid:
        return self.psi.grid


def decompose(
    psi: ComplexField,
    eps_node: float = DEFAULT_NODE_EPS,
    validate_norm: bool = True,
    hbar: float = 1.0,
) -> MadelungDecomposition:
    """Split psi into amplitude, density and phase gradient, masking nodes."""
    psi.check_finite()
    r = np.abs(psi.values)
    p = r * r
    pmax = p.max()
    if pmax == 0.0:
        raise QpotError("cannot decompose an identically zero wavefunction")
    if validate_norm:
        total = RealField(psi.grid, p).integrate()
        if abs(total - 1.0) > 1e-8:
            raise QpotError(f"wavefunction not normalized: integral |psi|^2 = {total!r}")
    mask = p < eps_node * pmax

    grads = gradient(psi)
    phase_grad = []
    for g in grads:
        ratio = np.zeros_like(p)
        np.divide(g.values.imag * psi.values.real - g.values.real * psi.values.imag, p, out=ratio, where=~mask)
        # Im(grad psi / psi) = (Im(g) Re(psi) - Re(g) Im(psi)) / |psi|^2
        phase_grad.append(RealField(psi.grid, hbar * ratio, label="gradS", mask=mask))

    return MadelungDecomposition(
        psi=psi,
        amplitude=RealField(psi.grid, r, label="R"),
        density=RealField(psi.grid, p, label="P"),
        phase_gradient=phase_grad,
        node_mask=mask,
        eps_node=eps_node,
    )


@dataclass
class VelocityFields:
    """Stochastic drift u, its osmotic balance -u, and the wavenumber k_u = (m/hbar) u.

    All three are derived from one density-ratio array, so the exact pointwise
    relations u_osmotic = D grad P / P and k_u = (m/hbar) u hold by construction.
    """

    grid: Grid
    u: list[RealField]
    u_osmotic: list[RealField]
    k_u: list[RealField]
    node_mask: np.ndarray

    @classmethod
    def from_decomposition(cls, dec: MadelungDecomposition, c: PhysicalConstants) -> "VelocityFields":
        g = density_log_gradient(dec)
        return cls.from_log_gradient(dec.grid, g, c, dec.node_mask)

    @classmethod
    def from_log_gradient(
        cls, grid: Grid, grad_p_over_p: Sequence[np.ndarray], c: PhysicalConstants, node_mask: np.ndarray
    ) -> "VelocityFields":
        u, ubar, k = [], [], []
        for comp in grad_p_over_p:
            u_vals = -(c.hbar / (2.0 * c.mass)) * comp
            u.append(RealField(grid, u_vals, label="u", mask=node_mask))
            ubar.append(RealField(grid, -u_vals, label="u_osmotic", mask=node_mask))
            k.append(RealField(grid, -0.5 * comp, label="k_u", mask=node_mask))
        return cls(grid=grid, u=u, u_osmotic=ubar, k_u=k, node_mask=node_mask)


def density_log_gradient(dec: MadelungDecomposition) -> list[np.ndarray]:
    """grad P / P off nodes (zeros on the mask)."""
    out = []
    for g in gradient(dec.density):
        ratio = np.zeros_like(dec.density.values)
        np.divide(g.values, dec.density.values, out=ratio, where=~dec.node_mask)
        out.append(ratio)
    return out


# ---------------------------------------------------------------------------
# Array-level form evaluators (shared by the field ops and the analytic audits)
# ---------------------------------------------------------------------------


def canonical_from_amplitude(r: np.ndarray, lap_r: np.ndarray, c: PhysicalConstants, mask=None) -> np.ndarray:
    """Amplitude-curvature form -(hbar^2/2m) lap(R)/R."""
    out = np.zeros_like(r, dtype=float)
    where = ~mask if mask is not None else r != 0
    np.divide(lap_r, r, out=out, where=where)
    return -(c.hbar**2) / (2.0 * c.mass) * out


def canonical_from_density(
    p: np.ndarray, grad_p: Sequence[np.ndarray], lap_p: np.ndarray, c: PhysicalConstants, mask=None
) -> np.ndarray:
    """Density form (hbar^2/4m) [ (1/2)(grad P/P)^2 - lap(P)/P ]."""
    where = ~mask if mask is not None else p != 0
    sq = np.zeros_like(p, dtype=float)
    for comp in grad_p:
        ratio = np.zeros_like(p, dtype=float)
        np.divide(comp, p, out=ratio, where=where)
        sq += ratio * ratio
    lap_ratio = np.zeros_like(p, dtype=float)
    np.divide(lap_p, p, out=lap_ratio, where=where)
    return (c.hbar**2) / (4.0 * c.mass) * (0.5 * sq - lap_ratio)


def velocity_form_momentum(
    u: Sequence[np.ndarray], div_u: np.ndarray, c: PhysicalConstants
) -> np.ndarray:
    """Drift-velocity rendering m u.u/2 - (hbar/2) div u, exactly as printed."""
    sq = sum(comp * comp for comp in u)
    return 0.5 * c.mass * sq - 0.5 * c.hbar * div_u


def velocity_form_wavenumber(
    k_u: Sequence[np.ndarray], div_k: np.ndarray, c: PhysicalConstants
) -> np.ndarray:
    """Wavenumber rendering (hbar^2/2m)(k_u.k_u - div k_u), exactly as printed."""
    sq = sum(comp * comp for comp in k_u)
    return (c.hbar**2) / (2.0 * c.mass) * (sq - div_k)


def thermo_form(
    grad_q_over_e: Sequence[np.ndarray], lap_q_over_e: np.ndarray, c: PhysicalConstants
) -> np.ndarray:
    """Heat rendering (hbar^2/4m) [ (1/2)(grad Q/hw)^2 - lap(Q)/hw ]."""
    sq = sum(comp * comp for comp in grad_q_over_e)
    return (c.hbar**2) / (4.0 * c.mass) * (0.5 * sq - lap_q_over_e)


# ---------------------------------------------------------------------------
# Heat field
# ---------------------------------------------------------------------------


@dataclass
class HeatField:
    """Heat field tied to a density by P = P_ref exp(-Q / (hbar omega)).

    `direction` selects the audited reading of the derivatives over the
    energy quantum hbar*omega:

      forward  grad Q/hw = -grad P / P and lap Q/hw = -lap(ln P)
               (honest derivatives of the log-density heat field);
      osmotic  grad Q/hw = +grad P / P and lap Q/hw = +lap(P)/P
               (dissipative-branch substitution of density ratios).

    Fields built from a raw heat sample (`from_heat`) differentiate that
    sample directly, whatever the direction.
    """

    grid: Grid
    qhat: RealField  # ln(P / P_ref), dimensionless
    direction: str
    hbar: float
    omega: float
    density: RealField | None = None
    node_mask: np.ndarray | None = None
    raw_heat: RealField | None = None
    meta: dict = dc_field(default_factory=dict)

    DIRECTIONS = ("forward", "osmotic")

    def __post_init__(self):
        if self.direction not in self.DIRECTIONS:
            raise QpotError(f"unknown heat-flow direction {self.direction!r}")
        if self.node_mask is None:
            self.node_mask = np.zeros(self.grid.shape, dtype=bool)

    @property
    def energy(self) -> float:
        return self.hbar * self.omega

    @property
    def sign(self) -> float:
        """Sign s with Q = s * hbar omega * qhat (forward: -1, osmotic: +1)."""
        return -1.0 if self.direction == "forward" else 1.0

    @classmethod
    def from_density(
        cls,
        p: RealField,
        c: PhysicalConstants,
        direction: str = "forward",
        reference="max",
        eps_node: float = DEFAULT_NODE_EPS,
    ) -> "HeatField":
        """Build the heat field of a density; `reference` is a field, a scalar,
        or "max" for the scalar max-density option (avoids initial-node division)."""
        vals = p.values
        mask = vals < eps_node * vals.max()
        if isinstance(reference, RealField):
            ref = reference.values
            mask = mask | (ref < eps_node * ref.max())
        elif reference == "max":
            ref = float(vals.max())
        else:
            ref = float(reference)
        qhat = np.zeros_like(vals)
        ratio = np.ones_like(vals)
        np.divide(vals, ref, out=ratio, where=~mask)
        np.log(ratio, out=qhat, where=~mask)
        return cls(
            grid=p.grid,
            qhat=RealField(p.grid, qhat, label="Qhat", mask=mask),
            direction=direction,
            hbar=c.hbar,
            omega=c.omega,
            density=p,
            node_mask=mask,
        )

    @classmethod
    def from_heat(cls, q: RealField, c: PhysicalConstants, direction: str = "forward") -> "HeatField":
        sign = -1.0 if direction == "forward" else 1.0
        qhat = RealField(q.grid, sign * q.values / (c.hbar * c.omega), label="Qhat")
        return cls(
            grid=q.grid,
            qhat=qhat,
            direction=direction,
            hbar=c.hbar,
            omega=c.omega,
            raw_heat=q,
        )

    def heat(self) -> RealField:
        """Dimensional heat field Q = sign * hbar omega * qhat."""
        if self.raw_heat is not None:
            return self.raw_heat
        return RealField(self.grid, self.sign * self.energy * self.qhat.values, label="Q", mask=self.node_mask)

    def grad_over_energy(self) -> list[np.ndarray]:
        """Components of grad Q / (hbar omega) under this direction's reading."""
        if self.raw_heat is not None:
            return [g.values / self.energy for g in gradient(self.raw_heat)]
        out = []
        for g in gradient(self.density):
            ratio = np.zeros_like(self.density.values)
            np.divide(g.values, self.density.values, out=ratio, where=~self.node_mask)
            out.append(self.sign * ratio)
        return out

    def lap_over_energy(self) -> np.ndarray:
        """lap Q / (hbar omega) under this direction's reading."""
        if self.raw_heat is not None:
            return laplacian(self.raw_heat).values / self.energy
        p = self.density.values
        where = ~self.node_mask
        lap_ratio = np.zeros_like(p)
        np.divide(laplacian(self.density).values, p, out=lap_ratio, where=where)
        if self.direction == "osmotic":
            return lap_ratio
        sq = np.zeros_like(p)
        for g in gradient(self.density):
            ratio = np.zeros_like(p)
            np.divide(g.values, p, out=ratio, where=where)
            sq += ratio * ratio
        return -(lap_ratio - sq)


def heat_field_stack(
    pstack: FieldStack,
    c: PhysicalConstants,
    direction: str = "forward",
    reference: str = "initial",
    eps_node: float = DEFAULT_NODE_EPS,
) -> list[HeatField]:
    """Heat fields for every sample of a density stack.

    reference="initial" uses the pointwise t=0 density; "max" uses the
    scalar per-sample maximum.
    """
    ref = pstack.fields[0] if reference == "initial" else "max"
    return [HeatField.from_density(p, c, direction=direction, reference=ref, eps_node=eps_node) for p in pstack.fields]


def heat_rate_over_density(pstack: FieldStack, c: PhysicalConstants, index: int) -> RealField:
    """dQ_forward/dt computed through the defining density relation.

    Differentiating P = P_ref exp(-Q/(hbar omega)) in time gives
    dQ/dt = -hbar omega (dP/dt)/P; using that route makes the rate identity
    dP/dt = -(P/hbar omega) dQ/dt hold to roundoff by construction.
    """
    dpdt = time_derivative(pstack, index)
    p = pstack.fields[index].values
    mask = p < DEFAULT_NODE_EPS * p.max()
    out = np.zeros_like(p)
    np.divide(dpdt.values, p, out=out, where=~mask)
    return RealField(pstack.grid, -c.hbar * c.omega * out, label="dQ/dt", mask=mask)


# ---------------------------------------------------------------------------
# Quantum-potential operations
# ---------------------------------------------------------------------------


def quantum_potential_canonical(
    dec: MadelungDecomposition, c: PhysicalConstants, boundary_margin: int = 3
) -> RealField:
    """Canonical quantum potential (amplitude form), with the density form as metadata.

    Returns the amplitude-curvature field; meta["form_gap_max"] records the
    worst pointwise gap between the two printed forms over the interior and
    away from (dilated) node cells.
    """
    mask = dec.node_mask
    u_amp = canonical_from_amplitude(dec.amplitude.values, laplacian(dec.amplitude).values, c, mask=mask)
    u_den = canonical_from_density(
        dec.density.values,
        [g.values for g in gradient(dec.density)],
        laplacian(dec.density).values,
        c,
        mask=mask,
    )
    ok = interior_region(dec.grid.shape, boundary_margin) & ~dilate_mask(mask, 2 + boundary_margin)
    gap = float(np.max(np.abs(u_amp[ok] - u_den[ok]))) if ok.any() else float("nan")
    out = RealField(dec.grid, np.where(mask, 0.0, u_amp), label="U", mask=mask)
    out.meta["form_gap_max"] = gap
    return out


def quantum_potential_velocity_form(
    vel: VelocityFields, c: PhysicalConstants
) -> tuple[RealField, RealField]:
    """Both printed velocity renderings of the quantum potential.

    Returns (momentum form, wavenumber form); each field's
    meta["form_gap_max"] records their worst pointwise disagreement.
    These evaluate to the negative of the canonical form; the sign is a
    documented audit finding, not an implementation artifact.
    """
    mask = vel.node_mask
    div_u = divergence(vel.u).values
    div_k = divergence(vel.k_u).values
    f_u = velocity_form_momentum([f.values for f in vel.u], div_u, c)
    f_k = velocity_form_wavenumber([f.values for f in vel.k_u], div_k, c)
    gap_region = ~dilate_mask(mask, 2)
    gap = float(np.max(np.abs(f_u[gap_region] - f_k[gap_region]))) if gap_region.any() else float("nan")
    a = RealField(vel.grid, np.where(mask, 0.0, f_u), label="U_velocity", mask=mask, meta={"form_gap_max": gap})
    b = RealField(vel.grid, np.where(mask, 0.0, f_k), label="U_wavenumber", mask=mask, meta={"form_gap_max": gap})
    return a, b


def quantum_potential_thermo(h: HeatField, c: PhysicalConstants) -> RealField:
    """Heat rendering of the quantum potential for the field's direction.

    meta["expected_sign_vs_canonical"] records the audited orientation:
    -1 for forward, +1 for osmotic.
    """
    vals = thermo_form(h.grad_over_energy(), h.lap_over_energy(), c)
    out = RealField(
        h.grid,
        np.where(h.node_mask, 0.0, vals),
        label=f"U_thermo_{h.direction}",
        mask=h.node_mask,
    )
    out.meta["expected_sign_vs_canonical"] = -1.0 if h.direction == "forward" else 1.0
    return out


def quantum_potential_thermalized(
    q: RealField, c: PhysicalConstants, energy_reference: str = "constant", eps: float = 1e-12
) -> RealField:
    """Period-averaged quantum potential -(hbar^2/2m) lap(Q) / E.

    energy_reference="constant" divides by the quantum hbar*omega;
    "field" divides by Q itself pointwise (the fully thermalized box
    convention, where the heat field carries the whole energy).
    """
    q.check_finite()
    lap_q = laplacian(q).values
    if energy_reference == "constant":
        vals = -(c.hbar**2) / (2.0 * c.mass) * lap_q / (c.hbar * c.omega)
        mask = None
    elif energy_reference == "field":
        mask = np.abs(q.values) < eps * np.max(np.abs(q.values))
        vals = np.zeros_like(lap_q)
        np.divide(lap_q, q.values, out=vals, where=~mask)
        vals *= -(c.hbar**2) / (2.0 * c.mass)
        vals[mask] = 0.0
    else:
        raise QpotError(f"unknown energy_reference {energy_reference!r}")
    return RealField(q.grid, vals, label="U_mean", mask=mask)


def vanishing_potential_residual(h: HeatField, c: PhysicalConstants) -> RealField:
    """Residual lap(Q) - (grad Q)^2 / (2 hbar omega); zero exactly where the
    heat rendering of the quantum potential vanishes.

    Scaled by -(hbar^2 / (4 m hbar omega)) it reproduces the heat rendering
    itself (hence -/+ the canonical form per direction).
    """
    g2 = sum(comp * comp for comp in h.grad_over_energy())
    vals = h.energy * (h.lap_over_energy() - 0.5 * g2)
    return RealField(h.grid, np.where(h.node_mask, 0.0, vals), label="vanishing_residual", mask=h.node_mask)


def heat_equation_residual(
    qstack: FieldStack, c: PhysicalConstants
) -> tuple[FieldStack, FieldStack]:
    """Residual lap(Q) - (1/D) dQ/dt per sample, plus its quantum-potential rendering.

    The second stack is -(hbar / (4 omega m)) times the residual, the heat
    form the quantum potential takes when the diffusion balance is inserted.
    """
    if len(qstack) < 3:
        raise FieldError("heat-equation residual needs at least 3 time samples")
    d = c.diffusivity
    res_fields, u_fields = [], []
    for i in range(len(qstack)):
        res = laplacian(qstack.fields[i]).values - time_derivative(qstack, i).values / d
        res_fields.append(RealField(qstack.grid, res, label="heat_residual"))
        u_fields.append(
            RealField(qstack.grid, -(c.hbar / (4.0 * c.omega * c.mass)) * res, label="U_from_heat")
        )
    return (
        FieldStack(qstack.grid, qstack.times.copy(), res_fields),
        FieldStack(qstack.grid, qstack.times.copy(), u_fields),
    )


def momentum_fluctuation(
    dec: MadelungDecomposition, c: PhysicalConstants
) -> tuple[list[RealField], RealField]:
    """Momentum fluctuation -(hbar/2) grad P / P and its kinetic energy."""
    comps = []
    e_kin = np.zeros(dec.grid.shape)
    for ratio in density_log_gradient(dec):
        dp = -0.5 * c.hbar * ratio
        comps.append(RealField(dec.grid, dp, label="delta_p", mask=dec.node_mask))
        e_kin += dp * dp
    e_field = RealField(dec.grid, e_kin / (2.0 * c.mass), label="delta_E_kin", mask=dec.node_mask)
    return comps, e_field


def hamilton_jacobi_residual(
    psistack: FieldStack,
    potential: PotentialSpec | np.ndarray,
    c: PhysicalConstants,
    eps_node: float = DEFAULT_NODE_EPS,
    max_phase_increment: float = np.pi / 2,
) -> FieldStack:
    """Residual of dS/dt + (grad S)^2/2m + V + U on the interior time samples.

    dS/dt comes from per-cell phase increments arg(psi(t+dt)/psi(t)), which
    stay unambiguous as long as each increment is below pi; increments above
    `max_phase_increment` abort (aliasing risk).
    """
    nt = len(psistack)
    if nt < 3:
        raise FieldError("Hamilton-Jacobi residual needs at least 3 time samples")
    if isinstance(potential, PotentialSpec):
        v = potential_values(potential, psistack.grid)
    else:
        v = np.asarray(potential, dtype=float)

    res_fields, times = [], []
    for i in range(1, nt - 1):
        psi_m, psi_0, psi_p = (psistack.fields[j].values for j in (i - 1, i, i + 1))
        dec = decompose(psistack.fields[i], eps_node=eps_node, validate_norm=False, hbar=c.hbar)
        mask = dec.node_mask
        with np.errstate(divide="ignore", invalid="ignore"):
            inc_p = np.angle(np.where(mask, 1.0, psi_p) / np.where(mask, 1.0, psi_0))
            inc_m = np.angle(np.where(mask, 1.0, psi_0) / np.where(mask, 1.0, psi_m))
        worst = max(np.abs(inc_p[~mask]).max(), np.abs(inc_m[~mask]).max()) if (~mask).any() else 0.0
        if worst > max_phase_increment:
            raise QpotError(
                f"phase increment {worst:.3f} rad exceeds {max_phase_increment:.3f}; "
                "sample the evolution more finely"
            )
        ds_dt = c.hbar * (inc_p + inc_m) / (psistack.times[i + 1] - psistack.times[i - 1])

        kinetic = sum(g.values**2 for g in dec.phase_gradient) / (2.0 * c.mass)
        u = quantum_potential_canonical(dec, c)
        residual = ds_dt + kinetic + v + u.values
        out_mask = dilate_mask(mask, 1)
        res_fields.append(
            RealField(psistack.grid, np.where(out_mask, 0.0, residual), label="hj_residual", mask=out_mask)
        )
        times.append(psistack.times[i])
    return FieldStack(psistack.grid, np.asarray(times), res_fields)
