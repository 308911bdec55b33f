"""Declarative scenario configs, the four reference scenarios, stripe detection,
and all file export surfaces (CSV stacks, trajectory CSV, stripes/audit JSON,
manifest).

Scenario outputs are deterministic: a fixed config and tool version produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
import shutil
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .bohmian import TrajectoryEnsemble, integrate_trajectories, seed_from_density
from .constants import PhysicalConstants
from .errors import ConfigError, QpotError, ScenarioError
from .fields import FieldStack, Grid, RealField, write_field_csv
from .qpotential import HeatField, decompose, quantum_potential_canonical
from .schrodinger import (
    PotentialSpec,
    WavePacketSpec,
    crank_nicolson_evolve,
    gaussian_packet,
    superpose,
)

SCENARIO_NAMES = ("barrier", "crossing", "double_slit", "phase_pair", "box", "custom")

# ---------------------------------------------------------------------------
# Config schema
# ---------------------------------------------------------------------------

_SCHEMA = {
    "": {"name", "description"},
    "grid": {"min", "max", "points"},
    "constants": {"hbar", "mass", "omega"},
    "packets": {"center", "width", "wavenumber", "weight", "phase"},
    "potential": {"kind", "height", "left", "right", "smoothing_cells"},
    "evolution": {"dt", "steps", "output_stride", "mode"},
    "trajectories": {"count", "method", "seed", "substeps"},
    "analysis": {
        "compute_quantum_potential",
        "compute_heat_field",
        "detect_stripes",
        "run_audits",
        "stripe_prominence",
        "boundary_margin",
        "eps_node",
    },
    "scenario": {
        "phase_difference",
        "front_window",
        "center_window",
        "box_length",
        "mode_index",
        "box_points",
        "full_2d",
    },
}

_DEFAULTS = {
    "constants": {"hbar": 1.0, "mass": 1.0, "omega": 1.0},
    "evolution": {"dt": 1e-3, "steps": 0, "output_stride": 1, "mode": "analytic"},
    "trajectories": {"count": 0, "method": "quantile", "seed": 0, "substeps": 0},
    "analysis": {
        "compute_quantum_potential": True,
        "compute_heat_field": True,
        "detect_stripes": True,
        "run_audits": True,
        "stripe_prominence": 0.05,
        "boundary_margin": 3,
        "eps_node": 1e-8,
    },
    "scenario": {},
}


@dataclass
class ScenarioConfig:
    """Validated scenario description (see the preset files for the format)."""

    name: str
    raw: dict
    grid: Grid | None
    constants: PhysicalConstants
    packets: list[WavePacketSpec]
    potential: PotentialSpec
    evolution: dict
    trajectories: dict
    analysis: dict
    scenario: dict
    description: str = ""

    def canonical_dict(self) -> dict:
        return self.raw

    def config_hash(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _check_keys(table: dict, section: str) -> None:
    allowed = _SCHEMA[section]
    unknown = set(table) - allowed
    if unknown:
        where = f"[{section}]" if section else "top level"
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}; allowed: {sorted(allowed)}")


def parse_config(data: dict) -> ScenarioConfig:
    """Validate a parsed TOML table into a ScenarioConfig (unknown keys are errors)."""
    top = {k: v for k, v in data.items() if not isinstance(v, (dict, list))}
    _check_keys(top, "")
    name = data.get("name")
    if name not in SCENARIO_NAMES:
        raise ConfigError(f"scenario name must be one of {SCENARIO_NAMES}, got {name!r}")

    tables = {}
    for section in ("grid", "constants", "potential", "evolution", "trajectories", "analysis", "scenario"):
        table = data.get(section, {})
        if not isinstance(table, dict):
            raise ConfigError(f"[{section}] must be a table")
        _check_keys(table, section)
        merged = dict(_DEFAULTS.get(section, {}))
        merged.update(table)
        tables[section] = merged
    extra = set(data) - set(top) - {"grid", "constants", "potential", "evolution", "trajectories", "analysis", "scenario", "packets"}
    if extra:
        raise ConfigError(f"unknown section(s) {sorted(extra)}")

    packets = []
    for i, ptab in enumerate(data.get("packets", [])):
        _check_keys(ptab, "packets")
        try:
            packets.append(WavePacketSpec(**ptab))
        except (TypeError, QpotError) as exc:
            raise ConfigError(f"packet #{i}: {exc}") from exc

    try:
        constants = PhysicalConstants(**tables["constants"])
    except QpotError as exc:
        raise ConfigError(str(exc)) from exc

    grid = None
    if tables["grid"]:
        gt = tables["grid"]
        missing = {"min", "max", "points"} - set(gt)
        if missing:
            raise ConfigError(f"[grid] missing {sorted(missing)}")
        grid = Grid.line(float(gt["min"]), float(gt["max"]), int(gt["points"]))

    pot_tab = dict(tables["potential"])
    kind = pot_tab.pop("kind", "free")
    try:
        if kind == "free":
            potential = PotentialSpec.free()
        elif kind == "square_barrier":
            potential = PotentialSpec.barrier(
                float(pot_tab.get("height", 0.0)),
                float(pot_tab.get("left", 0.0)),
                float(pot_tab.get("right", 0.0)),
                int(pot_tab.get("smoothing_cells", 0)),
            )
        elif kind == "infinite_well":
            potential = PotentialSpec.infinite_well(float(pot_tab.get("left", 0.0)), float(pot_tab.get("right", 0.0)))
        else:
            raise ConfigError(f"unknown potential kind {kind!r}")
    except QpotError as exc:
        raise ConfigError(str(exc)) from exc

    ev = tables["evolution"]
    if not ev["dt"] > 0:
        raise ConfigError("[evolution] dt must be positive")
    if ev["mode"] not in ("analytic", "crank_nicolson", "adi_2d"):
        raise ConfigError(f"unknown evolution mode {ev['mode']!r}")

    cfg = ScenarioConfig(
        name=name,
        raw=data,
        grid=grid,
        constants=constants,
        packets=packets,
        potential=potential,
        evolution=ev,
        trajectories=tables["trajectories"],
        analysis=tables["analysis"],
        scenario=tables["scenario"],
        description=str(data.get("description", "")),
    )
    _validate_scenario_requirements(cfg)
    if cfg.name == "phase_pair":
        # the declared phase difference is applied to the second packet
        a, b = cfg.packets
        dphi = float(cfg.scenario["phase_difference"])
        cfg.packets[1] = WavePacketSpec(b.center, b.width, b.wavenumber, b.weight, a.phase + dphi)
    return cfg


def _validate_scenario_requirements(cfg: ScenarioConfig) -> None:
    need_grid = cfg.name != "box"
    if need_grid and cfg.grid is None:
        raise ConfigError(f"scenario {cfg.name!r} needs a [grid] section")
    if cfg.name in ("barrier", "crossing", "double_slit", "phase_pair") and not cfg.packets:
        raise ConfigError(f"scenario {cfg.name!r} needs at least one [[packets]] entry")
    if cfg.name in ("crossing", "double_slit", "phase_pair") and len(cfg.packets) < 2:
        raise ConfigError(f"scenario {cfg.name!r} needs two packets")
    if cfg.name == "phase_pair" and "phase_difference" not in cfg.scenario:
        raise ConfigError("phase_pair requires [scenario] phase_difference")
    if cfg.name == "barrier" and cfg.potential.kind != "square_barrier":
        raise ConfigError("barrier scenario requires a square_barrier potential")
    if cfg.name == "box":
        for key in ("box_length", "mode_index"):
            if key not in cfg.scenario:
                raise ConfigError(f"box scenario requires [scenario] {key}")
    if cfg.grid is not None:
        lo, hi = cfg.grid.axes[0].lo, cfg.grid.axes[0].hi
        for p in cfg.packets:
            if not lo < p.center < hi:
                raise ConfigError(f"packet center {p.center} outside grid extent [{lo}, {hi}]")
        if cfg.potential.kind != "free" and not (lo <= cfg.potential.left < cfg.potential.right <= hi):
            raise ConfigError("potential extent must lie inside the grid")


def load_config(path) -> ScenarioConfig:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data)


def preset_path(name: str) -> Path:
    path = Path(__file__).parent / "presets" / f"{name}.toml"
    if not path.exists():
        available = sorted(p.stem for p in (Path(__file__).parent / "presets").glob("*.toml"))
        raise ConfigError(f"unknown preset {name!r}; available: {available}")
    return path


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply dotted key=value overrides (values parsed as TOML literals)."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        key, _, raw_val = item.partition("=")
        try:
            value = tomllib.loads(f"v = {raw_val}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw_val
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} traverses a non-table")
        node[parts[-1]] = value
    return data


# ---------------------------------------------------------------------------
# Stripe detection
# ---------------------------------------------------------------------------


@dataclass
class StripeExtremum:
    position: float
    value: float
    kind: str  # "accumulation" or "depletion"


@dataclass
class TimeStripes:
    time: float
    extrema: list[StripeExtremum]
    stripe_count: int
    mean_spacing: float | None

    def __post_init__(self):
        pos = [e.position for e in self.extrema]
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise QpotError("stripe extrema positions must strictly increase")
        kinds = [e.kind for e in self.extrema]
        if any(a == b for a, b in zip(kinds, kinds[1:])):
            raise QpotError("stripe extrema must alternate in kind")


@dataclass
class StripeReport:
    entries: list[TimeStripes] = dc_field(default_factory=list)
    interaction_index: int | None = None
    interaction_time: float | None = None

    def to_dict(self) -> dict:
        return {
            "interaction_index": self.interaction_index,
            "interaction_time": self.interaction_time,
            "entries": [
                {
                    "time": e.time,
                    "stripe_count": e.stripe_count,
                    "mean_spacing": e.mean_spacing,
                    "extrema": [
                        {"position": x.position, "value": x.value, "kind": x.kind} for x in e.extrema
                    ],
                }
                for e in self.entries
            ],
        }


def detect_stripes(
    p: RealField,
    axis: int = 0,
    prominence: float = 0.05,
    window: tuple[float, float] | None = None,
    time: float = 0.0,
) -> TimeStripes:
    """Alternating accumulation/depletion extrema of a density profile.

    Local maxima above `prominence` (a fraction of max P) are accumulation
    zones; the minimum between two kept maxima is a depletion zone.  A flat
    or monotone profile yields an empty report.
    """
    if not 0.0 < prominence < 1.0:
        raise QpotError("prominence must lie in (0, 1)")
    if p.grid.dimension == 1:
        profile = p.values
        x = p.grid.coords(0)
    else:
        other = 1 - axis
        profile = p.values.mean(axis=other)
        x = p.grid.coords(axis)
    if window is not None:
        sel = (x >= window[0]) & (x <= window[1])
        profile, x = profile[sel], x[sel]
    if len(profile) < 3 or profile.max() <= 0:
        return TimeStripes(time, [], 0, None)

    peaks, _ = find_peaks(profile, prominence=prominence * profile.max())
    extrema: list[StripeExtremum] = []
    for i, pk in enumerate(peaks):
        extrema.append(StripeExtremum(float(x[pk]), float(profile[pk]), "accumulation"))
        if i + 1 < len(peaks):
            lo, hi = pk, peaks[i + 1]
            j = lo + int(np.argmin(profile[lo : hi + 1]))
            extrema.append(StripeExtremum(float(x[j]), float(profile[j]), "depletion"))
    acc_pos = [e.position for e in extrema if e.kind == "accumulation"]
    spacing = float(np.mean(np.diff(acc_pos))) if len(acc_pos) >= 2 else None
    return TimeStripes(time, extrema, len(acc_pos), spacing)


# ---------------------------------------------------------------------------
# Scenario pipeline
# ---------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    out_dir: Path
    psi_stack: FieldStack
    density_stack: FieldStack
    potential_stack: FieldStack | None
    heat_stack: FieldStack | None
    ensemble: TrajectoryEnsemble | None
    stripes: StripeReport | None
    audit: dict
    manifest: dict


def _output_times(cfg: ScenarioConfig) -> np.ndarray:
    ev = cfg.evolution
    steps = int(ev["steps"])
    if steps <= 0:
        return np.array([0.0])
    n_out = max(1, steps // max(1, int(ev["output_stride"])))
    return np.linspace(0.0, ev["dt"] * steps, n_out + 1)


def _evolve_stage(cfg: ScenarioConfig) -> FieldStack:
    c, grid = cfg.constants, cfg.grid
    mode = cfg.evolution["mode"]
    if cfg.name == "box":
        return _box_psi_stack(cfg)
    if mode == "analytic":
        if cfg.potential.kind != "free":
            raise ConfigError("analytic evolution only supports free potentials")
        times = _output_times(cfg)
        fields = [superpose([(p, t) for p in cfg.packets], c, grid) for t in times]
        return FieldStack(grid, times, fields)
    if mode == "crank_nicolson":
        psi0 = superpose([(p, 0.0) for p in cfg.packets], c, grid)
        return crank_nicolson_evolve(
            psi0, cfg.potential, c, cfg.evolution["dt"], int(cfg.evolution["steps"]),
            output_stride=int(cfg.evolution["output_stride"]),
        )
    raise ConfigError(f"evolution mode {mode!r} not usable for scenario {cfg.name!r}")


def _box_psi_stack(cfg: ScenarioConfig) -> FieldStack:
    """Box scenario state: the stationary mode with its energy phase."""
    c = cfg.constants
    length = float(cfg.scenario["box_length"])
    n_mode = int(cfg.scenario["mode_index"])
    points = int(cfg.scenario.get("box_points", 2048))
    grid = Grid.line(0.0, length, points)
    x = grid.coords(0)
    k = n_mode * math.pi / length
    energy = c.hbar**2 * k * k / (2.0 * c.mass)
    profile = math.sqrt(2.0 / length) * np.sin(k * x)
    times = _output_times(cfg)
    fields = []
    for t in times:
        from .fields import ComplexField

        vals = profile * np.exp(-1j * energy * t / c.hbar)
        fld = ComplexField(grid, vals, label="psi")
        nrm = fld.norm()
        fld.values /= nrm
        fields.append(fld)
    return FieldStack(grid, times, fields)


def _mirror_symmetric(cfg: ScenarioConfig) -> float | None:
    """Midpoint of a mirror-symmetric two-packet state, else None."""
    if len(cfg.packets) != 2:
        return None
    a, b = cfg.packets
    if (
        abs(a.width - b.width) < 1e-12
        and abs(a.weight - b.weight) < 1e-12
        and abs(a.wavenumber + b.wavenumber) < 1e-12
        and abs(a.phase - b.phase) < 1e-12
    ):
        return 0.5 * (a.center + b.center)
    return None


def run_scenario(cfg: ScenarioConfig, out_dir, keep_partial: bool = False) -> ScenarioResult:
    """Run the scenario pipeline and export all artifacts under `out_dir`."""
    out = Path(out_dir)
    created = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _run_scenario_inner(cfg, out)
    except Exception:
        if not keep_partial:
            if created:
                shutil.rmtree(out, ignore_errors=True)
            else:
                for sub in ("fields", "trajectories.csv", "stripes.json", "audit.json", "manifest.json", "config.json"):
                    target = out / sub
                    if target.is_dir():
                        shutil.rmtree(target, ignore_errors=True)
                    elif target.exists():
                        target.unlink()
        raise


def _run_scenario_inner(cfg: ScenarioConfig, out: Path) -> ScenarioResult:
    c = cfg.constants
    analysis = cfg.analysis
    written: list[Path] = []

    def stage(name):
        class _Ctx:
            def __enter__(self):
                return None

            def __exit__(self, exc_type, exc, tb):
                if exc is not None and not isinstance(exc, ScenarioError):
                    raise ScenarioError(name, str(exc)) from exc
                return False

        return _Ctx()

    with stage("evolve"):
        psi_stack = _evolve_stage(cfg)
    grid = psi_stack.grid

    with stage("fields"):
        fields_dir = out / "fields"
        fields_dir.mkdir(exist_ok=True)
        p_fields, u_fields, q_fields = [], [], []
        p0 = None
        for i, psi in enumerate(psi_stack.fields):
            dec = decompose(psi, eps_node=analysis["eps_node"], hbar=c.hbar)
            p = dec.density
            p.label = "P"
            if p0 is None:
                p0 = p
            p_fields.append(p)
            if analysis["compute_quantum_potential"]:
                u_fields.append(quantum_potential_canonical(dec, c, boundary_margin=analysis["boundary_margin"]))
            if analysis["compute_heat_field"]:
                hf = HeatField.from_density(p, c, direction="forward", reference=p0, eps_node=analysis["eps_node"])
                q_fields.append(hf.qhat)
        density_stack = FieldStack(grid, psi_stack.times.copy(), p_fields)
        potential_stack = FieldStack(grid, psi_stack.times.copy(), u_fields) if u_fields else None
        heat_stack = FieldStack(grid, psi_stack.times.copy(), q_fields) if q_fields else None
        for label, stack in (("P", density_stack), ("U", potential_stack), ("Qhat", heat_stack)):
            if stack is None:
                continue
            for i, fld in enumerate(stack.fields):
                path = fields_dir / f"{label}_{i:04d}.csv"
                write_field_csv(fld, path, time=float(stack.times[i]))
                written.append(path)
        index = {
            "times": [float(t) for t in psi_stack.times],
            "stacks": {
                label: [f"fields/{label}_{i:04d}.csv" for i in range(len(psi_stack.times))]
                for label, stack in (("P", density_stack), ("U", potential_stack), ("Qhat", heat_stack))
                if stack is not None
            },
        }
        index_path = out / "fields" / "index.json"
        _write_json(index_path, index)
        written.append(index_path)

    ensemble = None
    traj_count = int(cfg.trajectories["count"])
    if traj_count > 0:
        with stage("trajectories"):
            seeds = seed_from_density(
                density_stack.fields[0],
                traj_count,
                method=cfg.trajectories["method"],
                seed=cfg.trajectories.get("seed"),
            )
            ensemble = integrate_trajectories(
                psi_stack, seeds, c,
                eps_node=analysis["eps_node"],
                boundary_margin=analysis["boundary_margin"],
                substeps=int(cfg.trajectories.get("substeps", 0)),
            )
            traj_path = out / "trajectories.csv"
            ensemble.write_csv(traj_path)
            written.append(traj_path)

    stripes = None
    if analysis["detect_stripes"]:
        with stage("stripes"):
            stripes = _stripe_stage(cfg, density_stack)
            stripe_path = out / "stripes.json"
            _write_json(stripe_path, stripes.to_dict())
            written.append(stripe_path)

    audit: dict = {"scenario": cfg.name, "config_hash": cfg.config_hash(), "version": __version__}
    if analysis["run_audits"]:
        with stage("audits"):
            audit.update(_audit_stage(cfg, density_stack, potential_stack, ensemble, stripes))
            audit_path = out / "audit.json"
            _write_json(audit_path, audit)
            written.append(audit_path)

    with stage("manifest"):
        config_path = out / "config.json"
        _write_json(config_path, cfg.raw)
        written.append(config_path)
        manifest = {
            "tool": "qpot",
            "version": __version__,
            "scenario": cfg.name,
            "config_hash": cfg.config_hash(),
            "files": sorted(
                (
                    {
                        "path": str(p.relative_to(out)),
                        "sha256": hashlib.sha256(p.read_bytes()).hexdigest(),
                        "bytes": p.stat().st_size,
                    }
                    for p in written
                ),
                key=lambda row: row["path"],
            ),
        }
        _write_json(out / "manifest.json", manifest)

    return ScenarioResult(
        config=cfg,
        out_dir=out,
        psi_stack=psi_stack,
        density_stack=density_stack,
        potential_stack=potential_stack,
        heat_stack=heat_stack,
        ensemble=ensemble,
        stripes=stripes,
        audit=audit,
        manifest=manifest,
    )


def _stripe_stage(cfg: ScenarioConfig, density_stack: FieldStack) -> StripeReport:
    prom = cfg.analysis["stripe_prominence"]
    window = None
    weight_window = None
    if cfg.name == "barrier":
        front = float(cfg.scenario.get("front_window", 8.0))
        window = (cfg.potential.left - front, cfg.potential.left)
        weight_window = (cfg.potential.left - 2.0, cfg.potential.left)
    elif cfg.name in ("crossing", "phase_pair"):
        axis = _mirror_symmetric(cfg)
        center = axis if axis is not None else 0.5 * (cfg.packets[0].center + cfg.packets[1].center)
        half = float(cfg.scenario.get("center_window", 6.0))
        window = (center - half, center + half)
        weight_window = (center - 1.0, center + 1.0)

    report = StripeReport()
    x = density_stack.grid.coords(0)
    best_mass, best_idx = -1.0, 0
    for i, fld in enumerate(density_stack.fields):
        entry = detect_stripes(fld, prominence=prom, window=window, time=float(density_stack.times[i]))
        report.entries.append(entry)
        if weight_window is not None:
            sel = (x >= weight_window[0]) & (x <= weight_window[1])
            mass = float(np.trapezoid(fld.values[sel], x[sel]))
        else:
            mass = float(i == len(density_stack.fields) - 1)  # default: last sample
        if mass > best_mass:
            best_mass, best_idx = mass, i
    report.interaction_index = best_idx
    report.interaction_time = float(density_stack.times[best_idx])
    return report


def _audit_stage(
    cfg: ScenarioConfig,
    density_stack: FieldStack,
    potential_stack: FieldStack | None,
    ensemble: TrajectoryEnsemble | None,
    stripes: StripeReport | None,
) -> dict:
    audit: dict = {}
    c = cfg.constants

    if ensemble is not None:
        # inversions are genuine crossings; boundary-clamped trajectories may
        # tie without breaking the ordering property
        inversions = int(
            sum(
                0 if bool(np.all(np.diff(ensemble.positions[j]) >= 0)) else 1
                for j in range(len(ensemble.times))
            )
        )
        clamped = len({e["trajectory"] for e in ensemble.events if e["kind"] == "boundary_clamp"})
        audit["trajectories"] = {
            "count": ensemble.count,
            "incomplete": int(ensemble.incomplete.sum()),
            "ordering_violations": inversions,
            "boundary_clamped": clamped,
        }
        axis = _mirror_symmetric(cfg)
        if axis is not None:
            left = ensemble.seeds < axis - 1e-12
            crossings = int(np.sum(np.any(ensemble.positions[:, left] > axis + 1e-9, axis=0)))
            audit["trajectories"]["left_axis_crossings"] = crossings
            audit["trajectories"]["symmetry_axis"] = axis

    if stripes is not None and stripes.entries:
        at = stripes.entries[stripes.interaction_index]
        audit["stripes"] = {
            "interaction_time": stripes.interaction_time,
            "stripe_count": at.stripe_count,
            "mean_spacing": at.mean_spacing,
        }
        if cfg.name in ("crossing", "phase_pair"):
            k0 = max(abs(p.wavenumber) for p in cfg.packets)
            if k0 > 0:
                audit["stripes"]["fringe_spacing_expected"] = math.pi / k0

    if cfg.name == "box":
        audit["box"] = _box_audit(cfg, c)
    if cfg.name == "phase_pair":
        audit["phase_pair"] = _phase_pair_audit(cfg)
    return audit


def _box_audit(cfg: ScenarioConfig, c: PhysicalConstants) -> dict:
    from .dwf import box_mode, box_mode_residual, box_quantum_potential

    length = float(cfg.scenario["box_length"])
    n_mode = int(cfg.scenario["mode_index"])
    points = int(cfg.scenario.get("box_points", 2048))
    sol = box_mode(length, n_mode, c, verify_points=points)
    closed, numeric = box_quantum_potential(sol, c, points=points)
    usable = ~numeric.mask
    usable[: 5] = usable[-5:] = False
    rel_err = np.abs(numeric.values[usable] - closed) / closed
    res_analytic = box_mode_residual(sol, c, mode="analytic", points=points)
    res_fd = box_mode_residual(sol, c, mode="fd", points=points)
    scale = sol.normalization
    return {
        "U_closed_form": closed,
        "U_numeric_median": float(np.median(numeric.values[usable])),
        "U_numeric_max_rel_err": float(rel_err.max()),
        "eigen_residual_analytic": float(np.max(np.abs(res_analytic.values))) / scale,
        "eigen_residual_fd": float(np.max(np.abs(res_fd.values[5:-5]))) / scale,
        "dispersion_omega": sol.omega,
    }


def _phase_pair_audit(cfg: ScenarioConfig) -> dict:
    """Measured interference-node shift vs the two-wave oracle dphi / (2 k0)."""
    c = cfg.constants
    dphi = float(cfg.scenario["phase_difference"])
    k0 = max(abs(p.wavenumber) for p in cfg.packets)
    a, b = cfg.packets
    t_cross = _crossing_time(cfg)
    grid = cfg.grid

    def nodes_at(phase_offset: float) -> np.ndarray:
        pspec = WavePacketSpec(b.center, b.width, b.wavenumber, b.weight, a.phase + phase_offset)
        psi = superpose([(a, t_cross), (pspec, t_cross)], c, grid)
        prof = np.abs(psi.values) ** 2
        x = grid.coords(0)
        minima, _ = find_peaks(-prof, prominence=0.02 * prof.max())
        center = 0.5 * (a.center + b.center)
        keep = np.abs(x[minima] - center) < 3.0
        return x[minima][keep]

    base = nodes_at(0.0)
    shifted = nodes_at(dphi)
    period = math.pi / k0
    if len(base) == 0 or len(shifted) == 0:
        return {"node_shift_measured": None, "node_shift_expected": dphi / (2.0 * k0)}
    deltas = []
    for xs in shifted:
        j = int(np.argmin(np.abs(base - xs)))
        d = (xs - base[j]) % period
        if d > period / 2:
            d -= period
        deltas.append(d)
    return {
        "node_shift_measured": float(np.median(deltas)),
        "node_shift_expected": dphi / (2.0 * k0),
        "fringe_period": period,
        "crossing_time": t_cross,
    }


def _crossing_time(cfg: ScenarioConfig) -> float:
    a, b = cfg.packets[0], cfg.packets[1]
    c = cfg.constants
    va = c.hbar * a.wavenumber / c.mass
    vb = c.hbar * b.wavenumber / c.mass
    if abs(va - vb) < 1e-15:
        return float(_output_times(cfg)[-1]) / 2.0
    t = (b.center - a.center) / (va - vb)
    return max(t, 0.0)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Flattened export for plotting components
# ---------------------------------------------------------------------------


def export_plots_data(result_dir, out_dir=None) -> Path:
    """Flatten stack CSVs into long-format (time, x, value) tables."""
    from .fields import read_field_csv

    res = Path(result_dir)
    manifest_path = res / "manifest.json"
    if not manifest_path.exists():
        raise QpotError(f"{res} does not contain a manifest.json")
    index = json.loads((res / "fields" / "index.json").read_text())
    out = Path(out_dir) if out_dir is not None else res / "plots_data"
    out.mkdir(parents=True, exist_ok=True)
    for label, files in index["stacks"].items():
        rows = []
        for rel in files:
            fld, t = read_field_csv(res / rel)
            x = fld.grid.coords(0)
            mask = fld.mask if fld.mask is not None else np.zeros(fld.grid.shape, dtype=bool)
            for i in range(len(x)):
                val = "masked" if mask[i] else format(float(np.real(fld.values[i])), ".17g")
                rows.append(f"{format(t, '.17g')},{format(x[i], '.17g')},{val}")
        (out / f"{label}_long.csv").write_text("time,x,value\n" + "\n".join(rows) + "\n")
    return out
