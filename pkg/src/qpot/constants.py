"""Dimensional backbone: hbar, mass, angular frequency and derived scales."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import QpotError


@dataclass(frozen=True)
class PhysicalConstants:
    """Per-particle constants; derived quantities are recomputed, never stored.

    Defaults are natural units hbar = mass = omega = 1.
    """

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega"):
            if not getattr(self, name) > 0:
                raise QpotError(f"{name} must be positive")

    @property
    def diffusivity(self) -> float:
        """Osmotic diffusivity D = hbar / (2 m)."""
        return self.hbar / (2.0 * self.mass)

    @property
    def thermal_energy(self) -> float:
        """Energy quantum hbar * omega of the driving oscillation."""
        return self.hbar * self.omega

    def diffusion_length(self, omega: float | None = None) -> float:
        """Decay scale sqrt(2 D / omega) of a driven diffusion wave."""
        w = self.omega if omega is None else omega
        if not w > 0:
            raise QpotError("omega must be positive")
        return math.sqrt(2.0 * self.diffusivity / w)
