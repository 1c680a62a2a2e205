"""Specimens and tips of the reference experimental campaign."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict

from .contact import IndenterProfile


@dataclass(frozen=True, slots=True)
class SpecimenPreset:
    """Ground-truth elasticity (compression test) and geometry of a foam specimen."""

    name: str
    e_f: float
    sigma_e: float
    density: float
    thickness: float


@dataclass(frozen=True, slots=True)
class TipPreset:
    name: str
    radius: float

    def profile(self) -> IndenterProfile:
        if self.name == "flat":
            return IndenterProfile.flat(self.radius)
        return IndenterProfile.sphere(self.radius)


# E_f and sigma in Pa, density in g/cm^3, thickness in m
SPECIMENS: Dict[str, SpecimenPreset] = {
    "white": SpecimenPreset("white", e_f=111e3, sigma_e=13e3, density=0.0350, thickness=0.030),
    "pink": SpecimenPreset("pink", e_f=136e3, sigma_e=14e3, density=0.0181, thickness=0.020),
    "grey": SpecimenPreset("grey", e_f=194e3, sigma_e=17e3, density=0.0236, thickness=0.020),
}

TIPS: Dict[str, TipPreset] = {
    "flat": TipPreset("flat", radius=0.010),
    "sphere": TipPreset("sphere", radius=0.010),
    "paraboloid": TipPreset("paraboloid", radius=0.0117),
}

# 50 mm/min
CROSS_HEAD_SPEED = 50e-3 / 60.0
SENSOR_RATE = 800.0
SENSOR_PEAK_TO_PEAK = 48e-3
FLAT_DISCARD_FRACTION = 0.2
