"""
Contact laws for rigid axisymmetric indenters on an elastic half-space.

The 3-D contact is mapped onto a 1-D bed of independent springs (method of
dimensionality reduction): each spring has stiffness E*·Δx and is compressed by
d − g(x), where g is the reduced 1-D profile of the indenter. Integrating the
bed gives the closed-form force laws below; `discrete_foundation_force` sums
the bed explicitly and serves as a numerical oracle for them.

All force laws work in the effective modulus E*; the Poisson ratio only enters
when converting to or from the elastic modulus E_f = E*(1 − ν²).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Union

import numpy as np
from scipy.special import gammaln

from .errors import ModelDomainError

Depth = Union[float, np.ndarray]


@dataclass(frozen=True, slots=True)
class Material:
    """Linear elastic specimen: effective modulus E* (Pa) and Poisson ratio ν."""

    e_star: float
    nu: float = 0.0
    e_f: float = field(init=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.e_star) and self.e_star > 0.0):
            raise ModelDomainError(f"effective modulus must be > 0 Pa, got {self.e_star!r}")
        if not (0.0 <= self.nu < 0.5):
            raise ModelDomainError(f"Poisson ratio must satisfy 0 <= nu < 0.5, got {self.nu!r}")
        object.__setattr__(self, "e_f", self.e_star * (1.0 - self.nu**2))

    @classmethod
    def from_elastic_modulus(cls, e_f: float, nu: float = 0.0) -> "Material":
        """Build from the elastic modulus E_f (Pa)."""
        if not (0.0 <= nu < 0.5):
            raise ModelDomainError(f"Poisson ratio must satisfy 0 <= nu < 0.5, got {nu!r}")
        if not (math.isfinite(e_f) and e_f > 0.0):
            raise ModelDomainError(f"elastic modulus must be > 0 Pa, got {e_f!r}")
        return cls(e_star=e_f / (1.0 - nu**2), nu=nu)


class ProfileKind(str, enum.Enum):
    FLAT = "flat"
    POWER_LAW = "power_law"


def hess_factor(n: float) -> float:
    """Scale factor from a 3-D power-law profile c_n r^n to its 1-D equivalent: √π Γ(n/2+1) / Γ((n+1)/2)."""
    if not (math.isfinite(n) and n > 0.0):
        raise ModelDomainError(f"profile exponent must be > 0, got {n!r}")
    return math.exp(0.5 * math.log(math.pi) + gammaln(n / 2.0 + 1.0) - gammaln((n + 1.0) / 2.0))


def hess_reduce(n: float, c_n: float) -> float:
    """Reduced 1-D coefficient c̃_n of the 3-D profile c_n r^n."""
    if not (math.isfinite(c_n) and c_n > 0.0):
        raise ModelDomainError(f"profile coefficient must be > 0, got {c_n!r}")
    return hess_factor(n) * c_n


@dataclass(frozen=True, slots=True)
class IndenterProfile:
    """
    Tip geometry and its reduced 1-D profile.

    Use the constructors rather than the raw initializer:
    `flat(a)`, `power_law(n, c_n)`, `reduced(n, c_tilde)` and `sphere(r1)`.
    """

    kind: ProfileKind
    n: Optional[float] = None
    c_n: Optional[float] = None
    c_tilde: Optional[float] = None
    a: Optional[float] = None
    r1: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind is ProfileKind.FLAT:
            if self.a is None or not (math.isfinite(self.a) and self.a > 0.0):
                raise ModelDomainError(f"flat tip half-width must be > 0 m, got {self.a!r}")
            return
        if self.n is None or not (math.isfinite(self.n) and self.n > 0.0):
            raise ModelDomainError(f"profile exponent must be > 0, got {self.n!r}")
        if self.c_n is None or not (self.c_n > 0.0):
            raise ModelDomainError(f"profile coefficient must be > 0, got {self.c_n!r}")
        expected = hess_reduce(self.n, self.c_n)
        if self.c_tilde is None:
            object.__setattr__(self, "c_tilde", expected)
        elif not math.isclose(self.c_tilde, expected, rel_tol=1e-12):
            raise ModelDomainError(
                f"reduced coefficient {self.c_tilde!r} inconsistent with c_n={self.c_n!r}, n={self.n!r}"
            )

    @classmethod
    def flat(cls, a: float) -> "IndenterProfile":
        """Cylindrical flat punch of contact half-width (radius) `a` in metres."""
        return cls(kind=ProfileKind.FLAT, a=a)

    @classmethod
    def power_law(cls, n: float, c_n: float) -> "IndenterProfile":
        """3-D profile c_n r^n; the reduced coefficient follows from the Hess factor."""
        return cls(kind=ProfileKind.POWER_LAW, n=n, c_n=c_n)

    @classmethod
    def reduced(cls, n: float, c_tilde: float) -> "IndenterProfile":
        """Profile given directly by its 1-D coefficient, g(x) = c̃ |x|^n."""
        if not (math.isfinite(c_tilde) and c_tilde > 0.0):
            raise ModelDomainError(f"reduced coefficient must be > 0, got {c_tilde!r}")
        c_n = c_tilde / hess_factor(n)
        return cls(kind=ProfileKind.POWER_LAW, n=n, c_n=c_n, c_tilde=c_tilde)

    @classmethod
    def sphere(cls, r1: float) -> "IndenterProfile":
        """
        Sphere (or paraboloid) of radius R₁ with 1-D profile x²/(2R₁).

        The reduced radius is R = 2R₁, so the power-law force law reproduces the
        sphere force law exactly.
        """
        if not (math.isfinite(r1) and r1 > 0.0):
            raise ModelDomainError(f"sphere radius must be > 0 m, got {r1!r}")
        base = cls.reduced(2.0, 1.0 / (2.0 * r1))
        return cls(kind=ProfileKind.POWER_LAW, n=base.n, c_n=base.c_n, c_tilde=base.c_tilde, r1=r1)

    @property
    def force_exponent(self) -> float:
        """Exponent of d in the force law: 1 for a flat punch, (n+1)/n otherwise."""
        if self.kind is ProfileKind.FLAT:
            return 1.0
        return (self.n + 1.0) / self.n

    @property
    def reduced_radius(self) -> float:
        """R such that g(x) = x²/R; only defined for n = 2."""
        if self.kind is not ProfileKind.POWER_LAW or self.n != 2.0:
            raise ModelDomainError("reduced radius is only defined for parabolic profiles (n = 2)")
        return 1.0 / self.c_tilde

    def to_fields(self) -> Dict[str, str]:
        """Flat `profile_*` key-value form used in manifests."""
        fields = {"profile_kind": self.kind.value}
        for name in ("n", "c_n", "c_tilde", "a", "r1"):
            value = getattr(self, name)
            if value is not None:
                fields[f"profile_{name}"] = repr(float(value))
        return fields

    @classmethod
    def from_fields(cls, fields: Mapping[str, str]) -> "IndenterProfile":
        try:
            kind = ProfileKind(fields["profile_kind"])
            if kind is ProfileKind.FLAT:
                return cls.flat(float(fields["profile_a"]))
            if "profile_r1" in fields:
                return cls.sphere(float(fields["profile_r1"]))
            return cls.reduced(float(fields["profile_n"]), float(fields["profile_c_tilde"]))
        except (KeyError, ValueError) as exc:
            raise ModelDomainError(f"incomplete or invalid profile description: {exc}") from exc

    def height(self, x: Depth) -> Depth:
        """Reduced profile g(x); infinite outside a flat punch."""
        x = np.abs(np.asarray(x, dtype=float))
        if self.kind is ProfileKind.FLAT:
            return np.where(x <= self.a, 0.0, np.inf)
        return self.c_tilde * x**self.n

    def contact_half_width(self, d: float) -> float:
        """Half-width of the compressed spring set at penetration d."""
        if d < 0.0:
            raise ModelDomainError(f"penetration must be >= 0 m, got {d!r}")
        if self.kind is ProfileKind.FLAT:
            return self.a
        return (d / self.c_tilde) ** (1.0 / self.n)


def _check_depth(d: Depth) -> np.ndarray:
    arr = np.asarray(d, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise ModelDomainError("penetration must be >= 0 m (adhesion is not modelled)")
    return arr


def _unwrap(value: np.ndarray) -> Depth:
    return float(value) if np.ndim(value) == 0 else value


def force_sphere(material: Material, r1: float, d: Depth) -> Depth:
    """F_N = 4/3 · E* · d · √(2R₁d)."""
    if not (r1 > 0.0):
        raise ModelDomainError(f"sphere radius must be > 0 m, got {r1!r}")
    depth = _check_depth(d)
    return _unwrap(4.0 / 3.0 * material.e_star * depth * np.sqrt(2.0 * r1 * depth))


def force_power_law(material: Material, profile: IndenterProfile, d: Depth) -> Depth:
    """F_N = 2n/(n+1) · E* · c̃^(−1/n) · d^((n+1)/n)."""
    if profile.kind is not ProfileKind.POWER_LAW:
        raise ModelDomainError("force_power_law requires a power-law profile")
    depth = _check_depth(d)
    n = profile.n
    coeff = 2.0 * n / (n + 1.0) * material.e_star * profile.c_tilde ** (-1.0 / n)
    return _unwrap(coeff * depth ** ((n + 1.0) / n))


def force_flat(material: Material, a: float, d: Depth) -> Depth:
    """F_N = E* · 2a · d."""
    if not (a > 0.0):
        raise ModelDomainError(f"flat tip half-width must be > 0 m, got {a!r}")
    depth = _check_depth(d)
    return _unwrap(material.e_star * 2.0 * a * depth)


def force(material: Material, profile: IndenterProfile, d: Depth) -> Depth:
    """Closed-form normal force for any supported profile."""
    if profile.kind is ProfileKind.FLAT:
        return force_flat(material, profile.a, d)
    return force_power_law(material, profile, d)


def force_coefficient(material: Material, profile: IndenterProfile) -> float:
    """κ such that F_N = κ · d^m with m = profile.force_exponent."""
    if profile.kind is ProfileKind.FLAT:
        return material.e_star * 2.0 * profile.a
    n = profile.n
    return 2.0 * n / (n + 1.0) * material.e_star * profile.c_tilde ** (-1.0 / n)


@dataclass(frozen=True, slots=True)
class SpringFoundation:
    """Discrete bed of springs at cell-centred positions (i + ½)·dx, |x| <= half_width."""

    dx: float
    half_width: float
    material: Material

    def __post_init__(self) -> None:
        if not (self.dx > 0.0):
            raise ModelDomainError(f"spring spacing must be > 0 m, got {self.dx!r}")
        if not (self.half_width > 0.0):
            raise ModelDomainError(f"foundation half-width must be > 0 m, got {self.half_width!r}")

    @property
    def spring_stiffness(self) -> float:
        """Δk_z = E*·Δx (N/m per spring)."""
        return self.material.e_star * self.dx


def discrete_foundation_force(foundation: SpringFoundation, profile: IndenterProfile, d: float) -> float:
    """
    Sum the spring forces E*·Δx·max(0, d − g(xᵢ)) over the bed.

    Only used to validate the closed-form laws; the estimation path never calls it.
    """
    if d < 0.0:
        raise ModelDomainError(f"penetration must be >= 0 m, got {d!r}")
    if d == 0.0:
        return 0.0
    contact = profile.contact_half_width(d)
    if contact > foundation.half_width:
        raise ModelDomainError(
            f"contact half-width {contact:.6g} m exceeds foundation half-width "
            f"{foundation.half_width:.6g} m"
        )
    dx = foundation.dx
    # springs beyond the contact edge carry no load; the bed is symmetric about x = 0
    n_cells = int(math.ceil(contact / dx)) + 1
    x = (np.arange(n_cells, dtype=float) + 0.5) * dx
    x = x[x <= foundation.half_width]
    compression = np.maximum(0.0, d - profile.height(x))
    return float(2.0 * foundation.spring_stiffness * np.sum(compression))
