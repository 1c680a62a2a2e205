"""
Joint estimation of elasticity and specimen surface height from (z_EE, F) logs.

For a candidate surface height z_surf the penetration is d = z_surf − z_EE and
the force model F = κ·d^m is linear in κ, so κ has a closed-form least-squares
solution. The surface height is the minimiser of the mean squared residual
over the heights at which the measured force is still within the sensor
uncertainty ±F_unc.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from .contact import IndenterProfile, ProfileKind
from .errors import InsufficientDataError, ModelDomainError, NoSurfaceFoundError
from .presets import FLAT_DISCARD_FRACTION
from .simulator import Dataset

LOGGER = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQUARE = (3.0 - math.sqrt(5.0)) / 2.0

DEFAULT_GRID_POINTS = 200
DEFAULT_TOLERANCE = 1e-6
DEFAULT_MERGE_GAP = 1e-4


@dataclass(frozen=True)
class FitModel:
    """
    Force model used by the fit.

    n_exp is the profile's force exponent (3/2 for spheres and paraboloids,
    1 for a flat punch); the κ → E_f conversion depends on it, so a different
    value is rejected. discard_fraction drops the first part of the
    penetration from the fit; it defaults to 0.2 for a flat punch.
    reference_area (m²) overrides the area used to express residuals in kPa².
    """

    profile: IndenterProfile
    nu: float = 0.0
    discard_fraction: Optional[float] = None
    n_exp: Optional[float] = None
    reference_area: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n_exp is None:
            object.__setattr__(self, "n_exp", self.profile.force_exponent)
        elif not math.isclose(self.n_exp, self.profile.force_exponent, rel_tol=1e-12):
            raise ModelDomainError(
                f"force-law exponent {self.n_exp!r} does not match the profile's {self.profile.force_exponent!r}"
            )
        if self.discard_fraction is None:
            default = FLAT_DISCARD_FRACTION if self.profile.kind is ProfileKind.FLAT else 0.0
            object.__setattr__(self, "discard_fraction", default)
        if not self.n_exp > 0.0:
            raise ModelDomainError(f"force-law exponent must be > 0, got {self.n_exp!r}")
        if not 0.0 <= self.discard_fraction < 1.0:
            raise ModelDomainError(f"discard_fraction must lie in [0, 1), got {self.discard_fraction!r}")
        if not 0.0 <= self.nu < 0.5:
            raise ModelDomainError(f"Poisson ratio must satisfy 0 <= nu < 0.5, got {self.nu!r}")
        if self.reference_area is not None and not self.reference_area > 0.0:
            raise ModelDomainError(f"reference area must be > 0 m^2, got {self.reference_area!r}")

    def area(self, d_max: float) -> float:
        """Area used to normalise force residuals to pressure."""
        if self.reference_area is not None:
            return self.reference_area
        profile = self.profile
        if profile.kind is ProfileKind.FLAT:
            return math.pi * profile.a**2
        if profile.n == 2.0:
            return math.pi * profile.reduced_radius**2
        return math.pi * profile.contact_half_width(d_max) ** 2


class KappaFit(NamedTuple):
    kappa: float
    residual: float
    n_used: int
    sigma_kappa: float


@dataclass(frozen=True)
class EstimationResult:
    """Outcome of one estimation; residual in N², residual_kpa2 after area normalisation."""

    kappa: float
    e_f: float
    z_surf: float
    residual: float
    residual_kpa2: float
    sigma_e: float
    n_used: int
    sigma_z_surf: float = math.nan
    f_unc: float = math.nan
    n_exp: float = math.nan
    discard_fraction: float = 0.0
    feasible_interval: Tuple[float, float] = (math.nan, math.nan)
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def to_fields(self) -> Dict[str, str]:
        return {
            "kappa": repr(self.kappa),
            "e_f": repr(self.e_f),
            "sigma_e": repr(self.sigma_e),
            "z_surf": repr(self.z_surf),
            "sigma_z_surf": repr(self.sigma_z_surf),
            "residual_n2": repr(self.residual),
            "residual_kpa2": repr(self.residual_kpa2),
            "n_used": str(self.n_used),
            "n_exp": repr(self.n_exp),
            "f_unc": repr(self.f_unc),
            "discard_fraction": repr(self.discard_fraction),
            "feasible_lo": repr(self.feasible_interval[0]),
            "feasible_hi": repr(self.feasible_interval[1]),
        }


def _used_samples(dataset: Dataset, z_surf: float, model: FitModel) -> Tuple[np.ndarray, np.ndarray]:
    d = z_surf - dataset.z_ee
    mask = d > 0.0
    if model.discard_fraction > 0.0 and np.any(mask):
        mask &= d >= model.discard_fraction * float(d[mask].max())
    return d[mask], dataset.f_z[mask]


def fit_kappa(dataset: Dataset, z_surf: float, model: FitModel) -> KappaFit:
    """Closed-form least squares κ = Σ F·dⁿ / Σ d²ⁿ over the samples in contact."""
    d, f = _used_samples(dataset, z_surf, model)
    if d.size < 2:
        raise InsufficientDataError(
            f"need >= 2 samples with positive penetration below z_surf={z_surf:.6g} m, got {d.size}",
            n_available=int(d.size),
        )
    dn = d**model.n_exp
    s_dd = float(np.dot(dn, dn))
    kappa = float(np.dot(f, dn)) / s_dd
    r = f - kappa * dn
    loss = float(np.dot(r, r))
    noise_var = loss / (d.size - 1)
    return KappaFit(kappa=kappa, residual=loss / d.size, n_used=int(d.size), sigma_kappa=math.sqrt(noise_var / s_dd))


def kappa_factor(model: FitModel) -> float:
    """E_f / κ for the model's profile and Poisson ratio."""
    profile = model.profile
    poisson = 1.0 - model.nu**2
    if profile.kind is ProfileKind.FLAT:
        return poisson / (2.0 * profile.a)
    if profile.n == 2.0:
        return 3.0 * poisson / (4.0 * math.sqrt(profile.reduced_radius))
    n = profile.n
    return poisson * (n + 1.0) / (2.0 * n) * profile.c_tilde ** (1.0 / n)


def convert_kappa(kappa: float, model: FitModel) -> float:
    """Elastic modulus E_f (Pa) from the fitted force coefficient."""
    if not (math.isfinite(kappa) and kappa > 0.0):
        raise ModelDomainError(f"fitted force coefficient must be > 0, got {kappa!r}")
    return kappa * kappa_factor(model)


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float) -> Tuple[float, float]:
    """Minimise a unimodal f on [a, b] to an interval no wider than tol; returns (x, f(x))."""
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)
    steps = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    for _ in range(steps - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
    return (c, yc) if yc < yd else (d, yd)


def _crossing(z0: float, f0: float, z1: float, f1: float, level: float) -> float:
    """Height where the segment (z0, f0)–(z1, f1) reaches |F| = level."""
    target = math.copysign(level, f0 if abs(f0) > level else f1)
    if f1 == f0:
        return 0.5 * (z0 + z1)
    return z0 + (target - f0) * (z1 - z0) / (f1 - f0)


def feasible_intervals(
    dataset: Dataset, f_unc: float, merge_gap: float = DEFAULT_MERGE_GAP
) -> List[Tuple[float, float]]:
    """
    Height intervals where the linearly interpolated force lies within ±f_unc.

    Samples are ordered by height; runs separated by less than merge_gap are
    merged. Intervals are returned in ascending height.
    """
    order = np.argsort(dataset.z_ee, kind="stable")
    zs = dataset.z_ee[order]
    fs = dataset.f_z[order]
    ok = np.abs(fs) <= f_unc
    if not np.any(ok):
        return []
    padded = np.concatenate([[False], ok, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    starts, stops = edges[0::2], edges[1::2] - 1

    intervals: List[Tuple[float, float]] = []
    for i0, i1 in zip(starts, stops):
        lo = zs[i0] if i0 == 0 else _crossing(zs[i0 - 1], fs[i0 - 1], zs[i0], fs[i0], f_unc)
        hi = zs[i1] if i1 == zs.size - 1 else _crossing(zs[i1], fs[i1], zs[i1 + 1], fs[i1 + 1], f_unc)
        if intervals and lo - intervals[-1][1] < merge_gap:
            intervals[-1] = (intervals[-1][0], hi)
        else:
            intervals.append((lo, hi))
    return intervals


def _joint_sigma_z(dataset: Dataset, z_surf: float, kappa: float, model: FitModel) -> float:
    """Standard uncertainty of z_surf from the two-parameter (κ, z_surf) Gauss-Newton covariance."""
    d, f = _used_samples(dataset, z_surf, model)
    if d.size < 3:
        return math.nan
    n = model.n_exp
    jac = np.column_stack([d**n, kappa * n * d ** (n - 1.0)])
    r = f - kappa * d**n
    noise_var = float(np.dot(r, r)) / (d.size - 2)
    cov = np.linalg.pinv(jac.T @ jac) * noise_var
    return math.sqrt(max(float(cov[1, 1]), 0.0))


def localize_surface(
    dataset: Dataset,
    model: FitModel,
    f_unc: float,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    tolerance: float = DEFAULT_TOLERANCE,
    merge_gap: float = DEFAULT_MERGE_GAP,
) -> EstimationResult:
    """
    Minimise the fit residual over surface heights whose measured force is within ±f_unc.

    A coarse grid over the widest feasible interval seeds a golden-section
    search refined to `tolerance` metres.
    """
    if not f_unc > 0.0:
        raise ModelDomainError(f"force uncertainty must be > 0 N, got {f_unc!r}")
    if len(dataset) < 2:
        raise InsufficientDataError("dataset has fewer than 2 samples", n_available=len(dataset))
    if not np.any(dataset.f_z > f_unc):
        raise NoSurfaceFoundError(f"no surface found: no force sample exceeds F_unc={f_unc:g} N")
    intervals = feasible_intervals(dataset, f_unc, merge_gap)
    if not intervals:
        raise NoSurfaceFoundError(f"no surface found: no force sample lies within ±{f_unc:g} N")

    warnings: List[str] = []
    lo, hi = max(intervals, key=lambda iv: iv[1] - iv[0])
    if len(intervals) > 1:
        message = (
            f"{len(intervals)} disjoint feasible intervals; using the widest "
            f"[{lo:.6g}, {hi:.6g}] m"
        )
        LOGGER.warning(message)
        warnings.append(message)
    if lo <= float(dataset.z_ee.min()):
        # the interval reaches the deepest sample, so nothing below it is in contact
        raise NoSurfaceFoundError(
            f"no surface found: forces stay within ±{f_unc:g} N down to the deepest sample ({lo:.6g} m)"
        )

    def objective(z: float) -> float:
        try:
            return fit_kappa(dataset, z, model).residual
        except InsufficientDataError:
            return math.inf

    grid = np.linspace(lo, hi, max(grid_points, 3))
    values = np.array([objective(z) for z in grid])
    if not np.any(np.isfinite(values)):
        raise NoSurfaceFoundError(
            f"no surface found: feasible interval [{lo:.6g}, {hi:.6g}] m leaves too few contact samples"
        )
    k = int(np.argmin(values))
    z_best, l_best = float(grid[k]), float(values[k])
    z_gs, l_gs = golden_section(objective, float(grid[max(k - 1, 0)]), float(grid[min(k + 1, grid.size - 1)]), tolerance)
    if l_gs <= l_best:
        z_best, l_best = z_gs, l_gs
    LOGGER.debug("Surface search: grid min at %.9g m, refined to %.9g m (L=%.6g N^2)", grid[k], z_best, l_best)

    fit = fit_kappa(dataset, z_best, model)
    e_f = convert_kappa(fit.kappa, model)
    d_max = float(np.max(z_best - dataset.z_ee))
    area = model.area(d_max)
    return EstimationResult(
        kappa=fit.kappa,
        e_f=e_f,
        z_surf=z_best,
        residual=fit.residual,
        residual_kpa2=fit.residual / area**2 / 1e6,
        sigma_e=fit.sigma_kappa * kappa_factor(model),
        n_used=fit.n_used,
        sigma_z_surf=_joint_sigma_z(dataset, z_best, fit.kappa, model),
        f_unc=f_unc,
        n_exp=model.n_exp,
        discard_fraction=model.discard_fraction,
        feasible_interval=(lo, hi),
        warnings=tuple(warnings),
    )


def estimate(
    dataset: Dataset,
    model: FitModel,
    f_unc: float,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    tolerance: float = DEFAULT_TOLERANCE,
    merge_gap: float = DEFAULT_MERGE_GAP,
) -> EstimationResult:
    """Single entry point: localise the surface, fit κ and convert it to E_f."""
    result = localize_surface(
        dataset, model, f_unc, grid_points=grid_points, tolerance=tolerance, merge_gap=merge_gap
    )
    LOGGER.info(
        "Estimated E_f=%.6g Pa (sigma %.3g Pa), z_surf=%.9g m, residual %.4g N^2 over %d samples",
        result.e_f,
        result.sigma_e,
        result.z_surf,
        result.residual,
        result.n_used,
    )
    return result


def model_forces(dataset: Dataset, result: EstimationResult) -> Tuple[np.ndarray, np.ndarray]:
    """Penetration and model force at every sample for the estimated surface and κ."""
    d = result.z_surf - dataset.z_ee
    f_model = result.kappa * np.clip(d, 0.0, None) ** result.n_exp
    return d, f_model


class ForceErrorProfile(NamedTuple):
    depth: np.ndarray
    mean_error: np.ndarray
    count: np.ndarray


def force_error_profile(dataset: Dataset, result: EstimationResult, bins: int = 20) -> ForceErrorProfile:
    """Mean measured-minus-model force per penetration bin over the samples in contact."""
    d, f_model = model_forces(dataset, result)
    mask = d > 0.0
    if not np.any(mask):
        return ForceErrorProfile(np.empty(0), np.empty(0), np.empty(0, dtype=int))
    error = dataset.f_z[mask] - f_model[mask]
    edges = np.linspace(0.0, float(d[mask].max()), bins + 1)
    count, _ = np.histogram(d[mask], bins=edges)
    total, _ = np.histogram(d[mask], bins=edges, weights=error)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, total / np.maximum(count, 1), np.nan)
    return ForceErrorProfile(0.5 * (edges[:-1] + edges[1:]), mean, count)
