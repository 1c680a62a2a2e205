"""
Synthetic quasi-static indentation runs.

The end-effector follows an ideal constant-speed descent from
z_surf + approach_gap down to z_surf − depth_fraction·thickness; the true
normal force is the closed-form contact law of the true penetration and zero
above the surface. Gaussian noise is then added to the logged height and force.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Union, overload

import numpy as np

from . import contact
from .contact import IndenterProfile, Material
from .errors import ConfigError, ModelDomainError
from .recovery import RecoveryParams, eval_recovery

LOGGER = logging.getLogger(__name__)

LINEAR_DEPTH_FRACTION = 0.1
DEFAULT_APPROACH_GAP = 0.005


class IndentationRecord(NamedTuple):
    """One synchronised sample: time (s), end-effector height (m), normal force (N)."""

    t: float
    z_ee: float
    f_z: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented sequence of IndentationRecord with non-decreasing timestamps."""

    t: np.ndarray
    z_ee: np.ndarray
    f_z: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.t, dtype=float)
        z = np.asarray(self.z_ee, dtype=float)
        f = np.asarray(self.f_z, dtype=float)
        if not (t.shape == z.shape == f.shape) or t.ndim != 1:
            raise ValueError("dataset columns must be 1-D arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) < 0.0):
            raise ValueError("dataset timestamps must be non-decreasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "z_ee", z)
        object.__setattr__(self, "f_z", f)

    @classmethod
    def from_records(cls, records: Sequence[IndentationRecord]) -> "Dataset":
        if not records:
            return cls(np.empty(0), np.empty(0), np.empty(0))
        arr = np.asarray([tuple(r) for r in records], dtype=float)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2])

    def __len__(self) -> int:
        return int(self.t.size)

    @overload
    def __getitem__(self, index: int) -> IndentationRecord: ...

    @overload
    def __getitem__(self, index: slice) -> "Dataset": ...

    def __getitem__(self, index: Union[int, slice]) -> Union[IndentationRecord, "Dataset"]:
        if isinstance(index, slice):
            return Dataset(self.t[index], self.z_ee[index], self.f_z[index])
        return IndentationRecord(float(self.t[index]), float(self.z_ee[index]), float(self.f_z[index]))

    def __iter__(self) -> Iterator[IndentationRecord]:
        for i in range(len(self)):
            yield self[i]

    def records(self) -> List[IndentationRecord]:
        return list(self)

    def scaled_forces(self, factor: float) -> "Dataset":
        return Dataset(self.t, self.z_ee, self.f_z * factor)


@dataclass(frozen=True, slots=True)
class Specimen:
    """Specimen under test: material, thickness (m) and true surface height (m) in the robot frame."""

    material: Material
    thickness: float
    z_surf_true: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Rig, specimen and sensor parameters of one synthetic indentation run (SI units)."""

    specimen: Specimen
    profile: IndenterProfile
    speed: float
    depth_fraction: float = LINEAR_DEPTH_FRACTION
    sample_rate: float = 800.0
    force_noise_std: float = 0.012
    position_noise_std: float = 1e-5
    seed: int = 0
    approach_gap: float = DEFAULT_APPROACH_GAP

    def __post_init__(self) -> None:
        violations = []
        if not self.specimen.thickness > 0.0:
            violations.append(f"thickness [m]: must be > 0, got {self.specimen.thickness!r}")
        if not self.speed > 0.0:
            violations.append(f"speed [m/s]: must be > 0, got {self.speed!r}")
        if not 0.0 < self.depth_fraction <= 0.2:
            violations.append(f"depth_fraction [-]: must lie in (0, 0.2], got {self.depth_fraction!r}")
        if not self.sample_rate > 0.0:
            violations.append(f"sample_rate [Hz]: must be > 0, got {self.sample_rate!r}")
        if not self.force_noise_std >= 0.0:
            violations.append(f"force_noise_std [N]: must be >= 0, got {self.force_noise_std!r}")
        if not self.position_noise_std >= 0.0:
            violations.append(f"position_noise_std [m]: must be >= 0, got {self.position_noise_std!r}")
        if self.seed < 0:
            violations.append(f"seed [-]: must be >= 0, got {self.seed!r}")
        if not self.approach_gap > 0.0:
            violations.append(f"approach_gap [m]: must be > 0, got {self.approach_gap!r}")
        if violations:
            raise ConfigError(violations)
        if self.depth_fraction > LINEAR_DEPTH_FRACTION:
            LOGGER.warning(
                "depth_fraction %.3g exceeds %.1f of the thickness; the linear-elastic regime may not hold",
                self.depth_fraction,
                LINEAR_DEPTH_FRACTION,
            )

    @property
    def max_depth(self) -> float:
        return self.depth_fraction * self.specimen.thickness

    @property
    def traverse_time(self) -> float:
        return (self.approach_gap + self.max_depth) / self.speed

    @property
    def n_samples(self) -> int:
        # tolerance absorbs round-off when the traverse is a whole number of periods
        return int(math.floor(self.traverse_time * self.sample_rate + 1e-9)) + 1

    def with_material(self, material: Material, seed: Optional[int] = None) -> "ExperimentConfig":
        specimen = Specimen(material, self.specimen.thickness, self.specimen.z_surf_true)
        if seed is None:
            return replace(self, specimen=specimen)
        return replace(self, specimen=specimen, seed=seed)

    def manifest_fields(self) -> Dict[str, str]:
        """Every field of the run, as strings, for the run manifest."""
        material = self.specimen.material
        fields = {
            "e_f": repr(material.e_f),
            "e_star": repr(material.e_star),
            "nu": repr(material.nu),
            "thickness": repr(self.specimen.thickness),
            "z_surf_true": repr(self.specimen.z_surf_true),
            "speed": repr(self.speed),
            "depth_fraction": repr(self.depth_fraction),
            "sample_rate": repr(self.sample_rate),
            "force_noise_std": repr(self.force_noise_std),
            "position_noise_std": repr(self.position_noise_std),
            "seed": str(self.seed),
            "approach_gap": repr(self.approach_gap),
            "n_samples": str(self.n_samples),
        }
        fields.update(self.profile.to_fields())
        return fields


@dataclass(frozen=True)
class TrueTrajectory:
    t: np.ndarray
    z_ee: np.ndarray
    depth: np.ndarray
    force: np.ndarray


def true_trajectory(config: ExperimentConfig) -> TrueTrajectory:
    """Noise-free heights, penetrations and forces of the run."""
    t = np.arange(config.n_samples, dtype=float) / config.sample_rate
    z_top = config.specimen.z_surf_true + config.approach_gap
    z_ee = z_top - config.speed * t
    depth = np.clip(config.specimen.z_surf_true - z_ee, 0.0, None)
    force = np.asarray(contact.force(config.specimen.material, config.profile, depth))
    return TrueTrajectory(t=t, z_ee=z_ee, depth=depth, force=force)


def simulate_indentation(config: ExperimentConfig) -> Dataset:
    """Noisy synthetic run; bitwise reproducible for a given seed."""
    truth = true_trajectory(config)
    rng = np.random.default_rng(config.seed)
    z_noise = rng.normal(0.0, config.position_noise_std, truth.t.size) if config.position_noise_std > 0 else 0.0
    f_noise = rng.normal(0.0, config.force_noise_std, truth.t.size) if config.force_noise_std > 0 else 0.0
    LOGGER.debug(
        "Simulated %d samples (seed %d, max depth %.4g m, max force %.4g N)",
        truth.t.size,
        config.seed,
        float(truth.depth.max()),
        float(truth.force.max()),
    )
    return Dataset(t=truth.t, z_ee=truth.z_ee + z_noise, f_z=truth.force + f_noise)


@dataclass(frozen=True)
class PalpationRun:
    """One palpation of a repeated series and the specimen modulus it was generated with."""

    index: int
    rest_time: float
    material: Material
    seed: int
    dataset: Dataset


def palpation_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def simulate_repeated_palpation(
    config: ExperimentConfig,
    rest_intervals: Sequence[float],
    recovery: RecoveryParams,
) -> List[PalpationRun]:
    """
    Palpate the specimen once per rest interval.

    Before palpation k the specimen's elastic modulus is E(rest_k) from the
    recovery curve; each palpation gets its own seed derived from config.seed.
    """
    runs: List[PalpationRun] = []
    for index, rest in enumerate(rest_intervals):
        if not (math.isfinite(rest) and rest >= 0.0):
            raise ModelDomainError(f"rest intervals must be >= 0 s, got {rest!r}")
        e_f = float(eval_recovery(recovery, rest))
        if not e_f > 0.0:
            raise ModelDomainError(f"recovery curve gives non-positive modulus {e_f!r} Pa at t={rest!r} s")
        material = Material.from_elastic_modulus(e_f, config.specimen.material.nu)
        seed = palpation_seed(config.seed, index)
        run_config = config.with_material(material, seed=seed)
        LOGGER.info("Palpation %d: rest %.4g s, E_f %.6g Pa", index, rest, e_f)
        runs.append(PalpationRun(index, float(rest), material, seed, simulate_indentation(run_config)))
    return runs
