"""
Runtime settings and run configurations.

`Settings` holds process-wide defaults (environment / .env, prefix
MDR_INDENT_). `RunConfig` describes one experiment: it is read from a flat
YAML mapping, overlaid with `key=value` overrides, validated field by field
with units in every message, and converted into the model objects.
`FitConfig` is the subset the estimator needs (tip, nu and the sensor model),
so measured datasets can be fitted without inventing simulation fields.
"""
from __future__ import annotations

import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Sequence, Type, TypeVar

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .contact import IndenterProfile, Material
from .errors import ConfigError
from .estimator import FitModel
from .presets import SENSOR_PEAK_TO_PEAK, SENSOR_RATE, SPECIMENS, TIPS, SpecimenPreset
from .recovery import RecoveryParams
from .simulator import ExperimentConfig, Specimen

LOGGER = logging.getLogger(__name__)

ConfigT = TypeVar("ConfigT", bound="FitConfig")


class Settings(BaseSettings):
    """Process-wide defaults for logging, the sensor model and the surface search."""

    log_level: str = "INFO"
    log_format: Literal["text", "json"] = "text"
    log_file_name: str = "mdr_indent.log"

    f_unc: float = SENSOR_PEAK_TO_PEAK
    force_noise_std: float = SENSOR_PEAK_TO_PEAK / 4.0
    position_noise_std: float = 1e-5
    approach_gap: float = 0.005

    grid_points: int = 200
    surface_tolerance: float = 1e-6
    feasible_merge_gap: float = 1e-4

    # Position controller of the rig; recorded in manifests only.
    controller_p_gain: float = 20.0
    controller_d_gain: float = 0.5

    default_jobs: int = 1

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="MDR_INDENT_",
        case_sensitive=False,
        extra="ignore",
    )

    def run_defaults(self) -> Dict[str, Any]:
        """RunConfig fields whose default comes from the settings."""
        return {
            "f_unc": self.f_unc,
            "force_noise_std": self.force_noise_std,
            "position_noise_std": self.position_noise_std,
            "approach_gap": self.approach_gap,
        }


@lru_cache
def get_settings() -> Settings:
    """Return cached settings instance."""
    return Settings()


FIELD_UNITS: Dict[str, str] = {
    "name": "-",
    "specimen": "-",
    "tip": "-",
    "e_f": "Pa",
    "nu": "-",
    "thickness": "m",
    "z_surf_true": "m",
    "profile_kind": "-",
    "tip_radius": "m",
    "profile_n": "-",
    "profile_c_tilde": "m^(1-n)",
    "speed": "m/s",
    "depth_fraction": "-",
    "sample_rate": "Hz",
    "force_noise_std": "N",
    "position_noise_std": "m",
    "seed": "-",
    "approach_gap": "m",
    "f_unc": "N",
    "discard_fraction": "-",
    "reference_area": "m^2",
    "rest_intervals": "s",
    "recovery_e_inf": "Pa",
    "recovery_amplitude": "Pa",
    "recovery_rate": "1/s",
}


class FitConfig(BaseModel):
    """Tip, Poisson ratio and sensor model: everything the estimator needs to fit a dataset."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    nu: float = Field(default=0.0, ge=0.0, lt=0.5, description="Poisson ratio")

    tip: Optional[Literal["flat", "sphere", "paraboloid"]] = Field(default=None, description="Tip preset")
    profile_kind: Optional[Literal["flat", "sphere", "power_law"]] = None
    tip_radius: Optional[float] = Field(default=None, gt=0.0, description="Flat half-width or sphere radius R1 (m)")
    profile_n: Optional[float] = Field(default=None, gt=0.0)
    profile_c_tilde: Optional[float] = Field(default=None, gt=0.0)

    f_unc: float = Field(default=SENSOR_PEAK_TO_PEAK, gt=0.0, description="Force-sensor uncertainty (N)")
    discard_fraction: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    reference_area: Optional[float] = Field(default=None, gt=0.0)

    def cross_field_violations(self) -> List[str]:
        violations: List[str] = []
        if self.tip is None and self.profile_kind is None:
            violations.append("tip [-]: give a tip preset or a profile_kind")
        if self.profile_kind in ("flat", "sphere") and self.tip_radius is None:
            violations.append(f"tip_radius [m]: required for profile_kind {self.profile_kind!r}")
        if self.profile_kind == "power_law":
            if self.profile_n is None:
                violations.append("profile_n [-]: required for profile_kind 'power_law'")
            if self.profile_c_tilde is None:
                violations.append("profile_c_tilde [m^(1-n)]: required for profile_kind 'power_law'")
        return violations

    def to_profile(self) -> IndenterProfile:
        if self.profile_kind == "flat":
            return IndenterProfile.flat(self.tip_radius)
        if self.profile_kind == "sphere":
            return IndenterProfile.sphere(self.tip_radius)
        if self.profile_kind == "power_law":
            return IndenterProfile.reduced(self.profile_n, self.profile_c_tilde)
        preset = TIPS[self.tip]
        if self.tip_radius is not None:
            preset = type(preset)(preset.name, self.tip_radius)
        return preset.profile()

    def to_fit_model(self) -> FitModel:
        return FitModel(
            profile=self.to_profile(),
            nu=self.nu,
            discard_fraction=self.discard_fraction,
            reference_area=self.reference_area,
        )


class RunConfig(FitConfig):
    """One simulated (or measured) indentation experiment and how to fit it."""

    name: str = Field(default="run", min_length=1, description="Output file stem")

    specimen: Optional[Literal["white", "pink", "grey"]] = Field(default=None, description="Specimen preset")
    e_f: Optional[float] = Field(default=None, gt=0.0, description="Elastic modulus E_f (Pa)")
    thickness: Optional[float] = Field(default=None, gt=0.0, description="Specimen thickness (m)")
    z_surf_true: float = Field(default=0.1, description="True surface height in the robot frame (m)")

    speed: float = Field(gt=0.0, description="Cross-head speed (m/s)")
    depth_fraction: float = Field(default=0.1, gt=0.0, le=0.2)
    sample_rate: float = Field(default=SENSOR_RATE, gt=0.0)
    force_noise_std: float = Field(default=0.012, ge=0.0)
    position_noise_std: float = Field(default=1e-5, ge=0.0)
    seed: int = Field(default=0, ge=0)
    approach_gap: float = Field(default=0.005, gt=0.0)

    rest_intervals: List[float] = Field(default_factory=list, description="Rest before each palpation (s)")
    recovery_e_inf: Optional[float] = Field(default=None, gt=0.0)
    recovery_amplitude: Optional[float] = None
    recovery_rate: Optional[float] = Field(default=None, lt=0.0)

    def cross_field_violations(self) -> List[str]:
        violations: List[str] = []
        if self.e_f is None and self.specimen is None:
            violations.append("e_f [Pa]: required when no specimen preset is given")
        if self.thickness is None and self.specimen is None:
            violations.append("thickness [m]: required when no specimen preset is given")
        violations.extend(super().cross_field_violations())
        if any(t < 0.0 for t in self.rest_intervals):
            violations.append("rest_intervals [s]: every rest interval must be >= 0")
        recovery = (self.recovery_e_inf, self.recovery_amplitude, self.recovery_rate)
        if self.rest_intervals and any(v is None for v in recovery):
            for name, value in zip(("recovery_e_inf", "recovery_amplitude", "recovery_rate"), recovery):
                if value is None:
                    violations.append(f"{name} [{FIELD_UNITS[name]}]: required when rest_intervals is set")
        return violations

    @property
    def specimen_preset(self) -> Optional[SpecimenPreset]:
        return SPECIMENS[self.specimen] if self.specimen else None

    @property
    def resolved_e_f(self) -> float:
        return self.e_f if self.e_f is not None else self.specimen_preset.e_f

    @property
    def resolved_thickness(self) -> float:
        return self.thickness if self.thickness is not None else self.specimen_preset.thickness

    def to_experiment_config(self) -> ExperimentConfig:
        material = Material.from_elastic_modulus(self.resolved_e_f, self.nu)
        return ExperimentConfig(
            specimen=Specimen(material, self.resolved_thickness, self.z_surf_true),
            profile=self.to_profile(),
            speed=self.speed,
            depth_fraction=self.depth_fraction,
            sample_rate=self.sample_rate,
            force_noise_std=self.force_noise_std,
            position_noise_std=self.position_noise_std,
            seed=self.seed,
            approach_gap=self.approach_gap,
        )

    def recovery_params(self) -> Optional[RecoveryParams]:
        if self.recovery_e_inf is None or self.recovery_amplitude is None or self.recovery_rate is None:
            return None
        return RecoveryParams.bounded(self.recovery_e_inf, self.recovery_amplitude, self.recovery_rate)

    def manifest_fields(self, settings: Optional[Settings] = None) -> Dict[str, str]:
        """Provenance written next to every simulated dataset."""
        settings = settings or get_settings()
        fields: Dict[str, str] = {"name": self.name}
        if self.specimen:
            fields["specimen"] = self.specimen
            fields["e_f_true"] = repr(self.resolved_e_f)
            fields["sigma_e_true"] = repr(self.specimen_preset.sigma_e)
        else:
            fields["e_f_true"] = repr(self.resolved_e_f)
        if self.tip:
            fields["tip"] = self.tip
        fields.update(self.to_experiment_config().manifest_fields())
        fields["f_unc"] = repr(self.f_unc)
        if self.discard_fraction is not None:
            fields["discard_fraction"] = repr(self.discard_fraction)
        if self.reference_area is not None:
            fields["reference_area"] = repr(self.reference_area)
        fields["controller_p_gain"] = repr(settings.controller_p_gain)
        fields["controller_d_gain"] = repr(settings.controller_d_gain)
        return fields


def format_validation_errors(exc: ValidationError) -> List[str]:
    """Render pydantic errors as `field [unit]: message`."""
    lines = []
    for error in exc.errors():
        loc = error.get("loc") or ("config",)
        name = str(loc[0])
        if error.get("type") == "extra_forbidden":
            lines.append(f"{name}: unknown configuration key")
            continue
        unit = FIELD_UNITS.get(name, "-")
        lines.append(f"{name} [{unit}]: {error.get('msg')}")
    return lines


def parse_overrides(pairs: Sequence[str]) -> Dict[str, Any]:
    """`key=value` strings to a mapping; values are parsed as YAML scalars or lists."""
    overrides: Dict[str, Any] = {}
    violations = []
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            violations.append(f"--set {pair!r}: expected key=value")
            continue
        overrides[key.strip()] = yaml.safe_load(value) if value.strip() else None
    if violations:
        raise ConfigError(violations)
    return overrides


def _validate(model: Type[ConfigT], data: Mapping[str, Any], settings: Settings) -> ConfigT:
    defaults = {k: v for k, v in settings.run_defaults().items() if k in model.model_fields}
    try:
        config = model.model_validate({**defaults, **dict(data)})
    except ValidationError as exc:
        raise ConfigError(format_validation_errors(exc)) from None
    violations = config.cross_field_violations()
    if violations:
        raise ConfigError(violations)
    return config


def build_run_config(data: Mapping[str, Any], settings: Optional[Settings] = None) -> RunConfig:
    """Validate a raw mapping (settings defaults underneath) into a RunConfig."""
    return _validate(RunConfig, data, settings or get_settings())


def build_fit_config(data: Mapping[str, Any], settings: Optional[Settings] = None) -> FitConfig:
    """
    Validate only the fit-model keys of a mapping.

    Keys that belong to a full run (speed, specimen, seed, ...) are accepted
    and ignored, so a simulation config can drive `estimate` and a measured
    dataset needs nothing more than its tip. Keys unknown to both are errors.
    """
    unknown = [k for k in data if k not in RunConfig.model_fields]
    if unknown:
        raise ConfigError([f"{k}: unknown configuration key" for k in unknown])
    fit_data = {k: v for k, v in data.items() if k in FitConfig.model_fields}
    return _validate(FitConfig, fit_data, settings or get_settings())


def _read_config_data(path: Optional[Path], overrides: Sequence[str]) -> Dict[str, Any]:
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        with path.open("r", encoding="utf-8") as handle:
            loaded = yaml.safe_load(handle) or {}
        if not isinstance(loaded, dict):
            raise ConfigError([f"{path}: expected a mapping of configuration keys"])
        data.update(loaded)
        LOGGER.debug("Loaded %d configuration keys from %s", len(loaded), path)
    data.update(parse_overrides(overrides))
    return data


def load_run_config(
    path: Optional[Path] = None,
    overrides: Sequence[str] = (),
    settings: Optional[Settings] = None,
) -> RunConfig:
    """Read a flat YAML run configuration and apply `key=value` overrides."""
    return build_run_config(_read_config_data(path, overrides), settings)


def load_fit_config(
    path: Optional[Path] = None,
    overrides: Sequence[str] = (),
    settings: Optional[Settings] = None,
) -> FitConfig:
    """Fit-model part of a YAML configuration plus overrides."""
    return build_fit_config(_read_config_data(path, overrides), settings)
