"""Shared pytest fixtures for mdr_indent tests.

Materials, tip profiles and experiment configurations of the reference
campaign, plus isolation of cached settings and root-logger handlers.
"""

from __future__ import annotations

import logging
import os
from typing import Callable, Generator

import pytest

from mdr_indent.config import get_settings
from mdr_indent.contact import IndenterProfile, Material
from mdr_indent.presets import CROSS_HEAD_SPEED, SPECIMENS, TIPS
from mdr_indent.simulator import Dataset, ExperimentConfig, Specimen, simulate_indentation

Z_SURF_TRUE = 0.1


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch) -> Generator[None, None, None]:
    """Drop MDR_INDENT_* variables and the settings cache around every test."""
    for key in list(os.environ):
        if key.upper().startswith("MDR_INDENT_"):
            monkeypatch.delenv(key, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(autouse=True)
def restore_root_handlers() -> Generator[None, None, None]:
    """CLI runs reconfigure the root logger; put the original handlers back afterwards."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers:
        if handler not in handlers:
            handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def white_material() -> Material:
    """White foam, ν = 0."""
    return Material.from_elastic_modulus(SPECIMENS["white"].e_f)


@pytest.fixture
def sphere_profile() -> IndenterProfile:
    """Spherical tip, R1 = 10 mm."""
    return TIPS["sphere"].profile()


@pytest.fixture
def flat_profile() -> IndenterProfile:
    """Flat punch, a = 10 mm."""
    return TIPS["flat"].profile()


@pytest.fixture
def make_config() -> Callable[..., ExperimentConfig]:
    """Factory for campaign-like configurations: specimen and tip by preset name."""

    def _make(
        specimen: str = "white",
        tip: str = "sphere",
        *,
        nu: float = 0.0,
        **overrides,
    ) -> ExperimentConfig:
        preset = SPECIMENS[specimen]
        fields = dict(
            specimen=Specimen(Material.from_elastic_modulus(preset.e_f, nu), preset.thickness, Z_SURF_TRUE),
            profile=TIPS[tip].profile(),
            speed=CROSS_HEAD_SPEED,
        )
        fields.update(overrides)
        return ExperimentConfig(**fields)

    return _make


@pytest.fixture
def noise_free_config(make_config) -> ExperimentConfig:
    """White foam, sphere tip, no sensor noise."""
    return make_config(force_noise_std=0.0, position_noise_std=0.0)


@pytest.fixture
def noise_free_dataset(noise_free_config) -> Dataset:
    return simulate_indentation(noise_free_config)


@pytest.fixture
def noisy_dataset(make_config) -> Dataset:
    """White foam, sphere tip, rig noise (σ_F = 12 mN, σ_z = 10 μm)."""
    return simulate_indentation(make_config(seed=3))
