"""Tests for synthetic indentation runs and repeated palpation."""

from __future__ import annotations

import logging

import numpy as np
import pytest

from mdr_indent import contact
from mdr_indent.contact import Material
from mdr_indent.errors import ConfigError, ModelDomainError
from mdr_indent.presets import CROSS_HEAD_SPEED
from mdr_indent.recovery import RecoveryParams
from mdr_indent.simulator import (
    Dataset,
    IndentationRecord,
    Specimen,
    palpation_seed,
    simulate_indentation,
    simulate_repeated_palpation,
    true_trajectory,
)

from tests.conftest import Z_SURF_TRUE


class TestDataset:
    """Tests for the column-oriented record container."""

    def test_from_records_and_indexing(self):
        records = [IndentationRecord(0.0, 0.1, 0.0), IndentationRecord(0.1, 0.09, 0.5)]
        dataset = Dataset.from_records(records)
        assert len(dataset) == 2
        assert dataset[1] == records[1]
        assert dataset.records() == records
        assert isinstance(dataset[:1], Dataset)
        assert len(dataset[:1]) == 1

    def test_empty(self):
        assert len(Dataset.from_records([])) == 0

    def test_decreasing_time_rejected(self):
        with pytest.raises(ValueError):
            Dataset(np.array([0.0, 1.0, 0.5]), np.zeros(3), np.zeros(3))

    def test_column_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros(3), np.zeros(2), np.zeros(3))

    def test_scaled_forces(self, noise_free_dataset):
        doubled = noise_free_dataset.scaled_forces(2.0)
        np.testing.assert_array_equal(doubled.f_z, 2.0 * noise_free_dataset.f_z)
        np.testing.assert_array_equal(doubled.z_ee, noise_free_dataset.z_ee)


class TestExperimentConfig:
    """Tests for configuration validation and derived quantities."""

    def test_derived_quantities(self, noise_free_config):
        """White foam: 3 mm depth, 8 mm traverse at 50 mm/min."""
        assert noise_free_config.max_depth == pytest.approx(3e-3)
        assert noise_free_config.traverse_time == pytest.approx(8e-3 / CROSS_HEAD_SPEED)
        assert noise_free_config.n_samples == 7681

    def test_every_violation_reported(self, make_config, white_material):
        with pytest.raises(ConfigError) as exc_info:
            make_config(
                specimen=Specimen(white_material, -1.0, Z_SURF_TRUE),
                speed=0.0,
                sample_rate=-5.0,
            )
        message = str(exc_info.value)
        assert "thickness [m]" in message
        assert "speed [m/s]" in message
        assert "sample_rate [Hz]" in message
        assert len(exc_info.value.violations) == 3

    def test_deep_indentation_warns(self, make_config, caplog):
        with caplog.at_level(logging.WARNING, logger="mdr_indent.simulator"):
            make_config(depth_fraction=0.15)
        assert any("linear-elastic" in record.message for record in caplog.records)

    def test_depth_beyond_limit_rejected(self, make_config):
        with pytest.raises(ConfigError):
            make_config(depth_fraction=0.5)

    def test_manifest_fields_cover_run(self, noise_free_config):
        fields = noise_free_config.manifest_fields()
        for key in ("e_f", "speed", "seed", "z_surf_true", "profile_kind", "profile_r1", "n_samples"):
            assert key in fields
        assert float(fields["e_f"]) == pytest.approx(111e3)

    def test_with_material_keeps_geometry(self, noise_free_config):
        stiffer = noise_free_config.with_material(Material.from_elastic_modulus(150e3), seed=9)
        assert stiffer.specimen.thickness == noise_free_config.specimen.thickness
        assert stiffer.specimen.material.e_f == pytest.approx(150e3)
        assert stiffer.seed == 9


class TestSimulateIndentation:
    """Tests for single synthetic runs."""

    def test_noise_free_run_follows_contact_law(self, noise_free_config, noise_free_dataset):
        depth = np.clip(Z_SURF_TRUE - noise_free_dataset.z_ee, 0.0, None)
        expected = contact.force(noise_free_config.specimen.material, noise_free_config.profile, depth)
        np.testing.assert_allclose(noise_free_dataset.f_z, expected, rtol=0, atol=0)

    def test_descent_is_constant_speed(self, noise_free_dataset):
        dz = np.diff(noise_free_dataset.z_ee)
        np.testing.assert_allclose(dz, -CROSS_HEAD_SPEED / 800.0, rtol=1e-6)
        assert noise_free_dataset.z_ee[0] == pytest.approx(Z_SURF_TRUE + 0.005)

    def test_peak_force_at_max_depth(self, noise_free_config):
        truth = true_trajectory(noise_free_config)
        assert truth.depth.max() == pytest.approx(3e-3, abs=2e-6)
        assert truth.force.max() == pytest.approx(
            contact.force_sphere(noise_free_config.specimen.material, 0.010, truth.depth.max()), rel=1e-12
        )

    def test_same_seed_is_bitwise_reproducible(self, make_config):
        first = simulate_indentation(make_config(seed=42))
        second = simulate_indentation(make_config(seed=42))
        np.testing.assert_array_equal(first.f_z, second.f_z)
        np.testing.assert_array_equal(first.z_ee, second.z_ee)

    def test_different_seeds_differ(self, make_config):
        assert not np.array_equal(
            simulate_indentation(make_config(seed=1)).f_z, simulate_indentation(make_config(seed=2)).f_z
        )

    def test_noise_level(self, make_config):
        """Pre-contact forces carry only the configured sensor noise."""
        dataset = simulate_indentation(make_config(seed=8))
        pre_contact = dataset.f_z[dataset.z_ee > Z_SURF_TRUE + 1e-4]
        assert np.std(pre_contact) == pytest.approx(0.012, rel=0.1)
        assert abs(np.mean(pre_contact)) < 4 * 0.012 / np.sqrt(pre_contact.size)


class TestRepeatedPalpation:
    """Tests for palpation series driven by the recovery curve."""

    @pytest.fixture
    def recovery(self):
        return RecoveryParams.bounded(e_inf=111e3, amplitude=25e3, rate=-0.02)

    def test_moduli_follow_recovery_curve(self, noise_free_config, recovery):
        rests = [0.0, 10.0, 60.0]
        runs = simulate_repeated_palpation(noise_free_config, rests, recovery)
        assert [run.index for run in runs] == [0, 1, 2]
        for run, rest in zip(runs, rests):
            assert run.rest_time == rest
            assert run.material.e_f == pytest.approx(111e3 + 25e3 * np.exp(-0.02 * rest), rel=1e-12)
        assert runs[0].material.e_f == pytest.approx(136e3)

    def test_each_palpation_has_its_own_seed(self, make_config, recovery):
        runs = simulate_repeated_palpation(make_config(seed=4), [5.0, 5.0], recovery)
        assert runs[0].seed != runs[1].seed
        assert runs[0].seed == palpation_seed(4, 0)
        assert not np.array_equal(runs[0].dataset.f_z, runs[1].dataset.f_z)

    def test_negative_rest_rejected(self, noise_free_config, recovery):
        with pytest.raises(ModelDomainError):
            simulate_repeated_palpation(noise_free_config, [10.0, -1.0], recovery)

    def test_non_positive_modulus_rejected(self, noise_free_config):
        falling = RecoveryParams(c1=-200e3, c2=-0.01, c3=100e3, c4=0.0)
        with pytest.raises(ModelDomainError):
            simulate_repeated_palpation(noise_free_config, [0.0], falling)
