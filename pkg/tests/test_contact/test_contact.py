"""Tests for the closed-form contact laws and the discrete spring foundation."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import gamma

from mdr_indent.contact import (
    IndenterProfile,
    Material,
    ProfileKind,
    SpringFoundation,
    discrete_foundation_force,
    force,
    force_coefficient,
    force_flat,
    force_power_law,
    force_sphere,
    hess_factor,
)
from mdr_indent.errors import ModelDomainError

DEPTHS = np.geomspace(1e-5, 3e-3, 25)
# incommensurate with the spring spacing, so edge cells sample all offsets
CONVERGENCE_DEPTHS = np.random.default_rng(11).uniform(1e-3, 3e-3, 200)
HALF_WIDTH = 0.02


def _oracle_profiles():
    """Sphere, paraboloid, flat and power laws sized to ~10 mm contact at 3 mm depth."""
    profiles = {
        "sphere": IndenterProfile.sphere(0.010),
        "paraboloid": IndenterProfile.sphere(0.0117),
        "flat": IndenterProfile.flat(0.010),
    }
    for n in (1.0, 1.5, 2.0, 3.0):
        profiles[f"n={n:g}"] = IndenterProfile.reduced(n, 3e-3 / 0.010**n)
    return profiles


class TestMaterial:
    """Tests for the elastic material description."""

    def test_from_elastic_modulus_applies_poisson_factor(self):
        """E* = E_f / (1 − ν²) and e_f round-trips."""
        material = Material.from_elastic_modulus(100e3, nu=0.3)
        assert material.e_star == pytest.approx(100e3 / 0.91, rel=1e-14)
        assert material.e_f == pytest.approx(100e3, rel=1e-14)

    @pytest.mark.parametrize("e_star,nu", [(0.0, 0.0), (-5.0, 0.0), (1e5, 0.5), (1e5, -0.1), (math.nan, 0.0)])
    def test_invalid_material_rejected(self, e_star, nu):
        """Non-positive modulus or ν outside [0, 0.5) is a domain error."""
        with pytest.raises(ModelDomainError):
            Material(e_star, nu)


class TestHessFactor:
    """Tests for the 3-D to 1-D profile scaling."""

    def test_quadratic_profile_factor_is_two(self):
        """Parabolic profiles map with factor exactly 2."""
        assert hess_factor(2.0) == pytest.approx(2.0, abs=1e-12)

    def test_conical_profile_factor_is_half_pi(self):
        """Compare against an independent Γ evaluation."""
        expected = math.sqrt(math.pi) * gamma(1.5) / gamma(1.0)
        assert hess_factor(1.0) == pytest.approx(expected, rel=1e-10)
        assert hess_factor(1.0) == pytest.approx(math.pi / 2.0, rel=1e-10)

    @pytest.mark.parametrize("n", [0.0, -1.0, math.inf])
    def test_invalid_exponent(self, n):
        with pytest.raises(ModelDomainError):
            hess_factor(n)


class TestIndenterProfile:
    """Tests for profile construction and its reduced description."""

    def test_power_law_fills_reduced_coefficient(self):
        profile = IndenterProfile.power_law(2.0, 25.0)
        assert profile.kind is ProfileKind.POWER_LAW
        assert profile.c_tilde == pytest.approx(50.0, rel=1e-12)

    def test_inconsistent_reduced_coefficient_rejected(self):
        with pytest.raises(ModelDomainError):
            IndenterProfile(kind=ProfileKind.POWER_LAW, n=2.0, c_n=25.0, c_tilde=60.0)

    def test_sphere_reduced_radius(self):
        """The 1-D sphere profile is x² / (2R1)."""
        profile = IndenterProfile.sphere(0.010)
        assert profile.reduced_radius == pytest.approx(0.020, rel=1e-12)
        assert profile.height(0.004) == pytest.approx(0.004**2 / 0.020, rel=1e-12)
        assert profile.force_exponent == 1.5

    def test_flat_profile(self):
        profile = IndenterProfile.flat(0.010)
        assert profile.force_exponent == 1.0
        assert profile.height(0.005) == 0.0
        assert math.isinf(profile.height(0.011))
        assert profile.contact_half_width(1e-3) == 0.010
        with pytest.raises(ModelDomainError):
            profile.reduced_radius

    @pytest.mark.parametrize(
        "profile",
        [IndenterProfile.flat(0.01), IndenterProfile.sphere(0.0117), IndenterProfile.reduced(3.0, 7.5)],
        ids=["flat", "sphere", "power_law"],
    )
    def test_fields_round_trip(self, profile):
        """Manifest fields rebuild an equal profile."""
        assert IndenterProfile.from_fields(profile.to_fields()) == profile

    def test_incomplete_fields_rejected(self):
        with pytest.raises(ModelDomainError):
            IndenterProfile.from_fields({"profile_kind": "flat"})

    def test_sphere_contact_half_width(self):
        """a = √(2 R1 d) for the sphere."""
        profile = IndenterProfile.sphere(0.010)
        assert profile.contact_half_width(2e-3) == pytest.approx(math.sqrt(2 * 0.010 * 2e-3), rel=1e-12)


class TestForceLaws:
    """Tests for the closed-form normal force laws."""

    def test_sphere_law_equals_power_law(self, white_material, sphere_profile):
        """The sphere-derived power-law profile reproduces the sphere law."""
        d = np.linspace(0.0, 3e-3, 31)
        np.testing.assert_allclose(
            force_power_law(white_material, sphere_profile, d),
            force_sphere(white_material, 0.010, d),
            rtol=1e-12,
        )

    def test_sphere_value(self, white_material):
        """F = 4/3 · E* · d · √(2R1·d) at 3 mm."""
        expected = 4.0 / 3.0 * 111e3 * 3e-3 * math.sqrt(2 * 0.010 * 3e-3)
        assert force_sphere(white_material, 0.010, 3e-3) == pytest.approx(expected, rel=1e-12)

    def test_flat_law_is_linear(self, white_material):
        assert force_flat(white_material, 0.010, 1e-3) == pytest.approx(111e3 * 0.020 * 1e-3, rel=1e-12)

    def test_zero_depth_gives_zero_force(self, white_material, sphere_profile, flat_profile):
        assert force(white_material, sphere_profile, 0.0) == 0.0
        assert force(white_material, flat_profile, 0.0) == 0.0

    @pytest.mark.parametrize("d", [-1e-6, math.nan])
    def test_invalid_depth_rejected(self, white_material, sphere_profile, d):
        with pytest.raises(ModelDomainError):
            force(white_material, sphere_profile, d)

    def test_power_law_requires_power_law_profile(self, white_material, flat_profile):
        with pytest.raises(ModelDomainError):
            force_power_law(white_material, flat_profile, 1e-3)

    @pytest.mark.parametrize("tip", ["sphere", "flat", "power_law"])
    def test_force_coefficient(self, white_material, tip):
        """F = κ · d^m with m the profile's force exponent."""
        profile = {
            "sphere": IndenterProfile.sphere(0.010),
            "flat": IndenterProfile.flat(0.010),
            "power_law": IndenterProfile.reduced(3.0, 24.0),
        }[tip]
        kappa = force_coefficient(white_material, profile)
        d = 1.7e-3
        assert force(white_material, profile, d) == pytest.approx(kappa * d**profile.force_exponent, rel=1e-12)

    def test_poisson_ratio_only_enters_through_e_star(self, sphere_profile):
        """At equal E_f, a larger ν gives a larger force by 1 / (1 − ν²)."""
        soft = Material.from_elastic_modulus(111e3, 0.0)
        poisson = Material.from_elastic_modulus(111e3, 0.3)
        ratio = force(poisson, sphere_profile, 2e-3) / force(soft, sphere_profile, 2e-3)
        assert ratio == pytest.approx(1.0 / 0.91, rel=1e-12)

    @pytest.mark.parametrize("name", ["sphere", "flat", "n=1", "n=1.5", "n=3"])
    @pytest.mark.parametrize("scale", [0.25, 2.0, 7.5])
    def test_force_is_homogeneous_in_depth(self, white_material, name, scale):
        """F(λd) = λ^m · F(d) with m the profile's force exponent."""
        profile = _oracle_profiles()[name]
        d = DEPTHS[DEPTHS <= 4e-4]
        np.testing.assert_allclose(
            force(white_material, profile, scale * d),
            scale**profile.force_exponent * force(white_material, profile, d),
            rtol=1e-10,
        )

    @pytest.mark.parametrize("name", ["sphere", "flat", "n=1", "n=1.5", "n=3"])
    def test_force_is_linear_in_effective_modulus(self, white_material, name):
        profile = _oracle_profiles()[name]
        stiffer = Material(2.0 * white_material.e_star, white_material.nu)
        np.testing.assert_array_equal(force(stiffer, profile, DEPTHS), 2.0 * force(white_material, profile, DEPTHS))

    @pytest.mark.parametrize("name", ["sphere", "flat", "n=1", "n=1.5", "n=3"])
    def test_force_strictly_increases_with_depth(self, white_material, name):
        forces = force(white_material, _oracle_profiles()[name], DEPTHS)
        assert np.all(forces > 0.0)
        assert np.all(np.diff(forces) > 0.0)


class TestSpringFoundation:
    """Tests for the discrete spring bed against the closed-form laws."""

    @pytest.mark.parametrize("name", list(_oracle_profiles()))
    def test_discrete_bed_matches_closed_form(self, white_material, name):
        """Agreement within 0.1% over d ∈ (0, 3 mm] at Δx = 1 μm."""
        profile = _oracle_profiles()[name]
        bed = SpringFoundation(dx=1e-6, half_width=HALF_WIDTH, material=white_material)
        for d in DEPTHS:
            exact = force(white_material, profile, d)
            assert discrete_foundation_force(bed, profile, d) == pytest.approx(exact, rel=1e-3)

    @pytest.mark.parametrize("name", [n for n in _oracle_profiles() if n != "flat"])
    def test_discretisation_error_decreases_with_spacing(self, white_material, name):
        """Halving Δx reduces the mean relative error to at most 0.6 of its value."""
        profile = _oracle_profiles()[name]

        def mean_error(dx: float) -> float:
            bed = SpringFoundation(dx=dx, half_width=HALF_WIDTH, material=white_material)
            errors = [
                abs(discrete_foundation_force(bed, profile, d) / force(white_material, profile, d) - 1.0)
                for d in CONVERGENCE_DEPTHS
            ]
            return float(np.mean(errors))

        assert mean_error(5e-7) <= 0.6 * mean_error(1e-6)

    def test_flat_bed_is_exact(self, white_material, flat_profile):
        """Cell-centred springs cover a flat punch whose width is a whole number of cells."""
        bed = SpringFoundation(dx=1e-6, half_width=HALF_WIDTH, material=white_material)
        assert discrete_foundation_force(bed, flat_profile, 1e-3) == pytest.approx(
            force(white_material, flat_profile, 1e-3), rel=1e-9
        )

    def test_spring_stiffness(self, white_material):
        assert SpringFoundation(1e-6, 0.01, white_material).spring_stiffness == pytest.approx(111e3 * 1e-6)

    def test_contact_wider_than_bed_rejected(self, white_material, sphere_profile):
        bed = SpringFoundation(dx=1e-5, half_width=1e-3, material=white_material)
        with pytest.raises(ModelDomainError):
            discrete_foundation_force(bed, sphere_profile, 3e-3)

    def test_zero_and_negative_depth(self, white_material, sphere_profile):
        bed = SpringFoundation(dx=1e-5, half_width=HALF_WIDTH, material=white_material)
        assert discrete_foundation_force(bed, sphere_profile, 0.0) == 0.0
        with pytest.raises(ModelDomainError):
            discrete_foundation_force(bed, sphere_profile, -1e-4)

    @pytest.mark.parametrize("dx,half_width", [(0.0, 0.01), (1e-6, 0.0)])
    def test_invalid_bed(self, white_material, dx, half_width):
        with pytest.raises(ModelDomainError):
            SpringFoundation(dx, half_width, white_material)
