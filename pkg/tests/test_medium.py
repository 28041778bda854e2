import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qslp.errors import ConfigError, DomainError
from qslp.medium import (
    C0,
    TWO_PI,
    DriveAmplitudes,
    Geometry,
    MediumParams,
    MixingAngles,
    group_velocity,
    mixing_angles,
    phase_matching_residual,
    phase_mismatch,
    polariton_decomposition,
    slow_light_delay,
)

angle = st.floats(0.0, math.pi / 2)
rate = st.floats(1e3, 1e9)


def test_defaults_are_angular():
    m = MediumParams()
    assert m.optical_depth == 100
    assert m.gamma == pytest.approx(TWO_PI * 5.746e6)
    assert m.gamma_gs == m.gamma_gs_prime == pytest.approx(TWO_PI * 60e3)
    assert m.two_photon_detuning == pytest.approx(TWO_PI * 4e6)
    assert m.delta_k == 5.0 and m.length == 0.010
    d = DriveAmplitudes()
    assert d.omega_fwc == pytest.approx(TWO_PI * 6.0e6)
    assert d.omega_bwc == pytest.approx(TWO_PI * 4.2e6)
    assert d.omega_squared == pytest.approx(d.omega_fwc**2 + d.omega_bwc**2)


@pytest.mark.parametrize(
    "kw, name",
    [
        ({"optical_depth": 0}, "optical_depth"),
        ({"gamma": -1.0}, "gamma"),
        ({"length": 0}, "length"),
        ({"gamma_gs": -1.0}, "gamma_gs"),
        ({"gamma_gs_prime": -1.0}, "gamma_gs_prime"),
    ],
)
def test_medium_invariants_name_the_field(kw, name):
    with pytest.raises(ConfigError, match=f"medium.{name}:"):
        MediumParams(**kw)


def test_negative_drive_rejected():
    with pytest.raises(ConfigError, match="omega_bwc"):
        DriveAmplitudes(omega_bwc=-1.0)


@pytest.mark.parametrize("convention", ["linear", "squared"])
def test_balanced_drives_give_45_degrees(convention):
    a = mixing_angles(DriveAmplitudes(5.0, 5.0), convention)
    assert a.phi == pytest.approx(math.pi / 4, abs=1e-15)


def test_no_backward_drive_gives_zero_phi():
    assert mixing_angles(DriveAmplitudes(omega_bwc=0.0)).phi == 0.0


def test_phi_at_fit_point_literal_convention():
    a = mixing_angles(DriveAmplitudes())
    assert math.degrees(a.phi) == pytest.approx(math.degrees(math.atan(math.sqrt(0.7))), abs=1e-12)
    # the quoted 39.93 deg is a rounding of 39.918 deg
    assert math.degrees(a.phi) == pytest.approx(39.93, abs=0.02)


def test_phi_squared_convention():
    a = mixing_angles(DriveAmplitudes(), "squared")
    assert math.tan(a.phi) == pytest.approx(0.7, rel=1e-12)


def test_all_zero_drives_rejected():
    with pytest.raises(DomainError):
        mixing_angles(DriveAmplitudes(0.0, 0.0))


def test_theta_only_with_coupling_strength():
    assert mixing_angles(DriveAmplitudes()).theta is None
    d = DriveAmplitudes(3.0, 4.0, coupling_strength=25.0)
    assert mixing_angles(d).theta == pytest.approx(math.pi / 4)
    with pytest.raises(DomainError):
        group_velocity(mixing_angles(DriveAmplitudes()))


def test_group_velocity_examples():
    assert group_velocity(MixingAngles(0.0, 0.0)) == C0
    assert abs(group_velocity(MixingAngles(0.3, math.pi / 4))) < 1e-10 * C0
    assert abs(group_velocity(MixingAngles(math.pi / 2, 0.0))) < 1e-10 * C0


def test_decomposition_examples():
    w = polariton_decomposition(MixingAngles(0.0, 0.0))
    assert (w.forward_photonic_weight, w.backward_photonic_weight, w.atomic_weight) == (1.0, 0.0, 0.0)
    w = polariton_decomposition(MixingAngles(0.0, math.pi / 4))
    assert w.forward_photonic_weight == pytest.approx(0.5)
    assert w.backward_photonic_weight == pytest.approx(0.5)
    w = polariton_decomposition(MixingAngles(math.pi / 2, 0.3))
    assert w.atomic_weight == pytest.approx(1.0)
    assert w.forward_photonic_weight < 1e-30


@given(angle, angle)
def test_weights_sum_to_one(theta, phi):
    assert abs(polariton_decomposition(MixingAngles(theta, phi)).total - 1.0) < 1e-12


@given(angle, angle)
def test_group_velocity_antisymmetric_and_bounded(theta, phi):
    v = group_velocity(MixingAngles(theta, phi))
    assert abs(v) <= C0
    assert v == pytest.approx(-group_velocity(MixingAngles(theta, math.pi / 2 - phi)), abs=1e-6)


@given(rate, st.floats(1e6, 1e18), st.sampled_from(["linear", "squared"]))
def test_balanced_drive_stops_polariton(omega, g2n, convention):
    a = mixing_angles(DriveAmplitudes(omega, omega, coupling_strength=g2n), convention)
    assert abs(group_velocity(a)) < 1e-10 * C0


def test_phase_mismatch_examples():
    assert phase_mismatch(Geometry(0.0)) == 0.0
    assert phase_mismatch(Geometry(math.radians(0.345), 795e-9)) == pytest.approx(-573.1, abs=0.05)
    g = Geometry(math.radians(89.999999))
    assert phase_mismatch(g) == pytest.approx(-2 * g.wavenumber, rel=1e-9)


@given(st.floats(-1.5, 1.5))
def test_phase_mismatch_even(theta):
    assert phase_mismatch(Geometry(theta)) == phase_mismatch(Geometry(-theta))


def test_geometry_invariants():
    with pytest.raises(ConfigError):
        Geometry(math.pi / 2)
    with pytest.raises(ConfigError):
        Geometry(0.1, wavelength=0.0)


def test_phase_matching_residual_examples():
    assert phase_matching_residual(3.0, 3.0, 3.0, 3.0) == 0.0
    assert phase_matching_residual(5.0, 5.0, 2.0, 2.0) == 0.0
    assert phase_matching_residual(11.0, 1.0, 4.0, 1.0) == 7.0


def test_slow_light_delay_value():
    # OD Gamma / Omega^2 at the default medium and a 2 pi x 6 MHz coupling
    tau = slow_light_delay(MediumParams(), TWO_PI * 6e6)
    assert tau == pytest.approx(100 * TWO_PI * 5.746e6 / (TWO_PI * 6e6) ** 2, rel=1e-15)
    assert tau == pytest.approx(2.540e-6, rel=1e-3)
