"""Atomic-medium constants and closed-form polariton algebra.

All rates and Rabi frequencies are angular frequencies in rad/s, so a value
quoted as "2pi x 6.0 MHz" is stored as ``2 * pi * 6.0e6``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

from .errors import ConfigError, DomainError

TWO_PI = 2.0 * math.pi
C0 = 299_792_458.0

# 87Rb D1 natural linewidth.
GAMMA_RB87_D1 = TWO_PI * 5.746e6

PhiConvention = Literal["linear", "squared"]


@dataclass(frozen=True)
class MediumParams:
    optical_depth: float = 100.0
    gamma: float = GAMMA_RB87_D1
    gamma_gs: float = TWO_PI * 60e3
    gamma_gs_prime: float = TWO_PI * 60e3
    length: float = 0.010
    two_photon_detuning: float = TWO_PI * 4.0e6
    delta_k: float = 5.0
    light_speed: float = C0

    def __post_init__(self):
        checks = [
            ("optical_depth", self.optical_depth > 0, "OD > 0"),
            ("gamma", self.gamma > 0, "gamma > 0"),
            ("length", self.length > 0, "length > 0"),
            ("gamma_gs", self.gamma_gs >= 0, "gamma_gs >= 0"),
            ("gamma_gs_prime", self.gamma_gs_prime >= 0, "gamma_gs_prime >= 0"),
            ("light_speed", self.light_speed > 0, "light_speed > 0"),
        ]
        for name, ok, rule in checks:
            if not ok:
                raise ConfigError(f"medium.{name}: invariant violated ({rule})")


@dataclass(frozen=True)
class DriveAmplitudes:
    omega_fwc: float = TWO_PI * 6.0e6
    omega_bwc: float = TWO_PI * 4.2e6
    coupling_strength: Optional[float] = None  # g^2 N in rad^2/s^2

    def __post_init__(self):
        if self.omega_fwc < 0:
            raise ConfigError("drives.omega_fwc: invariant violated (>= 0)")
        if self.omega_bwc < 0:
            raise ConfigError("drives.omega_bwc: invariant violated (>= 0)")
        if self.coupling_strength is not None and self.coupling_strength < 0:
            raise ConfigError("drives.coupling_strength: invariant violated (>= 0)")

    @property
    def omega_squared(self) -> float:
        return self.omega_fwc**2 + self.omega_bwc**2


@dataclass(frozen=True)
class MixingAngles:
    """``theta`` is None when no g^2 N was supplied."""

    theta: Optional[float]
    phi: float


@dataclass(frozen=True)
class PolaritonDecomposition:
    forward_photonic_weight: float
    backward_photonic_weight: float
    atomic_weight: float

    @property
    def total(self) -> float:
        return (
            self.forward_photonic_weight
            + self.backward_photonic_weight
            + self.atomic_weight
        )


@dataclass(frozen=True)
class Geometry:
    angle: float
    wavelength: float = 795e-9

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ConfigError("geometry.wavelength: invariant violated (> 0)")
        if not abs(self.angle) < math.pi / 2:
            raise ConfigError("geometry.angle: invariant violated (|angle| < pi/2)")

    @property
    def wavenumber(self) -> float:
        return TWO_PI / self.wavelength


def mixing_angles(
    drives: DriveAmplitudes, convention: PhiConvention = "linear"
) -> MixingAngles:
    """Polariton mixing angles for the given drive amplitudes.

    ``convention="linear"`` uses tan^2(phi) = Omega_BWC / Omega_FWC;
    ``"squared"`` uses tan^2(phi) = (Omega_BWC / Omega_FWC)^2. The two agree
    at the balanced point and at Omega_BWC = 0.
    """
    f, b = drives.omega_fwc, drives.omega_bwc
    if f + b <= 0:
        raise DomainError("mixing angles undefined for all-zero drive amplitudes")
    if convention == "linear":
        phi = math.atan2(math.sqrt(b), math.sqrt(f))
    elif convention == "squared":
        phi = math.atan2(b, f)
    else:
        raise ValueError(f"unknown phi convention {convention!r}")

    theta = None
    if drives.coupling_strength is not None:
        theta = math.atan(math.sqrt(drives.coupling_strength / drives.omega_squared))
    return MixingAngles(theta=theta, phi=phi)


def group_velocity(angles: MixingAngles, c0: float = C0) -> float:
    """Dark-state polariton group velocity c0 cos^2(theta) cos(2 phi)."""
    if angles.theta is None:
        raise DomainError("group velocity needs theta; supply g^2 N with the drives")
    return c0 * math.cos(angles.theta) ** 2 * math.cos(2.0 * angles.phi)


def polariton_decomposition(angles: MixingAngles) -> PolaritonDecomposition:
    if angles.theta is None:
        raise DomainError("decomposition needs theta; supply g^2 N with the drives")
    ct2 = math.cos(angles.theta) ** 2
    return PolaritonDecomposition(
        forward_photonic_weight=math.cos(angles.phi) ** 2 * ct2,
        backward_photonic_weight=math.sin(angles.phi) ** 2 * ct2,
        atomic_weight=math.sin(angles.theta) ** 2,
    )


def phase_mismatch(geom: Geometry) -> float:
    """Residual wave-vector mismatch k (cos 2 Theta - 1), in 1/m."""
    # cos(2x) - 1 == -2 sin^2(x), without cancellation at small angles
    return -2.0 * geom.wavenumber * math.sin(geom.angle) ** 2


def phase_matching_residual(
    k_as_fwd: float, k_fwc: float, k_as_bwd: float, k_bwc: float
) -> float:
    """Zero when the forward and backward conversion paths are phase matched."""
    return (k_as_fwd - k_fwc) - (k_as_bwd - k_bwc)


def slow_light_delay(medium: MediumParams, omega: float) -> float:
    """Analytic EIT group delay OD * Gamma / Omega^2 through the full length."""
    if omega <= 0:
        raise DomainError("slow-light delay needs a nonzero coupling Rabi frequency")
    return medium.optical_depth * medium.gamma / omega**2


def eit_bandwidth(medium: MediumParams, omega: float) -> float:
    """Transparency-window width Omega^2 / (Gamma sqrt(OD)) in rad/s."""
    return omega**2 / (medium.gamma * math.sqrt(medium.optical_depth))
