"""Steady-state linear response of the single-Lambda EIT medium.

Independent of the time-domain solver: the probe transfer function is
derived in the frequency domain (time dependence exp(-i w t)) from the
forward-probe Bloch equations with the backward coupling off, then used to
propagate a pulse by FFT and to read off group delays.
"""

from __future__ import annotations

import numpy as np

from .medium import MediumParams


def transfer_function(medium: MediumParams, omega_c: float, w):
    """Field transmission T(w) through the full medium for probe detuning ``w``."""
    w = np.asarray(w, dtype=float)
    g, gs = medium.gamma, medium.gamma_gs
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = 0.5 * g - 1j * w + omega_c**2 / (4.0 * (gs - 1j * w))
        return np.exp(-medium.optical_depth * g / (4.0 * denom))


def group_delay(medium: MediumParams, omega_c: float, w: float = 0.0, dw: float | None = None) -> float:
    """d arg T / d w by central differences (positive for delay)."""
    if dw is None:
        dw = 1e-4 * omega_c**2 / (medium.gamma * np.sqrt(medium.optical_depth))
    w0 = w if w != 0.0 or medium.gamma_gs > 0 else 0.5 * dw
    tp, tm = transfer_function(medium, omega_c, [w0 + dw, w0 - dw])
    return float(np.angle(tp / tm) / (2.0 * dw))


def propagate(medium: MediumParams, omega_c: float, t, field_in):
    """Output envelope at z = L for an input envelope sampled on uniform ``t``."""
    t = np.asarray(t, dtype=float)
    dt = t[1] - t[0]
    f = np.fft.fftfreq(t.size, dt)
    # numpy's inverse FFT sums exp(+2 pi i f t), i.e. physical detuning -2 pi f
    tf = transfer_function(medium, omega_c, -2.0 * np.pi * f)
    tf = np.where(np.isfinite(tf), tf, 1.0)
    return np.fft.ifft(np.fft.fft(field_in) * tf)
