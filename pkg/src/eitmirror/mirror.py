"""Classical harmonic mirror driven by radiation pressure."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import C_LIGHT, DerivedParams, MirrorParams, OpticsParams


@dataclass(frozen=True)
class MirrorState:
    z: float
    p: float
    t: float = 0.0


@dataclass(frozen=True)
class EnvelopeState:
    b_m: complex  # z + i p / (M omega_m)
    omega_m: float
    mass: float

    @classmethod
    def from_amplitude(cls, amplitude: float, mirror: MirrorParams) -> "EnvelopeState":
        return cls(complex(amplitude), mirror.omega_m, mirror.mass)

    @classmethod
    def from_state(cls, state: MirrorState, mirror: MirrorParams) -> "EnvelopeState":
        return cls(state.z + 1j * state.p / (mirror.mass * mirror.omega_m), mirror.omega_m, mirror.mass)

    @property
    def amplitude(self) -> float:
        return abs(self.b_m)

    @property
    def energy(self) -> float:
        return 0.5 * self.mass * self.omega_m**2 * abs(self.b_m) ** 2


def oscillator_rhs(state: MirrorState, force: float, mirror: MirrorParams) -> tuple[float, float]:
    dz = state.p / mirror.mass
    dp = -mirror.mass * mirror.omega_m**2 * state.z + force
    if mirror.intrinsic_damping:
        dp -= mirror.intrinsic_damping * state.p
    return dz, dp


def static_force(w_p: float, w_c: float) -> float:
    if w_p < 0 or w_c < 0:
        raise ValueError("beam powers must be non-negative")
    return 2.0 * (w_p + w_c) / C_LIGHT


def feedback_force(rho_ge_imag_now, rho_ge_imag_dc: float, optics: OpticsParams,
                   derived: DerivedParams):
    """Modulated probe radiation pressure, -F_0 A (rho'' - rho''_dc)."""
    f0 = 2.0 * optics.w_p0 / C_LIGHT
    return -f0 * derived.a_gain * (np.asarray(rho_ge_imag_now) - rho_ge_imag_dc)


def equilibrium_shift(optics: OpticsParams, derived: DerivedParams, mirror: MirrorParams,
                      rho_dc: float) -> float:
    w_probe = optics.w_p0 * (1.0 - derived.a_gain * rho_dc)
    return 2.0 * (optics.w_c + w_probe) / (mirror.mass * mirror.omega_m**2 * C_LIGHT)


def envelope_predict(z0: float, gamma_eff: float, t, omega_m: float | None = None):
    """Period-averaged amplitude Z0 exp(-Gamma_eff t / 2)."""
    if omega_m is not None and abs(gamma_eff) > 0.1 * omega_m:
        warnings.warn("|Gamma_eff| is not small compared to omega_m; period averaging breaks down",
                      stacklevel=2)
    return z0 * np.exp(-0.5 * gamma_eff * np.asarray(t, dtype=float))


def envelope_energy(z0: float, gamma_eff: float, t, mirror: MirrorParams):
    z = envelope_predict(z0, gamma_eff, t, mirror.omega_m)
    return 0.5 * mirror.mass * mirror.omega_m**2 * z**2


def mechanical_energy(z, p, mirror: MirrorParams):
    z = np.asarray(z, dtype=float)
    p = np.asarray(p, dtype=float)
    out = 0.5 * p**2 / mirror.mass + 0.5 * mirror.mass * mirror.omega_m**2 * z**2
    return float(out) if out.ndim == 0 else out


def energy_in_quanta(energy, mirror: MirrorParams):
    from .params import HBAR

    return np.asarray(energy) / (HBAR * mirror.omega_m)


def resonant_drive_amplitude(force_amplitude: float, t, mirror: MirrorParams):
    """Amplitude envelope F1 t / (2 M omega_m) for F1 sin(omega_m t) from rest."""
    return force_amplitude * np.asarray(t, dtype=float) / (2 * mirror.mass * mirror.omega_m)


def free_solution(z0: float, p0: float, t, mirror: MirrorParams):
    w = mirror.omega_m
    t = np.asarray(t, dtype=float)
    z = z0 * np.cos(w * t) + p0 / (mirror.mass * w) * np.sin(w * t)
    p = -mirror.mass * w * z0 * np.sin(w * t) + p0 * np.cos(w * t)
    return z, p


def amplitude_from_energy(energy: float, mirror: MirrorParams) -> float:
    return math.sqrt(2 * energy / mirror.mass) / mirror.omega_m
