"""Probe transmission through the medium and thin-medium field forms.

Microscopic constants never appear: ``k_p L chi = A rho_ge`` is the working
identity, with A = d Gamma_p / Omega_p.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import C_LIGHT, SOFT_RATIO, DerivedParams, OpticsParams, SimConfig

THIN_MEDIUM_WARN = 0.5


def probe_power(rho_ge_imag, optics: OpticsParams, derived: DerivedParams, form: str = "exact"):
    """Probe power reaching the mirror for absorption coherence rho''_ge."""
    x = derived.a_gain * np.asarray(rho_ge_imag, dtype=float)
    if form == "exact":
        out = optics.w_p0 * np.exp(-x)
    elif form == "linear":
        if np.any(x > 1):
            warnings.warn("linearized transmission negative; use exact form", stacklevel=2)
        out = optics.w_p0 * (1.0 - x)
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(out) if np.ndim(out) == 0 else out


def thin_medium_field(omega_p0: complex, kpl_chi):
    """Transmitted probe Rabi amplitude for |k_p L chi| << 1."""
    kpl_chi = np.asarray(kpl_chi)
    if np.any(np.abs(kpl_chi) > THIN_MEDIUM_WARN):
        warnings.warn(f"|k_p L chi| exceeds {THIN_MEDIUM_WARN}; thin-medium form unreliable",
                      stacklevel=2)
    out = omega_p0 * (1.0 + 0.5j * kpl_chi)
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ModulatedField:
    """Omega_pL(t) = c0 + c_plus exp(-i w t) + c_minus exp(+i w t)."""

    c0: complex
    c_plus: complex
    c_minus: complex
    omega_m: float

    def at(self, t):
        t = np.asarray(t, dtype=float)
        w = self.omega_m
        return self.c0 + self.c_plus * np.exp(-1j * w * t) + self.c_minus * np.exp(1j * w * t)

    def intensity_harmonics(self) -> dict[int, complex]:
        """Coefficients I_k of |Omega_pL(t)|^2 = sum_k I_k exp(-i k w t)."""
        c = {0: self.c0, 1: self.c_plus, -1: self.c_minus}
        out: dict[int, complex] = {}
        for j, cj in c.items():
            for l, cl in c.items():
                # c_j e^{-i j wt} * conj(c_l) e^{+i l wt}
                k = j - l
                out[k] = out.get(k, 0j) + cj * np.conj(cl)
        return out


def modulated_field(omega_p0: complex, kpl_chi0: complex, kpl_chi_plus: complex,
                    kpl_chi_minus: complex, omega_m: float) -> ModulatedField:
    """Harmonics of the transmitted amplitude for a susceptibility with first harmonics.

    Inputs are k_p L chi_k = A rho_{k,ge}, taken directly from a Fourier solution.
    """
    for v in (kpl_chi0, kpl_chi_plus, kpl_chi_minus):
        if abs(v) > THIN_MEDIUM_WARN:
            warnings.warn(f"|k_p L chi| exceeds {THIN_MEDIUM_WARN}; thin-medium form unreliable",
                          stacklevel=2)
    return ModulatedField(
        c0=omega_p0 * (1.0 + 0.5j * kpl_chi0),
        c_plus=omega_p0 * 0.5j * kpl_chi_plus,
        c_minus=omega_p0 * 0.5j * kpl_chi_minus,
        omega_m=omega_m,
    )


@dataclass(frozen=True)
class RegimeCheck:
    name: str
    lhs: float
    rhs: float
    ratio: float
    ok: bool
    note: str = ""


def validity_report(config: SimConfig, rho_ge: complex | None = None,
                    a_gain: float | None = None) -> list[RegimeCheck]:
    """Evaluate the regime conditions of the model; ratios above 0.1 are flagged."""
    a, m, o = config.atom, config.mirror, config.optics
    checks = []

    def add(name, lhs, rhs, note=""):
        ratio = lhs / rhs if rhs else math.inf
        checks.append(RegimeCheck(name, lhs, rhs, ratio, ratio <= SOFT_RATIO, note))

    add("EIT: Omega_p << Omega_c", a.omega_p_rabi, a.omega_c_rabi)
    add("weak probe: Omega_p << Gamma_p", a.omega_p_rabi, a.gamma_p)
    add("no retardation: L << c/omega_m", o.length, C_LIGHT / m.omega_m)
    add("instantaneous light transit: L/c << T_m", o.length / C_LIGHT, 2 * math.pi / m.omega_m,
        "control field assumed to travel at c inside the gas; not corrected at large optical depth")
    if rho_ge is not None and a_gain is not None:
        add("thin medium: |k_p L chi| << 1", abs(a_gain * rho_ge), 1.0)
    return checks
