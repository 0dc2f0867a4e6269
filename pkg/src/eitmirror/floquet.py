"""Asymptotic periodic response of the atom to constant control-beam sidebands.

The density matrix is expanded as rho(t) = sum_k rho_k exp(-i k omega_m t).
Everything numerical here runs in units of gamma_p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import jv

from .liouvillian import (
    E, G, S, TRACE_ROW, commutator_superop, dissipator_superop, hamiltonian, sigma,
    steady_state, unvec, vec,
)
from .params import C_LIGHT, EXACT, LINEARIZED, AtomDriveParams, MirrorParams, OpticsParams

MAX_ORDER = 4


class PoleError(ZeroDivisionError):
    pass


def wrap_phase(phi):
    """Map to (-pi, pi]."""
    out = -np.remainder(-np.asarray(phi, dtype=float) + math.pi, 2 * math.pi) + math.pi
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FourierSolution:
    order: int
    amplitudes: dict[int, np.ndarray]
    eta: float
    omega_m: float
    atom: AtomDriveParams
    mode: str
    residual: float

    def coherence(self, k: int) -> complex:
        """rho_ge of harmonic k (zero beyond the truncation)."""
        if abs(k) > self.order:
            return 0j
        return complex(self.amplitudes[k][G, E])

    def reconstruct(self, t) -> np.ndarray:
        """rho(t) from the truncated series; t may be an array (returns (..., 3, 3))."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (3, 3), dtype=complex)
        for k, rho_k in self.amplitudes.items():
            out += np.exp(-1j * k * self.omega_m * t)[..., None, None] * rho_k
        return out


@dataclass(frozen=True)
class ModulationResult:
    """rho''_ge(t) = offset + amplitude * cos(omega_m t + phase), phase relative to z0 cos(omega_m t)."""

    offset: float
    amplitude: float
    phase: float
    # arg[rho_+(D) - rho_+(-D)] + pi/2, the closed-form phase; equals pi - phase (mod 2 pi)
    closed_form_phase: float | None = None
    closed_form_amplitude: float | None = None


def _sideband_coefficients(eta: float, mode: str, nmax: int) -> dict[int, complex]:
    """Fourier coefficients a_n of cf(t) = sum_n a_n exp(i n omega_m t)."""
    if mode == LINEARIZED:
        coeffs = {0: 1.0 + 0j}
        if eta != 0:
            coeffs[1] = coeffs[-1] = 0.5j * eta
        return coeffs
    if mode == EXACT:
        # Jacobi-Anger: exp(i eta cos x) = sum_n i^n J_n(eta) exp(i n x)
        return {n: (1j ** n) * jv(n, eta) for n in range(-nmax, nmax + 1)}
    raise ValueError(f"unknown control mode {mode!r}")


def solve_sideband_hierarchy(atom: AtomDriveParams, eta: float, omega_m: float,
                             order: int = 1, mode: str = LINEARIZED) -> FourierSolution:
    """Solve 0 = i k w rho_k + sum_n L^(n) rho_{k+n} for |k| <= order, rho_{|k|>order} = 0."""
    if order < 1 or order > MAX_ORDER:
        raise ValueError(f"truncation order must be between 1 and {MAX_ORDER}, got {order}")
    if eta < 0:
        raise ValueError("eta must be non-negative")
    if not omega_m > 0:
        raise ValueError("omega_m must be positive")
    g = atom.gamma_p
    w = omega_m / g
    coeffs = _sideband_coefficients(eta, mode, 2 * order)
    sign = atom.commutator_sign
    half = 0.5 * atom.omega_c_rabi / g
    base = hamiltonian(atom, 0.0) / g
    blocks: dict[int, np.ndarray] = {}
    for n in coeffs:
        a_n, a_mn = coeffs.get(n, 0), coeffs.get(-n, 0)
        h_n = half * (a_n * sigma(E, S) + np.conj(a_mn) * sigma(S, E))
        if n == 0:
            h_n = h_n + base
        blocks[n] = commutator_superop(h_n, sign)
    blocks[0] = blocks[0] + dissipator_superop(atom) / g

    ks = list(range(-order, order + 1))
    nb = len(ks)
    dim = 9 * nb
    mat = np.zeros((dim + 1, dim + 1), dtype=complex)
    for i, k in enumerate(ks):
        rows = slice(9 * i, 9 * i + 9)
        mat[rows, rows] += 1j * k * w * np.eye(9)
        for n, block in blocks.items():
            j = i + n
            if 0 <= j < nb:
                mat[rows, 9 * j:9 * j + 9] += block
    i0 = ks.index(0)
    mat[9 * i0:9 * i0 + 9, dim] = TRACE_ROW
    mat[dim, 9 * i0:9 * i0 + 9] = TRACE_ROW
    rhs = np.zeros(dim + 1, dtype=complex)
    rhs[dim] = 1.0
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > 1e13:
        # find the block that went singular
        worst = min(ks, key=lambda k: np.linalg.svd(
            blocks[0] + 1j * k * w * np.eye(9), compute_uv=False)[-1])
        raise np.linalg.LinAlgError(f"singular sideband hierarchy (resonant harmonic k={worst})")
    sol = np.linalg.solve(mat, rhs)
    residual = float(np.linalg.norm(mat[:dim, :dim] @ sol[:dim]))
    if residual > 1e-10:
        raise np.linalg.LinAlgError(f"hierarchy residual {residual:.3g} exceeds 1e-10")
    amps = {}
    for i, k in enumerate(ks):
        amps[k] = unvec(sol[9 * i:9 * i + 9])
    amps[0] = 0.5 * (amps[0] + amps[0].conj().T)
    return FourierSolution(order=order, amplitudes=amps, eta=eta, omega_m=omega_m,
                           atom=atom, mode=mode, residual=residual)


def rho_plus_scaled(eta, omega_p, omega_c, omega_m, delta_c):
    """First-order-in-Omega_p sideband coherence rho_{+,ge}; all frequencies in units of gamma_p.

    Broadcasts over numpy arrays.
    """
    c2 = np.abs(omega_c) ** 2
    first = 2j * delta_c + c2
    second = 2j * (1 - 2j * omega_m) * (delta_c - omega_m) + c2
    bad_first = np.any(first == 0)
    bad_second = np.any(second == 0)
    if bad_first or bad_second:
        which = " and ".join(n for n, b in (("(2i D + |Oc|^2)", bad_first),
                                            ("(2i[1 - 2i w][D - w] + |Oc|^2)", bad_second)) if b)
        raise PoleError(f"analytic sideband coherence has a pole: factor {which} vanishes")
    return 1j * eta * omega_p * c2 * omega_m / (first * second)


def analytic_rho_plus(atom: AtomDriveParams, eta: float, omega_m: float, delta_c=None):
    if not atom.gamma_p > 0:
        raise ValueError("gamma_p must be positive")
    g = atom.gamma_p
    dc = atom.delta_c if delta_c is None else delta_c
    out = rho_plus_scaled(eta, atom.omega_p_rabi / g, atom.omega_c_rabi / g,
                          omega_m / g, np.asarray(dc, dtype=float) / g)
    return complex(out) if np.ndim(out) == 0 else out


def _project(offset_series: np.ndarray, theta: np.ndarray) -> tuple[float, float, float]:
    n = len(theta)
    s = offset_series
    offset = float(np.mean(s))
    a = float(2.0 / n * np.sum(s * np.cos(theta)))
    b = float(2.0 / n * np.sum(s * np.sin(theta)))
    return offset, math.hypot(a, b), math.atan2(-b, a)


def modulation(source, omega_m: float | None = None, offset: float = 0.0,
               samples: int = 64) -> ModulationResult:
    """Offset, amplitude and phase of rho''_ge(t).

    ``source`` is a :class:`FourierSolution` or a pair
    ``(rho_plus(delta_c), rho_plus(-delta_c))`` from the analytic form, in
    which case rho_- = conj(rho_plus(-delta_c)) and ``offset`` is used as the
    DC part.
    """
    if isinstance(source, FourierSolution):
        rho0 = source.coherence(0)
        rp, rm = source.coherence(1), source.coherence(-1)
        # rho_-,ge(D) = conj(rho_+,ge(-D))
        minus_image = np.conj(rm)
    else:
        rp, minus_image = source
        rm = np.conj(minus_image)
        rho0 = 1j * offset
    # reconstruct one period and project onto {1, cos, sin}
    theta = 2 * math.pi * np.arange(samples) / samples
    s = np.imag(rho0 + rp * np.exp(-1j * theta) + rm * np.exp(1j * theta))
    off, amp, phase = _project(s, theta)
    diff = rp - minus_image
    return ModulationResult(
        offset=off,
        amplitude=amp,
        phase=wrap_phase(phase) if amp > 0 else 0.0,
        closed_form_phase=wrap_phase(np.angle(diff) + math.pi / 2),
        closed_form_amplitude=float(abs(diff)),
    )


def analytic_modulation(atom: AtomDriveParams, eta: float, omega_m: float,
                        delta_c: float | None = None) -> ModulationResult:
    dc = atom.delta_c if delta_c is None else delta_c
    pair = (analytic_rho_plus(atom, eta, omega_m, dc), analytic_rho_plus(atom, eta, omega_m, -dc))
    offset = float(steady_state(atom.with_detuning(dc))[G, E].imag)
    return modulation(pair, omega_m, offset=offset)


def modulation_map(eta, omega_p, omega_c, omega_m, delta_c):
    """Vectorized analytic (amplitude, projection phase); frequencies in units of gamma_p."""
    diff = (rho_plus_scaled(eta, omega_p, omega_c, omega_m, delta_c)
            - rho_plus_scaled(eta, omega_p, omega_c, omega_m, -np.asarray(delta_c)))
    return np.abs(diff), wrap_phase(math.pi / 2 - np.angle(diff))


def delta_max(atom: AtomDriveParams, omega_m: float) -> float:
    """Signed detuning of maximal modulation (closed form, first order in Omega_p)."""
    if not omega_m > 0:
        raise ValueError("omega_m must be positive")
    g = atom.gamma_p
    c2 = (atom.omega_c_rabi / g) ** 2
    w = omega_m / g
    return 0.5 * omega_m * (1 + c2 - math.sqrt((1 - c2) ** 2 + c2**2 / w**2))


def delta_max_approx(omega_c: float, omega_m: float) -> float:
    if not omega_m > 0:
        raise ValueError("omega_m must be positive")
    return abs(omega_c**2 - 4 * omega_m**2) / (4 * omega_m)


def delta_max_numeric(atom: AtomDriveParams, omega_m: float, eta: float = 1.0,
                      grid: int = 400, xtol_fraction: float = 1e-3) -> float:
    """Argmax over delta_c >= 0 of the analytic modulation amplitude.

    Coarse grid on [0, 1.2 (Oc^2 + 4 w^2) / (4 w)] then bounded refinement to
    ``xtol_fraction * omega_m``; ties go to the smaller detuning.
    """
    g = atom.gamma_p
    op, oc, w = atom.omega_p_rabi / g, atom.omega_c_rabi / g, omega_m / g
    if op == 0:
        op = 1.0  # amplitude is linear in Omega_p; only the shape matters
    hi = 1.2 * (oc**2 + 4 * w**2) / (4 * w)
    xs = np.linspace(0.0, hi, grid)

    def amp(x):
        return modulation_map(eta, op, oc, w, x)[0]

    vals = amp(xs)
    i = int(np.argmax(vals))  # first occurrence = smaller detuning
    lo_b, hi_b = xs[max(i - 1, 0)], xs[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda x: -amp(x), bounds=(lo_b, hi_b), method="bounded",
                          options={"xatol": xtol_fraction * w * 0.5})
    best = res.x if -res.fun >= vals[i] else xs[i]
    return float(best) * g


def dressed_resonance_detuning(atom: AtomDriveParams, omega_m: float) -> float:
    """Detuning at which the gap from the dark-like state to the uppermost dressed
    state equals omega_m (the branch the closed-form delta_max follows)."""
    from .liouvillian import dressed_gaps

    def mismatch(dc):
        spec = dressed_gaps(atom.with_detuning(dc))
        return float(spec.energies.max() - spec.dark_energy) - omega_m

    oc = atom.omega_c_rabi
    guess = (4 * omega_m**2 - oc**2) / (4 * omega_m)
    span = max(abs(guess), oc, omega_m, atom.gamma_p)
    lo, hi = guess - span, guess + span
    while mismatch(lo) > 0:
        lo -= span
    while mismatch(hi) < 0:
        hi += span
    return float(brentq(mismatch, lo, hi, xtol=1e-12 * span, rtol=1e-14))


def gamma_eff_prefactor(atom: AtomDriveParams, mirror: MirrorParams, optics: OpticsParams) -> float:
    """k_c F_0 d Gamma_p / (M omega_m Omega_p) in 1/s."""
    if not mirror.mass > 0 or not mirror.omega_m > 0:
        raise ValueError("mirror mass and frequency must be positive")
    d = 6.0 * math.pi * optics.density * optics.length / optics.k_p**2
    f0 = 2.0 * optics.w_p0 / C_LIGHT
    return optics.k_c * f0 * d * atom.gamma_p / (mirror.mass * mirror.omega_m * atom.omega_p_rabi)


def gamma_eff(atom: AtomDriveParams, mirror: MirrorParams, optics: OpticsParams,
              delta_c: float | None = None, method: str = "analytic", order: int = 1) -> float:
    """Signed energy damping rate (positive = damping) of the mirror at ``mirror.omega_m``.

    ``method="analytic"`` uses the closed form (exactly linear in eta);
    ``"hierarchy"`` uses the K-th order Fourier solve at eta = 1e-3.
    """
    if not mirror.mass > 0 or not mirror.omega_m > 0:
        raise ValueError("mirror mass and frequency must be positive")
    if atom.omega_p_rabi == 0:
        return 0.0
    dc = atom.delta_c if delta_c is None else delta_c
    wm = mirror.omega_m
    if method == "analytic":
        eta = 1.0
        diff = (analytic_rho_plus(atom, eta, wm, dc) - analytic_rho_plus(atom, eta, wm, -dc))
    elif method == "hierarchy":
        eta = 1e-3
        sol = solve_sideband_hierarchy(atom.with_detuning(dc), eta, wm, order=order)
        diff = sol.coherence(1) - np.conj(sol.coherence(-1))
    else:
        raise ValueError(f"unknown method {method!r}")
    return gamma_eff_prefactor(atom, mirror, optics) * float(np.real(diff)) / eta


def gamma_eff_from_modulation(result: ModulationResult, eta: float, atom: AtomDriveParams,
                              mirror: MirrorParams, optics: OpticsParams) -> float:
    """The (delta_rho''/eta) sin(alpha) form of the damping rate."""
    return gamma_eff_prefactor(atom, mirror, optics) * result.amplitude / eta * math.sin(result.phase)
