"""Time integration of the master equation with prescribed or feedback-coupled mirror motion.

The feedback run carries the mirror as a complex amplitude in the frame
rotating at omega_m, B = k_c (z + i p / (M omega_m)) exp(i omega_m t), so free
motion is exactly stationary and only the radiation-pressure force moves B.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import linregress

from . import floquet
from .liouvillian import (
    E, G, HERMITIAN_TOL, POSITIVITY_TOL, TRACE_TOL, control_factor, control_superops,
    from_real_coords, ket, real_superop, to_real_coords,
)
from .mirror import feedback_force, mechanical_energy
from .optics import probe_power
from .params import (
    C_LIGHT, AtomDriveParams, DerivedParams, MirrorParams, OpticsParams, SidebandDrive, SimConfig,
    derive_quantities,
)

CSV_COLUMNS = ("t_s", "rho_gg", "rho_ss", "rho_ee", "re_rho_ge", "im_rho_ge", "z_m", "p_m", "W_p", "F")


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimTrace:
    t: np.ndarray
    rho: np.ndarray  # (N, 3, 3)
    z: np.ndarray
    p: np.ndarray
    w_p: np.ndarray
    force: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def im_rho_ge(self) -> np.ndarray:
        return self.rho[:, G, E].imag

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_trace_csv(fh, self)


def write_trace_csv(fh, trace: SimTrace) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    r = trace.rho
    cols = (trace.t, r[:, 0, 0].real, r[:, 1, 1].real, r[:, 2, 2].real, r[:, G, E].real,
            r[:, G, E].imag, trace.z, trace.p, trace.w_p, trace.force)
    for row in zip(*cols):
        w.writerow([fmt17(x) for x in row])


def fmt17(x: float) -> str:
    return "NaN" if x != x else f"{x:.17g}"


def read_trace_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in row] for row in body])
    return {name: data[:, i] for i, name in enumerate(header)}


@dataclass(frozen=True)
class LockinResult:
    offset: float
    amplitude: float
    phase: float
    window: tuple[float, int]


@dataclass(frozen=True)
class RateFit:
    rate: float  # energy ~ exp(-rate t)
    stderr: float
    r_squared: float
    n: int


def check_trace(t: np.ndarray, rho: np.ndarray) -> None:
    herm = np.max(np.abs(rho - np.conj(np.swapaxes(rho, 1, 2))), axis=(1, 2))
    tr = np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0)
    lam = np.linalg.eigvalsh(0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))).min(axis=1)
    for name, bad in (("Hermiticity", herm > HERMITIAN_TOL), ("trace", tr > TRACE_TOL),
                      ("positivity", lam < POSITIVITY_TOL)):
        if np.any(bad):
            i = int(np.argmax(bad))
            raise IntegrationError(f"density-matrix {name} violated at t = {t[i]:.6g} s")


def _sample_times(t0: float, t1: float, omega_m: float, samples_per_period: int) -> np.ndarray:
    dt = 2 * math.pi / omega_m / samples_per_period
    n = int(math.floor((t1 - t0) / dt * (1 + 1e-12))) + 1
    return t0 + dt * np.arange(n)


def _initial_rho(rho0) -> np.ndarray:
    if rho0 is None:
        return np.outer(ket(G), ket(G).conj())
    return np.asarray(rho0, dtype=complex)


def integrate_prescribed(atom: AtomDriveParams, drive: SidebandDrive, omega_m: float,
                         t_span: tuple[float, float], rtol: float = 1e-8, atol: float = 1e-12,
                         rho0=None, samples_per_period: int = 64,
                         mirror: MirrorParams | None = None, optics: OpticsParams | None = None,
                         derived: DerivedParams | None = None) -> SimTrace:
    """Master equation with the mirror moving as z0 cos(omega_m t), no back-action.

    rho is integrated in real Hermitian coordinates, so every sample is exactly
    Hermitian; trace and positivity are still checked on the output.
    """
    l_fix, l_re, l_im = (real_superop(m) for m in control_superops(atom))
    k_c, z0, mode = drive.k_c, drive.z0, drive.mode

    def rhs(t, y):
        cf = control_factor(z0 * math.cos(omega_m * t), k_c, mode)
        return (l_fix + cf.real * l_re + cf.imag * l_im) @ y

    t_eval = _sample_times(t_span[0], t_span[1], omega_m, samples_per_period)
    sol = solve_ivp(rhs, (t_span[0], t_eval[-1]), to_real_coords(_initial_rho(rho0)), method="RK45",
                    t_eval=t_eval, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"integration failed at t = {sol.t[-1]:.6g} s: {sol.message}")
    rho = from_real_coords(sol.y)
    check_trace(sol.t, rho)
    z = z0 * np.cos(omega_m * sol.t)
    p = (-mirror.mass * omega_m * z0 * np.sin(omega_m * sol.t)) if mirror else np.full_like(z, np.nan)
    if optics is not None and derived is not None:
        w_p = probe_power(rho[:, G, E].imag, optics, derived)
    else:
        w_p = np.full_like(z, np.nan)
    meta = {"kind": "prescribed", "rtol": rtol, "atol": atol, "eta": drive.eta, "mode": mode,
            "omega_m": omega_m, "deterministic": True}
    return SimTrace(sol.t, rho, z, p, w_p, np.zeros_like(z), meta)


def scaled_optics(config: SimConfig, target_rate: float, delta_c: float | None = None) -> tuple[OpticsParams, float]:
    """Scale W_p0 so that |Gamma_eff| = target_rate * omega_m; returns (optics, factor)."""
    g = floquet.gamma_eff(config.atom, config.mirror, config.optics, delta_c)
    if g == 0:
        raise ValueError("Gamma_eff vanishes; cannot scale W_p0 to a target rate")
    factor = target_rate * config.mirror.omega_m / abs(g)
    return replace(config.optics, w_p0=config.optics.w_p0 * factor), factor


def integrate_feedback(config: SimConfig, t_span: tuple[float, float] | None = None,
                       rtol: float | None = None, atol: float | None = None, rho0=None,
                       feedback: bool = True) -> SimTrace:
    """Jointly integrate (rho, z, p) with the control phase from the instantaneous z
    and the modulated probe pressure acting on the mirror."""
    atom, mirror, drive, run = config.atom, config.mirror, config.drive, config.run
    rtol = run.rtol if rtol is None else rtol
    atol = run.atol if atol is None else atol
    w = mirror.omega_m
    if t_span is None:
        t_span = (0.0, run.feedback_periods * 2 * math.pi / w)
    optics, w_scale = config.optics, 1.0
    if run.target_rate > 0:
        optics, w_scale = scaled_optics(config, run.target_rate)
    derived = derive_quantities(replace(config, optics=optics))
    gain = run.feedback_gain if feedback else 0.0

    # DC absorption reference from the K=1 Fourier solve
    sol0 = floquet.solve_sideband_hierarchy(atom, drive.eta, w, order=1, mode=drive.mode)
    rho_dc = float(sol0.coherence(0).imag)

    l_fix, l_re, l_im = (real_superop(m) for m in control_superops(atom))
    k_c, mass, mode = drive.k_c, mirror.mass, drive.mode
    force_per_coh = -gain * 2.0 * optics.w_p0 / C_LIGHT * derived.a_gain
    kick = 1j * k_c / (mass * w)
    damping = mirror.intrinsic_damping
    im_ge = 6  # Im rho_ge in the real coordinates

    # y = (9 real rho coordinates, Re B_rot, Im B_rot), B_rot = B exp(i w t)
    def rhs(t, y):
        phase = complex(math.cos(w * t), math.sin(w * t))
        b = complex(y[9], y[10]) / phase  # k_c (z + i p / (M w))
        cf = control_factor(b.real / k_c, k_c, mode)
        out = np.empty(11)
        out[:9] = (l_fix + cf.real * l_re + cf.imag * l_im) @ y[:9]
        db = kick * force_per_coh * (y[im_ge] - rho_dc)
        if damping:
            db -= damping * 1j * b.imag
        db *= phase
        out[9], out[10] = db.real, db.imag
        return out

    t_eval = _sample_times(t_span[0], t_span[1], w, run.samples_per_period)
    b0 = drive.eta * np.exp(1j * w * t_span[0])
    y0 = np.concatenate([to_real_coords(_initial_rho(rho0)), [b0.real, b0.imag]])
    sol = solve_ivp(rhs, (t_span[0], t_eval[-1]), y0, method="RK45", t_eval=t_eval,
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"integration failed at t = {sol.t[-1]:.6g} s: {sol.message}")
    rho = from_real_coords(sol.y[:9])
    check_trace(sol.t, rho)
    b = (sol.y[9] + 1j * sol.y[10]) * np.exp(-1j * w * sol.t)
    z = b.real / k_c
    p = b.imag * mass * w / k_c
    im_ge = rho[:, G, E].imag
    force = force_per_coh * (im_ge - rho_dc)
    meta = {"kind": "feedback", "rtol": rtol, "atol": atol, "eta0": drive.eta, "mode": mode,
            "omega_m": w, "w_p0": optics.w_p0, "w_p0_scale": w_scale, "rho_dc": rho_dc,
            "feedback_gain": gain, "deterministic": True}
    return SimTrace(sol.t, rho, z, p, probe_power(im_ge, optics, derived), force, meta)


def slowest_decay_rate(atom: AtomDriveParams) -> float:
    """Smallest nonzero relaxation rate of the unmodulated Liouvillian (1/s)."""
    from .liouvillian import liouvillian_matrix

    rates = -np.linalg.eigvals(liouvillian_matrix(atom)).real
    rates = np.sort(rates[rates > 1e-9 * atom.gamma_p])
    return float(rates[0]) if rates.size else atom.gamma_p


def analysis_start(atom: AtomDriveParams, transient_gamma: float = 5.0, settle_efolds: float = 15.0) -> float:
    """Start of the asymptotic analysis window: after transient_gamma/Gamma_p and after the
    slowest relaxation mode has decayed by settle_efolds e-folds."""
    t = transient_gamma / atom.gamma_p
    if settle_efolds > 0:
        t = max(t, settle_efolds / slowest_decay_rate(atom))
    return t


def lockin(t: np.ndarray, s: np.ndarray, omega_m: float, t_start: float, n_periods: int) -> LockinResult:
    """Project s(t) onto {1, cos, sin} over n_periods starting at the first sample >= t_start.

    Returns s ~ offset + amplitude cos(omega_m t + phase).
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    period = 2 * math.pi / omega_m
    i0 = int(np.searchsorted(t, t_start - 1e-12 * period))
    if i0 >= len(t):
        raise ValueError("lock-in window starts after the end of the series")
    t0 = t[i0]
    t1 = t0 + n_periods * period
    if t1 > t[-1] + 1e-9 * period:
        raise ValueError(f"lock-in window [{t0:.6g}, {t1:.6g}] exceeds series end {t[-1]:.6g}")
    i1 = int(np.searchsorted(t, t1 - 1e-9 * period))
    if abs(t[i1] - t1) > 1e-6 * period:
        # window end falls between samples: interpolate the final point
        tt = np.append(t[i0:i1], t1)
        ss = np.append(s[i0:i1], np.interp(t1, t, s))
    else:
        tt, ss = t[i0:i1 + 1], s[i0:i1 + 1]
    span = tt[-1] - tt[0]
    offset = np.trapezoid(ss, tt) / span
    a = 2.0 / span * np.trapezoid(ss * np.cos(omega_m * tt), tt)
    b = 2.0 / span * np.trapezoid(ss * np.sin(omega_m * tt), tt)
    amp = math.hypot(a, b)
    return LockinResult(float(offset), amp, floquet.wrap_phase(math.atan2(-b, a)), (float(t0), n_periods))


def energy_per_period(trace: SimTrace, mirror: MirrorParams, t_start: float = 0.0
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Window-averaged mechanical energy over consecutive non-overlapping mirror periods."""
    period = 2 * math.pi / mirror.omega_m
    t = trace.t
    energy = mechanical_energy(trace.z, trace.p, mirror)
    i0 = int(np.searchsorted(t, t_start - 1e-12 * period))
    n = int(math.floor((t[-1] - t[i0]) / period * (1 + 1e-12)))
    if n < 2:
        raise ValueError("trace must span at least two mirror periods")
    mids, means = [], []
    for k in range(n):
        a, b = t[i0] + k * period, t[i0] + (k + 1) * period
        m = (t >= a - 1e-9 * period) & (t <= b + 1e-9 * period)
        mids.append(0.5 * (a + b))
        means.append(np.trapezoid(energy[m], t[m]) / (t[m][-1] - t[m][0]))
    return np.array(mids), np.array(means)


def fit_rate(t, energy) -> RateFit:
    """Least-squares slope of ln E vs t; rate is positive for decay."""
    t = np.asarray(t, dtype=float)
    energy = np.asarray(energy, dtype=float)
    if np.any(energy <= 0):
        raise ValueError("energies must be positive to fit an exponential rate")
    y = np.log(energy)
    if np.ptp(y) == 0:
        return RateFit(0.0, 0.0, 1.0, len(t))
    res = linregress(t, y)
    return RateFit(-float(res.slope), float(res.stderr), float(res.rvalue**2), len(t))
