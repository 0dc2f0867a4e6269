"""Lambda-system Hamiltonian, Lindblad generator and dressed-state spectra.

Basis order is (g, s, e) everywhere. Superoperators act on column-major
(Fortran order) vectorized density matrices, so ``vec(A X B) = kron(B.T, A) vec(X)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .params import EXACT, LINEARIZED, AtomDriveParams

G, S, E = 0, 1, 2
LEVELS = {"g": G, "s": S, "e": E}

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-9


class SteadyStateError(RuntimeError):
    pass


def ket(level: int) -> np.ndarray:
    v = np.zeros(3, dtype=complex)
    v[level] = 1.0
    return v


def sigma(i: int, j: int) -> np.ndarray:
    """|i><j|"""
    m = np.zeros((3, 3), dtype=complex)
    m[i, j] = 1.0
    return m


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v).reshape(3, 3, order="F")


TRACE_ROW = vec(np.eye(3)).real  # tr(rho) = TRACE_ROW @ vec(rho)


def control_factor(z_m, k_c: float, mode: str = LINEARIZED):
    """Multiplier on Omega_c from a mirror displacement z_m (scalar or array)."""
    if np.ndim(z_m) == 0:
        phase = k_c * float(z_m)
        if mode == EXACT:
            return complex(math.cos(phase), math.sin(phase))
        if mode == LINEARIZED:
            return complex(1.0, phase)
        raise ValueError(f"unknown control mode {mode!r}")
    phase = k_c * np.asarray(z_m, dtype=float)
    if mode == EXACT:
        return np.exp(1j * phase)
    if mode == LINEARIZED:
        return 1.0 + 1j * phase
    raise ValueError(f"unknown control mode {mode!r}")


def hamiltonian(atom: AtomDriveParams, cf: complex = 1.0) -> np.ndarray:
    """H/hbar in rad/s. The probe Rabi frequency is real; all phase sits in ``cf``."""
    h = np.zeros((3, 3), dtype=complex)
    h[E, S] = 0.5 * atom.omega_c_rabi * cf
    h[E, G] = -0.5 * atom.omega_p_rabi
    h[S, E] = np.conj(h[E, S])
    h[G, E] = np.conj(h[E, G])
    h[S, S] = atom.delta_c
    return h


def decay_operator(atom: AtomDriveParams) -> np.ndarray:
    return np.sqrt(atom.gamma_p) * sigma(G, E)


def lindblad_apply(rho: np.ndarray, atom: AtomDriveParams, cf: complex = 1.0) -> np.ndarray:
    h = hamiltonian(atom, cf)
    lop = decay_operator(atom)
    ldl = lop.conj().T @ lop
    return (atom.commutator_sign * 1j * (h @ rho - rho @ h)
            + lop @ rho @ lop.conj().T - 0.5 * (ldl @ rho + rho @ ldl))


def commutator_superop(h: np.ndarray, sign: int = 1) -> np.ndarray:
    """Superoperator of rho -> sign * i [h, rho]; h need not be Hermitian."""
    eye = np.eye(3)
    return sign * 1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator_superop(atom: AtomDriveParams) -> np.ndarray:
    lop = decay_operator(atom)
    ldl = lop.conj().T @ lop
    eye = np.eye(3)
    return np.kron(lop.conj(), lop) - 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))


def liouvillian_matrix(atom: AtomDriveParams, cf: complex = 1.0) -> np.ndarray:
    return commutator_superop(hamiltonian(atom, cf), atom.commutator_sign) + dissipator_superop(atom)


def control_superops(atom: AtomDriveParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split L(cf) = L_fixed + Re(cf) L_re + Im(cf) L_im for fast time stepping."""
    half = 0.5 * atom.omega_c_rabi
    h_re = half * (sigma(E, S) + sigma(S, E))
    h_im = half * 1j * (sigma(E, S) - sigma(S, E))
    sign = atom.commutator_sign
    fixed = liouvillian_matrix(atom, 0.0)
    return fixed, commutator_superop(h_re, sign), commutator_superop(h_im, sign)


def _hermitian_basis() -> np.ndarray:
    """T with r = T vec(rho) = (rho_gg, rho_ss, rho_ee, Re/Im rho_gs, Re/Im rho_ge, Re/Im rho_se)."""
    t = np.zeros((9, 9), dtype=complex)
    for n in range(3):
        t[n, n + 3 * n] = 1.0
    row = 3
    for i, j in ((0, 1), (0, 2), (1, 2)):
        ij, ji = i + 3 * j, j + 3 * i
        t[row, ij], t[row, ji] = 0.5, 0.5
        t[row + 1, ij], t[row + 1, ji] = -0.5j, 0.5j
        row += 2
    return t


def _hermitian_basis_inv() -> np.ndarray:
    # written out rather than inverted numerically so the output is exactly Hermitian
    t = np.zeros((9, 9), dtype=complex)
    for n in range(3):
        t[n + 3 * n, n] = 1.0
    col = 3
    for i, j in ((0, 1), (0, 2), (1, 2)):
        ij, ji = i + 3 * j, j + 3 * i
        t[ij, col], t[ij, col + 1] = 1.0, 1.0j
        t[ji, col], t[ji, col + 1] = 1.0, -1.0j
        col += 2
    return t


HERMITIAN_BASIS = _hermitian_basis()
HERMITIAN_BASIS_INV = _hermitian_basis_inv()


def to_real_coords(rho: np.ndarray) -> np.ndarray:
    return (HERMITIAN_BASIS @ vec(rho)).real


def from_real_coords(r: np.ndarray) -> np.ndarray:
    """Hermitian rho from real coordinates; r may be (9,) or (9, N) -> (3, 3) or (N, 3, 3)."""
    v = HERMITIAN_BASIS_INV @ np.asarray(r, dtype=float)
    if v.ndim == 1:
        return unvec(v)
    return np.transpose(v.reshape(3, 3, -1, order="F"), (2, 0, 1))


def real_superop(lv: np.ndarray) -> np.ndarray:
    """Real matrix of a Hermiticity-preserving superoperator in the coordinates above."""
    m = HERMITIAN_BASIS @ lv @ HERMITIAN_BASIS_INV
    scale = max(np.abs(m).max(), 1.0)
    if np.abs(m.imag).max() > 1e-12 * scale:
        raise ValueError("superoperator does not preserve Hermiticity")
    return np.ascontiguousarray(m.real)


def _restrict(levels) -> np.ndarray:
    idx = [LEVELS[x] if isinstance(x, str) else int(x) for x in levels]
    keep = [i + 3 * j for j in idx for i in idx]
    return np.array(keep), idx


def steady_state(atom: AtomDriveParams, levels=None) -> np.ndarray:
    """Unmodulated (cf = 1) steady state from the bordered system [[L, t], [t^T, 0]].

    ``levels`` restricts the problem to a subset of levels, which selects one
    steady state when the full one is not unique (e.g. levels=("g", "e") for
    Omega_c = 0, where |s> decouples).
    """
    if not atom.gamma_p > 0:
        raise ValueError("gamma_p must be positive")
    lv = liouvillian_matrix(atom) / atom.gamma_p
    tr = TRACE_ROW
    if levels is not None:
        keep, idx = _restrict(levels)
        lv = lv[np.ix_(keep, keep)]
        n = len(idx)
        tr = vec(np.eye(n)).real
    dim = lv.shape[0]
    svals = np.linalg.svd(lv, compute_uv=False)
    nullity = int(np.sum(svals < 1e-10 * max(svals[0], 1.0)))
    if nullity > 1:
        raise SteadyStateError(
            f"steady state not unique: Liouvillian null space has dimension {nullity} "
            f"(omega_p={atom.omega_p_rabi:.6g}, omega_c={atom.omega_c_rabi:.6g}); "
            "pass levels=... to pick a manifold")
    bordered = np.zeros((dim + 1, dim + 1), dtype=complex)
    bordered[:dim, :dim] = lv
    bordered[:dim, dim] = tr
    bordered[dim, :dim] = tr
    rhs = np.zeros(dim + 1, dtype=complex)
    rhs[dim] = 1.0
    sol = np.linalg.solve(bordered, rhs)[:dim]
    if levels is not None:
        full = np.zeros(9, dtype=complex)
        full[keep] = sol
        sol = full
        lv_full = liouvillian_matrix(atom) / atom.gamma_p
    else:
        lv_full = lv
    rho = unvec(sol)
    rho = 0.5 * (rho + rho.conj().T)
    residual = np.linalg.norm(lv_full @ vec(rho))
    if residual > 1e-10:
        raise SteadyStateError(f"steady-state residual {residual:.3g} exceeds 1e-10")
    return rho


def check_density_matrix(rho: np.ndarray, where: str = "") -> None:
    """Raise ValueError if rho violates the density-matrix tolerances."""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITIAN_TOL:
        raise ValueError(f"{where}non-Hermitian density matrix (deviation {herm:.3g})")
    tr = abs(np.trace(rho) - 1.0)
    if tr > TRACE_TOL:
        raise ValueError(f"{where}trace drift {tr:.3g}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < POSITIVITY_TOL:
        raise ValueError(f"{where}negative eigenvalue {lam:.3g}")


@dataclass(frozen=True)
class DressedSpectrum:
    energies: np.ndarray  # E_j / hbar, rad/s, ascending
    vectors: np.ndarray  # columns are eigenvectors
    dark_index: int
    gaps: np.ndarray  # |E_d - E_j| for j != d, ascending

    @property
    def dark_energy(self) -> float:
        return float(self.energies[self.dark_index])


def dark_reference(atom: AtomDriveParams) -> np.ndarray:
    """State with no |e> admixture under the coupling part of ``hamiltonian``.

    H_eg = -Omega_p/2 and H_es = +Omega_c/2, so the dark combination is
    Omega_c|g> + Omega_p|s> in this sign convention.
    """
    op, oc = atom.omega_p_rabi, atom.omega_c_rabi
    norm = np.hypot(op, oc)
    if norm == 0:
        # Omega_p/Omega_c -> 0 limit
        return ket(G)
    return (oc * ket(G) + op * ket(S)) / norm


def dressed_gaps(atom: AtomDriveParams) -> DressedSpectrum:
    energies, vectors = np.linalg.eigh(hamiltonian(atom, 1.0))
    overlaps = np.abs(vectors.conj().T @ dark_reference(atom)) ** 2
    best = overlaps.max()
    ties = np.flatnonzero(np.isclose(overlaps, best, rtol=0, atol=1e-12))
    if ties.size > 1:
        warnings.warn(f"dark-state overlap tie between eigenstates {ties.tolist()}; using {ties[0]}",
                      stacklevel=2)
    d = int(ties[0])
    others = [j for j in range(3) if j != d]
    gaps = np.sort(np.abs(energies[others] - energies[d]))
    return DressedSpectrum(energies=energies, vectors=vectors, dark_index=d, gaps=gaps)
