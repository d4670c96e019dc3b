"""Model Hamiltonian assembly, eigensolver and electronic spectrum quantities.

The electronic model is an S=1 spin with axial anisotropy D, rhombic
anisotropy E and a Zeeman term referenced to the clock-transition field:

    H_S = D [Sz^2 - (1/3) S(S+1)] + E (Sx^2 - Sy^2) + gamma_e (B0 - B_min) Sz

with all energies in Hz.  At zero detuning the two lowest eigenstates are
``|+-> = (|up> +- |down>)/sqrt(2)`` separated by the clock frequency 2E, and
the transition frequency is first-order insensitive to field.

The electron couples to N bath protons through secular and pseudosecular
hyperfine terms (H_SI), and the protons carry their own Zeeman plus pairwise
dipolar dynamics (H_I).
"""

import csv
from dataclasses import dataclass, replace

import numpy as np

from . import constants, spinops
from .spinops import CompositeSpace


@dataclass(frozen=True)
class ModelParams:
    """Electronic and nuclear model parameters (SI units: Hz, Hz/T, T).

    Defaults reproduce the headline configuration: D = -45 GHz, |E| = 4.5 GHz,
    B_min = 23.5 mT, gamma_H = 42.577 MHz/T.  gamma_e defaults to 70 GHz/T so
    that the far-field slope of the clock frequency is 2*gamma_e = 140 GHz/T.
    """

    D: float = -45e9
    E: float = 4.5e9
    gamma_e: float = 70e9
    B0: float = 23.5e-3
    B_min: float = 23.5e-3
    gamma_H: float = constants.GAMMA_H

    def __post_init__(self):
        if abs(self.E) >= abs(self.D):
            raise ValueError("anisotropy hierarchy requires |E| < |D|")
        if self.gamma_H <= 0:
            raise ValueError("gamma_H must be positive")

    @property
    def detuning(self) -> float:
        return self.B0 - self.B_min

    def at_detuning(self, delta_b: float) -> "ModelParams":
        """Copy with the applied field set to ``B_min + delta_b``."""
        return replace(self, B0=self.B_min + delta_b)

    @property
    def clock_gap(self) -> float:
        """Clock-transition frequency 2|E| in Hz."""
        return 2.0 * abs(self.E)

    def proton_larmor(self) -> float:
        """Proton precession frequency |gamma_H * B0| in Hz."""
        return abs(self.gamma_H * self.B0)


@dataclass
class ElectronSpectrum:
    """Eigenvalues, clock frequency and effective gyromagnetic ratio per field."""

    b_grid: np.ndarray       # applied fields (T)
    energies: np.ndarray     # (n, 3) ascending eigenvalues (Hz)
    f: np.ndarray            # clock frequency, second - first eigenvalue (Hz)
    gamma_eff: np.ndarray    # df/dB0 by centered finite difference (Hz/T)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["B0_T", "E1_Hz", "E2_Hz", "E3_Hz", "f_Hz", "gamma_eff_Hz_per_T"])
            for i in range(len(self.b_grid)):
                w.writerow(
                    [f"{v:.17g}" for v in (
                        self.b_grid[i], *self.energies[i], self.f[i], self.gamma_eff[i]
                    )]
                )


def build_electronic(p: ModelParams) -> np.ndarray:
    """3x3 electronic Hamiltonian (Hz); Hermitian and traceless."""
    sx, sy, sz, _, _, _ = spinops.spin1_generators()
    h = (
        p.D * (sz @ sz - (2.0 / 3.0) * np.eye(3))
        + p.E * (sx @ sx - sy @ sy)
        + p.gamma_e * p.detuning * sz
    )
    return h


def build_hyperfine(p: ModelParams, bath, space: CompositeSpace) -> np.ndarray:
    """Electron-bath coupling ``Sz * sum_m [A_sc Iz^m + A_psc (Ix^m + Iy^m)]``."""
    if len(bath.a_sc) != space.n_nuclei:
        raise ValueError(
            f"bath has {len(bath.a_sc)} nuclei but space expects {space.n_nuclei}"
        )
    ix, iy, iz = spinops.spin_half_generators()
    _, _, sz, _, _, _ = spinops.spin1_generators()
    sz_full = spinops.embed(sz, "electron", space)
    h = np.zeros((space.dim, space.dim), dtype=complex)
    for m in range(space.n_nuclei):
        nuc = bath.a_sc[m] * iz + bath.a_psc[m] * (ix + iy)
        h += sz_full @ spinops.embed(nuc, m, space)
    return h


def bath_hamiltonian_matrix(p: ModelParams, bath, n_nuclei: int) -> np.ndarray:
    """Intra-bath Hamiltonian on the bath-only space (dim 2**N).

    ``H_I = -sum_{m<n} D_mn (3 cos^2 theta_mn - 1)
            [2 Iz Iz - Ix Ix - Iy Iy] - gamma_H B0 sum_m Iz^m``

    The Zeeman term uses the full applied field B0 (B_min shifts only the
    electron term).  The pair sum runs over unordered pairs.
    """
    ix, iy, iz = spinops.spin_half_generators()
    dim = 2**n_nuclei
    h = np.zeros((dim, dim), dtype=complex)
    for m in range(n_nuclei):
        h -= p.gamma_H * p.B0 * spinops.embed_bath(iz, m, n_nuclei)
    for m in range(n_nuclei):
        izm = spinops.embed_bath(iz, m, n_nuclei)
        ixm = spinops.embed_bath(ix, m, n_nuclei)
        iym = spinops.embed_bath(iy, m, n_nuclei)
        for n in range(m + 1, n_nuclei):
            ang = 3.0 * np.cos(bath.theta[m, n]) ** 2 - 1.0
            izn = spinops.embed_bath(iz, n, n_nuclei)
            ixn = spinops.embed_bath(ix, n, n_nuclei)
            iyn = spinops.embed_bath(iy, n, n_nuclei)
            h -= bath.d_pair * ang * (2.0 * izm @ izn - ixm @ ixn - iym @ iyn)
    return h


def build_bath(p: ModelParams, bath, space: CompositeSpace) -> np.ndarray:
    """Intra-bath Hamiltonian embedded in the composite space."""
    hb = bath_hamiltonian_matrix(p, bath, space.n_nuclei)
    return np.kron(np.eye(space.electron_dim, dtype=complex), hb)


def build_total(p: ModelParams, bath, space: CompositeSpace) -> np.ndarray:
    """``H_tot = H_S + H_SI + H_I`` on the composite space."""
    h = spinops.embed(build_electronic(p), "electron", space)
    if space.n_nuclei:
        h = h + build_hyperfine(p, bath, space) + build_bath(p, bath, space)
    return h


def canonical_phases(vecs: np.ndarray) -> np.ndarray:
    """Fix each eigenvector's phase: largest-magnitude component real positive."""
    out = vecs.copy()
    idx = np.argmax(np.abs(out), axis=0)
    for k in range(out.shape[1]):
        pivot = out[idx[k], k]
        if abs(pivot) > 0:
            out[:, k] *= np.conj(pivot) / abs(pivot)
    return out


def eigensolve(h: np.ndarray):
    """Eigendecomposition of a Hermitian operator.

    Returns:
        ``(values, vectors)`` with values ascending and vectors as unitary
        columns with deterministic phases.
    """
    h = np.asarray(h)
    if not spinops.is_hermitian(h, tol=1e-10):
        raise ValueError("eigensolve requires a Hermitian matrix")
    vals, vecs = np.linalg.eigh(h)
    return vals, canonical_phases(vecs)


def clock_frequency_curve(p: ModelParams, b_grid) -> ElectronSpectrum:
    """Electronic spectrum versus applied field.

    ``f`` is the gap between the two lowest eigenvalues of H_S;
    ``gamma_eff = df/dB0`` uses centered differences (one-sided at the edges).
    """
    b_grid = np.asarray(b_grid, dtype=float)
    if b_grid.size == 0:
        raise ValueError("field grid is empty")
    energies = np.empty((b_grid.size, 3))
    for i, b in enumerate(b_grid):
        vals, _ = eigensolve(build_electronic(replace(p, B0=b)))
        energies[i] = vals
    f = energies[:, 1] - energies[:, 0]
    if b_grid.size >= 2:
        gamma_eff = np.gradient(f, b_grid)
    else:
        gamma_eff = np.zeros_like(f)
    return ElectronSpectrum(b_grid=b_grid, energies=energies, f=f, gamma_eff=gamma_eff)


def analytic_doublet_gap(p: ModelParams, delta_b=None) -> float:
    """Closed-form clock frequency ``2 sqrt(E^2 + (gamma_e dB)^2)``.

    The E and Zeeman terms act only inside the {|up>, |down>} block, so the
    lower doublet is an exact 2x2 problem.
    """
    db = p.detuning if delta_b is None else delta_b
    return 2.0 * np.sqrt(p.E**2 + (p.gamma_e * db) ** 2)


def ct_curvature(p: ModelParams) -> float:
    """Curvature d^2 f/dB0^2 at the clock transition.

    Equals ``4 gamma_e^2 / clock_gap`` in terms of the bare model gamma_e,
    i.e. ``(2 gamma_e)^2 / gap`` in terms of the far-field slope 2*gamma_e.
    """
    return 4.0 * p.gamma_e**2 / p.clock_gap


# Clock-transition eigenbasis |+> = (|up> + |down>)/sqrt(2),
# |-> = (|up> - |down>)/sqrt(2); columns ordered (|+>, |->).
_CT_BASIS = np.array(
    [[1.0, 1.0], [0.0, 0.0], [1.0, -1.0]], dtype=complex
) / np.sqrt(2.0)

_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass
class FictitiousSpinModel:
    """Projection of the S=1 model onto the clock-transition doublet."""

    h_eff: np.ndarray        # 2x2 effective Hamiltonian E*sz + gamma_e*dB*sx (Hz)
    basis: np.ndarray        # 3x2 columns (|+>, |->)
    mapping: dict            # spin-1 operator name -> projected 2x2 block
    expected: dict           # operator name -> exact projected block

    def mapping_residual(self, name: str) -> float:
        return float(np.max(np.abs(self.mapping[name] - self.expected[name])))


def project_fictitious(p: ModelParams) -> FictitiousSpinModel:
    """Project the spin-1 operators onto the CT doublet span{|+>, |->}.

    The sandwiched blocks satisfy Sz^2 -> 1, Sz -> sx, Sx^2-Sy^2 -> sz,
    {Sx,Sy} -> -sy, and Sx, Sy, {Sy,Sz}, {Sz,Sx} -> 0, so the electronic
    Hamiltonian reduces to ``E sz + gamma_e dB sx`` (up to the -|D|/3 shift).
    The anticommutator block has unit magnitude; the pulse exp[i phi {Sx,Sy}/2]
    therefore acts on the doublet as a Bloch rotation by phi about y.
    """
    sx, sy, sz, ac, _, _ = spinops.spin1_generators()
    b = _CT_BASIS

    def block(op):
        return b.conj().T @ op @ b

    mapping = {
        "Sz2": block(sz @ sz),
        "Sz": block(sz),
        "Sx2-Sy2": block(sx @ sx - sy @ sy),
        "anticomm_xy": block(ac),
        "Sx": block(sx),
        "Sy": block(sy),
        "anticomm_yz": block(sy @ sz + sz @ sy),
        "anticomm_zx": block(sz @ sx + sx @ sz),
    }
    zero = np.zeros((2, 2), dtype=complex)
    expected = {
        "Sz2": np.eye(2, dtype=complex),
        "Sz": _SIGMA_X,
        "Sx2-Sy2": _SIGMA_Z,
        "anticomm_xy": -_SIGMA_Y,
        "Sx": zero,
        "Sy": zero,
        "anticomm_yz": zero,
        "anticomm_zx": zero,
    }
    h_eff = p.E * _SIGMA_Z + p.gamma_e * p.detuning * _SIGMA_X
    return FictitiousSpinModel(h_eff=h_eff, basis=b.copy(), mapping=mapping, expected=expected)
