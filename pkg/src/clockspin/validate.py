"""Built-in invariant suite backing the ``validate`` CLI command."""

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from . import dynamics, hamiltonian
from .hamiltonian import ModelParams


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""


def trig_reconstruction_residual(tau, values, freqs_hz) -> float:
    """Max residual of a constant-coefficient trigonometric fit against tau.

    A closed (non-decohering) system produces an echo trace that is exactly a
    finite sum of constant-amplitude lines at eigenvalue-gap combinations; the
    residual of this fit therefore bounds any envelope decay.
    """
    freqs = np.unique(np.round(np.asarray(freqs_hz), 6))
    cols = [np.ones_like(tau)]
    for f in freqs:
        if f <= 0:
            continue
        cols.append(np.cos(2 * np.pi * f * tau))
        cols.append(np.sin(2 * np.pi * f * tau))
    design = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    return float(np.max(np.abs(values - design @ coef)))


def echo_line_frequencies(params: ModelParams, bath, nyquist_hz: float) -> np.ndarray:
    """Eigenvalue-gap combinations (conjugate to tau) observable in the trace.

    Each delay period contributes one eigenvalue gap of phase, so the echo
    lines sit at sums of two signed gaps; only sub-Nyquist lines are returned
    (the super-Nyquist ones carry no weight after coherence selection).
    """
    h2, _ = dynamics._block_hamiltonians(params, bath)
    f2 = np.linalg.eigvalsh(h2)
    gaps = (f2[:, None] - f2[None, :]).ravel()
    omega = np.abs(gaps[:, None] + gaps[None, :]).ravel()
    omega = omega[omega < nyquist_hz]
    return np.unique(np.round(omega, 3))


def check_electronic_eigenvalues(inject_e_sign_error: bool = False) -> CheckResult:
    p = ModelParams()
    if inject_e_sign_error:
        p = replace(p, E=-p.E)
    vals, _ = hamiltonian.eigensolve(hamiltonian.build_electronic(p))
    expected = np.array([-19.5e9, -10.5e9, 30.0e9])
    resid = float(np.max(np.abs(vals - expected) / np.abs(expected)))
    return CheckResult("electronic-eigenvalues", resid < 1e-9, resid, 1e-9,
                       "CT eigenvalues vs {-|D|/3 - E, -|D|/3 + E, +2|D|/3}")


def check_ct_eigenvector_order(inject_e_sign_error: bool = False) -> CheckResult:
    """The upper state of the CT doublet must be the symmetric combination."""
    p = ModelParams()
    if inject_e_sign_error:
        p = replace(p, E=-p.E)
    _, vecs = hamiltonian.eigensolve(hamiltonian.build_electronic(p))
    plus = np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0)
    overlap = abs(np.vdot(plus, vecs[:, 1]))
    resid = float(1.0 - overlap)
    return CheckResult("ct-eigenvector-order", resid < 1e-10, resid, 1e-10,
                       "second eigenvector vs (|up> + |down>)/sqrt(2)")


def check_projection_mappings() -> CheckResult:
    """Doublet-projected operator blocks; invariant under relabeling |+> <-> |->."""
    model = hamiltonian.project_fictitious(ModelParams())
    resid = max(model.mapping_residual(name) for name in model.mapping)
    return CheckResult("fictitious-spin-mappings", resid < 1e-10, resid, 1e-10,
                       "eight projected operator identities at the CT")


def check_propagator_oracle(n_cases: int = 6, dim: int = 24) -> CheckResult:
    """Eigenbasis phase evolution against a matrix-exponential propagator."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(n_cases):
        h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = (h + h.conj().T) / 2.0 * 1e6
        psi = rng.normal(size=(dim,)) + 1j * rng.normal(size=(dim,))
        rho = np.outer(psi, psi.conj())
        rho /= np.trace(rho).real
        tau = 1e-6
        vals, vecs = hamiltonian.eigensolve(h)
        fast = dynamics.propagate(rho, vals, vecs, tau)
        u = expm(-2j * np.pi * h * tau)
        slow = u @ rho @ u.conj().T
        worst = max(worst, float(np.max(np.abs(fast - slow))))
    return CheckResult("propagator-oracle", worst < 1e-8, worst, 1e-8,
                       f"{n_cases} random dim-{dim} cases at tau = 1 us")


def check_n1_no_decay() -> CheckResult:
    """Single-proton echo must be a constant-amplitude line spectrum."""
    from .bath import BathRealization

    params = ModelParams().at_detuning(20e-3)
    bath = BathRealization(
        a_sc=np.array([1e6]), a_psc=np.array([0.5e6]),
        theta=np.zeros((1, 1)), d_pair=0.0,
    )
    seq = dynamics.SequenceConfig(tau_step=100e-9, tau_max=30e-6)
    trace = dynamics.hahn_echo_trace(params, bath, seq)
    freqs = echo_line_frequencies(params, bath, nyquist_hz=0.5 / seq.tau_step)
    resid = trig_reconstruction_residual(trace.tau, trace.intensity, freqs)
    scale = float(np.max(np.abs(trace.intensity)))
    rel = resid / scale
    return CheckResult("n1-no-decay", rel < 1e-6, rel, 1e-6,
                       "line-spectrum reconstruction residual, N=1 at +20 mT")


def run_all(inject_e_sign_error: bool = False) -> list:
    return [
        check_electronic_eigenvalues(inject_e_sign_error),
        check_ct_eigenvector_order(inject_e_sign_error),
        check_projection_mappings(),
        check_propagator_oracle(),
        check_n1_no_decay(),
    ]
