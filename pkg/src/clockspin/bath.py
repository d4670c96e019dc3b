"""Randomized proton-bath realizations and coupling-strength estimates.

A bath realization fixes the secular/pseudosecular hyperfine couplings of
each proton and the orientation angle of every proton pair.  Sampling is
driven by a counter-based Philox generator keyed on ``(seed, index)``, so a
realization is fully determined by those two integers on any platform.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import constants
from .echotrace import EchoTrace


@dataclass(frozen=True)
class BathSpec:
    """Sampling distribution for bath realizations.

    Defaults give the headline N=7 ensemble: couplings uniform on 7-9 MHz
    (mean 8 MHz), A_psc = A_sc/2, pair coupling 10 kHz, ten realizations.
    """

    n_nuclei: int = 7
    a_mean: float = 8e6
    a_halfwidth: float = 1e6
    psc_ratio: float = 0.5
    d_pair: float = 10e3
    n_realizations: int = 10
    seed: int = 1234
    angle_mode: str = "isotropic"   # "isotropic": cos(theta) uniform; "uniform-theta": theta uniform

    def __post_init__(self):
        if self.n_nuclei < 1:
            raise ValueError("n_nuclei must be >= 1")
        if self.a_halfwidth < 0:
            raise ValueError("a_halfwidth must be >= 0")
        if self.angle_mode not in ("isotropic", "uniform-theta"):
            raise ValueError(f"unknown angle_mode {self.angle_mode!r}")


@dataclass
class BathRealization:
    """One sampled set of couplings and pair angles for N protons."""

    a_sc: np.ndarray      # secular couplings, Hz
    a_psc: np.ndarray     # pseudosecular couplings, Hz
    theta: np.ndarray     # symmetric N x N pair angles, rad (diagonal unused)
    d_pair: float         # pair dipolar magnitude, Hz
    seed: int = 0
    index: int = 0

    @property
    def n_nuclei(self) -> int:
        return len(self.a_sc)

    def to_json(self) -> str:
        payload = {
            "a_sc_hz": [f"{v:.17g}" for v in self.a_sc],
            "a_psc_hz": [f"{v:.17g}" for v in self.a_psc],
            "theta_rad": [[f"{v:.17g}" for v in row] for row in self.theta],
            "d_pair_hz": f"{self.d_pair:.17g}",
            "seed": self.seed,
            "index": self.index,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BathRealization":
        d = json.loads(text)
        return cls(
            a_sc=np.array([float(v) for v in d["a_sc_hz"]]),
            a_psc=np.array([float(v) for v in d["a_psc_hz"]]),
            theta=np.array([[float(v) for v in row] for row in d["theta_rad"]]),
            d_pair=float(d["d_pair_hz"]),
            seed=int(d["seed"]),
            index=int(d["index"]),
        )


def sample_bath(spec: BathSpec, index: int) -> BathRealization:
    """Draw realization ``index`` of the given spec.

    Deterministic for ``(spec.seed, index)``: the Philox key is the pair
    itself.  Draw order is fixed (couplings first, then the upper-triangle
    pair angles row by row).
    """
    if index < 0:
        raise ValueError("realization index must be >= 0")
    rng = np.random.Generator(
        np.random.Philox(key=np.array([spec.seed, index], dtype=np.uint64))
    )
    n = spec.n_nuclei
    a_sc = rng.uniform(spec.a_mean - spec.a_halfwidth, spec.a_mean + spec.a_halfwidth, n)
    theta = np.zeros((n, n))
    iu, ju = np.triu_indices(n, k=1)
    if iu.size:
        if spec.angle_mode == "isotropic":
            angles = np.arccos(rng.uniform(-1.0, 1.0, iu.size))
        else:
            angles = rng.uniform(0.0, np.pi, iu.size)
        theta[iu, ju] = angles
        theta[ju, iu] = angles
    return BathRealization(
        a_sc=a_sc,
        a_psc=spec.psc_ratio * a_sc,
        theta=theta,
        d_pair=spec.d_pair,
        seed=spec.seed,
        index=index,
    )


def dipolar_strength(r: float, mu1: float, mu2: float, geometry: str) -> float:
    """Point-dipole coupling strength in Hz.

    Args:
        r: separation in meters (> 0).
        mu1, mu2: magnetic moments in J/T.
        geometry: ``"electron-nuclear"`` for ``2 mu0 mu1 mu2 / (4 pi h r^3)``
            or ``"nuclear-pair"`` for ``mu0 mu1 mu2 / (8 pi h r^3)``.
    """
    if r <= 0:
        raise ValueError("separation must be positive")
    base = constants.MU0 * mu1 * mu2 / (constants.PLANCK * r**3)
    if geometry == "electron-nuclear":
        return 2.0 * base / (4.0 * np.pi)
    if geometry == "nuclear-pair":
        return base / (8.0 * np.pi)
    raise ValueError(f"unknown geometry {geometry!r}")


def ensemble_average(traces) -> EchoTrace:
    """Pointwise mean of echo traces sharing one tau grid."""
    traces = list(traces)
    if not traces:
        raise ValueError("no traces to average")
    tau = traces[0].tau
    for t in traces[1:]:
        if t.tau.shape != tau.shape or not np.array_equal(t.tau, tau):
            raise ValueError("tau grids differ between ensemble members")
    # Canonical member order makes the floating-point mean exactly
    # permutation-invariant.
    order = sorted(range(len(traces)), key=lambda i: traces[i].intensity.tobytes())
    stack = np.stack([traces[i].intensity for i in order])
    meta = dict(traces[0].meta)
    meta["ensemble"] = [
        {"seed": traces[i].meta.get("bath_seed"), "index": traces[i].meta.get("bath_index")}
        for i in order
    ]
    meta["n_realizations"] = len(traces)
    return EchoTrace(tau=tau.copy(), intensity=stack.mean(axis=0), meta=meta)
