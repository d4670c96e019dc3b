"""Echo trace container and serialization."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class EchoTrace:
    """Echo intensity versus interpulse delay tau.

    ``intensity[i]`` is the Sz expectation recorded at physical time
    ``2 * tau[i]`` after the first pulse.  The grid is strictly increasing
    with a uniform step.
    """

    tau: np.ndarray
    intensity: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.tau.ndim != 1 or self.tau.shape != self.intensity.shape:
            raise ValueError("tau and intensity must be matching 1-D arrays")
        if self.tau.size >= 2:
            steps = np.diff(self.tau)
            if np.any(steps <= 0):
                raise ValueError("tau grid must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        """Physical evolution times 2*tau (s)."""
        return 2.0 * self.tau

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau_us", "intensity"])
            for t, y in zip(self.tau, self.intensity):
                w.writerow([f"{t * 1e6:.17g}", f"{y:.17g}"])

    def write_sidecar(self, path):
        with open(path, "w") as fh:
            json.dump(self.meta, fh, indent=2, sort_keys=True, default=_jsonify)
            fh.write("\n")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")
