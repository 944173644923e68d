"""Classical dephasing trajectories: stationary Gaussian processes with a
Gaussian autocorrelation sigma^2 exp(-(t-t')^2/tau_c^2).

Generation is filtered white noise: i.i.d. normals on a grid convolved with
a Gaussian kernel of width a = tau_c/sqrt(2) (the kernel self-convolution
then reproduces the target correlator), rescaled by the discrete kernel
self-overlap so the process variance is exact at any grid spacing, and
interpolated with natural cubic splines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class NoiseParams:
    sigma: float  # r.m.s. amplitude, units 1/tau_p
    tau_c: float  # correlation time, units tau_p
    grid_h: float | None = None  # grid spacing; default tau_c/16
    seed: int | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.sigma > 0 and self.tau_c <= 0:
            raise ValueError("tau_c must be positive for a nonzero process")

    @property
    def h(self) -> float:
        if self.grid_h is not None:
            return self.grid_h
        return self.tau_c / 16.0


class NoiseTrajectory:
    """Per-qubit C2 noise functions over [0, duration]."""

    def __init__(self, params: NoiseParams, duration: float, splines):
        self.params = params
        self.duration = duration
        self._splines = splines  # qubit -> CubicSpline | None
        self._antiderivatives: dict[int, CubicSpline] = {}

    @property
    def n_qubits(self) -> int:
        return len(self._splines)

    def evaluate(self, qubit: int, t: float) -> float:
        return float(self.evaluate_many(qubit, np.array([t]))[0])

    def evaluate_many(self, qubit: int, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if ts.size and (ts.min() < -1e-9 or ts.max() > self.duration + 1e-9):
            raise ValueError(
                f"t outside [0, {self.duration}] for the generated trajectory"
            )
        sp = self._splines[qubit - 1]
        if sp is None:
            return np.zeros_like(ts)
        return sp(np.clip(ts, 0.0, self.duration))

    def integral(self, qubit: int, t0: float, t1: float) -> float:
        """Exact integral of the spline over [t0, t1]."""
        sp = self._splines[qubit - 1]
        if sp is None:
            return 0.0
        anti = self._antiderivatives.get(qubit)
        if anti is None:
            anti = sp.antiderivative()
            self._antiderivatives[qubit] = anti
        a = np.clip([t0, t1], 0.0, self.duration)
        return float(anti(a[1]) - anti(a[0]))

    def grid_values(self, qubit: int):
        sp = self._splines[qubit - 1]
        if sp is None:
            return np.array([0.0, self.duration]), np.zeros(2)
        return sp.x, sp(sp.x)


def generate(n_qubits: int, duration: float, params: NoiseParams) -> NoiseTrajectory:
    """Independent trajectories for each qubit, deterministic per seed."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    return _generate_with_stream(
        n_qubits, duration, params, np.random.SeedSequence(params.seed)
    )


def generate_ensemble(
    n_qubits: int, duration: float, params: NoiseParams, count: int
) -> list[NoiseTrajectory]:
    """Independent realizations; realization r uses the r-th child stream."""
    kids = np.random.SeedSequence(params.seed).spawn(count)
    return [_generate_with_stream(n_qubits, duration, params, k) for k in kids]


def _generate_with_stream(n_qubits, duration, params, stream) -> NoiseTrajectory:
    if params.sigma == 0:
        return NoiseTrajectory(params, duration, [None] * n_qubits)
    h = params.h
    if h > params.tau_c / 8.0 + 1e-12:
        raise ValueError("grid spacing must satisfy h <= tau_c/8")
    # white noise on a grid padded by 4 tau_c so edge transients are trimmed
    n_margin = int(np.ceil(4.0 * params.tau_c / h))
    grid = np.arange(-n_margin, int(np.ceil(duration / h)) + n_margin + 1) * h
    a = params.tau_c / np.sqrt(2.0)
    kernel = np.exp(-((np.arange(-n_margin, n_margin + 1) * h) ** 2) / (a * a))
    # exact discrete normalization: process variance sigma^2 at any h
    norm = params.sigma / np.sqrt(np.sum(kernel**2))
    splines = []
    for sub in stream.spawn(n_qubits):
        rng = np.random.default_rng(sub)
        white = rng.standard_normal(len(grid))
        filtered = norm * np.convolve(white, kernel, mode="same")
        keep = (grid >= -1e-12) & (grid <= duration + h)
        splines.append(CubicSpline(grid[keep], filtered[keep], bc_type="natural"))
    return NoiseTrajectory(params, duration, splines)


def dump_csv(traj: NoiseTrajectory, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# sigma: {traj.params.sigma!r}\n")
        fh.write(f"# tau_c: {traj.params.tau_c!r}\n")
        fh.write(f"# grid_h: {traj.params.h!r}\n")
        fh.write(f"# seed: {traj.params.seed!r}\n")
        fh.write("qubit,t,B\n")
        for q in range(1, traj.n_qubits + 1):
            ts, vals = traj.grid_values(q)
            for t, v in zip(ts, vals):
                fh.write(f"{q},{t:.9g},{v:.12g}\n")
