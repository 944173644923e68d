"""Fidelity measures, ensemble gate benchmarks, and log-log slope estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def gate_infidelity(u_sim: np.ndarray, u_target: np.ndarray) -> float:
    """Global-phase-invariant gate infidelity 1 - |Tr(U_t^dag U_s)|^2 / 4^n.

    Both arguments must be unitary on the same 2^n-dimensional space.
    """
    u_sim = np.asarray(u_sim)
    u_target = np.asarray(u_target)
    if u_sim.shape != u_target.shape or u_sim.shape[0] != u_sim.shape[1]:
        raise ValueError("operator dimensions do not match")
    d = u_sim.shape[0]
    for name, u in (("u_sim", u_sim), ("u_target", u_target)):
        drift = np.linalg.norm(u.conj().T @ u - np.eye(d))
        if drift > 1e-8:
            raise ValueError(f"{name} is not unitary (||U^dag U - I|| = {drift:.2e})")
    overlap = np.trace(u_target.conj().T @ u_sim)
    return float(max(0.0, 1.0 - (abs(overlap) ** 2) / d**2))


def state_fidelity(psi: np.ndarray, psi_ref: np.ndarray) -> float:
    """|<psi_ref|psi>|^2 for normalized state vectors."""
    psi = np.asarray(psi).ravel()
    psi_ref = np.asarray(psi_ref).ravel()
    if psi.shape != psi_ref.shape:
        raise ValueError("state dimensions do not match")
    return float(abs(np.vdot(psi_ref, psi)) ** 2)


def phase_adjusted_distance(u_sim: np.ndarray, u_target: np.ndarray) -> float:
    """min_phi ||U_s - e^{i phi} U_t||_F, the global-phase-free Frobenius error."""
    u_sim = np.asarray(u_sim)
    u_target = np.asarray(u_target)
    overlap = np.trace(u_target.conj().T @ u_sim)
    phase = overlap / abs(overlap) if abs(overlap) > 1e-300 else 1.0
    return float(np.linalg.norm(u_sim - phase * u_target))


def slope_estimate(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Pointwise d(log y)/d(log x): centered differences, one-sided endpoints."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape:
        raise ValueError("xs and ys must be 1-d arrays of equal length")
    if len(xs) < 2:
        raise ValueError("need at least two points for a slope")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("slope estimation needs strictly positive values")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("grid must be strictly increasing")
    lx, ly = np.log(xs), np.log(ys)
    out = np.empty_like(lx)
    out[1:-1] = (ly[2:] - ly[:-2]) / (lx[2:] - lx[:-2])
    out[0] = (ly[1] - ly[0]) / (lx[1] - lx[0])
    out[-1] = (ly[-1] - ly[-2]) / (lx[-1] - lx[-2])
    return out


def fit_slope(xs: np.ndarray, ys: np.ndarray) -> float:
    """Least-squares slope of log y vs log x over the whole range."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("power-law fit needs strictly positive values")
    coef = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(coef[0])


@dataclass
class GateBenchResult:
    """Mean gate infidelity versus r.m.s. shift, with local slope estimates."""

    deltas: np.ndarray  # r.m.s. shift grid, strictly increasing
    mean_infidelity: np.ndarray
    stderr: np.ndarray
    slopes: np.ndarray  # local log-log slopes, same length as the grid
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=float)
        self.mean_infidelity = np.asarray(self.mean_infidelity, dtype=float)
        if np.any(np.diff(self.deltas) <= 0):
            raise ValueError("delta grid must be strictly increasing")
        if np.any((self.mean_infidelity < 0) | (self.mean_infidelity > 1)):
            raise ValueError("infidelities must lie in [0, 1]")

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            for key in sorted(self.metadata):
                fh.write(f"# {key}: {self.metadata[key]}\n")
            fh.write("delta_tau_p,mean_infidelity,stderr,slope\n")
            rows = zip(self.deltas, self.mean_infidelity, self.stderr, self.slopes)
            for d, m, s, sl in rows:
                fh.write(f"{d:.12g},{m:.12g},{s:.12g},{sl:.12g}\n")


def run_gate_bench(
    g,
    gate,
    deltas,
    draws: int = 20,
    seed: int = 0,
    **problem_kwargs,
) -> GateBenchResult:
    """Average gate infidelity over shift draws for each r.m.s. shift value.

    ``gate`` is a compiled gate description exposing ``schedule``,
    ``target_unitary`` and ``name`` (see scheduler.CompiledGate). Shift
    assignments are redrawn per (delta, draw) from a seed sequence, so the
    sweep is deterministic and independent of evaluation order.
    """
    from . import dynamics  # deferred to avoid an import cycle

    deltas = np.asarray(deltas, dtype=float)
    if draws < 1:
        raise ValueError("draws must be >= 1")
    root = np.random.SeedSequence(seed)
    point_seeds = root.spawn(len(deltas))

    means = np.empty(len(deltas))
    errs = np.empty(len(deltas))
    for k, delta in enumerate(deltas):
        draw_seeds = point_seeds[k].generate_state(draws)
        shift_sets = [
            np.random.default_rng(int(s)).normal(0.0, delta, size=g.n_qubits)
            for s in draw_seeds
        ]
        unis = dynamics.propagate_many_shifts(
            g, gate.schedule, np.array(shift_sets), **problem_kwargs
        )
        infs = [gate_infidelity(u, gate.target_unitary) for u in unis]
        means[k] = np.mean(infs)
        errs[k] = np.std(infs, ddof=1) / np.sqrt(draws) if draws > 1 else 0.0

    slopes = slope_estimate(deltas, np.maximum(means, 1e-300))
    meta = {
        "gate": gate.name,
        "draws": draws,
        "seed": seed,
        "n_qubits": g.n_qubits,
    }
    meta.update({k: str(v) for k, v in problem_kwargs.items()})
    return GateBenchResult(
        deltas=deltas,
        mean_infidelity=means,
        stderr=errs,
        slopes=slopes,
        metadata=meta,
    )
