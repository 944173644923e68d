"""Dense time-dependent Schrodinger integration over pulse schedules.

The global time unit is the pulse duration tau_p = 1. Hamiltonians follow the
convention

    H(t) = (1/2) sum_(ij) J_ij z_i z_j
         + (1/2) sum_i sum_mu V_imu(t) sigma^mu_i
         + (1/2) sum_i [Delta_i + B_i(t)] z_i

with qubit 1 on the most significant bit of the computational basis index.
Shaped-pulse problems are integrated with the classic fourth-order
Runge-Kutta stepper; hard-pulse problems alternate exact diagonal
exponentials with instantaneous rotations, which is exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import QubitGraph, ShiftAssignment

DEFAULT_DT = 1.0 / 64.0

_PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    return _PAULI[axis].copy()


def kron_on(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    """Tensor single-qubit operators onto an n-qubit space (1-based indices)."""
    out = np.array([[1.0 + 0j]])
    for q in range(1, n + 1):
        out = np.kron(out, ops.get(q, _PAULI["i"]))
    return out


def rotation(axis: str, angle: float) -> np.ndarray:
    """exp(-i angle sigma^axis / 2)."""
    return (
        np.cos(angle / 2) * _PAULI["i"] - 1j * np.sin(angle / 2) * _PAULI[axis]
    )


class _System:
    """Precomputed index machinery for one coupling graph."""

    def __init__(self, g: QubitGraph):
        self.n = g.n_qubits
        self.dim = 2**self.n
        idx = np.arange(self.dim)
        # bit of qubit q (1-based, MSB first) per basis index
        self.bits = [(idx >> (self.n - q)) & 1 for q in range(self.n + 1)]
        self.zdiag = [None] + [1.0 - 2.0 * self.bits[q] for q in range(1, self.n + 1)]
        self.xperm = [None] + [idx ^ (1 << (self.n - q)) for q in range(1, self.n + 1)]
        # sigma^y: (y psi)[i] = yfac[i] * psi[i ^ mask]
        self.yfac = [None] + [
            np.where(self.bits[q] == 0, -1j, 1j) for q in range(1, self.n + 1)
        ]
        self.ising_diag = np.zeros(self.dim)
        for i, j, J in g.edges:
            self.ising_diag += 0.5 * J * self.zdiag[i] * self.zdiag[j]

    def shift_diag(self, shifts) -> np.ndarray:
        out = np.zeros(self.dim)
        for q in range(1, self.n + 1):
            s = shifts[q - 1]
            if s != 0.0:
                out += 0.5 * s * self.zdiag[q]
        return out


_SYSTEM_CACHE: dict[tuple, _System] = {}


def _system(g: QubitGraph) -> _System:
    key = (g.n_qubits, g.edges, g.sublattice)
    if key not in _SYSTEM_CACHE:
        _SYSTEM_CACHE[key] = _System(g)
    return _SYSTEM_CACHE[key]


@dataclass
class EvolutionProblem:
    """One integration task: graph + schedule + static shifts + optional noise."""

    graph: QubitGraph
    schedule: "Schedule"
    shifts: ShiftAssignment | None = None
    noise: "NoiseTrajectory | None" = None
    dt: float = DEFAULT_DT
    hard_pulses: bool = False
    noise_t0: float = 0.0  # trajectory time at schedule time 0
    diagnostics: dict = field(default_factory=dict)

    def shift_values(self) -> np.ndarray:
        if self.shifts is None:
            return np.zeros(self.graph.n_qubits)
        return np.asarray(self.shifts.shifts, dtype=float)


def _check_dt(dt: float):
    steps_per_unit = 1.0 / dt
    if abs(steps_per_unit - round(steps_per_unit)) > 1e-9:
        raise ValueError(f"dt={dt} must divide tau_p = 1 evenly")


def assemble_hamiltonian(p: EvolutionProblem, t: float) -> np.ndarray:
    """Dense H(t); the reference semantics for the fast integration paths."""
    if not 0.0 <= t <= p.schedule.duration + 1e-12:
        raise ValueError(f"t={t} outside schedule [0, {p.schedule.duration}]")
    sys = _system(p.graph)
    diag = sys.ising_diag + sys.shift_diag(p.shift_values())
    if p.noise is not None:
        for q in range(1, sys.n + 1):
            b = p.noise.evaluate(q, p.noise_t0 + t)
            if b != 0.0:
                diag = diag + 0.5 * b * sys.zdiag[q]
    h = np.diag(diag.astype(complex))
    for ev in p.schedule.events:
        amp = ev.amplitude_at(np.array([t]))[0]
        if amp == 0.0:
            continue
        op = kron_on(sys.n, {ev.qubit: pauli(ev.axis)})
        h = h + 0.5 * amp * op
    return h


# ---------------------------------------------------------------------------
# shaped-pulse RK4 path
# ---------------------------------------------------------------------------

def _substage_drives(schedule, t0: float, nsub: int, dt: float, n_qubits: int):
    """Per-substage (dt/2 grid) drive amplitudes, split by axis.

    Returns dict axis -> (nsub, n_qubits) array. Only x/y/z drive rows that
    are actually used appear.
    """
    ts = t0 + 0.5 * dt * np.arange(nsub)
    out: dict[str, np.ndarray] = {}
    for ev in schedule.events:
        e0, e1 = ev.start, ev.start + ev.width
        if e1 <= ts[0] - 1e-12 or e0 >= ts[-1] + 1e-12:
            continue
        mask = (ts >= e0 - 1e-12) & (ts <= e1 + 1e-12)
        if not mask.any():
            continue
        if ev.axis not in out:
            out[ev.axis] = np.zeros((nsub, n_qubits))
        out[ev.axis][mask, ev.qubit - 1] += ev.amplitude_at(ts[mask])
    return out


def _apply_h(sys, diag, drives, k, mat, axis_sel):
    """-i H(t_k) @ mat along the basis axis ``axis_sel`` (0 for states/rows)."""
    out = diag * mat
    for ax_name, rows in drives.items():
        row = rows[k]
        for q in range(1, sys.n + 1):
            a = row[q - 1]
            if a == 0.0:
                continue
            half = 0.5 * a
            if ax_name == "x":
                flipped = np.take(mat, sys.xperm[q], axis=axis_sel)
                out = out + half * flipped
            elif ax_name == "y":
                flipped = np.take(mat, sys.xperm[q], axis=axis_sel)
                shape = [1] * mat.ndim
                shape[axis_sel] = sys.dim
                out = out + half * (sys.yfac[q].reshape(shape) * flipped)
            else:  # z drive folds into the diagonal
                shape = [1] * mat.ndim
                shape[axis_sel] = sys.dim
                out = out + half * (sys.zdiag[q].reshape(shape) * mat)
    return -1j * out


def _rk4_run(sys, schedule, dt, mat, diag_of_sub, axis_sel, chunk_steps=2048):
    """Advance ``mat`` over the whole schedule; diag_of_sub(ts) -> diagonal rows.

    ``diag_of_sub`` receives substage times and returns an array broadcastable
    against mat (with the basis on ``axis_sel``) per substage index.
    """
    total_steps = int(round(schedule.duration / dt))
    done = 0
    while done < total_steps:
        steps = min(chunk_steps, total_steps - done)
        nsub = 2 * steps + 1
        t0 = done * dt
        drives = _substage_drives(schedule, t0, nsub, dt, sys.n)
        diags = diag_of_sub(t0 + 0.5 * dt * np.arange(nsub))
        for i in range(steps):
            k = 2 * i
            d1, d2, d3 = diags[k], diags[k + 1], diags[k + 2]
            k1 = _apply_h(sys, d1, drives, k, mat, axis_sel)
            k2 = _apply_h(sys, d2, drives, k + 1, mat + (0.5 * dt) * k1, axis_sel)
            k3 = _apply_h(sys, d2, drives, k + 1, mat + (0.5 * dt) * k2, axis_sel)
            k4 = _apply_h(sys, d3, drives, k + 2, mat + dt * k3, axis_sel)
            mat = mat + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        done += steps
    return mat


def _polar_project(u: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(u)
    return w @ vh


# ---------------------------------------------------------------------------
# hard-pulse path: exact rotations + exact diagonal segments
# ---------------------------------------------------------------------------

def _hard_events(schedule):
    """(center_time, qubit, axis, net_angle) per event, time-sorted."""
    evs = []
    for ev in schedule.events:
        evs.append((ev.start + ev.width / 2.0, ev.qubit, ev.axis, ev.hard_angle()))
    evs.sort(key=lambda e: (e[0], e[1]))
    return evs


def _apply_rotation(sys, mat, q, axis, angle, axis_sel):
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    shape = [1] * mat.ndim
    shape[axis_sel] = sys.dim
    if axis == "z":
        phase = np.where(sys.zdiag[q] > 0, np.exp(-1j * angle / 2), np.exp(1j * angle / 2))
        return phase.reshape(shape) * mat
    flipped = np.take(mat, sys.xperm[q], axis=axis_sel)
    if axis == "x":
        return c * mat - 1j * s * flipped
    if axis == "y":
        return c * mat - 1j * s * (sys.yfac[q].reshape(shape) * flipped)
    raise ValueError(f"unknown axis {axis!r}")


def _hard_run(sys, schedule, mat, diag_phase_fn, axis_sel):
    """diag_phase_fn(t0, t1) -> diagonal phase rows for the free segment."""
    tcur = 0.0
    events = _hard_events(schedule)
    k = 0
    while k <= len(events):
        t_next = events[k][0] if k < len(events) else schedule.duration
        if t_next > tcur + 1e-15:
            mat = diag_phase_fn(tcur, t_next) * mat
            tcur = t_next
        if k == len(events):
            break
        # apply every rotation centred at this instant (they commute)
        while k < len(events) and abs(events[k][0] - tcur) < 1e-12:
            _, q, axis, angle = events[k]
            mat = _apply_rotation(sys, mat, q, axis, angle, axis_sel)
            k += 1
    return mat


def _diag_phase(sys, diag_static, noise, noise_t0, t0, t1, shape):
    phase = diag_static * (t1 - t0)
    if noise is not None:
        for q in range(1, sys.n + 1):
            b_int = noise.integral(q, noise_t0 + t0, noise_t0 + t1)
            if b_int != 0.0:
                phase = phase + 0.5 * b_int * sys.zdiag[q]
    return np.exp(-1j * phase).reshape(shape)


# ---------------------------------------------------------------------------
# public propagation API
# ---------------------------------------------------------------------------

def propagate(p: EvolutionProblem) -> np.ndarray:
    """Total unitary for the schedule; renormalized if drift exceeds 1e-10."""
    _check_dt(p.dt)
    sys = _system(p.graph)
    diag_static = sys.ising_diag + sys.shift_diag(p.shift_values())
    u = np.eye(sys.dim, dtype=complex)

    if p.hard_pulses or not p.schedule.events:
        shape = (sys.dim, 1)

        def phase_fn(t0, t1):
            return _diag_phase(sys, diag_static, p.noise, p.noise_t0, t0, t1, shape)

        u = _hard_run(sys, p.schedule, u, phase_fn, axis_sel=0)
        return u

    if p.noise is None:
        def diag_of(ts):
            return [diag_static[:, None]] * len(ts)
    else:
        def diag_of(ts):
            rows = np.broadcast_to(diag_static, (len(ts), sys.dim)).copy()
            for q in range(1, sys.n + 1):
                b = p.noise.evaluate_many(q, p.noise_t0 + ts)
                rows += 0.5 * np.outer(b, sys.zdiag[q])
            return rows[:, :, None]

    u = _rk4_run(sys, p.schedule, p.dt, u, diag_of, axis_sel=0)
    drift = np.linalg.norm(u.conj().T @ u - np.eye(sys.dim))
    if drift > 1e-10:
        u = _polar_project(u)
        p.diagnostics["renormalizations"] = p.diagnostics.get("renormalizations", 0) + 1
        p.diagnostics["last_drift"] = float(drift)
    return u


def propagate_state(p: EvolutionProblem, psi0: np.ndarray) -> np.ndarray:
    """Evolve a state vector under the same schedule/integrator."""
    _check_dt(p.dt)
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-8:
        raise ValueError("psi0 must be normalized")
    sys = _system(p.graph)
    if psi0.size != sys.dim:
        raise ValueError("state dimension does not match the graph")
    diag_static = sys.ising_diag + sys.shift_diag(p.shift_values())
    psi = psi0.copy()

    if p.hard_pulses or not p.schedule.events:
        def phase_fn(t0, t1):
            return _diag_phase(sys, diag_static, p.noise, p.noise_t0, t0, t1, (sys.dim,))

        return _hard_run(sys, p.schedule, psi, phase_fn, axis_sel=0)

    if p.noise is None:
        def diag_of(ts):
            return [diag_static] * len(ts)
    else:
        def diag_of(ts):
            rows = np.broadcast_to(diag_static, (len(ts), sys.dim)).copy()
            for q in range(1, sys.n + 1):
                b = p.noise.evaluate_many(q, p.noise_t0 + ts)
                rows += 0.5 * np.outer(b, sys.zdiag[q])
            return rows

    psi = _rk4_run(sys, p.schedule, p.dt, psi, diag_of, axis_sel=0)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-8:
        p.diagnostics["renormalizations"] = p.diagnostics.get("renormalizations", 0) + 1
    return psi / norm


def propagate_many_shifts(
    g: QubitGraph,
    schedule,
    shift_sets: np.ndarray,
    dt: float = DEFAULT_DT,
    hard_pulses: bool = False,
) -> np.ndarray:
    """Batch of total unitaries, one per row of static shifts (R, n_qubits).

    All draws share the pulse schedule, so the Hamiltonians differ only in
    the static diagonal and the whole batch advances in lockstep.
    """
    _check_dt(dt)
    sys = _system(g)
    shift_sets = np.atleast_2d(np.asarray(shift_sets, dtype=float))
    R = shift_sets.shape[0]
    diag_r = np.stack(
        [sys.ising_diag + sys.shift_diag(s) for s in shift_sets]
    )  # (R, dim)
    u = np.broadcast_to(np.eye(sys.dim, dtype=complex), (R, sys.dim, sys.dim)).copy()

    if hard_pulses or not schedule.events:
        def phase_fn(t0, t1):
            return np.exp(-1j * diag_r * (t1 - t0))[:, :, None]

        return _hard_run(sys, schedule, u, phase_fn, axis_sel=1)

    def diag_of(ts):
        return [diag_r[:, :, None]] * len(ts)

    u = _rk4_run(sys, schedule, dt, u, diag_of, axis_sel=1)
    for r in range(R):
        drift = np.linalg.norm(u[r].conj().T @ u[r] - np.eye(sys.dim))
        if drift > 1e-10:
            u[r] = _polar_project(u[r])
    return u


def propagate_states_batch(
    g: QubitGraph,
    schedule,
    psis: np.ndarray,
    shifts: np.ndarray | None = None,
    noise_list=None,
    dt: float = DEFAULT_DT,
    hard_pulses: bool = False,
    noise_t0: float = 0.0,
) -> np.ndarray:
    """Evolve a batch of states (R, dim), one noise trajectory per row."""
    _check_dt(dt)
    sys = _system(g)
    psis = np.array(psis, dtype=complex)
    R = psis.shape[0]
    base = sys.ising_diag.copy()
    if shifts is not None:
        base = base + sys.shift_diag(np.asarray(shifts, dtype=float))

    if hard_pulses or not schedule.events:
        def phase_fn(t0, t1):
            phases = np.broadcast_to(base * (t1 - t0), (R, sys.dim)).copy()
            if noise_list is not None:
                for r in range(R):
                    for q in range(1, sys.n + 1):
                        b_int = noise_list[r].integral(q, noise_t0 + t0, noise_t0 + t1)
                        phases[r] += 0.5 * b_int * sys.zdiag[q]
            return np.exp(-1j * phases)

        return _hard_run(sys, schedule, psis, phase_fn, axis_sel=1)

    if noise_list is None:
        def diag_of(ts):
            return [base] * len(ts)
    else:
        def diag_of(ts):
            rows = np.broadcast_to(base, (len(ts), R, sys.dim)).copy()
            for r in range(R):
                for q in range(1, sys.n + 1):
                    b = noise_list[r].evaluate_many(q, noise_t0 + ts)
                    rows[:, r, :] += 0.5 * np.outer(b, sys.zdiag[q])
            return rows

    psis = _rk4_run(sys, schedule, dt, psis, diag_of, axis_sel=1)
    norms = np.linalg.norm(psis, axis=1, keepdims=True)
    return psis / norms


# ---------------------------------------------------------------------------
# small-system sample-based RK4 (single-qubit pulse propagators)
# ---------------------------------------------------------------------------

def rk4_from_samples(h_samples: np.ndarray, dt: float) -> np.ndarray:
    """Integrate dU/dt = -i H(t) U from H sampled on the dt/2 substage grid.

    ``h_samples`` has shape (2*nsteps+1, ..., d, d); leading batch axes are
    carried through. Returns U(T) with the same batch shape.
    """
    nsub = h_samples.shape[0]
    if nsub % 2 == 0:
        raise ValueError("need an odd number of substage samples (2*nsteps+1)")
    nsteps = (nsub - 1) // 2
    d = h_samples.shape[-1]
    batch = h_samples.shape[1:-2]
    u = np.broadcast_to(np.eye(d, dtype=complex), (*batch, d, d)).copy()
    for i in range(nsteps):
        h1 = h_samples[2 * i]
        h2 = h_samples[2 * i + 1]
        h3 = h_samples[2 * i + 2]
        k1 = -1j * (h1 @ u)
        k2 = -1j * (h2 @ (u + (0.5 * dt) * k1))
        k3 = -1j * (h2 @ (u + (0.5 * dt) * k2))
        k4 = -1j * (h3 @ (u + dt * k3))
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


def polar_unitary(u: np.ndarray) -> np.ndarray:
    """Nearest unitary in Frobenius norm (polar factor), batched."""
    w, _, vh = np.linalg.svd(u)
    return w @ vh
