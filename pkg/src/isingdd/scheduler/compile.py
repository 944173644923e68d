"""Lowering of logical gates and circuits to pulse schedules.

Every qubit is under a balanced decoupling pattern in every 16 tau_p block;
gates are realised by replacing a qubit's idle pattern with the coupled-pair
patterns (zz blocks) or by inserting corrected-rotation events on top of its
idle pattern (single-qubit blocks, see dcg.py). Block count is the only
duration currency: a zz rotation by pi/4 takes m blocks, every single-qubit
gate takes one, so the standard two-qubit entangling gate at m = 5 lasts
(5 + 4) * 16 tau_p = 144 tau_p.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..lattice import QubitGraph, validate_parallel_set
from ..pulses import PulseShape
from . import dcg
from .patterns import BLOCK_DURATION, CANONICAL_PATTERNS, TogglingPattern


class SchedulingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PulseEvent:
    """One shaped pulse on one qubit; axis/sign may override the shape tag."""

    qubit: int
    shape: PulseShape
    axis: str
    start: float
    stretch: int = 1
    sign: float = 1.0
    role: str = "flip"  # flip | gate | pair

    def __post_init__(self):
        if self.stretch not in (1, 2):
            raise ValueError("stretch factor must be 1 or 2")

    @property
    def width(self) -> float:
        return self.stretch * self.shape.duration

    @property
    def center(self) -> float:
        return self.start + self.width / 2.0

    def amplitude_at(self, ts: np.ndarray) -> np.ndarray:
        """Drive amplitude; stretching halves the height, preserving the area."""
        ts = np.asarray(ts, dtype=float)
        local = (ts - self.start) / self.stretch
        inside = (local >= 0.0) & (local <= self.shape.duration)
        out = np.zeros_like(ts)
        if inside.any():
            out[inside] = (self.sign / self.stretch) * self.shape.amplitude_at(
                local[inside]
            )
        return out

    def hard_angle(self) -> float:
        return self.sign * self.shape.angle


@dataclass(frozen=True)
class Schedule:
    duration: float
    events: tuple[PulseEvent, ...]
    blocks: tuple[str, ...] = ()
    measurements: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        n_blocks = self.duration / BLOCK_DURATION
        if abs(n_blocks - round(n_blocks)) > 1e-9:
            raise ValueError("schedule duration must be a multiple of 16 tau_p")
        by_qubit: dict[int, list[PulseEvent]] = {}
        for ev in self.events:
            if ev.start < -1e-9 or ev.start + ev.width > self.duration + 1e-9:
                raise ValueError(
                    f"event on qubit {ev.qubit} at t={ev.start} leaves the schedule"
                )
            by_qubit.setdefault(ev.qubit, []).append(ev)
        for q, evs in by_qubit.items():
            evs = sorted(evs, key=lambda e: e.start)
            for e1, e2 in zip(evs, evs[1:]):
                if e1.start + e1.width > e2.start + 1e-9:
                    raise ValueError(
                        f"overlapping pulses on qubit {q} at t={e2.start}"
                    )

    @property
    def n_blocks(self) -> int:
        return int(round(self.duration / BLOCK_DURATION))

    def shifted(self, dt0: float) -> "Schedule":
        return Schedule(
            duration=self.duration,
            events=tuple(replace(e, start=e.start + dt0) for e in self.events),
            blocks=self.blocks,
            measurements=tuple((t + dt0, q) for t, q in self.measurements),
        )


def concat(schedules: list[Schedule]) -> Schedule:
    events: list[PulseEvent] = []
    blocks: list[str] = []
    marks: list[tuple[float, int]] = []
    t = 0.0
    for s in schedules:
        shifted = s.shifted(t)
        events.extend(shifted.events)
        blocks.extend(s.blocks)
        marks.extend(shifted.measurements)
        t += s.duration
    return Schedule(
        duration=t, events=tuple(events), blocks=tuple(blocks), measurements=tuple(marks)
    )


@dataclass(frozen=True)
class CompiledGate:
    """Schedule plus the ideal unitary it should realise on the full chain."""

    name: str
    schedule: Schedule
    target_unitary: np.ndarray | None


# ---------------------------------------------------------------------------
# pulse selection
# ---------------------------------------------------------------------------

ANGLE_TAGS = {"pi": np.pi, "pi2": np.pi / 2}


@dataclass(frozen=True)
class PulseSelection:
    """Resolve (angle class) -> shape for one pulse family."""

    kind: str  # order2 | order1 | gaussian | hard
    library: dict[str, PulseShape]

    def shape(self, angle_tag: str) -> PulseShape:
        key = f"{self.kind}_{angle_tag}_x"
        if key not in self.library:
            raise KeyError(f"pulse library has no entry {key!r}")
        return self.library[key]

    @property
    def flip(self) -> PulseShape:
        return self.shape("pi")


def default_selection(kind: str = "order2") -> PulseSelection:
    from ..pulses import default_library

    return PulseSelection(kind=kind, library=default_library())


# ---------------------------------------------------------------------------
# block builders
# ---------------------------------------------------------------------------

def _flip_events(
    qubit: int, pattern: TogglingPattern, flip_shape: PulseShape, block_start: float
) -> list[PulseEvent]:
    return [
        PulseEvent(
            qubit=qubit,
            shape=flip_shape,
            axis="x",
            start=block_start + t - flip_shape.duration / 2.0,
            role="flip",
        )
        for t in pattern.flip_times()
    ]


def _pattern_for(g: QubitGraph, q: int, patterns) -> TogglingPattern:
    return patterns[g.label(q)]


def schedule_idle(
    g: QubitGraph,
    blocks: int,
    selection: PulseSelection | None = None,
    patterns=None,
) -> Schedule:
    """Run the sublattice decoupling patterns on every qubit."""
    if blocks < 1:
        raise ValueError("blocks must be >= 1")
    selection = selection or default_selection()
    patterns = patterns or CANONICAL_PATTERNS
    events: list[PulseEvent] = []
    for b in range(blocks):
        t0 = b * BLOCK_DURATION
        for q in g.qubits():
            events.extend(
                _flip_events(q, _pattern_for(g, q, patterns), selection.flip, t0)
            )
    return Schedule(
        duration=blocks * BLOCK_DURATION,
        events=tuple(events),
        blocks=("idle",) * blocks,
    )


def zz_angle(g: QubitGraph, c: int, d: int, m: int) -> float:
    """alpha in exp(-i alpha z_c z_d) for m coupled blocks: 4 m J tau_p."""
    return 4.0 * m * g.coupling(c, d) * 1.0


def schedule_zz(
    g: QubitGraph,
    c: int,
    d: int,
    m: int,
    selection: PulseSelection | None = None,
    patterns=None,
) -> Schedule:
    """Keep edge (c, d) coupled for half of each block, m blocks long.

    The A-sublattice member carries the C pattern and the B member the D
    pattern regardless of argument order; every other qubit idles.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    if not g.has_edge(c, d):
        raise ValueError(f"({c},{d}) is not an edge of the graph")
    selection = selection or default_selection()
    patterns = patterns or CANONICAL_PATTERNS
    role = {}
    for q in (c, d):
        role[q] = "C" if g.label(q) == "A" else "D"
    if len({role[c], role[d]}) != 2:
        raise ValueError("coupled pair must span both sublattices")

    events: list[PulseEvent] = []
    for b in range(m):
        t0 = b * BLOCK_DURATION
        for q in g.qubits():
            pat = patterns[role[q]] if q in role else _pattern_for(g, q, patterns)
            events.extend(_flip_events(q, pat, selection.flip, t0))
    return Schedule(
        duration=m * BLOCK_DURATION,
        events=tuple(events),
        blocks=(f"zz({c},{d})",) * m,
    )


def schedule_single_qubit_dcg(
    g: QubitGraph,
    q: int,
    rotation: PulseShape,
    selection: PulseSelection | None = None,
    patterns=None,
) -> Schedule:
    """One corrected-rotation block on qubit q; everything else idles."""
    selection = selection or default_selection()
    patterns = patterns or CANONICAL_PATTERNS
    if rotation.angle == 0.0:
        sched = schedule_idle(g, 1, selection, patterns)
        return Schedule(
            duration=sched.duration, events=sched.events, blocks=("rot0",)
        )
    events = dcg.gate_block_events(
        qubit=q,
        pattern=_pattern_for(g, q, patterns),
        axis=rotation.axis,
        angle=rotation.angle,
        selection=selection,
    )
    for other in g.qubits():
        if other != q:
            events.extend(
                _flip_events(other, _pattern_for(g, other, patterns), selection.flip, 0.0)
            )
    label = f"rot({rotation.axis},{rotation.angle:+.3f})@{q}"
    return Schedule(duration=BLOCK_DURATION, events=tuple(events), blocks=(label,))


def schedule_z_composite(
    g: QubitGraph,
    q: int,
    angle: float,
    selection: PulseSelection | None = None,
    patterns=None,
) -> Schedule:
    """One block realising exp(-i angle sigma_z/2) from x/y pulses."""
    selection = selection or default_selection()
    patterns = patterns or CANONICAL_PATTERNS
    events = dcg.gate_block_events(
        qubit=q,
        pattern=_pattern_for(g, q, patterns),
        axis="z",
        angle=angle,
        selection=selection,
    )
    for other in g.qubits():
        if other != q:
            events.extend(
                _flip_events(other, _pattern_for(g, other, patterns), selection.flip, 0.0)
            )
    return Schedule(
        duration=BLOCK_DURATION,
        events=tuple(events),
        blocks=(f"rot(z,{angle:+.3f})@{q}",),
    )


# ---------------------------------------------------------------------------
# gate targets
# ---------------------------------------------------------------------------

def _embed(g: QubitGraph, ops: dict[int, np.ndarray]) -> np.ndarray:
    from .. import dynamics

    return dynamics.kron_on(g.n_qubits, ops)


def rotation_target(g: QubitGraph, q: int, axis: str, angle: float) -> np.ndarray:
    from .. import dynamics

    return _embed(g, {q: dynamics.rotation(axis, angle)})


def cnot_target(g: QubitGraph, c: int, d: int) -> np.ndarray:
    from .. import dynamics

    n = g.n_qubits
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    return dynamics.kron_on(n, {c: p0}) + dynamics.kron_on(
        n, {c: p1, d: dynamics.pauli("x")}
    )


def zz_target(g: QubitGraph, c: int, d: int, alpha: float) -> np.ndarray:
    from .. import dynamics

    zz = dynamics.kron_on(g.n_qubits, {c: dynamics.pauli("z"), d: dynamics.pauli("z")})
    diag = np.diag(zz).real
    return np.diag(np.exp(-1j * alpha * diag))


def hadamard_target(g: QubitGraph, q: int) -> np.ndarray:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    return _embed(g, {q: h})


# ---------------------------------------------------------------------------
# composite gates
# ---------------------------------------------------------------------------

def compile_zz(g, c, d, m, selection=None, patterns=None) -> CompiledGate:
    sched = schedule_zz(g, c, d, m, selection, patterns)
    return CompiledGate(
        name=f"ZZ({c},{d})x{m}",
        schedule=sched,
        target_unitary=zz_target(g, c, d, zz_angle(g, c, d, m)),
    )


def compile_rotation(g, q, axis, angle, selection=None, patterns=None) -> CompiledGate:
    """One-block pi/2 or pi rotation about x, y, or (as a composite) z."""
    if axis == "z":
        sched = schedule_z_composite(g, q, angle, selection, patterns)
    else:
        tag = dcg.angle_tag(angle)
        selection = selection or default_selection()
        base = selection.shape(tag)
        rot = PulseShape(
            axis=axis,
            angle=base.angle if angle > 0 else -base.angle,
            kind=base.kind,
            coeffs=base.coeffs if angle > 0 else tuple(-a for a in base.coeffs),
            duration=base.duration,
        )
        sched = schedule_single_qubit_dcg(g, q, rot, selection, patterns)
    return CompiledGate(
        name=f"R{axis}({angle:+.3f})@{q}",
        schedule=sched,
        target_unitary=rotation_target(g, q, axis, angle),
    )


def compile_cnot(g, c, d, m=5, selection=None, patterns=None) -> CompiledGate:
    """CNOT via  e^{i pi/4} Z_c X_d Ybar_d U_zz Y_d  (time order right to left).

    m zz blocks plus four single-qubit blocks: 9 blocks at m = 5.
    """
    if not g.has_edge(c, d):
        raise ValueError(f"({c},{d}) is not an edge of the graph")
    parts = [
        compile_rotation(g, d, "y", np.pi / 2, selection, patterns).schedule,
        compile_zz(g, c, d, m, selection, patterns).schedule,
        compile_rotation(g, d, "y", -np.pi / 2, selection, patterns).schedule,
        compile_rotation(g, d, "x", np.pi / 2, selection, patterns).schedule,
        compile_rotation(g, c, "z", np.pi / 2, selection, patterns).schedule,
    ]
    return CompiledGate(
        name=f"CNOT({c},{d})",
        schedule=concat(parts),
        target_unitary=cnot_target(g, c, d),
    )


def compile_hadamard(g, q, selection=None, patterns=None) -> CompiledGate:
    """Hadamard = R_y(-pi/2) R_x(-pi) up to a global phase; two blocks."""
    parts = [
        compile_rotation(g, q, "x", -np.pi, selection, patterns).schedule,
        compile_rotation(g, q, "y", -np.pi / 2, selection, patterns).schedule,
    ]
    return CompiledGate(
        name=f"H@{q}", schedule=concat(parts), target_unitary=hadamard_target(g, q)
    )


# ---------------------------------------------------------------------------
# circuits
# ---------------------------------------------------------------------------

GATE_ARITY = {
    "CNOT": 2,
    "H": 1,
    "X": 1,
    "Y": 1,
    "XBAR": 1,
    "YBAR": 1,
    "ZZ": 3,
    "MEASURE": 1,
}


def _gate_targets(gate: tuple) -> list:
    name = gate[0]
    if name == "CNOT":
        return [(gate[1], gate[2])]
    if name == "ZZ":
        return [(gate[1], gate[2])]
    return [gate[1]]


def _compile_gate(g, gate, m, selection, patterns) -> CompiledGate:
    name = gate[0]
    if name == "CNOT":
        return compile_cnot(g, gate[1], gate[2], m, selection, patterns)
    if name == "H":
        return compile_hadamard(g, gate[1], selection, patterns)
    if name == "X":
        return compile_rotation(g, gate[1], "x", np.pi / 2, selection, patterns)
    if name == "XBAR":
        return compile_rotation(g, gate[1], "x", -np.pi / 2, selection, patterns)
    if name == "Y":
        return compile_rotation(g, gate[1], "y", np.pi / 2, selection, patterns)
    if name == "YBAR":
        return compile_rotation(g, gate[1], "y", -np.pi / 2, selection, patterns)
    if name == "ZZ":
        c, d, alpha = gate[1], gate[2], gate[3]
        J = g.coupling(c, d)
        reps = alpha / (4.0 * J) if J else 0.0
        if abs(reps - round(reps)) > 1e-9 or reps < 0:
            raise SchedulingError(
                f"ZZ angle {alpha} is not an integer multiple of 4*J*tau_p"
            )
        return compile_zz(g, c, d, int(round(reps)), selection, patterns)
    raise SchedulingError(f"unknown gate {name!r}")


def schedule_circuit(
    g: QubitGraph,
    layers: list[list[tuple]],
    m: int = 5,
    selection: PulseSelection | None = None,
    patterns=None,
) -> tuple[Schedule, np.ndarray | None]:
    """Compile a layered circuit; gates within a layer run in parallel.

    Layers are lists of gate tuples like ("CNOT", 1, 2). A layer must pass
    the non-neighbour parallelism check; shorter gates are padded with idle
    blocks so every qubit stays under a decoupling pattern at all times.
    Returns (schedule, ideal_unitary); the unitary is None when the circuit
    contains MEASURE markers.
    """
    selection = selection or default_selection()
    patterns = patterns or CANONICAL_PATTERNS
    pieces: list[Schedule] = []
    target = np.eye(2**g.n_qubits, dtype=complex)
    has_measure = False

    for li, layer in enumerate(layers):
        measure_gates = [gt for gt in layer if gt[0] == "MEASURE"]
        if measure_gates:
            if len(measure_gates) != len(layer):
                raise SchedulingError(
                    f"layer {li}: MEASURE markers cannot share a layer with gates"
                )
            t_now = sum(p.duration for p in pieces)
            marks = tuple((t_now, gt[1]) for gt in measure_gates)
            pieces.append(
                Schedule(duration=0.0, events=(), blocks=(), measurements=marks)
            )
            has_measure = True
            continue

        targets = [t for gt in layer for t in _gate_targets(gt)]
        violations = validate_parallel_set(g, targets)
        if violations:
            raise SchedulingError(
                f"layer {li}: coupled qubits across parallel gates on edges {violations}"
            )
        compiled = [_compile_gate(g, gt, m, selection, patterns) for gt in layer]
        n_blocks = max(c.schedule.n_blocks for c in compiled)
        involved = set()
        for gt in layer:
            for t in _gate_targets(gt):
                involved.update(t if isinstance(t, tuple) else (t,))

        events: list[PulseEvent] = []
        labels = [""] * n_blocks
        for cg in compiled:
            events.extend(cg.schedule.events)
            for bi, lab in enumerate(cg.schedule.blocks):
                labels[bi] = (labels[bi] + "|" + lab).strip("|")
            # pad the tail with this gate's own qubits idling
            gate_qubits = {ev.qubit for ev in cg.schedule.events} & involved
            for b in range(cg.schedule.n_blocks, n_blocks):
                for q in sorted(gate_qubits):
                    events.extend(
                        _flip_events(
                            q, _pattern_for(g, q, patterns), selection.flip,
                            b * BLOCK_DURATION,
                        )
                    )
            if cg.target_unitary is not None:
                target = cg.target_unitary @ target
        for b in range(n_blocks):
            for q in g.qubits():
                if q not in involved:
                    events.extend(
                        _flip_events(
                            q, _pattern_for(g, q, patterns), selection.flip,
                            b * BLOCK_DURATION,
                        )
                    )
        pieces.append(
            Schedule(
                duration=n_blocks * BLOCK_DURATION,
                events=tuple(events),
                blocks=tuple(labels),
            )
        )

    sched = concat(pieces)
    return sched, (None if has_measure else target)


# ---------------------------------------------------------------------------
# circuit files
# ---------------------------------------------------------------------------

def parse_circuit(text: str) -> list[list[tuple]]:
    """One layer per line; gates separated by ';', e.g. 'CNOT 1 2 ; H 4'."""
    layers = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        layer = []
        for chunk in line.split(";"):
            tok = chunk.split()
            if not tok:
                continue
            name = tok[0].upper()
            if name not in GATE_ARITY:
                raise SchedulingError(f"line {ln}: unknown gate {name!r}")
            argc = GATE_ARITY[name]
            if len(tok) != argc + 1:
                raise SchedulingError(
                    f"line {ln}: {name} expects {argc} argument(s), got {len(tok) - 1}"
                )
            if name == "ZZ":
                layer.append((name, int(tok[1]), int(tok[2]), float(tok[3])))
            elif argc == 2:
                layer.append((name, int(tok[1]), int(tok[2])))
            else:
                layer.append((name, int(tok[1])))
        if layer:
            layers.append(layer)
    return layers


def audit_schedule(sched: Schedule, g: QubitGraph) -> list[str]:
    """Per-block pattern audit: every qubit pulsed, flip sets balanced.

    Returns a list of human-readable violations (empty when clean). Gate
    blocks are checked for presence of events only; their balance is
    certified by the corrected-rotation layout conditions instead.
    """
    problems = []
    for b in range(sched.n_blocks):
        t0, t1 = b * BLOCK_DURATION, (b + 1) * BLOCK_DURATION
        label = sched.blocks[b] if b < len(sched.blocks) else ""
        for q in g.qubits():
            evs = [
                e
                for e in sched.events
                if e.qubit == q and t0 - 1e-9 <= e.center < t1 - 1e-9
            ]
            if not evs:
                problems.append(f"block {b} ({label}): qubit {q} undriven")
                continue
            flips = sorted(e.center - t0 for e in evs if e.role == "flip")
            gates = [e for e in evs if e.role != "flip"]
            if gates:
                continue
            if len(flips) % 2 != 0:
                problems.append(
                    f"block {b} ({label}): qubit {q} has odd flip count"
                )
                continue
            # integral of the +-1 sign function over the block must vanish
            bounds = [0.0, *flips, BLOCK_DURATION]
            integral = sum(
                (bounds[i + 1] - bounds[i]) * (1 if i % 2 == 0 else -1)
                for i in range(len(bounds) - 1)
            )
            if abs(integral) > 1e-9:
                problems.append(
                    f"block {b} ({label}): qubit {q} pattern unbalanced "
                    f"(integral {integral:+.2f})"
                )
    return problems
