"""Pulse-level simulation of decoupling-protected gates on Ising-coupled qubits."""

from .lattice import (
    QubitGraph,
    ShiftAssignment,
    build_chain,
    draw_shifts,
    load_graph,
    save_graph,
    validate_parallel_set,
)
from .metrics import (
    GateBenchResult,
    fit_slope,
    gate_infidelity,
    phase_adjusted_distance,
    run_gate_bench,
    slope_estimate,
    state_fidelity,
)
from .pulses import (
    OptimizationError,
    OrderDefect,
    PulseShape,
    amplitude,
    optimize_shape,
    order_defect,
    pulse_area,
    single_qubit_propagator,
)

__version__ = "0.1.0"
