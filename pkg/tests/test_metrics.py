import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isingdd import dynamics, metrics


def test_gate_infidelity_identity():
    u = dynamics.rotation("x", 0.7)
    assert metrics.gate_infidelity(u, u) == pytest.approx(0.0, abs=1e-14)


def test_gate_infidelity_phase_invariance():
    u = dynamics.rotation("y", 1.1)
    for theta in (0.3, 1.0, np.pi):
        assert metrics.gate_infidelity(np.exp(1j * theta) * u, u) == pytest.approx(
            0.0, abs=1e-12
        )


@pytest.mark.parametrize("eps", [1e-3, 0.1, 0.5])
def test_gate_infidelity_z_error_closed_form(eps):
    # U_t^dag U_s = exp(-i eps sigma_z/2): infidelity sin^2(eps/2)
    u_t = dynamics.rotation("x", 0.4)
    u_s = u_t @ dynamics.rotation("z", eps)
    assert metrics.gate_infidelity(u_s, u_t) == pytest.approx(
        np.sin(eps / 2) ** 2, rel=1e-10
    )


def test_gate_infidelity_rejects_nonunitary():
    with pytest.raises(ValueError):
        metrics.gate_infidelity(np.eye(2) * 1.1, np.eye(2))


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
@settings(max_examples=30)
def test_gate_infidelity_basis_invariance(a, b):
    u = dynamics.rotation("x", a)
    v = dynamics.rotation("y", b)
    w = dynamics.rotation("z", 0.321)  # simultaneous relabeling
    f1 = metrics.gate_infidelity(u, v)
    f2 = metrics.gate_infidelity(w @ u @ w.conj().T, w @ v @ w.conj().T)
    assert f1 == pytest.approx(f2, abs=1e-12)
    assert 0.0 <= f1 <= 1.0


def test_state_fidelity_cases():
    e0 = np.array([1, 0], dtype=complex)
    e1 = np.array([0, 1], dtype=complex)
    plus = (e0 + e1) / np.sqrt(2)
    assert metrics.state_fidelity(e0, e0) == pytest.approx(1.0)
    assert metrics.state_fidelity(e0, e1) == pytest.approx(0.0)
    assert metrics.state_fidelity(plus, e0) == pytest.approx(0.5)


def test_slope_estimate_pure_power_law():
    xs = np.logspace(-3, 0, 12)
    ys = 2.7 * xs**6
    slopes = metrics.slope_estimate(xs, ys)
    assert np.allclose(slopes, 6.0, atol=1e-6)


def test_slope_estimate_saturating_curve():
    # floor + power law: slope ~0 at small x, ~6 at large x
    xs = np.logspace(-3, 0, 20)
    ys = 1e-9 + 0.5 * xs**6
    slopes = metrics.slope_estimate(xs, ys)
    assert abs(slopes[0]) < 0.1
    assert slopes[-1] == pytest.approx(6.0, abs=0.1)


def test_slope_estimate_rejects_single_point():
    with pytest.raises(ValueError):
        metrics.slope_estimate(np.array([1.0]), np.array([2.0]))


def test_slope_estimate_rejects_nonpositive():
    with pytest.raises(ValueError):
        metrics.slope_estimate(np.array([1.0, 2.0]), np.array([0.0, 1.0]))


def test_phase_adjusted_distance():
    u = dynamics.rotation("x", 0.3)
    assert metrics.phase_adjusted_distance(np.exp(0.77j) * u, u) == pytest.approx(
        0.0, abs=1e-12
    )
