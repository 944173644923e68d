import numpy as np
import pytest
from hypothesis import given, strategies as st

from isingdd import lattice


def test_chain_structure():
    g = lattice.build_chain(4, 0.1)
    assert [e[:2] for e in g.edges] == [(1, 2), (2, 3), (3, 4)]
    assert g.sublattice == ("A", "B", "A", "B")
    assert g.coupling(2, 3) == pytest.approx(0.1)
    assert g.coupling(3, 2) == pytest.approx(0.1)
    assert g.coupling(1, 3) == 0.0


def test_single_vertex_chain():
    g = lattice.build_chain(1, 0.5)
    assert g.edges == ()
    assert g.sublattice == ("A",)


def test_five_qubit_chain_labels():
    g = lattice.build_chain(5, 0.2)
    assert len(g.edges) == 4
    assert g.sublattice == ("A", "B", "A", "B", "A")


def test_zero_length_chain_rejected():
    with pytest.raises(ValueError):
        lattice.build_chain(0, 0.1)


def test_bipartite_violation_rejected():
    # triangle: odd cycle cannot be 2-coloured
    with pytest.raises(ValueError):
        lattice.QubitGraph(
            n_qubits=3,
            edges=((1, 2, 0.1), (2, 3, 0.1), (1, 3, 0.1)),
            sublattice=("A", "B", "A"),
        )


def test_validate_parallel_set_ok():
    g = lattice.build_chain(6, 0.1)
    assert lattice.validate_parallel_set(g, [(1, 2), (4, 5)]) == []


def test_validate_parallel_set_violation():
    g = lattice.build_chain(6, 0.1)
    assert lattice.validate_parallel_set(g, [(1, 2), (3, 4)]) == [(2, 3)]


def test_validate_parallel_singles_non_neighbouring():
    g = lattice.build_chain(5, 0.1)
    assert lattice.validate_parallel_set(g, [1, 3, 5]) == []
    assert lattice.validate_parallel_set(g, [1, 2]) == [(1, 2)]


def test_validate_parallel_unknown_qubit():
    g = lattice.build_chain(3, 0.1)
    with pytest.raises(ValueError):
        lattice.validate_parallel_set(g, [7])


@given(st.integers(min_value=2, max_value=8), st.randoms())
def test_validate_parallel_symmetric_under_group_relabeling(n, rnd):
    g = lattice.build_chain(n, 0.1)
    pairs = [(i, i + 1) for i in range(1, n) if i % 2 == 1]
    shuffled = list(pairs)
    rnd.shuffle(shuffled)
    assert sorted(lattice.validate_parallel_set(g, pairs)) == sorted(
        lattice.validate_parallel_set(g, shuffled)
    )


def test_draw_shifts_zero_rms():
    g = lattice.build_chain(4, 0.1)
    s = lattice.draw_shifts(g, 0.0, seed=1)
    assert s.shifts == (0.0, 0.0, 0.0, 0.0)


def test_draw_shifts_statistics():
    g = lattice.build_chain(1, 0.0)
    rms = 0.1
    draws = np.array(
        [lattice.draw_shifts(g, rms, seed=k)[1] for k in range(10_000)]
    )
    sample_rms = np.sqrt(np.mean(draws**2))
    assert 0.097 <= sample_rms <= 0.103


def test_draw_shifts_deterministic():
    g = lattice.build_chain(4, 0.1)
    assert lattice.draw_shifts(g, 0.2, seed=7) == lattice.draw_shifts(g, 0.2, seed=7)


def test_graph_file_roundtrip(tmp_path):
    g = lattice.build_chain(5, 0.25)
    path = tmp_path / "chain.graph"
    lattice.save_graph(g, path)
    g2 = lattice.load_graph(str(path))
    assert g2 == g


def test_chain_shorthand():
    g = lattice.load_graph("chain:4:0.5")
    assert g.n_qubits == 4
    assert g.coupling(1, 2) == 0.5
