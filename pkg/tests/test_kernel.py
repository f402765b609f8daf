"""The sparse kernel is cross-validated against the dense simulator."""

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from qpiplab import qsim
from qpiplab.kernel import SparseKernel
from qpiplab.qsim import PureState


def kernel_vs_dense(q, n, ops, seed):
    """Run the same op list on both backends, compare final states."""
    k = SparseKernel(q)
    wires = k.new_wires([0] * n)
    dense = PureState.basis(q, [0] * n)
    rng = np.random.default_rng(seed)
    for op in ops:
        kind = op[0]
        if kind == "x":
            _, w, p = op
            k.x_power(wires[w], p)
            dense = qsim.apply_pauli(
                dense,
                qsim.PauliLabel(
                    tuple(p if i == w else 0 for i in range(n)), (0,) * n, q
                ),
            )
        elif kind == "z":
            _, w, p = op
            k.z_power(wires[w], p)
            dense = qsim.apply_pauli(
                dense,
                qsim.PauliLabel(
                    (0,) * n, tuple(p if i == w else 0 for i in range(n)), q
                ),
            )
        elif kind == "sum":
            _, c, t, p = op
            k.sum_(wires[c], wires[t], p)
            for _ in range(p % q):
                dense = qsim.apply_sum(dense, c, t)
        elif kind == "cz":
            _, a, b, wgt = op
            k.cz(wires[a], wires[b], wgt)
            w_ = qsim.omega(q)
            cz = np.diag(
                [w_ ** (wgt * x * y % q) for x in range(q) for y in range(q)]
            )
            dense = qsim.apply_unitary(dense, cz, [a, b])
        elif kind == "f":
            _, w, r, dag = op
            k.fourier(wires[w], r, dagger=dag)
            mat = qsim.fourier_matrix(q, r)
            dense = qsim.apply_unitary(dense, mat.conj().T if dag else mat, [w])
        elif kind == "toff":
            _, a, b, c = op
            k.toffoli(wires[a], wires[b], wires[c])
            dense = qsim.apply_toffoli(dense, a, b, c)
    got = k.dense_state(wires)
    assert qsim.states_close(got, dense, tol=1e-9)


OPS = st.lists(
    st.one_of(
        st.tuples(st.just("x"), st.integers(0, 3), st.integers(0, 4)),
        st.tuples(st.just("z"), st.integers(0, 3), st.integers(0, 4)),
        st.tuples(
            st.just("sum"), st.integers(0, 3), st.integers(0, 3), st.integers(0, 4)
        ).filter(lambda t: t[1] != t[2]),
        st.tuples(
            st.just("cz"), st.integers(0, 3), st.integers(0, 3), st.integers(1, 4)
        ).filter(lambda t: t[1] != t[2]),
        st.tuples(
            st.just("f"), st.integers(0, 3), st.integers(1, 4), st.booleans()
        ),
        st.tuples(
            st.just("toff"), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)
        ).filter(lambda t: len({t[1], t[2], t[3]}) == 3),
    ),
    min_size=1,
    max_size=12,
)


@given(OPS, st.integers(0, 2**31))
@settings(max_examples=40)
def test_random_circuits_match_dense(ops, seed):
    kernel_vs_dense(5, 4, ops, seed)


def test_generic_unitary_matches_dense(rng):
    q, n = 5, 3
    k = SparseKernel(q)
    wires = k.new_wires([1, 2, 3])
    dense = PureState.basis(q, [1, 2, 3])
    g = rng.normal(size=(q * q, q * q)) + 1j * rng.normal(size=(q * q, q * q))
    u, r = np.linalg.qr(g)
    u = u @ np.diag(np.diag(r) / np.abs(np.diag(r)))
    k.unitary([wires[2], wires[0]], u)
    dense = qsim.apply_unitary(dense, u, [2, 0])
    assert qsim.states_close(k.dense_state(wires), dense, tol=1e-9)


def test_blob_merge_on_entangling_gate():
    k = SparseKernel(5)
    a = k.new_wires([1])
    b = k.new_wires([2])
    assert len(k.blobs) == 2
    k.sum_(a[0], b[0])
    assert len(k.blobs) == 1
    assert qsim.states_close(k.dense_state(a + b), PureState.basis(5, [1, 3]))


def test_measure_collapses_and_frees():
    k = SparseKernel(5)
    wires = k.new_wires([0, 0])
    k.fourier(wires[0], 1)
    k.sum_(wires[0], wires[1])
    rng = np.random.default_rng(3)
    outcome, p = k.measure([wires[0]], rng)
    assert abs(p - 1 / 5) < 1e-12
    assert wires[0] not in k.live_wires()
    got = k.dense_state([wires[1]])
    assert qsim.states_close(got, PureState.basis(5, [outcome[0]]))


def test_measure_multiwire_outcome_distribution():
    q = 5
    counts = np.zeros(q)
    for seed in range(300):
        k = SparseKernel(q)
        wires = k.new_wires([0, 0])
        k.fourier(wires[0], 1)
        k.sum_(wires[0], wires[1])
        rng = np.random.default_rng(seed)
        outcome, _ = k.measure(wires, rng)
        assert outcome[0] == outcome[1]
        counts[outcome[0]] += 1
    assert counts.min() > 20  # roughly uniform


def test_seeded_measurements_replay():
    outs = []
    for _ in range(2):
        k = SparseKernel(5)
        wires = k.new_wires([0, 0, 0])
        k.fourier(wires[0], 2)
        k.sum_(wires[0], wires[1], 3)
        rng = np.random.default_rng(77)
        outs.append(k.measure(wires, rng)[0])
    assert outs[0] == outs[1]


def test_reduced_density_entangled():
    q = 5
    k = SparseKernel(q)
    wires = k.new_wires([0, 0])
    k.fourier(wires[0], 1)
    k.sum_(wires[0], wires[1])
    rho = k.reduced_density([wires[1]])
    assert np.allclose(rho, np.eye(q) / q, atol=1e-12)


def test_reduced_density_across_blobs():
    q = 5
    k = SparseKernel(q)
    a = k.new_wires([2])
    b = k.new_wires([3])
    rho = k.reduced_density([a[0], b[0]])
    expected = np.zeros((25, 25))
    expected[2 * 5 + 3, 2 * 5 + 3] = 1.0
    assert np.allclose(rho, expected, atol=1e-12)


def test_dense_export_rejects_entangled_subset():
    k = SparseKernel(5)
    wires = k.new_wires([0, 0])
    k.fourier(wires[0], 1)
    k.sum_(wires[0], wires[1])
    with pytest.raises(ValueError):
        k.dense_state([wires[0]])


def test_sparse_state_export_roundtrip():
    k = SparseKernel(5)
    wires = k.new_wires([0])
    k.fourier(wires[0], 1)
    idx, amp = k.sparse_state(wires)
    assert list(idx) == [0, 1, 2, 3, 4]
    assert np.allclose(amp, 1 / np.sqrt(5))


def test_support_ceiling_enforced():
    k = SparseKernel(5, max_support=20)
    wires = k.new_wires([0, 0])
    k.fourier(wires[0], 1)  # 5 terms
    with pytest.raises(MemoryError):
        k.fourier(wires[1], 1)  # transient 25 > 20


def test_depolarize_identity_at_zero(rng):
    k = SparseKernel(5)
    wires = k.new_wires([1, 2])
    k.depolarize(wires, 0.0, rng)
    assert qsim.states_close(k.dense_state(wires), PureState.basis(5, [1, 2]))


def test_qubit_mode_for_clifford_protocol(rng):
    from qpiplab import clifford as cl

    k = SparseKernel(2)
    wires = k.new_wires([0, 0])
    tab = cl.random_clifford(2, rng)
    u = cl.dense_unitary(tab)
    k.unitary(wires, u)
    dense = qsim.apply_unitary(PureState.basis(2, [0, 0]), u, [0, 1])
    assert qsim.states_close(k.dense_state(wires), dense, tol=1e-9)
