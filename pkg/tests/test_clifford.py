import itertools

import numpy as np
import pytest

from qpiplab import clifford as cl
from qpiplab.qsim import PauliLabel


def all_paulis(n):
    out = []
    for x in itertools.product([0, 1], repeat=n):
        for z in itertools.product([0, 1], repeat=n):
            out.append(PauliLabel(x, z, 2))
    return out


def test_enumeration_counts():
    assert len(cl.enumerate_cliffords(1)) == 24
    assert len(cl.enumerate_cliffords(2)) == 11520


def test_enumerate_rejects_large_n():
    with pytest.raises(ValueError):
        cl.enumerate_cliffords(3)


def test_identity_tableau_to_unitary():
    u = cl.tableau_to_unitary(cl.identity_tableau(2))
    assert np.allclose(u, np.eye(4), atol=1e-12)


def test_h_tableau_to_unitary():
    h = cl.gate_tableau("H", 1, (0,))
    u = cl.tableau_to_unitary(h)
    target = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    # match up to global phase
    k = u[np.abs(u) > 1e-9].flat[0] / target[np.abs(u) > 1e-9].flat[0]
    assert np.allclose(u, k * target, atol=1e-9)


def test_h_conjugates_z_to_x():
    h = cl.gate_tableau("H", 1, (0,))
    out = cl.conjugate_pauli(h, PauliLabel((0,), (1,), 2))
    assert out.x == (1,) and out.z == (0,) and out.phase_exponent == 0


def test_k_conjugates_xz_to_x_up_to_phase():
    k = cl.gate_tableau("K", 1, (0,))
    out = cl.conjugate_pauli(k, PauliLabel((1,), (1,), 2))
    assert out.x == (1,) and out.z == (0,)


def test_cnot_conjugates_xx_to_xi():
    cnot = cl.gate_tableau("CNOT", 2, (0, 1))
    out = cl.conjugate_pauli(cnot, PauliLabel((1, 1), (0, 0), 2))
    assert out.x == (1, 0) and out.z == (0, 0) and out.phase_exponent == 0


def test_conjugation_matches_dense_exhaustive_n1():
    for tab in cl.enumerate_cliffords(1):
        u = cl.tableau_to_unitary(tab)
        for p in all_paulis(1):
            if p.is_identity():
                continue
            expected = u.conj().T @ p.matrix() @ u
            got = cl.conjugate_pauli(tab, p).matrix()
            assert np.allclose(expected, got, atol=1e-9)


def test_conjugation_matches_dense_random_n2(rng):
    paulis = all_paulis(2)
    for _ in range(25):
        tab = cl.random_clifford(2, rng)
        u = cl.tableau_to_unitary(tab)
        for p in paulis:
            expected = u.conj().T @ p.matrix() @ u
            got = cl.conjugate_pauli(tab, p).matrix()
            assert np.allclose(expected, got, atol=1e-9)


def test_enumerated_unitaries_match_tableaus():
    tabs, mats = cl.enumerate_clifford_unitaries(1)
    x = PauliLabel((1,), (0,), 2)
    for tab, u in zip(tabs, mats):
        expected = u @ x.matrix() @ u.conj().T
        got = cl.conjugate_pauli_encode(tab, x).matrix()
        assert np.allclose(expected, got, atol=1e-9)


def test_compose_matches_dense(rng):
    for _ in range(10):
        a = cl.random_clifford(2, rng)
        b = cl.random_clifford(2, rng)
        ua, ub = cl.tableau_to_unitary(a), cl.tableau_to_unitary(b)
        uc = cl.tableau_to_unitary(a.compose(b))
        prod = ua @ ub
        # compare conjugation action (global phases differ)
        for p in all_paulis(2)[:6]:
            assert np.allclose(
                uc @ p.matrix() @ uc.conj().T,
                prod @ p.matrix() @ prod.conj().T,
                atol=1e-9,
            )


def test_inverse_roundtrip(rng):
    for n in (1, 2, 3):
        for _ in range(10):
            t = cl.random_clifford(n, rng)
            comp = t.compose(t.inverse())
            assert comp.key() == cl.identity_tableau(n).key()


def test_group_axioms_on_samples(rng):
    a, b, c = (cl.random_clifford(2, rng) for _ in range(3))
    assert a.compose(b).compose(c).key() == a.compose(b.compose(c)).key()


def test_sampled_element_permutes_paulis(rng):
    tab = cl.random_clifford(2, rng)
    seen = set()
    for p in all_paulis(2):
        if p.is_identity():
            continue
        out = cl.conjugate_pauli(tab, p)
        seen.add((out.x, out.z))
    assert len(seen) == 15 and (tuple([0, 0]), tuple([0, 0])) not in seen


def test_random_clifford_uniform_n1():
    ref = {t.key(): i for i, t in enumerate(cl.enumerate_cliffords(1))}
    rng = np.random.default_rng(42)
    trials = 100_000
    counts = np.zeros(24)
    for _ in range(trials):
        counts[ref[cl.random_clifford(1, rng).key()]] += 1
    p = 1 / 24
    sigma = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(counts - trials * p) <= 3 * sigma)


def test_random_clifford_validity_various_n(rng):
    for n in (1, 2, 3, 5):
        t = cl.random_clifford(n, rng)
        assert t.is_valid()


def test_key_string_roundtrip(rng):
    for n in (1, 2, 3):
        t = cl.random_clifford(n, rng)
        s = cl.tableau_to_key_string(t)
        assert set(s) <= {"0", "1"}
        assert cl.tableau_from_key_string(s, n).key() == t.key()


def test_key_string_rejects_garbage():
    with pytest.raises(ValueError):
        cl.tableau_from_key_string("0" * 10, 1)


def test_dense_export_rejects_large(rng):
    t = cl.random_clifford(4, rng)
    with pytest.raises(ValueError):
        cl.tableau_to_unitary(t)


def test_mix_lemma_exact_multiset():
    """Conjugating a fixed non-identity Pauli over the whole group hits every
    non-identity Pauli label equally often."""
    for n in (1, 2):
        tabs = cl.enumerate_cliffords(n)
        expected = len(tabs) // (4**n - 1)
        for p in all_paulis(n):
            if p.is_identity():
                continue
            counts = {}
            for t in tabs:
                out = cl.conjugate_pauli(t, p)
                key = (out.x, out.z)
                counts[key] = counts.get(key, 0) + 1
            assert len(counts) == 4**n - 1
            assert set(counts.values()) == {expected}


def test_cliftw_zero_sum_n1(rng):
    """Sum over the group of C^dag P C rho C^dag P' C vanishes for P != P'."""
    tabs, mats = cl.enumerate_clifford_unitaries(1)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    rho = np.outer(v, v.conj())
    rho /= np.trace(rho)
    paulis = all_paulis(1)
    for p, p2 in itertools.product(paulis, paulis):
        if (p.x, p.z) == (p2.x, p2.z):
            continue
        acc = np.zeros((2, 2), dtype=complex)
        for u in mats:
            cp = u.conj().T @ p.matrix() @ u
            cp2 = u.conj().T @ p2.matrix() @ u
            acc += cp @ rho @ cp2
        assert np.max(np.abs(acc)) < 1e-9


def test_decompose_lemma_sum_to_one(rng):
    """For unitary U = sum_P P (x) U_P, the U_P blocks satisfy
    sum_P Tr(U_P rho U_P^dag) = 1 for any density matrix rho."""
    dim_a, dim_b = 4, 2
    for _ in range(20):
        g = rng.normal(size=(dim_a * dim_b, dim_a * dim_b)) + 1j * rng.normal(
            size=(dim_a * dim_b, dim_a * dim_b)
        )
        u, _ = np.linalg.qr(g)
        v = rng.normal(size=dim_b) + 1j * rng.normal(size=dim_b)
        rho = np.outer(v, v.conj())
        rho /= np.trace(rho)
        total = 0.0
        for p in all_paulis(2):
            pm = p.matrix()
            up = np.einsum(
                "ij,ikjl->kl",
                pm.conj(),
                u.reshape(dim_a, dim_b, dim_a, dim_b),
            ) / dim_a
            total += np.trace(up @ rho @ up.conj().T).real
        assert abs(total - 1) < 1e-9
