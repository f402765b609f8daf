import itertools

import numpy as np
import pytest

from qpiplab import poly_code as pc
from qpiplab import qas_poly as qp
from qpiplab import qsim
from qpiplab.galois import FieldPolynomial
from qpiplab.poly_code import SignedCode, SignKey
from qpiplab.qsim import PauliLabel, PureState

Q, D, M = 5, 1, 3


def random_logical(rng, q=Q):
    v = rng.normal(size=q) + 1j * rng.normal(size=q)
    return PureState(v / np.linalg.norm(v), q, 1)


def test_zero_pad_reduces_to_code(rng):
    key = qp.PolyAuthKey(SignKey((1, -1, 1)), (0, 0, 0), (0, 0, 0))
    psi = random_logical(rng)
    enc = qp.poly_encode(psi, key, Q, D)
    plain = pc.encode_logical(SignedCode(Q, D, key.sign), psi)
    assert qsim.states_close(enc, plain, tol=1e-12)


def test_encode_decode_roundtrip_random_keys(rng):
    psi = random_logical(rng)
    for _ in range(100):
        key = qp.random_key(Q, D, rng)
        enc = qp.poly_encode(psi, key, Q, D)
        verdict, out = qp.poly_decode(enc, key, Q, D, rng)
        assert verdict == qp.VALID
        assert qsim.states_close(out, psi)


def test_two_pads_differ_by_known_pauli(rng):
    psi = random_logical(rng)
    sign = SignKey((1, 1, -1))
    k1 = qp.PolyAuthKey(sign, (1, 2, 0), (0, 4, 1))
    k2 = qp.PolyAuthKey(sign, (0, 0, 0), (0, 0, 0))
    e1 = qp.poly_encode(psi, k1, Q, D)
    e2 = qp.poly_encode(psi, k2, Q, D)
    relabel = qsim.apply_pauli(e2, qp.pad_label(k1, Q))
    assert qsim.states_close(e1, relabel, tol=1e-12)


def test_weight_one_attack_aborts_surely(rng):
    psi = PureState.basis(Q, [3])
    attack = qp.PolyAttack("pauli", pauli=PauliLabel((1, 0, 0), (0, 0, 0), Q))
    p, stderr = qp.estimate_poly_soundness(attack, Q, D, 200, rng, logical=psi)
    assert p == 0.0


def test_full_weight_matching_attack_fooling_bounded():
    f = FieldPolynomial([1, 1], Q)
    x = tuple(f(t).value for t in (1, 2, 3))
    p = qp.pauli_attack_fooling(x, (0, 0, 0), Q, D)
    assert 0 < p <= 0.5
    # all-plus key accepts this attack by construction
    assert qp.pauli_attack_accepts(SignedCode(Q, D, SignKey((1, 1, 1))), x, (0, 0, 0))


def test_weight_one_fooling_zero():
    assert qp.pauli_attack_fooling((1, 0, 0), (0, 0, 0), Q, D) == 0.0
    assert qp.pauli_attack_fooling((0, 0, 0), (0, 2, 0), Q, D) == 0.0


def test_exhaustive_x_attacks_bounded():
    for x in itertools.product(range(Q), repeat=M):
        if not any(x):
            continue
        assert qp.pauli_attack_fooling(x, (0, 0, 0), Q, D) <= 0.5


def test_exhaustive_z_attacks_bounded():
    for z in itertools.product(range(Q), repeat=M):
        if not any(z):
            continue
        assert qp.pauli_attack_fooling((0, 0, 0), z, Q, D) <= 0.5


def test_mixed_attacks_sample_bounded(rng):
    for _ in range(40):
        x = tuple(int(v) for v in rng.integers(0, Q, M))
        z = tuple(int(v) for v in rng.integers(0, Q, M))
        if not any(x) and not any(z):
            continue
        assert qp.pauli_attack_fooling(x, z, Q, D) <= 0.5


def test_mc_matches_exact_fooling(rng):
    f = FieldPolynomial([2, 1], Q)
    x = tuple(f(t).value for t in (1, 2, 3))
    exact = qp.pauli_attack_fooling(x, (0, 0, 0), Q, D)
    psi = PureState.basis(Q, [0])
    attack = qp.PolyAttack("pauli", pauli=PauliLabel(x, (0, 0, 0), Q))
    p, stderr = qp.estimate_poly_soundness(attack, Q, D, 3000, rng, logical=psi)
    assert abs(p - exact) <= 3 * stderr + 1e-12


def test_entangled_unitary_attack_bounded(rng):
    g = rng.normal(size=(Q**4, Q**4)) + 1j * rng.normal(size=(Q**4, Q**4))
    u, r = np.linalg.qr(g)
    u = u @ np.diag(np.diag(r) / np.abs(np.diag(r)))
    attack = qp.PolyAttack("unitary", matrix=u, env_qudits=1)
    p, stderr = qp.estimate_poly_soundness(attack, Q, D, 400, rng)
    assert p <= 0.5 + 3 * stderr + 1e-12


def test_prover_view_maximally_mixed(rng):
    code = SignedCode(Q, D, SignKey((1, -1, -1)))
    view = qp.prover_view(code, PureState.basis(Q, [2]))
    assert np.max(np.abs(view.matrix - np.eye(Q**M) / Q**M)) < 1e-9


def test_prover_view_input_independent(rng):
    code = SignedCode(Q, D, SignKey((-1, 1, 1)))
    v1 = qp.prover_view(code, PureState.basis(Q, [0]))
    v2 = qp.prover_view(code, random_logical(rng))
    assert qsim.trace_distance(
        qsim.DensityMatrix(v1.matrix, Q, M, validate=False),
        qsim.DensityMatrix(v2.matrix, Q, M, validate=False),
    ) < 1e-9


def test_clifford_view_maximally_mixed():
    view = qp.clifford_prover_view(2)
    assert np.max(np.abs(view - np.eye(4) / 4)) < 1e-9


def test_quadratic_attack_is_logical_phase_gate():
    for k in pc.all_sign_keys(M):
        code = SignedCode(Q, D, k)
        attack = qp.quadratic_phase_attack(code)
        w = qsim.omega(Q)
        for a in range(Q):
            enc = pc.encode_logical(code, PureState.basis(Q, [a]))
            out = attack @ enc.amplitudes
            assert np.allclose(out, w ** (a * a) * enc.amplitudes, atol=1e-9)


def test_pad_necessity_witness():
    wit = qp.pad_necessity_witness(Q, D)
    assert wit["p_fool_no_pad"] > 0.5
    assert abs(wit["p_fool_no_pad"] - (1 - wit["expected_fidelity"])) < 1e-9


def test_pad_restores_security_against_quadratic_attack(rng):
    wit = qp.pad_necessity_witness(Q, D)
    attack = qp.PolyAttack("unitary", matrix=wit["attack"])
    p_nopad, se0 = qp.estimate_poly_soundness(
        attack, Q, D, 400, rng, logical=wit["input"], use_pad=False
    )
    p_pad, se1 = qp.estimate_poly_soundness(
        attack, Q, D, 2000, rng, logical=wit["input"], use_pad=True
    )
    assert p_nopad > 0.5
    assert p_pad <= 0.5 + 3 * se1 + 1e-12


def test_concat_roundtrip(rng):
    keys = qp.random_concat_keys(Q, D, 3, rng)
    logicals = [random_logical(rng) for _ in range(3)]
    enc = qp.concat_encode(logicals, keys, Q, D)
    verdict, joint = qp.concat_decode(enc, keys, Q, D, rng)
    assert verdict == qp.VALID
    expected = logicals[0].tensor(logicals[1]).tensor(logicals[2])
    assert qsim.states_close(joint, expected)


def test_concat_blockwise_pauli_fooling_bounded():
    f = FieldPolynomial([3, 1], Q)
    fit_x = tuple(f(t).value for t in (1, 2, 3))
    cases = [
        [(fit_x, (0, 0, 0))],
        [(fit_x, (0, 0, 0)), ((0, 0, 0), (0, 0, 0))],
        [(fit_x, (0, 0, 0)), (fit_x, (0, 0, 0)), ((1, 1, 1), (0, 0, 0))],
    ]
    for attacks in cases:
        p = qp.concat_pauli_fooling_exact(attacks, Q, D)
        assert p <= 0.5


def test_concat_fooling_rejects_identity():
    with pytest.raises(ValueError):
        qp.concat_pauli_fooling_exact([((0, 0, 0), (0, 0, 0))], Q, D)


def test_key_validation():
    with pytest.raises(ValueError):
        qp.PolyAuthKey(SignKey((1, 1, 1)), (0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        qp.pauli_attack_fooling((0, 0, 0), (0, 0, 0), Q, D)
