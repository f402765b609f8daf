"""Authentication of qubit registers by random Clifford rotation.

Encoding appends d |0> qubits to an m-qubit message and applies a secret
uniformly random Clifford on n = m + d qubits; decoding undoes it and
accepts only if every appended qubit measures 0.  Averaged over the key,
any fixed attack collapses to the mixing channel

    M_s(rho) = s*rho + (1-s)/(4^n - 1) * sum_{P != I} P rho P^dag

which this module also computes directly from the attack's Pauli
decomposition as an independent reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import clifford as cl
from . import qsim
from .qsim import PauliLabel, PureState

VALID = "VALID"
ABORT = "ABORT"


@dataclass(frozen=True)
class CliffordAuthKey:
    tableau: cl.CliffordTableau
    m: int
    d: int

    def __post_init__(self):
        if self.tableau.n != self.m + self.d:
            raise ValueError("tableau size must be m + d")

    @property
    def n(self) -> int:
        return self.m + self.d


def random_key(m: int, d: int, rng: np.random.Generator) -> CliffordAuthKey:
    return CliffordAuthKey(cl.random_clifford(m + d, rng), m, d)


@dataclass(frozen=True)
class AttackChannel:
    """Adversarial intervention on a transmitted register.

    kind 'none': identity.
    kind 'pauli': fixed Pauli given by `pauli`.
    kind 'unitary': dense unitary on register (+ env_qubits ancillas in |0>),
    acting with the register wires first.
    """

    kind: str
    pauli: Optional[PauliLabel] = None
    matrix: Optional[np.ndarray] = None
    env_qubits: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "pauli", "unitary"):
            raise ValueError(f"unknown attack kind {self.kind}")
        if self.kind == "pauli" and self.pauli is None:
            raise ValueError("pauli attack needs a PauliLabel")
        if self.kind == "unitary":
            if self.matrix is None:
                raise ValueError("unitary attack needs a matrix")
            if self.env_qubits > 2:
                raise ValueError("environment capped at 2 qubits")


def no_attack() -> AttackChannel:
    return AttackChannel("none")


def clifford_encode(message: PureState, key: CliffordAuthKey) -> PureState:
    """C_k (|psi> (x) |0>^d)."""
    if message.q != 2 or message.n != key.m:
        raise ValueError("message must be an m-qubit state")
    padded = message.tensor(PureState.basis(2, [0] * key.d))
    u = cl.dense_unitary(key.tableau)
    return qsim.apply_unitary(padded, u, list(range(key.n)))


def clifford_decode(
    received: PureState, key: CliffordAuthKey, rng: np.random.Generator
) -> tuple[str, Optional[PureState]]:
    """Apply C_k^dag, measure the d trailing qubits; valid iff all are 0.

    The received state may carry extra wires beyond the register (an
    adversary's environment); the register is assumed to occupy wires
    0..n-1 and the message is returned as the reduced register content.
    """
    n = key.n
    if received.q != 2 or received.n < n:
        raise ValueError("received state does not contain the register")
    u = cl.dense_unitary(key.tableau)
    state = qsim.apply_unitary(received, u.conj().T, list(range(n)))
    anc = list(range(key.m, n))
    outcome, collapsed, _ = qsim.measure_standard(state, anc, rng)
    if any(outcome):
        return ABORT, None
    return VALID, qsim.slice_wires(collapsed, {w: 0 for w in anc})


def _apply_attack(state: PureState, attack: AttackChannel) -> PureState:
    if attack.kind == "none":
        return state
    if attack.kind == "pauli":
        p = attack.pauli
        if p.n < state.n:  # pad with identity on any extra wires
            p = PauliLabel(
                p.x + (0,) * (state.n - p.n), p.z + (0,) * (state.n - p.n), 2, p.phase_exponent
            )
        return qsim.apply_pauli(state, p)
    if attack.env_qubits:
        state = state.tensor(PureState.basis(2, [0] * attack.env_qubits))
    k = int(np.log2(attack.matrix.shape[0]))
    return qsim.apply_unitary(state, attack.matrix, list(range(k)))


def wrongness(message_state: PureState, intended: PureState, extra_wires: int = 0) -> float:
    """Weight of the decoded message outside the intended pure state."""
    if extra_wires:
        rho = qsim.reduced_density(message_state, list(range(intended.n)))
        fid = float(np.real(intended.amplitudes.conj() @ rho.matrix @ intended.amplitudes))
    else:
        fid = qsim.overlap(intended, message_state) ** 2
    return max(0.0, 1.0 - fid)


def estimate_clifford_soundness(
    attack: AttackChannel,
    m: int,
    d: int,
    trials: int,
    rng: np.random.Generator,
    message: Optional[PureState] = None,
) -> tuple[float, float]:
    """Monte Carlo estimate of P(valid and wrong) over random keys."""
    if trials < 1:
        raise ValueError("need at least one trial")
    psi = message if message is not None else PureState.basis(2, [0] * m)
    vals = np.zeros(trials)
    for t in range(trials):
        key = random_key(m, d, rng)
        sent = clifford_encode(psi, key)
        attacked = _apply_attack(sent, attack)
        verdict, decoded = clifford_decode(attacked, key, rng)
        if verdict == VALID:
            vals[t] = wrongness(decoded, psi, extra_wires=decoded.n - m)
    p = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return p, stderr


def exact_twirl_outcome(
    attack: AttackChannel, m: int, d: int, message: Optional[PureState] = None
) -> dict:
    """Exact average over the full Clifford group (n = m + d <= 2).

    Returns probabilities of (valid and wrong), (valid and correct), abort,
    plus the key-averaged decoded register density matrix conditioned on
    nothing (pre-measurement trace over environment).
    """
    n = m + d
    if n > 2:
        raise ValueError("exact enumeration limited to n <= 2")
    psi = message if message is not None else PureState.basis(2, [0] * m)
    rho_in = psi.tensor(PureState.basis(2, [0] * d))
    tabs, mats = cl.enumerate_clifford_unitaries(n)
    dim = 2**n

    if attack.kind == "none":
        attack_mat = np.eye(dim, dtype=complex)
        env = 0
    elif attack.kind == "pauli":
        attack_mat = attack.pauli.matrix()
        env = 0
    else:
        attack_mat = attack.matrix
        env = attack.env_qubits

    env_dim = 2**env
    full_in = np.kron(rho_in.amplitudes, _env_zero(env_dim))
    # stack conjugated attacks: for each key C, V (C (x) I_E)
    cs = np.array([np.kron(u, np.eye(env_dim)) for u in mats])
    pre = np.einsum("kij,j->ki", cs, full_in)  # encode
    post = np.einsum("ij,kj->ki", attack_mat, pre)  # attack
    dec = np.einsum("kji,kj->ki", cs.conj(), post)  # decode (C^dag)
    # per-key register density, env traced out
    dec = dec.reshape(len(mats), dim, env_dim)
    rho_bob = np.einsum("kie,kje->ij", dec, dec.conj()) / len(mats)

    # valid branch: ancilla projector onto |0...0>
    anc_proj = np.zeros((dim, dim))
    md = 2**m
    for i in range(md):
        anc_proj[i * 2**d, i * 2**d] = 1.0
    msg_proj = np.outer(psi.amplitudes, psi.amplitudes.conj())
    lift = np.kron(msg_proj, np.eye(2**d))
    p_valid = float(np.real(np.trace(anc_proj @ rho_bob)))
    p_valid_correct = float(np.real(np.trace(anc_proj @ lift @ anc_proj @ rho_bob)))
    return {
        "p_valid_wrong": p_valid - p_valid_correct,
        "p_valid_correct": p_valid_correct,
        "p_abort": 1.0 - p_valid,
        "rho_bob": rho_bob,
    }


def _env_zero(env_dim: int) -> np.ndarray:
    v = np.zeros(env_dim)
    v[0] = 1.0
    return v


def pauli_basis_components(u: np.ndarray, n: int, env_dim: int) -> dict:
    """Blocks U_P of U = sum_P P (x) U_P via Pauli-basis projection."""
    dim = 2**n
    blocks = {}
    ur = u.reshape(dim, env_dim, dim, env_dim)
    import itertools

    for x in itertools.product([0, 1], repeat=n):
        for z in itertools.product([0, 1], repeat=n):
            p = PauliLabel(x, z, 2)
            blocks[(x, z)] = np.einsum("ij,ikjl->kl", p.matrix().conj(), ur) / dim
    return blocks


def twirl_reference_channel(
    attack: AttackChannel, m: int, d: int
) -> tuple[float, np.ndarray]:
    """Mixing parameter s and the predicted key-averaged register state.

    s = Tr(U_I^dag U_I rho_E) from the attack's Pauli decomposition; the
    prediction is M_s applied to |psi0><psi0| with psi0 the padded message.
    This route never touches the Clifford enumeration, so it can serve as
    an independent check of the simulated average.
    """
    n = m + d
    dim = 2**n
    if attack.kind == "none":
        u = np.eye(dim, dtype=complex)
        env_dim = 1
    elif attack.kind == "pauli":
        u = attack.pauli.matrix()
        env_dim = 1
    else:
        u = attack.matrix
        env_dim = 2**attack.env_qubits
    blocks = pauli_basis_components(u, n, env_dim)
    rho_env = np.outer(_env_zero(env_dim), _env_zero(env_dim))
    u_id = blocks[((0,) * n, (0,) * n)]
    s = float(np.real(np.trace(u_id.conj().T @ u_id @ rho_env)))
    return s, _mixing_channel_matrix(s, n)


def _mixing_channel_matrix(s: float, n: int) -> np.ndarray:
    """Process matrix is implicit; return a function-free representation:
    callers apply M_s via apply_mixing."""
    return np.array([s, n], dtype=float)


def apply_mixing(s_and_n: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """M_s(rho) = s rho + (1-s)/(4^n-1) sum_{P != I} P rho P^dag."""
    s, n = float(s_and_n[0]), int(s_and_n[1])
    import itertools

    acc = np.zeros_like(rho)
    for x in itertools.product([0, 1], repeat=n):
        for z in itertools.product([0, 1], repeat=n):
            if not any(x) and not any(z):
                continue
            p = PauliLabel(x, z, 2).matrix()
            acc += p @ rho @ p.conj().T
    return s * rho + (1 - s) / (4**n - 1) * acc


# Concatenated scheme: independent keys per block, valid iff every block is.


def concat_encode(
    messages: Sequence[PureState], keys: Sequence[CliffordAuthKey]
) -> PureState:
    if len(messages) != len(keys):
        raise ValueError("one key per block")
    out = None
    for msg, key in zip(messages, keys):
        enc = clifford_encode(msg, key)
        out = enc if out is None else out.tensor(enc)
    return out


def concat_decode(
    state: PureState,
    keys: Sequence[CliffordAuthKey],
    rng: np.random.Generator,
) -> tuple[str, Optional[PureState]]:
    """Blockwise decode; valid iff every block is valid.

    On success returns the joint message state with all ancillas stripped.
    """
    offset = 0
    current = state
    for key in keys:
        n = key.n
        u = cl.dense_unitary(key.tableau)
        current = qsim.apply_unitary(current, u.conj().T, list(range(offset, offset + n)))
        anc = list(range(offset + key.m, offset + n))
        outcome, current, _ = qsim.measure_standard(current, anc, rng)
        if any(outcome):
            return ABORT, None
        offset += n
    assignments = {}
    offset = 0
    for key in keys:
        for w in range(offset + key.m, offset + key.n):
            assignments[w] = 0
        offset += key.n
    return VALID, qsim.slice_wires(current, assignments)


def estimate_concat_soundness(
    attacks: Sequence[AttackChannel],
    m: int,
    d: int,
    trials: int,
    rng: np.random.Generator,
    messages: Optional[Sequence[PureState]] = None,
) -> tuple[float, float]:
    """P(all blocks valid and joint message wrong), Monte Carlo."""
    r = len(attacks)
    msgs = list(messages) if messages else [PureState.basis(2, [0] * m) for _ in range(r)]
    intended = msgs[0]
    for msg in msgs[1:]:
        intended = intended.tensor(msg)
    vals = np.zeros(trials)
    for t in range(trials):
        keys = [random_key(m, d, rng) for _ in range(r)]
        sent = concat_encode(msgs, keys)
        # blockwise attacks act on each block's wires
        state = sent
        offset = 0
        for attack, key in zip(attacks, keys):
            state = _apply_block_attack(state, attack, offset, key.n)
            offset += key.n
        verdict, joint = concat_decode(state, keys, rng)
        if verdict == VALID:
            vals[t] = wrongness(joint, intended)
    p = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return p, stderr


def _apply_block_attack(
    state: PureState, attack: AttackChannel, offset: int, block_n: int
) -> PureState:
    if attack.kind == "none":
        return state
    if attack.kind == "pauli":
        p = attack.pauli
        x = [0] * state.n
        z = [0] * state.n
        for i, (xi, zi) in enumerate(zip(p.x, p.z)):
            x[offset + i] = xi
            z[offset + i] = zi
        return qsim.apply_pauli(state, PauliLabel(tuple(x), tuple(z), 2))
    if attack.env_qubits:
        raise ValueError("blockwise unitary attacks with environment not supported here")
    k = int(np.log2(attack.matrix.shape[0]))
    return qsim.apply_unitary(state, attack.matrix, list(range(offset, offset + k)))
