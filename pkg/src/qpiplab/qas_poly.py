"""Authentication by signed polynomial codes plus a Pauli one-time pad.

The key is a sign key k in {+1,-1}^m together with a uniformly random pad
(x, z) in F_q^m x F_q^m.  The sign key alone defeats every Pauli attack
except with probability 2^-d; the pad reduces arbitrary attacks to Pauli
mixtures and makes the transmitted register maximally mixed (blindness).
Both facts are checked exhaustively at q=5, d=1 by the test suite, along
with a concrete non-Pauli attack that breaks the pad-less scheme.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import poly_code as pc
from . import qsim
from .galois import fit_polynomial
from .poly_code import ABORT, VALID, SignedCode, SignKey
from .qsim import PauliLabel, PureState


@dataclass(frozen=True)
class PolyAuthKey:
    sign: SignKey
    x: tuple[int, ...]
    z: tuple[int, ...]

    def __post_init__(self):
        if len(self.x) != len(self.sign) or len(self.z) != len(self.sign):
            raise ValueError("pad length must match the sign key")

    @property
    def m(self) -> int:
        return len(self.sign)


def random_key(q: int, d: int, rng: np.random.Generator) -> PolyAuthKey:
    m = 2 * d + 1
    return PolyAuthKey(
        pc.random_sign_key(m, rng),
        tuple(int(v) for v in rng.integers(0, q, m)),
        tuple(int(v) for v in rng.integers(0, q, m)),
    )


@dataclass(frozen=True)
class ConcatPolyKeys:
    """Shared sign key, independent pads per register."""

    shared_sign: SignKey
    pads: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    def key_for(self, j: int) -> PolyAuthKey:
        x, z = self.pads[j]
        return PolyAuthKey(self.shared_sign, x, z)


def random_concat_keys(
    q: int, d: int, r: int, rng: np.random.Generator
) -> ConcatPolyKeys:
    m = 2 * d + 1
    sign = pc.random_sign_key(m, rng)
    pads = tuple(
        (
            tuple(int(v) for v in rng.integers(0, q, m)),
            tuple(int(v) for v in rng.integers(0, q, m)),
        )
        for _ in range(r)
    )
    return ConcatPolyKeys(sign, pads)


def pad_label(key: PolyAuthKey, q: int) -> PauliLabel:
    return PauliLabel(key.x, key.z, q)


def poly_encode(logical: PureState, key: PolyAuthKey, q: int, d: int) -> PureState:
    code = SignedCode(q, d, key.sign)
    return qsim.apply_pauli(pc.encode_logical(code, logical), pad_label(key, q))


def poly_decode(
    state: PureState, key: PolyAuthKey, q: int, d: int, rng: np.random.Generator
) -> tuple[str, Optional[PureState]]:
    """Invert the pad, then run the code's error detection."""
    code = SignedCode(q, d, key.sign)
    unpadded = qsim.apply_pauli(state, pad_label(key, q).inverse())
    m = code.m
    return pc.detect_and_decode(code, unpadded, list(range(m)), rng)


def pauli_attack_accepts(
    code: SignedCode, attack_x: Sequence[int], attack_z: Sequence[int]
) -> bool:
    """Whether a Pauli attack passes detection for this sign key (0/1 event).

    Combinatorial route, independent of any statevector: the X part must
    match a signed low-degree polynomial and the Z part must have vanishing
    moments against alpha^j for j = 1..d.
    """
    q, d = code.q, code.d
    signs = code.k.as_field_vector(q)
    alphas = code.alphas.alphas
    if any(v % q for v in attack_x):
        unsigned = [(xv * int(s)) % q for xv, s in zip(attack_x, signs)]
        if fit_polynomial(list(zip(alphas, unsigned)), d, q) is None:
            return False
    if any(v % q for v in attack_z):
        for j in range(1, d + 1):
            beta = sum(
                zv * int(s) * pow(a, j, q)
                for zv, s, a in zip(attack_z, signs, alphas)
            )
            if beta % q:
                return False
    return True


def pauli_attack_fooling(
    attack_x: Sequence[int], attack_z: Sequence[int], q: int, d: int
) -> float:
    """Exact acceptance probability of a Pauli attack over all sign keys.

    Computed by statevector projection per sign key; each key gives an
    exact 0/1 event (cross-checked against the combinatorial rule).
    """
    m = 2 * d + 1
    if not any(v % q for v in attack_x) and not any(v % q for v in attack_z):
        raise ValueError("attack must be a non-identity Pauli")
    accepted = 0
    label = PauliLabel(tuple(attack_x), tuple(attack_z), q)
    for k in pc.all_sign_keys(m):
        code = SignedCode(q, d, k)
        enc = pc.encode_logical(code, PureState.basis(q, [0]))
        attacked = qsim.apply_pauli(enc, label)
        p_valid = float(
            np.sum(np.abs(code.isometry.conj().T @ attacked.amplitudes) ** 2)
        )
        if not (p_valid < 1e-10 or p_valid > 1 - 1e-10):
            raise AssertionError("Pauli attacks must accept or abort surely")
        hit = p_valid > 0.5
        if hit != pauli_attack_accepts(code, attack_x, attack_z):
            raise AssertionError("projector and combinatorial oracles disagree")
        accepted += hit
    return accepted / 2**m


@dataclass(frozen=True)
class PolyAttack:
    """Attack on a transmitted m-qudit register.

    kind 'none' | 'pauli' (label) | 'unitary' (dense on register + env
    qudits appended in |0>, register wires first).
    """

    kind: str
    pauli: Optional[PauliLabel] = None
    matrix: Optional[np.ndarray] = None
    env_qudits: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "pauli", "unitary"):
            raise ValueError(f"unknown attack kind {self.kind}")
        if self.kind == "pauli" and self.pauli is None:
            raise ValueError("pauli attack needs a label")
        if self.kind == "unitary" and self.matrix is None:
            raise ValueError("unitary attack needs a matrix")


def estimate_poly_soundness(
    attack: PolyAttack,
    q: int,
    d: int,
    trials: int,
    rng: np.random.Generator,
    logical: Optional[PureState] = None,
    use_pad: bool = True,
) -> tuple[float, float]:
    """Monte Carlo P(valid and wrong) over random keys.

    use_pad=False runs the sign-key-only variant (pads forced to zero),
    which is exactly the scheme the pad-necessity counterexample defeats.
    """
    m = 2 * d + 1
    psi = logical if logical is not None else PureState.basis(q, [0])
    vals = np.zeros(trials)
    for t in range(trials):
        key = random_key(q, d, rng)
        if not use_pad:
            key = PolyAuthKey(key.sign, (0,) * m, (0,) * m)
        sent = poly_encode(psi, key, q, d)
        attacked = _apply_poly_attack(sent, attack, q)
        code = SignedCode(q, d, key.sign)
        inv = pad_label(key, q).inverse()
        if attacked.n > m:
            pad = (0,) * (attacked.n - m)
            inv = PauliLabel(inv.x + pad, inv.z + pad, q, inv.phase_exponent)
        unpadded = qsim.apply_pauli(attacked, inv)
        verdict, decoded = pc.detect_and_decode(
            code, unpadded, list(range(m)), rng
        )
        if verdict == VALID:
            if decoded.n == 1:
                fid = qsim.overlap(psi, decoded) ** 2
            else:  # environment wires still attached
                rho = qsim.reduced_density(decoded, [0])
                fid = float(
                    np.real(psi.amplitudes.conj() @ rho.matrix @ psi.amplitudes)
                )
            vals[t] = max(0.0, 1.0 - fid)
    p = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return p, stderr


def _apply_poly_attack(state: PureState, attack: PolyAttack, q: int) -> PureState:
    if attack.kind == "none":
        return state
    if attack.kind == "pauli":
        p = attack.pauli
        if p.n < state.n:
            p = PauliLabel(
                p.x + (0,) * (state.n - p.n),
                p.z + (0,) * (state.n - p.n),
                q,
                p.phase_exponent,
            )
        return qsim.apply_pauli(state, p)
    if attack.env_qudits:
        state = state.tensor(PureState.basis(q, [0] * attack.env_qudits))
    k = round(np.log(attack.matrix.shape[0]) / np.log(q))
    return qsim.apply_unitary(state, attack.matrix, list(range(k)))


def prover_view(
    code: SignedCode, logical: PureState, progress: bool = False
) -> qsim.DensityMatrix:
    """Key-averaged density matrix of the transmitted register.

    Exact enumeration over all q^(2m) pads for the given sign key; the
    result is the maximally mixed state for any input.
    """
    q, m = code.q, code.m
    enc = pc.encode_logical(code, logical)
    rho = np.outer(enc.amplitudes, enc.amplitudes.conj())
    digits = qsim.digit_table(q, m)
    weights = q ** (m - 1 - np.arange(m))
    w = qsim.omega(q)
    acc = np.zeros_like(rho)
    for x in itertools.product(range(q), repeat=m):
        perm = ((digits - np.array(x)) % q) @ weights
        shifted = rho[np.ix_(perm, perm)]
        for z in itertools.product(range(q), repeat=m):
            phases = w ** (digits @ np.array(z))
            acc += (phases[:, None] * phases[None, :].conj()) * shifted
    acc /= q ** (2 * m)
    return qsim.DensityMatrix(acc, q, m, validate=False)


def clifford_prover_view(n: int = 2) -> np.ndarray:
    """Key-averaged view of a Clifford-authenticated register (exact)."""
    from . import clifford as cl

    _, mats = cl.enumerate_clifford_unitaries(n)
    psi0 = np.zeros(2**n)
    psi0[0] = 1.0
    cols = np.einsum("kij,j->ki", mats, psi0)
    return np.einsum("ki,kj->ij", cols, cols.conj()) / len(mats)


def quadratic_phase_attack(code: SignedCode) -> np.ndarray:
    """Diagonal non-Pauli attack that defeats the sign-key-only scheme.

    The phase omega^{sum_i c_i v_i^2} depends only on the squared
    coordinates, so the sign key cancels out and the operator acts as the
    logical phase gate |a> -> omega^{a^2}|a> on the code space of every
    sign key: it is never detected, yet corrupts superposed inputs.
    """
    q, m = code.q, code.m
    digits = qsim.digit_table(q, m)
    c = np.array(code.c)
    exponents = (digits**2 % q) @ c % q
    return np.diag(qsim.omega(q) ** exponents)


def pad_necessity_witness(q: int = 5, d: int = 1) -> dict:
    """Concrete demonstration that the Pauli pad is load-bearing.

    Returns the attack, an input it damages, and the exact fooling
    probability against the sign-key-only scheme (valid with certainty for
    every key, while the logical state is wrong with fixed fidelity).
    """
    m = 2 * d + 1
    code0 = SignedCode(q, d, SignKey((1,) * m))
    attack = quadratic_phase_attack(code0)
    amps = np.zeros(q, dtype=complex)
    amps[1] = amps[2] = 1 / np.sqrt(2)
    psi = PureState(amps, q, 1)
    # logical action: |a> -> w^{a^2}|a>, identical for every sign key
    w = qsim.omega(q)
    out_amps = amps * w ** (np.arange(q) ** 2 % q)
    fid = abs(np.vdot(amps, out_amps)) ** 2
    p_fool = 0.0
    for k in pc.all_sign_keys(m):
        code = SignedCode(q, d, k)
        enc = pc.encode_logical(code, psi)
        attacked = PureState(attack @ enc.amplitudes, q, m)
        weights = code.isometry.conj().T @ attacked.amplitudes
        p_valid = float(np.sum(np.abs(weights) ** 2))
        fid_k = abs(np.vdot(amps, weights)) ** 2
        p_fool += p_valid - fid_k
    p_fool /= 2**m
    return {
        "attack": attack,
        "input": psi,
        "expected_fidelity": fid,
        "p_fool_no_pad": p_fool,
    }


# Concatenated scheme with a shared sign key.


def concat_encode(
    logicals: Sequence[PureState], keys: ConcatPolyKeys, q: int, d: int
) -> PureState:
    out = None
    for j, logical in enumerate(logicals):
        enc = poly_encode(logical, keys.key_for(j), q, d)
        out = enc if out is None else out.tensor(enc)
    return out


def concat_decode(
    state: PureState, keys: ConcatPolyKeys, q: int, d: int, rng: np.random.Generator
) -> tuple[str, Optional[PureState]]:
    """Registers decode independently; valid iff every one is valid."""
    m = 2 * d + 1
    r = len(keys.pads)
    current = state
    for j in range(r):
        key = keys.key_for(j)
        inv = pad_label(key, q).inverse()
        # registers 0..j-1 have already shrunk to single wires
        start = j
        x = [0] * current.n
        z = [0] * current.n
        for i in range(m):
            x[start + i] = inv.x[i]
            z[start + i] = inv.z[i]
        unpadded = qsim.apply_pauli(
            current, PauliLabel(tuple(x), tuple(z), q, inv.phase_exponent)
        )
        code = SignedCode(q, d, key.sign)
        verdict, current = pc.detect_and_decode(
            code, unpadded, list(range(start, start + m)), rng
        )
        if verdict == ABORT:
            return ABORT, None
    return VALID, current


def concat_pauli_fooling_exact(
    attacks: Sequence[tuple[Sequence[int], Sequence[int]]], q: int, d: int
) -> float:
    """Exact fooling probability of a blockwise Pauli attack with a shared
    sign key: the attack passes iff every attacked block passes."""
    m = 2 * d + 1
    if all(
        not any(v % q for v in ax) and not any(v % q for v in az)
        for ax, az in attacks
    ):
        raise ValueError("attack must be non-identity somewhere")
    accepted = 0
    for k in pc.all_sign_keys(m):
        code = SignedCode(q, d, k)
        ok = True
        for ax, az in attacks:
            if not any(v % q for v in ax) and not any(v % q for v in az):
                continue
            if not pauli_attack_accepts(code, ax, az):
                ok = False
                break
        accepted += ok
    return accepted / 2**m
