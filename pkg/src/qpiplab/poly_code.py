"""Signed quantum polynomial codes and their transversal logical gates.

A code instance fixes a prime q, degree bound d, length m = 2d + 1 (q > m),
evaluation points alpha_1..alpha_m, and a sign key k in {+1,-1}^m.  The
logical basis state a is encoded as the uniform superposition of
|k_1*f(alpha_1), ..., k_m*f(alpha_m)> over polynomials f of degree <= d
with f(0) = a.

Logical gates used throughout the package (c_i are the interpolation
coefficients of the evaluation points):

    X~ = X^{k_1} (x) ... (x) X^{k_m}
    Z~ = Z^{t_1} (x) ... (x) Z^{t_m},  t_i = c_i * k_i
    SUM~ = transversal SUM
    F~ = F_{c_1} (x) ... (x) F_{c_m}
    CZ~ = transversal CZ^{c_i}  (derived; used by the Toffoli gadget)

With m = 2d + 1 the code is self-dual: F~ maps the code space of every
sign key to itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import qsim
from .galois import default_eval_points, interpolation_coefficients, is_prime, EvalPoints
from .qsim import PureState

VALID = "VALID"
ABORT = "ABORT"


@dataclass(frozen=True)
class SignKey:
    signs: tuple[int, ...]  # entries in {+1, -1}

    def __post_init__(self):
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("sign key entries must be +1 or -1")

    def __len__(self):
        return len(self.signs)

    def as_field_vector(self, q: int) -> np.ndarray:
        """Signs as elements of F_q (+1 -> 1, -1 -> q-1)."""
        return np.array([s % q for s in self.signs], dtype=np.int64)


def all_sign_keys(m: int) -> list[SignKey]:
    out = []
    for bits in range(2**m):
        out.append(SignKey(tuple(1 if (bits >> i) & 1 == 0 else -1 for i in range(m))))
    return out


def random_sign_key(m: int, rng: np.random.Generator) -> SignKey:
    return SignKey(tuple(int(s) for s in rng.choice([1, -1], size=m)))


@dataclass(frozen=True)
class SignedCode:
    q: int
    d: int
    k: SignKey
    alphas: Optional[EvalPoints] = None

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError("q must be prime")
        m = 2 * self.d + 1
        if len(self.k) != m:
            raise ValueError(f"sign key must have length m = {m}")
        if self.q <= m:
            raise ValueError(f"need q > m, got q={self.q}, m={m}")
        if self.alphas is None:
            object.__setattr__(self, "alphas", default_eval_points(m, self.q))
        elif len(self.alphas) != m:
            raise ValueError("need one evaluation point per coordinate")

    @property
    def m(self) -> int:
        return 2 * self.d + 1

    @cached_property
    def c(self) -> tuple[int, ...]:
        return tuple(e.value for e in interpolation_coefficients(self.alphas))

    @cached_property
    def codeword_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(q, q^d) basis indices and shared amplitude of each codeword.

        Row a lists the q^d basis indices supporting |S_a>; every support
        amplitude is q^{-d/2}.
        """
        q, d, m = self.q, self.d, self.m
        alphas = np.array(self.alphas.alphas, dtype=np.int64)
        signs = self.k.as_field_vector(q)
        # coefficient tuples (f_1..f_d) free, f_0 = a
        powers = alphas[None, :] ** np.arange(1, d + 1)[:, None] % q  # (d, m)
        free = np.array(
            np.meshgrid(*([np.arange(q)] * d), indexing="ij")
        ).reshape(d, -1) if d else np.zeros((0, 1), dtype=np.int64)
        high = (free.T @ powers) % q  # (q^d, m): sum_{j>=1} f_j alpha^j
        weights = q ** (m - 1 - np.arange(m))
        table = np.empty((q, q**d), dtype=np.int64)
        for a in range(q):
            evals = (a + high) % q
            table[a] = ((evals * signs[None, :]) % q) @ weights
        return table, np.full(q**d, q ** (-d / 2))

    @cached_property
    def isometry(self) -> np.ndarray:
        """(q^m, q) matrix whose columns are the codewords."""
        q, m = self.q, self.m
        table, amps = self.codeword_table
        v = np.zeros((q**m, q), dtype=np.complex128)
        for a in range(q):
            v[table[a], a] = amps
        return v

    @cached_property
    def encoding_unitary(self) -> np.ndarray:
        """Unitary completion of the isometry: |a, 0, ..., 0> -> |S_a>.

        Only the action on ancilla-zero inputs is contractual; the
        remaining columns are a deterministic orthonormal completion.
        """
        q, m = self.q, self.m
        dim = q**m
        v = self.isometry
        u = np.zeros((dim, dim), dtype=np.complex128)
        special = [a * q ** (m - 1) for a in range(q)]
        for a, col in enumerate(special):
            u[:, col] = v[:, a]
        chosen = [v[:, a] for a in range(q)]
        completion = []
        for j in range(dim):
            cand = np.zeros(dim, dtype=np.complex128)
            cand[j] = 1.0
            for c in chosen:
                cand = cand - c * np.vdot(c, cand)
            norm = np.linalg.norm(cand)
            if norm < 1e-6:  # basis vector inside the span already covered
                continue
            cand /= norm
            chosen.append(cand)
            completion.append(cand)
        free_cols = [j for j in range(dim) if j not in special]
        if len(completion) != len(free_cols):
            raise AssertionError("orthonormal completion has wrong rank")
        for j, cand in zip(free_cols, completion):
            u[:, j] = cand
        return u


def encode_logical(code: SignedCode, logical: PureState) -> PureState:
    """Image of a one-qudit state under the encoding isometry."""
    if logical.q != code.q or logical.n != 1:
        raise ValueError("logical input must be a single qudit of dimension q")
    return PureState(code.isometry @ logical.amplitudes, code.q, code.m)


def encode_registers(code: SignedCode, logical: PureState) -> PureState:
    """Blockwise encoding of an r-qudit logical state into r*m qudits."""
    q, m = code.q, code.m
    r = logical.n
    table, camps = code.codeword_table
    out = np.zeros(q ** (m * r), dtype=np.complex128)
    idx_logical = np.nonzero(np.abs(logical.amplitudes) > 1e-14)[0]
    for li in idx_logical:
        digits = qsim.index_to_digits(int(li), q, r)
        block_idx = np.zeros(1, dtype=np.int64)
        block_amp = np.ones(1)
        for a in digits:
            block_idx = (block_idx[:, None] * q**m + table[a][None, :]).reshape(-1)
            block_amp = (block_amp[:, None] * camps[None, :]).reshape(-1)
        out[block_idx] += logical.amplitudes[li] * block_amp
    return PureState(out, q, m * r)


def detect_and_decode(
    code: SignedCode,
    state: PureState,
    register_wires: Sequence[int],
    rng: np.random.Generator,
) -> tuple[str, Optional[PureState]]:
    """Projective code-membership test, then coherent un-encoding.

    Measures {P_code, I - P_code} on the register.  On VALID the register's
    m wires are replaced (at the position of the first register wire) by
    the decoded logical qudit; the rest of the state is untouched.  On
    ABORT nothing is returned.
    """
    q, m = code.q, code.m
    wires = list(register_wires)
    if len(wires) != m:
        raise ValueError("register must have m wires")
    n = state.n
    rest = [w for w in range(n) if w not in wires]
    perm = wires + rest
    tensor = state.amplitudes.reshape((q,) * n)
    block = np.transpose(tensor, perm).reshape(q**m, q ** len(rest))
    v = code.isometry
    logical_block = v.conj().T @ block  # (q, rest)
    p_valid = float(np.sum(np.abs(logical_block) ** 2))
    if rng.random() >= p_valid:
        return ABORT, None
    logical_block /= np.sqrt(p_valid)
    # reassemble with the register replaced by one logical wire sitting at
    # the position of the first register wire
    out_n = len(rest) + 1
    new_tensor = logical_block.reshape((q,) + (q,) * len(rest))
    p = sum(1 for w in rest if w < wires[0])
    perm_out = [j + 1 for j in range(p)] + [0] + [j + 1 for j in range(p, len(rest))]
    amps = np.transpose(new_tensor, perm_out).reshape(q**out_n)
    return VALID, PureState(amps, q, out_n)


LOGICAL_GATES = ("X", "Z", "SUM", "F")


def logical_gate_ops(code: SignedCode, gate: str, power: int = 1) -> list[tuple]:
    """Physical gate list implementing a logical gate transversally.

    Entries are (name, wires, param) with wires relative to the register
    (or to the ordered pair of registers for SUM).  Powers are exponents in
    F_q; F takes no power.
    """
    q, m = code.q, code.m
    signs = code.k.as_field_vector(q)
    if gate == "X":
        return [("X", (i,), int(signs[i] * power % q)) for i in range(m)]
    if gate == "Z":
        return [("Z", (i,), int(code.c[i] * signs[i] * power % q)) for i in range(m)]
    if gate == "SUM":
        return [("SUM", (i, m + i), power % q) for i in range(m)]
    if gate == "F":
        if power % 4 != 1:
            raise ValueError("F supports only single applications; repeat the op")
        return [("F", (i,), int(code.c[i])) for i in range(m)]
    raise ValueError(f"unsupported logical gate {gate}")


def logical_cz_ops(code: SignedCode, power: int = 1) -> list[tuple]:
    """Transversal CZ^{c_i * power} between two registers (derived gate)."""
    q, m = code.q, code.m
    return [("CZ", (i, m + i), int(code.c[i] * power % q)) for i in range(m)]


def apply_logical_gate(
    code: SignedCode, state: PureState, gate: str, wires: Sequence[int], power: int = 1
) -> PureState:
    """Dense application of a logical gate to registers inside a state.

    `wires` lists the physical wires of the register (m of them), or of
    both registers (2m) for SUM.
    """
    ops = logical_gate_ops(code, gate, power) if gate != "CZ" else logical_cz_ops(code, power)
    return apply_physical_ops(code.q, state, ops, list(wires))


def apply_physical_ops(
    q: int, state: PureState, ops: Sequence[tuple], wires: Sequence[int]
) -> PureState:
    w = qsim.omega(q)
    for name, rel, param in ops:
        if name == "X":
            label = [0] * state.n
            label[wires[rel[0]]] = param
            state = qsim.apply_pauli(
                state, qsim.PauliLabel(tuple(label), (0,) * state.n, q)
            )
        elif name == "Z":
            label = [0] * state.n
            label[wires[rel[0]]] = param
            state = qsim.apply_pauli(
                state, qsim.PauliLabel((0,) * state.n, tuple(label), q)
            )
        elif name == "SUM":
            for _ in range(param % q):
                state = qsim.apply_sum(state, wires[rel[0]], wires[rel[1]])
        elif name == "CZ":
            cz = np.diag([w ** (param * a * b % q) for a in range(q) for b in range(q)])
            state = qsim.apply_unitary(state, cz, [wires[rel[0]], wires[rel[1]]])
        elif name == "F":
            state = qsim.apply_fourier_r(state, wires[rel[0]], param)
        else:
            raise ValueError(name)
    return state


def toffoli_state(q: int) -> PureState:
    """(1/q) sum_{a,b} |a, b, a*b> on three bare qudits."""
    if not is_prime(q):
        raise ValueError("q must be prime")
    amps = np.zeros(q**3, dtype=np.complex128)
    for a in range(q):
        for b in range(q):
            amps[(a * q + b) * q + (a * b) % q] = 1 / q
    return PureState(amps, q, 3)


def encoded_toffoli_state(code: SignedCode) -> PureState:
    """Blockwise encoding of the Toffoli state into 3m qudits."""
    return encode_registers(code, toffoli_state(code.q))
