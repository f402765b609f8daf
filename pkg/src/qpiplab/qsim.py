"""Dense statevector and density-matrix simulation for uniform-dimension qudits.

Conventions fixed here and used by every other module:

* Wire 0 is the most significant digit of a basis-state index, so the basis
  state |d_0, d_1, ..., d_{n-1}> has index sum_w d_w * q**(n-1-w).
* A Pauli label (x, z) denotes the operator Z^{z_1}X^{x_1} (x) ... (x)
  Z^{z_n}X^{x_n}, i.e. per wire the shift is applied before the phase.
* omega_q = exp(2*pi*i/q).  Phase exponents of Pauli labels count powers of
  omega_q for odd q and powers of i for q = 2.
* State equality for tests is global-phase insensitive: |<a|b>| ~ 1.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-9

DEFAULT_MAX_AMPS = 1 << 24


def max_amplitudes() -> int:
    """Amplitude-count ceiling; override with the QPIP_MAX_AMPS env var."""
    return int(os.environ.get("QPIP_MAX_AMPS", DEFAULT_MAX_AMPS))


def omega(q: int) -> complex:
    return np.exp(2j * np.pi / q)


def _check_size(q: int, n: int):
    if q**n > max_amplitudes():
        raise MemoryError(
            f"state of {n} qudits of dimension {q} needs {q ** n} amplitudes, "
            f"over the ceiling {max_amplitudes()} (set QPIP_MAX_AMPS to raise)"
        )


class PureState:
    """Normalized amplitude vector over n qudits of dimension q."""

    def __init__(self, amplitudes: np.ndarray | Sequence[complex], q: int, n: int):
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if amps.shape != (q**n,):
            raise ValueError(f"expected {q ** n} amplitudes, got {amps.shape}")
        _check_size(q, n)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise ValueError(f"state is not normalized (norm {norm})")
        self.amplitudes = amps
        self.q = q
        self.n = n

    @classmethod
    def basis(cls, q: int, digits: Sequence[int]) -> "PureState":
        n = len(digits)
        _check_size(q, n)
        amps = np.zeros(q**n, dtype=np.complex128)
        amps[digits_to_index(digits, q)] = 1.0
        return cls(amps, q, n)

    def tensor(self, other: "PureState") -> "PureState":
        if other.q != self.q:
            raise ValueError("qudit dimension mismatch")
        return PureState(np.kron(self.amplitudes, other.amplitudes), self.q, self.n + other.n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "PureState":
        return PureState(self.amplitudes.copy(), self.q, self.n)

    def __repr__(self):
        return f"PureState(q={self.q}, n={self.n})"


def digits_to_index(digits: Sequence[int], q: int) -> int:
    idx = 0
    for d in digits:
        idx = idx * q + (d % q)
    return idx


def index_to_digits(index: int, q: int, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        out.append(index % q)
        index //= q
    return tuple(reversed(out))


def digit_table(q: int, n: int) -> np.ndarray:
    """(q^n, n) array: row i holds the digits of basis index i, wire order."""
    idx = np.arange(q**n)
    cols = []
    for w in range(n):
        cols.append((idx // q ** (n - 1 - w)) % q)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class PauliLabel:
    """Symplectic label for a generalized Pauli operator on n qudits."""

    x: tuple[int, ...]
    z: tuple[int, ...]
    q: int
    phase_exponent: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(v % self.q for v in self.x))
        object.__setattr__(self, "z", tuple(v % self.q for v in self.z))
        object.__setattr__(self, "phase_exponent", self.phase_exponent % self._phase_mod())

    def _phase_mod(self) -> int:
        return 4 if self.q == 2 else self.q

    @property
    def n(self) -> int:
        return len(self.x)

    def is_identity(self) -> bool:
        return all(v == 0 for v in self.x) and all(v == 0 for v in self.z)

    def phase(self) -> complex:
        base = 1j if self.q == 2 else omega(self.q)
        return base**self.phase_exponent

    def inverse(self) -> "PauliLabel":
        """Exact operator inverse, phase included."""
        q = self.q
        # (Z^z X^x)^-1 = X^-x Z^-z = omega^{-xz} Z^-z X^-x per wire.
        extra = -sum(xi * zi for xi, zi in zip(self.x, self.z))
        if q == 2:
            extra *= 2  # phase exponent counts powers of i for qubits
        return PauliLabel(
            tuple(-v for v in self.x),
            tuple(-v for v in self.z),
            q,
            -self.phase_exponent + extra,
        )

    def matrix(self) -> np.ndarray:
        """Dense matrix, phase included."""
        q = self.q
        w = omega(q)
        single = []
        for xi, zi in zip(self.x, self.z):
            m = np.zeros((q, q), dtype=np.complex128)
            for a in range(q):
                m[(a + xi) % q, a] = w ** (zi * ((a + xi) % q))
            single.append(m)
        out = np.eye(1, dtype=np.complex128)
        for m in single:
            out = np.kron(out, m)
        return self.phase() * out


def random_pauli(q: int, n: int, rng: np.random.Generator) -> PauliLabel:
    return PauliLabel(tuple(rng.integers(0, q, n)), tuple(rng.integers(0, q, n)), q)


def apply_pauli(state: PureState, p: PauliLabel) -> PureState:
    """Apply Z^{z}X^{x} per wire: new[b] = phase * omega^{z.b} * old[b - x]."""
    if p.n != state.n or p.q != state.q:
        raise ValueError("dimension mismatch")
    q, n = state.q, state.n
    digits = digit_table(q, n)
    x = np.array(p.x)
    z = np.array(p.z)
    weights = q ** (n - 1 - np.arange(n))
    src = ((digits - x) % q) @ weights
    phases = omega(q) ** (digits @ z)
    amps = p.phase() * phases * state.amplitudes[src]
    return PureState(amps, q, n)


def single_wire_unitary(state: PureState, u: np.ndarray, wire: int) -> PureState:
    return apply_unitary(state, u, [wire])


def apply_unitary(state: PureState, u: np.ndarray, wires: Sequence[int]) -> PureState:
    """Apply a q^k x q^k unitary to the given wires (first wire = most significant)."""
    q, n = state.q, state.n
    k = len(wires)
    if u.shape != (q**k, q**k):
        raise ValueError(f"unitary shape {u.shape} does not match {k} wires")
    if len(set(wires)) != k or any(w < 0 or w >= n for w in wires):
        raise ValueError("bad wire list")
    rest = [w for w in range(n) if w not in wires]
    perm = list(wires) + rest
    tensor = state.amplitudes.reshape((q,) * n)
    tensor = np.transpose(tensor, perm).reshape(q**k, q ** (n - k))
    tensor = (u @ tensor).reshape((q,) * n)
    inv = np.argsort(perm)
    amps = np.transpose(tensor, inv).reshape(q**n)
    return PureState(amps, q, n)


def fourier_matrix(q: int, r: int = 1) -> np.ndarray:
    """F_r[b, a] = omega^{r a b} / sqrt(q); unitary iff r != 0 mod q."""
    if r % q == 0:
        raise ValueError("Fourier variant r must be nonzero")
    a = np.arange(q)
    return omega(q) ** (r * np.outer(a, a)) / np.sqrt(q)


def apply_fourier_r(state: PureState, wire: int, r: int) -> PureState:
    return single_wire_unitary(state, fourier_matrix(state.q, int(r)), wire)


def sum_permutation(q: int, power: int = 1) -> np.ndarray:
    """|a, b> -> |a, b + power*a> as a q^2 permutation matrix."""
    m = np.zeros((q * q, q * q))
    for a in range(q):
        for b in range(q):
            m[a * q + (b + power * a) % q, a * q + b] = 1.0
    return m


def apply_sum(state: PureState, control: int, target: int, power: int = 1) -> PureState:
    if control == target:
        raise ValueError("control and target must differ")
    return apply_unitary(state, sum_permutation(state.q, power), [control, target])


def toffoli_permutation(q: int) -> np.ndarray:
    """|a, b, c> -> |a, b, c + a*b> as a q^3 permutation matrix."""
    m = np.zeros((q**3, q**3))
    for a in range(q):
        for b in range(q):
            for c in range(q):
                m[(a * q + b) * q + (c + a * b) % q, (a * q + b) * q + c] = 1.0
    return m


def apply_toffoli(state: PureState, a: int, b: int, c: int) -> PureState:
    if len({a, b, c}) != 3:
        raise ValueError("Toffoli wires must be distinct")
    return apply_unitary(state, toffoli_permutation(state.q), [a, b, c])


def measure_standard(
    state: PureState, wires: Sequence[int], rng: np.random.Generator
) -> tuple[tuple[int, ...], PureState, float]:
    """Standard-basis measurement of the given wires.

    Returns (outcome digits, collapsed renormalized state, branch probability).
    Outcomes are sampled by inverse CDF over digit tuples in lexicographic
    order so seeded runs replay exactly.
    """
    q, n = state.q, state.n
    wires = list(wires)
    digits = digit_table(q, n)[:, wires]
    weights = q ** (len(wires) - 1 - np.arange(len(wires)))
    keys = digits @ weights
    probs = np.zeros(q ** len(wires))
    np.add.at(probs, keys, np.abs(state.amplitudes) ** 2)
    u = rng.random()
    cum = np.cumsum(probs)
    outcome_key = int(np.searchsorted(cum, u * cum[-1], side="right"))
    outcome_key = min(outcome_key, len(probs) - 1)
    p = float(probs[outcome_key])
    if p <= 1e-300:
        raise ValueError("zero-probability branch selected")
    mask = keys == outcome_key
    amps = np.where(mask, state.amplitudes, 0.0) / np.sqrt(p)
    outcome = index_to_digits(outcome_key, q, len(wires))
    return outcome, PureState(amps, q, n), p


def slice_wires(state: PureState, assignments: dict[int, int]) -> PureState:
    """Drop wires that are in a definite basis state, keeping the sub-block."""
    q, n = state.q, state.n
    keep = [w for w in range(n) if w not in assignments]
    tensor = state.amplitudes.reshape((q,) * n)
    index = tuple(
        assignments[w] if w in assignments else slice(None) for w in range(n)
    )
    sub = np.asarray(tensor[index]).reshape(q ** len(keep))
    norm = np.linalg.norm(sub)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError("sliced wires were not in a definite state")
    return PureState(sub / norm, q, len(keep))


class DensityMatrix:
    """Hermitian, unit-trace, PSD matrix over n qudits of dimension q."""

    def __init__(self, matrix: np.ndarray, q: int, n: int, validate: bool = True):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (q**n, q**n):
            raise ValueError("density matrix shape mismatch")
        if validate:
            if np.max(np.abs(matrix - matrix.conj().T)) > 1e-7:
                raise ValueError("density matrix is not Hermitian")
            if abs(np.trace(matrix) - 1.0) > 1e-7:
                raise ValueError("density matrix trace is not 1")
            if np.min(np.linalg.eigvalsh((matrix + matrix.conj().T) / 2)) < -1e-7:
                raise ValueError("density matrix is not PSD")
        self.matrix = matrix
        self.q = q
        self.n = n

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityMatrix":
        return cls(np.outer(state.amplitudes, state.amplitudes.conj()), state.q, state.n)


def reduced_density(
    state: PureState | DensityMatrix, keep: Sequence[int]
) -> DensityMatrix:
    """Partial trace onto the kept wires (order preserved)."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep set must be nonempty")
    q, n = state.q, state.n
    rest = [w for w in range(n) if w not in keep]
    if isinstance(state, PureState):
        perm = keep + rest
        tensor = state.amplitudes.reshape((q,) * n)
        block = np.transpose(tensor, perm).reshape(q ** len(keep), q ** len(rest))
        rho = block @ block.conj().T
    else:
        tensor = state.matrix.reshape((q,) * (2 * n))
        perm = keep + rest + [n + w for w in keep] + [n + w for w in rest]
        k, r = len(keep), len(rest)
        block = np.transpose(tensor, perm).reshape(q**k, q**r, q**k, q**r)
        rho = np.einsum("arbr->ab", block)
    return DensityMatrix(rho, q, len(keep), validate=False)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    diff = a.matrix - b.matrix
    eig = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.sum(np.abs(eig)))


def overlap(a: PureState, b: PureState) -> float:
    """|<a|b>|; equals 1 iff the states agree up to a global phase."""
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def states_close(a: PureState, b: PureState, tol: float = ATOL) -> bool:
    return a.q == b.q and a.n == b.n and abs(overlap(a, b) - 1.0) <= tol


def state_to_json(state: PureState) -> str:
    payload = {
        "q": state.q,
        "n": state.n,
        "amps": [[float(c.real), float(c.imag)] for c in state.amplitudes],
    }
    return json.dumps(payload, sort_keys=True)


def state_from_json(text: str) -> PureState:
    payload = json.loads(text)
    amps = np.array([complex(re, im) for re, im in payload["amps"]])
    return PureState(amps, int(payload["q"]), int(payload["n"]))
