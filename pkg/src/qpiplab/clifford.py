"""Qubit Pauli and Clifford groups via stabilizer tableaus.

Representation notes:

* A Pauli on n qubits is held as integer bitmasks (x, z) plus a phase
  exponent mod 4 counting powers of i, denoting i^phase * W(x, z) with
  W(x, z) = X^{x_1}Z^{z_1} (x) ... (x) X^{x_n}Z^{z_n}.  Bit w of a mask is
  wire w.
* The Hermitian representative of (x, z) is H(x, z) = i^{|x & z|} W(x, z)
  (so (1,1) is +Y).  Tableau image entries store (x, z, sign) meaning
  (-1)^sign * H(x, z); global phases are quotiented out, signs are not.
* A tableau lists the conjugation images of X_0..X_{n-1}, Z_0..Z_{n-1}
  under C (encode direction, P -> C P C^dag).  conjugate_pauli applies the
  fixed decode-direction convention C^dag P C.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .qsim import PauliLabel

PauliBits = tuple[int, int, int]  # (x mask, z mask, phase exponent mod 4)


def _popcount(v: int) -> int:
    return bin(v).count("1")


def pauli_mul(a: PauliBits, b: PauliBits) -> PauliBits:
    """W-form product: i^pa W(xa,za) * i^pb W(xb,zb)."""
    xa, za, pa = a
    xb, zb, pb = b
    phase = (pa + pb + 2 * _popcount(za & xb)) % 4
    return (xa ^ xb, za ^ zb, phase)


def hermitian_bits(x: int, z: int, sign: int) -> PauliBits:
    """(-1)^sign * i^{|x&z|} W(x, z) in (x, z, phase mod 4) form."""
    return (x, z, (2 * sign + _popcount(x & z)) % 4)


def bits_sign(bits: PauliBits) -> int:
    """Sign of a Hermitian Pauli given in W form; raises if not Hermitian."""
    x, z, phase = bits
    rel = (phase - _popcount(x & z)) % 4
    if rel not in (0, 2):
        raise ValueError("Pauli is not a signed Hermitian representative")
    return rel // 2


def symplectic_product(a: tuple[int, int], b: tuple[int, int]) -> int:
    return (_popcount(a[0] & b[1]) + _popcount(a[1] & b[0])) % 2


def pauli_bits_matrix(bits: PauliBits, n: int) -> np.ndarray:
    x, z, phase = bits
    X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    out = np.eye(1, dtype=np.complex128)
    for w in range(n):
        m = np.eye(2, dtype=np.complex128)
        if (x >> w) & 1:
            m = m @ X
        if (z >> w) & 1:
            m = m @ Z
        out = np.kron(out, m)
    return (1j**phase) * out


@dataclass(frozen=True)
class CliffordTableau:
    """Images of X_w and Z_w under conjugation, with sign bits."""

    n: int
    x_images: tuple[tuple[int, int, int], ...]  # (x, z, sign) per wire
    z_images: tuple[tuple[int, int, int], ...]

    def key(self) -> tuple:
        return (self.n, self.x_images, self.z_images)

    def is_valid(self) -> bool:
        imgs = [(x, z) for x, z, _ in self.x_images + self.z_images]
        n = self.n
        for i in range(n):
            for j in range(n):
                if symplectic_product(imgs[i], imgs[n + j]) != (1 if i == j else 0):
                    return False
                if symplectic_product(imgs[i], imgs[j]) != 0:
                    return False
                if symplectic_product(imgs[n + i], imgs[n + j]) != 0:
                    return False
        return True

    def apply_bits(self, bits: PauliBits) -> PauliBits:
        """Conjugation image of an arbitrary W-form Pauli (encode direction)."""
        x, z, phase = bits
        acc = (0, 0, phase % 4)
        for w in range(self.n):
            if (x >> w) & 1:
                acc = pauli_mul(acc, hermitian_bits(*self.x_images[w]))
        for w in range(self.n):
            if (z >> w) & 1:
                acc = pauli_mul(acc, hermitian_bits(*self.z_images[w]))
        return acc

    def compose(self, other: "CliffordTableau") -> "CliffordTableau":
        """Tableau of (self o other): apply other first, then self."""
        if self.n != other.n:
            raise ValueError("qubit count mismatch")
        xi, zi = [], []
        for x, z, s in other.x_images:
            bits = self.apply_bits(hermitian_bits(x, z, s))
            xi.append((bits[0], bits[1], bits_sign(bits)))
        for x, z, s in other.z_images:
            bits = self.apply_bits(hermitian_bits(x, z, s))
            zi.append((bits[0], bits[1], bits_sign(bits)))
        return CliffordTableau(self.n, tuple(xi), tuple(zi))

    def inverse(self) -> "CliffordTableau":
        n = self.n
        m = np.zeros((2 * n, 2 * n), dtype=np.uint8)
        for i, (x, z, _) in enumerate(self.x_images + self.z_images):
            for w in range(n):
                m[i, w] = (x >> w) & 1
                m[i, n + w] = (z >> w) & 1
        inv = gf2_inverse(m)
        xi, zi = [], []
        for i in range(2 * n):
            x = int(sum(int(inv[i, w]) << w for w in range(n)))
            z = int(sum(int(inv[i, n + w]) << w for w in range(n)))
            res = self.apply_bits(hermitian_bits(x, z, 0))
            sign = bits_sign(res)  # self maps candidate to (-1)^sign basis_i
            entry = (x, z, sign)
            if i < n:
                xi.append(entry)
            else:
                zi.append(entry)
        return CliffordTableau(n, tuple(xi), tuple(zi))


def identity_tableau(n: int) -> CliffordTableau:
    xi = tuple((1 << w, 0, 0) for w in range(n))
    zi = tuple((0, 1 << w, 0) for w in range(n))
    return CliffordTableau(n, xi, zi)


def gate_tableau(name: str, n: int, wires: Sequence[int]) -> CliffordTableau:
    """Tableau of a generator gate embedded on the given wires of n qubits."""
    t = identity_tableau(n)
    xi = list(t.x_images)
    zi = list(t.z_images)
    if name == "H":
        (w,) = wires
        xi[w] = (0, 1 << w, 0)
        zi[w] = (1 << w, 0, 0)
    elif name == "K":
        (w,) = wires
        xi[w] = (1 << w, 1 << w, 0)  # X -> +Y
    elif name == "CNOT":
        c, t_ = wires
        xi[c] = ((1 << c) | (1 << t_), 0, 0)
        zi[t_] = (0, (1 << c) | (1 << t_), 0)
    else:
        raise ValueError(f"unknown generator {name}")
    return CliffordTableau(n, tuple(xi), tuple(zi))


def tableau_from_gates(n: int, gates: Iterable[tuple[str, Sequence[int]]]) -> CliffordTableau:
    """Compose generator gates listed in application order."""
    t = identity_tableau(n)
    for name, wires in gates:
        t = gate_tableau(name, n, wires).compose(t)
    return t


# GF(2) linear algebra on small dense uint8 matrices.

def gf2_row_reduce(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    m = m.copy() % 2
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        pivot = None
        for i in range(r, rows):
            if m[i, c]:
                pivot = i
                break
        if pivot is None:
            continue
        m[[r, pivot]] = m[[pivot, r]]
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] ^= m[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def gf2_null_space(m: np.ndarray) -> np.ndarray:
    """Rows form a basis of the right null space of m over GF(2)."""
    rows, cols = m.shape
    red, pivots = gf2_row_reduce(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.uint8)
        v[f] = 1
        for r, p in enumerate(pivots):
            if red[r, f]:
                v[p] = 1
        basis.append(v)
    return np.array(basis, dtype=np.uint8) if basis else np.zeros((0, cols), np.uint8)


def gf2_inverse(m: np.ndarray) -> np.ndarray:
    size = m.shape[0]
    aug = np.concatenate([m % 2, np.eye(size, dtype=np.uint8)], axis=1)
    red, pivots = gf2_row_reduce(aug)
    if pivots[:size] != list(range(size)):
        raise ValueError("matrix is singular over GF(2)")
    return red[:, size:]


def _vec_to_xz(v: np.ndarray, n: int) -> tuple[int, int]:
    x = int(sum(int(v[w]) << w for w in range(n)))
    z = int(sum(int(v[n + w]) << w for w in range(n)))
    return x, z


def _xz_to_vec(x: int, z: int, n: int) -> np.ndarray:
    v = np.zeros(2 * n, dtype=np.uint8)
    for w in range(n):
        v[w] = (x >> w) & 1
        v[n + w] = (z >> w) & 1
    return v


def _omega_vec(v: np.ndarray, n: int) -> np.ndarray:
    """Symplectic form applied to v, so that <u, v> = u . (Omega v)."""
    return np.concatenate([v[n:], v[:n]])


def random_clifford(n: int, rng: np.random.Generator) -> CliffordTableau:
    """Exactly uniform sample from the n-qubit Clifford group mod phase.

    Images are drawn row by row from the symplectic complement of the rows
    already fixed (uniformly via null-space bases, with rejection only on
    measure-zero-free conditions), then signs are drawn uniformly.  Every
    valid tableau is produced with equal probability.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if n > 12:
        raise ValueError("practical ceiling is n = 12")
    chosen: list[np.ndarray] = []
    images: list[tuple[int, int]] = []
    for _ in range(n):
        if chosen:
            constraints = np.array([_omega_vec(v, n) for v in chosen], dtype=np.uint8)
        else:
            constraints = np.zeros((0, 2 * n), dtype=np.uint8)
        basis = gf2_null_space(constraints)
        while True:
            coeffs = rng.integers(0, 2, basis.shape[0], dtype=np.uint8)
            a = (coeffs @ basis) % 2
            if a.any():
                break
        while True:
            coeffs = rng.integers(0, 2, basis.shape[0], dtype=np.uint8)
            b = (coeffs @ basis) % 2
            if int(a @ _omega_vec(b, n)) % 2 == 1:
                break
        chosen.extend([a, b])
        images.append(_vec_to_xz(a, n))
        images.append(_vec_to_xz(b, n))
    xi, zi = [], []
    for i in range(n):
        ax, az = images[2 * i]
        bx, bz = images[2 * i + 1]
        xi.append((ax, az, int(rng.integers(0, 2))))
        zi.append((bx, bz, int(rng.integers(0, 2))))
    tab = CliffordTableau(n, tuple(xi), tuple(zi))
    assert tab.is_valid()
    return tab


_GENERATORS = {
    1: [("H", (0,)), ("K", (0,))],
    2: [
        ("H", (0,)),
        ("H", (1,)),
        ("K", (0,)),
        ("K", (1,)),
        ("CNOT", (0, 1)),
        ("CNOT", (1, 0)),
    ],
}


@lru_cache(maxsize=4)
def enumerate_cliffords(n: int) -> list[CliffordTableau]:
    """All Clifford elements mod global phase: 24 for n=1, 11520 for n=2.

    Breadth-first closure over the generator set {H, K, CNOT}.  The result
    is cached; treat it as read-only.
    """
    if n not in (1, 2):
        raise ValueError("exhaustive enumeration supported for n <= 2 only")
    gens = [gate_tableau(name, n, wires) for name, wires in _GENERATORS[n]]
    start = identity_tableau(n)
    seen = {start.key(): start}
    frontier = [start]
    while frontier:
        nxt = []
        for t in frontier:
            for g in gens:
                cand = g.compose(t)
                k = cand.key()
                if k not in seen:
                    seen[k] = cand
                    nxt.append(cand)
        frontier = nxt
    return list(seen.values())


@lru_cache(maxsize=4)
def enumerate_clifford_unitaries(n: int) -> tuple[list[CliffordTableau], np.ndarray]:
    """Enumeration plus a dense unitary per element (phases arbitrary).

    Unitaries are built along the closure tree by multiplying generator
    matrices, which is far cheaper than synthesizing each element.  Cached;
    treat the returned array as read-only.
    """
    if n not in (1, 2):
        raise ValueError("supported for n <= 2 only")
    gens = [gate_tableau(name, n, wires) for name, wires in _GENERATORS[n]]
    gen_mats = [_generator_matrix(name, n, wires) for name, wires in _GENERATORS[n]]
    start = identity_tableau(n)
    seen = {start.key(): 0}
    tabs = [start]
    mats = [np.eye(2**n, dtype=np.complex128)]
    frontier = [0]
    while frontier:
        nxt = []
        for idx in frontier:
            for g, gm in zip(gens, gen_mats):
                cand = g.compose(tabs[idx])
                k = cand.key()
                if k not in seen:
                    seen[k] = len(tabs)
                    tabs.append(cand)
                    mats.append(gm @ mats[idx])
                    nxt.append(len(tabs) - 1)
        frontier = nxt
    return tabs, np.array(mats)


def _generator_matrix(name: str, n: int, wires: Sequence[int]) -> np.ndarray:
    H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    K = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
    if name == "H":
        return _embed_single(H, n, wires[0])
    if name == "K":
        return _embed_single(K, n, wires[0])
    if name == "CNOT":
        c, t = wires
        m = np.zeros((2**n, 2**n), dtype=np.complex128)
        for i in range(2**n):
            bits = [(i >> (n - 1 - w)) & 1 for w in range(n)]
            if bits[c]:
                bits[t] ^= 1
            j = 0
            for b in bits:
                j = (j << 1) | b
            m[j, i] = 1.0
        return m
    raise ValueError(name)


def _embed_single(u: np.ndarray, n: int, wire: int) -> np.ndarray:
    out = np.eye(1, dtype=np.complex128)
    for w in range(n):
        out = np.kron(out, u if w == wire else np.eye(2))
    return out


def tableau_to_unitary(tab: CliffordTableau) -> np.ndarray:
    """Dense unitary (n <= 3) whose conjugation action matches the tableau."""
    if tab.n > 3:
        raise ValueError("dense export limited to n <= 3")
    return dense_unitary(tab)


def dense_unitary(tab: CliffordTableau) -> np.ndarray:
    """Dense unitary for any small tableau (internal, memory-bounded by 2^n).

    Column j is W(j)|phi> where |phi> is the state stabilized by the signed
    Z images and W(j) the product of X images selected by the bits of j.
    """
    n = tab.n
    if n > 10:
        raise ValueError("dense synthesis impractical beyond n = 10")
    dim = 2**n
    proj = np.eye(dim, dtype=np.complex128)
    for x, z, s in tab.z_images:
        stab = ((-1) ** s) * pauli_bits_matrix(hermitian_bits(x, z, 0), n)
        proj = proj @ (np.eye(dim) + stab) / 2
    phi = None
    for seed in range(dim):
        cand = proj[:, seed]
        norm = np.linalg.norm(cand)
        if norm > 1e-6:
            phi = cand / norm
            break
    if phi is None:
        raise ValueError("invalid tableau: empty stabilizer space")
    x_mats = [
        ((-1) ** s) * pauli_bits_matrix(hermitian_bits(x, z, 0), n)
        for x, z, s in tab.x_images
    ]
    cols = np.empty((dim, dim), dtype=np.complex128)
    for j in range(dim):
        col = phi
        for w in range(n):
            if (j >> (n - 1 - w)) & 1:
                col = x_mats[w] @ col
        cols[:, j] = col
    return cols


def _label_to_bits(p: PauliLabel) -> PauliBits:
    if p.q != 2:
        raise ValueError("tableau conjugation is qubit-only")
    x = sum(1 << w for w, v in enumerate(p.x) if v)
    z = sum(1 << w for w, v in enumerate(p.z) if v)
    # Z^z X^x per wire = (-1)^{|x&z|} W(x, z); label phase counts powers of i.
    phase = (p.phase_exponent + 2 * _popcount(x & z)) % 4
    return (x, z, phase)


def _bits_to_label(bits: PauliBits, n: int) -> PauliLabel:
    x, z, phase = bits
    xs = tuple((x >> w) & 1 for w in range(n))
    zs = tuple((z >> w) & 1 for w in range(n))
    pe = (phase - 2 * _popcount(x & z)) % 4
    return PauliLabel(xs, zs, 2, pe)


@lru_cache(maxsize=32768)
def _inverse_cached(c: CliffordTableau) -> CliffordTableau:
    return c.inverse()


def conjugate_pauli(c: CliffordTableau, p: PauliLabel) -> PauliLabel:
    """C^dag P C with the phase tracked (decode-direction convention)."""
    if p.n != c.n:
        raise ValueError("dimension mismatch")
    return _bits_to_label(_inverse_cached(c).apply_bits(_label_to_bits(p)), c.n)


def conjugate_pauli_encode(c: CliffordTableau, p: PauliLabel) -> PauliLabel:
    """C P C^dag, the image direction stored in the tableau."""
    if p.n != c.n:
        raise ValueError("dimension mismatch")
    return _bits_to_label(c.apply_bits(_label_to_bits(p)), c.n)


def tableau_to_key_string(tab: CliffordTableau) -> str:
    """Fixed-width digit-string serialization; replays deterministically."""
    bits = []
    for x, z, s in tab.x_images + tab.z_images:
        for w in range(tab.n):
            bits.append((x >> w) & 1)
        for w in range(tab.n):
            bits.append((z >> w) & 1)
        bits.append(s)
    return "".join(str(b) for b in bits)


def tableau_from_key_string(key: str, n: int) -> CliffordTableau:
    width = 2 * n + 1
    if len(key) != 2 * n * width:
        raise ValueError("key string has wrong length")
    entries = []
    for i in range(2 * n):
        chunk = key[i * width : (i + 1) * width]
        x = sum(int(chunk[w]) << w for w in range(n))
        z = sum(int(chunk[n + w]) << w for w in range(n))
        entries.append((x, z, int(chunk[2 * n])))
    tab = CliffordTableau(n, tuple(entries[:n]), tuple(entries[n:]))
    if not tab.is_valid():
        raise ValueError("key string does not encode a valid Clifford")
    return tab
