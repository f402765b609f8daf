"""Shared simulation kernel for protocol runs.

All live qudits belong to one logical global statevector; the kernel stores
it factored into "blobs" (tensor factors) holding sparse amplitude lists,
merging blobs lazily when a gate entangles them and dropping wires as they
are measured.  This keeps authenticated-protocol runs exact while staying
within the amplitude ceiling: encoded registers have small support (a
q-dimensional code spans q^{d+1} basis states), so sparsity is structural,
not approximate.  Amplitudes below 1e-14 of the norm are pruned to absorb
float dust from Fourier cancellations.

Wire order inside a blob follows allocation/merge order; position 0 is the
most significant digit, matching the dense simulator's convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import qsim

PRUNE = 1e-14


@dataclass
class Blob:
    wires: list[int]
    idx: np.ndarray  # int64 basis indices
    amp: np.ndarray  # complex128

    def position(self, wire: int) -> int:
        return self.wires.index(wire)

    def weight(self, pos: int, q: int) -> int:
        return q ** (len(self.wires) - 1 - pos)

    def digits(self, pos: int, q: int) -> np.ndarray:
        return (self.idx // self.weight(pos, q)) % q

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amp) ** 2)))


class SparseKernel:
    """Global quantum state over dynamically allocated qudit wires."""

    def __init__(self, q: int, max_support: Optional[int] = None):
        self.q = q
        self.max_support = max_support or qsim.max_amplitudes()
        self._next_wire = 0
        self._next_blob = 0
        self.blobs: dict[int, Blob] = {}
        self.wire_blob: dict[int, int] = {}

    # allocation

    def new_wires(self, digits: Sequence[int]) -> list[int]:
        """Fresh wires in the product basis state |digits>."""
        ids = [self._alloc_id() for _ in digits]
        idx = np.array([qsim.digits_to_index(list(digits), self.q)], dtype=np.int64)
        amp = np.array([1.0 + 0j])
        self._install(ids, idx, amp)
        return ids

    def new_sparse(
        self, n_wires: int, indices: Sequence[int], amps: Sequence[complex]
    ) -> list[int]:
        """Fresh wires initialized to a given sparse state."""
        ids = [self._alloc_id() for _ in range(n_wires)]
        idx = np.asarray(indices, dtype=np.int64)
        amp = np.asarray(amps, dtype=np.complex128)
        order = np.argsort(idx)
        self._install(ids, idx[order], amp[order])
        return ids

    def _alloc_id(self) -> int:
        self._next_wire += 1
        return self._next_wire - 1

    def _install(self, wires: list[int], idx: np.ndarray, amp: np.ndarray):
        bid = self._next_blob
        self._next_blob += 1
        self.blobs[bid] = Blob(list(wires), idx, amp)
        for w in wires:
            self.wire_blob[w] = bid

    # bookkeeping

    def live_wires(self) -> set[int]:
        return set(self.wire_blob)

    def support(self) -> int:
        return sum(len(b.idx) for b in self.blobs.values())

    def _blob(self, wire: int) -> Blob:
        return self.blobs[self.wire_blob[wire]]

    def _ensure_together(self, wires: Sequence[int]) -> Blob:
        bids = []
        for w in wires:
            if w not in self.wire_blob:
                raise KeyError(f"wire {w} is not live")
            bid = self.wire_blob[w]
            if bid not in bids:
                bids.append(bid)
        if len(bids) == 1:
            return self.blobs[bids[0]]
        base = self.blobs[bids[0]]
        for other_id in bids[1:]:
            other = self.blobs.pop(other_id)
            shift = self.q ** len(other.wires)
            if len(base.idx) * len(other.idx) > self.max_support:
                raise MemoryError("merging blobs would exceed the support ceiling")
            idx = (base.idx[:, None] * shift + other.idx[None, :]).reshape(-1)
            amp = (base.amp[:, None] * other.amp[None, :]).reshape(-1)
            base.wires.extend(other.wires)
            base.idx, base.amp = idx, amp
            for w in other.wires:
                self.wire_blob[w] = bids[0]
        return base

    def _combine(self, blob: Blob, idx: np.ndarray, amp: np.ndarray):
        uniq, inverse = np.unique(idx, return_inverse=True)
        merged = np.zeros(len(uniq), dtype=np.complex128)
        np.add.at(merged, inverse, amp)
        norm = np.sqrt(np.sum(np.abs(merged) ** 2))
        keep = np.abs(merged) > PRUNE * max(norm, 1e-300)
        blob.idx = uniq[keep]
        blob.amp = merged[keep]
        if len(blob.idx) > self.max_support:
            raise MemoryError("support ceiling exceeded")

    # gates (permutation/phase gates never grow the support)

    def x_power(self, wire: int, power: int):
        if power % self.q == 0:
            return
        b = self._blob(wire)
        p = b.position(wire)
        w = b.weight(p, self.q)
        d = b.digits(p, self.q)
        b.idx = b.idx + (((d + power) % self.q) - d) * w

    def z_power(self, wire: int, power: int):
        if power % self.q == 0:
            return
        b = self._blob(wire)
        d = b.digits(b.position(wire), self.q)
        b.amp = b.amp * qsim.omega(self.q) ** ((power * d) % self.q)

    def sum_(self, control: int, target: int, power: int = 1):
        if power % self.q == 0:
            return
        b = self._ensure_together([control, target])
        pc_, pt = b.position(control), b.position(target)
        dc = b.digits(pc_, self.q)
        dt = b.digits(pt, self.q)
        w = b.weight(pt, self.q)
        b.idx = b.idx + (((dt + power * dc) % self.q) - dt) * w

    def cz(self, a: int, bwire: int, weight: int = 1):
        if weight % self.q == 0:
            return
        b = self._ensure_together([a, bwire])
        da = b.digits(b.position(a), self.q)
        db = b.digits(b.position(bwire), self.q)
        b.amp = b.amp * qsim.omega(self.q) ** ((weight * da * db) % self.q)

    def toffoli(self, a: int, bwire: int, c: int, power: int = 1):
        """c += power * a * b."""
        if power % self.q == 0:
            return
        b = self._ensure_together([a, bwire, c])
        da = b.digits(b.position(a), self.q)
        db = b.digits(b.position(bwire), self.q)
        dc = b.digits(b.position(c), self.q)
        w = b.weight(b.position(c), self.q)
        b.idx = b.idx + (((dc + power * da * db) % self.q) - dc) * w

    def fourier(self, wire: int, r: int = 1, dagger: bool = False):
        q = self.q
        if r % q == 0:
            raise ValueError("Fourier variant r must be nonzero")
        b = self._blob(wire)
        if len(b.idx) * q > self.max_support:
            raise MemoryError("support ceiling exceeded")
        p = b.position(wire)
        w = b.weight(p, q)
        d = b.digits(p, q)
        base = b.idx - d * w
        targets = np.arange(q, dtype=np.int64)
        idx = (base[:, None] + targets[None, :] * w).reshape(-1)
        sign = -1 if dagger else 1
        phases = qsim.omega(q) ** ((sign * r * d[:, None] * targets[None, :]) % q)
        amp = (b.amp[:, None] * phases / np.sqrt(q)).reshape(-1)
        self._combine(b, idx, amp)

    def unitary(self, wires: Sequence[int], u: np.ndarray):
        """Dense q^k unitary on k wires (most significant first)."""
        q = self.q
        k = len(wires)
        if u.shape != (q**k, q**k):
            raise ValueError("unitary shape mismatch")
        b = self._ensure_together(wires)
        if len(b.idx) * q**k > self.max_support:
            raise MemoryError("support ceiling exceeded")
        pos = [b.position(w) for w in wires]
        wgt = np.array([b.weight(p, q) for p in pos], dtype=np.int64)
        digs = np.stack([b.digits(p, q) for p in pos], axis=1)  # (S, k)
        local_w = q ** (k - 1 - np.arange(k))
        col = digs @ local_w
        base = b.idx - digs @ wgt
        rows = qsim.digit_table(q, k) @ wgt  # (q^k,)
        idx = (base[:, None] + rows[None, :]).reshape(-1)
        amp = (b.amp[:, None] * u[:, col].T).reshape(-1)
        self._combine(b, idx, amp)

    def depolarize(self, wires: Sequence[int], p: float, rng: np.random.Generator):
        """With probability p per wire, apply a uniform non-identity Pauli."""
        q = self.q
        for w in wires:
            if rng.random() < p:
                while True:
                    x, z = int(rng.integers(0, q)), int(rng.integers(0, q))
                    if x or z:
                        break
                self.x_power(w, x)
                self.z_power(w, z)

    # measurement

    def measure(
        self, wires: Sequence[int], rng: np.random.Generator
    ) -> tuple[tuple[int, ...], float]:
        """Standard-basis measurement; measured wires are consumed."""
        q = self.q
        b = self._ensure_together(wires)
        pos = [b.position(w) for w in wires]
        k = len(wires)
        local_w = q ** (k - 1 - np.arange(k))
        keys = np.zeros(len(b.idx), dtype=np.int64)
        for lw, p in zip(local_w, pos):
            keys += b.digits(p, q) * lw
        probs = np.zeros(q**k)
        np.add.at(probs, keys, np.abs(b.amp) ** 2)
        total = probs.sum()
        cum = np.cumsum(probs)
        u = rng.random() * total
        outcome_key = min(int(np.searchsorted(cum, u, side="right")), q**k - 1)
        p_branch = float(probs[outcome_key] / total)
        mask = keys == outcome_key
        b.idx = b.idx[mask]
        b.amp = b.amp[mask] / np.sqrt(probs[outcome_key])
        self._drop_wires(b, wires)
        return qsim.index_to_digits(outcome_key, q, k), p_branch

    def _drop_wires(self, b: Blob, wires: Sequence[int]):
        q = self.q
        keep_pos = [i for i, w in enumerate(b.wires) if w not in set(wires)]
        if keep_pos:
            new_idx = np.zeros(len(b.idx), dtype=np.int64)
            for rank, p in enumerate(keep_pos):
                w_new = q ** (len(keep_pos) - 1 - rank)
                new_idx += b.digits(p, q) * w_new
            b.idx = new_idx
        else:
            b.idx = np.zeros(len(b.idx), dtype=np.int64)
        bid = self.wire_blob[wires[0]]
        for w in wires:
            self.wire_blob.pop(w)
        b.wires = [w for w in b.wires if w not in set(wires)]
        if not b.wires:
            del self.blobs[bid]
        else:
            order = np.argsort(b.idx)
            b.idx = b.idx[order]
            b.amp = b.amp[order]

    # inspection

    def dense_state(self, wires: Sequence[int]) -> qsim.PureState:
        """Dense export; the wires must form complete blobs on their own."""
        q = self.q
        b = self._ensure_together(wires)
        if set(b.wires) != set(wires):
            raise ValueError("wires are entangled with others; cannot export")
        qsim._check_size(q, len(wires))
        # permute blob order to the requested order
        perm = [b.position(w) for w in wires]
        k = len(wires)
        out = np.zeros(q**k, dtype=np.complex128)
        new_idx = np.zeros(len(b.idx), dtype=np.int64)
        for rank, p in enumerate(perm):
            new_idx += b.digits(p, q) * q ** (k - 1 - rank)
        out[new_idx] = b.amp
        norm = np.linalg.norm(out)
        return qsim.PureState(out / norm, q, k)

    def sparse_state(self, wires: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """(indices, amplitudes) over the given wires, in the given order."""
        q = self.q
        b = self._ensure_together(wires)
        if set(b.wires) != set(wires):
            raise ValueError("wires are entangled with others; cannot export")
        perm = [b.position(w) for w in wires]
        k = len(wires)
        new_idx = np.zeros(len(b.idx), dtype=np.int64)
        for rank, p in enumerate(perm):
            new_idx += b.digits(p, q) * q ** (k - 1 - rank)
        order = np.argsort(new_idx)
        norm = b.norm()
        return new_idx[order], b.amp[order] / norm

    def reduced_density(self, wires: Sequence[int]) -> np.ndarray:
        """Exact reduced density matrix of the listed wires."""
        q = self.q
        k = len(wires)
        qsim._check_size(q, 2 * k)
        by_blob: dict[int, list[int]] = {}
        for w in wires:
            by_blob.setdefault(self.wire_blob[w], []).append(w)
        rho = np.eye(1, dtype=np.complex128)
        for bid, ws in by_blob.items():
            rho = np.kron(rho, self._blob_reduced(self.blobs[bid], ws))
        if len(by_blob) > 1:
            # reorder kron factors to match the requested wire order
            got_order = [w for bid in by_blob for w in by_blob[bid]]
            rho = _permute_density(rho, got_order, list(wires), q)
        return rho

    def _blob_reduced(self, b: Blob, wires: list[int]) -> np.ndarray:
        q = self.q
        keep_pos = [b.position(w) for w in wires]
        rest_pos = [i for i in range(len(b.wires)) if i not in keep_pos]
        k = len(keep_pos)
        keep_idx = np.zeros(len(b.idx), dtype=np.int64)
        for rank, p in enumerate(keep_pos):
            keep_idx += b.digits(p, q) * q ** (k - 1 - rank)
        rest_idx = np.zeros(len(b.idx), dtype=np.int64)
        for rank, p in enumerate(rest_pos):
            rest_idx += b.digits(p, q) * q ** (len(rest_pos) - 1 - rank)
        norm = b.norm()
        amps = b.amp / norm
        rho = np.zeros((q**k, q**k), dtype=np.complex128)
        order = np.argsort(rest_idx, kind="stable")
        ri, ki, av = rest_idx[order], keep_idx[order], amps[order]
        start = 0
        for end in np.flatnonzero(np.diff(ri)).tolist() + [len(ri) - 1]:
            seg = slice(start, end + 1)
            rho[np.ix_(ki[seg], ki[seg])] += np.outer(av[seg], av[seg].conj())
            start = end + 1
        return rho


def _permute_density(rho: np.ndarray, got: list[int], want: list[int], q: int) -> np.ndarray:
    k = len(got)
    perm = [got.index(w) for w in want]
    t = rho.reshape((q,) * (2 * k))
    t = np.transpose(t, perm + [k + p for p in perm])
    return t.reshape(q**k, q**k)
