"""Circuit descriptions, the plain reference simulator, and the universal
(circuit-hiding) construction.

Circuit files are JSON: {"q": 5, "n": 2, "output": 1, "gates": [{"g":
"SUM", "wires": [0, 1]}, ...]}.  Gate powers default to 1.  Qudit circuits
draw from {X, Z, SUM, F, TOFFOLI, MEASURE}; qubit circuits (used by the
Clifford-authenticated protocol) from {H, K, CNOT, X, Z, MEASURE}.  An
instance intended as a decision problem measures exactly one wire, the
designated output, as its final gate; the run accepts iff that digit
reads 1.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import qsim
from .qsim import PureState

QUDIT_GATES = {"X": 1, "Z": 1, "SUM": 2, "F": 1, "TOFFOLI": 3, "MEASURE": 1}
QUBIT_GATES = {"H": 1, "K": 1, "CNOT": 2, "X": 1, "Z": 1, "MEASURE": 1}


@dataclass(frozen=True)
class Gate:
    name: str
    wires: tuple[int, ...]
    power: int = 1

    def to_json(self) -> dict:
        out = {"g": self.name, "wires": list(self.wires)}
        if self.power != 1:
            out["power"] = self.power
        return out


@dataclass(frozen=True)
class CircuitIR:
    q: int
    n: int
    gates: tuple[Gate, ...]
    output_wire: int = 0

    def __post_init__(self):
        table = QUBIT_GATES if self.q == 2 else QUDIT_GATES
        for g in self.gates:
            if g.name not in table:
                raise ValueError(f"gate {g.name} not in the q={self.q} gate set")
            if len(g.wires) != table[g.name]:
                raise ValueError(f"gate {g.name} takes {table[g.name]} wires")
            if len(set(g.wires)) != len(g.wires):
                raise ValueError("gate wires must be distinct")
            if any(w < 0 or w >= self.n for w in g.wires):
                raise ValueError("wire out of range")
        if not 0 <= self.output_wire < self.n:
            raise ValueError("output wire out of range")

    def measurements(self) -> list[Gate]:
        return [g for g in self.gates if g.name == "MEASURE"]

    def validate_decision_instance(self):
        """One measurement, on the output wire, as the final gate."""
        meas = self.measurements()
        if len(meas) != 1 or self.gates[-1].name != "MEASURE":
            raise ValueError("decision instances measure exactly once, last")
        if meas[0].wires[0] != self.output_wire:
            raise ValueError("final measurement must hit the output wire")

    def to_json(self) -> str:
        payload = {
            "q": self.q,
            "n": self.n,
            "output": self.output_wire,
            "gates": [g.to_json() for g in self.gates],
        }
        return json.dumps(payload, sort_keys=True)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def circuit_from_json(text: str) -> CircuitIR:
    payload = json.loads(text)
    gates = tuple(
        Gate(g["g"], tuple(g["wires"]), int(g.get("power", 1)))
        for g in payload["gates"]
    )
    return CircuitIR(
        int(payload["q"]), int(payload["n"]), gates, int(payload.get("output", 0))
    )


def load_circuit(path: str) -> CircuitIR:
    with open(path) as fh:
        return circuit_from_json(fh.read())


def simulate_plain(
    circuit: CircuitIR,
    inputs: Optional[Sequence[int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[dict[int, int], PureState, dict[int, np.ndarray]]:
    """Reference execution on bare qudits, no authentication.

    Returns (measured digits by wire, final state, exact outcome
    distribution per measured wire just before its measurement).  With no
    rng, measurements take the most probable branch deterministically,
    which is exact for the deterministic fixtures used in tests.
    """
    q, n = circuit.q, circuit.n
    digits = list(inputs) if inputs is not None else [0] * n
    state = PureState.basis(q, digits)
    outcomes: dict[int, int] = {}
    dists: dict[int, np.ndarray] = {}
    h = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    k_gate = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
    for g in circuit.gates:
        if g.name == "X":
            lab = [0] * n
            lab[g.wires[0]] = g.power
            state = qsim.apply_pauli(state, qsim.PauliLabel(tuple(lab), (0,) * n, q))
        elif g.name == "Z":
            lab = [0] * n
            lab[g.wires[0]] = g.power
            state = qsim.apply_pauli(state, qsim.PauliLabel((0,) * n, tuple(lab), q))
        elif g.name == "SUM":
            for _ in range(g.power % q):
                state = qsim.apply_sum(state, *g.wires)
        elif g.name == "F":
            state = qsim.apply_fourier_r(state, g.wires[0], 1)
        elif g.name == "TOFFOLI":
            state = qsim.apply_toffoli(state, *g.wires)
        elif g.name == "H":
            state = qsim.apply_unitary(state, h, list(g.wires))
        elif g.name == "K":
            state = qsim.apply_unitary(state, k_gate, list(g.wires))
        elif g.name == "CNOT":
            state = qsim.apply_sum(state, *g.wires)
        elif g.name == "MEASURE":
            w = g.wires[0]
            tab = qsim.digit_table(q, n)[:, w]
            dist = np.zeros(q)
            np.add.at(dist, tab, np.abs(state.amplitudes) ** 2)
            dists[w] = dist
            if rng is None:
                out = int(np.argmax(dist))
                mask = tab == out
                amps = np.where(mask, state.amplitudes, 0)
                amps = amps / np.linalg.norm(amps)
                state = PureState(amps, q, n)
            else:
                (out,), state, _ = qsim.measure_standard(state, [w], rng)
            outcomes[w] = out
    return outcomes, state, dists


def simulate_plain_sparse(
    circuit: CircuitIR,
    inputs: Optional[Sequence[int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[dict[int, int], "SparseKernel", list[int]]:
    """Plain execution on the sparse kernel, for circuits too wide for the
    dense simulator.  Measured wires collapse (rng required if any)."""
    from .kernel import SparseKernel

    q, n = circuit.q, circuit.n
    digits = list(inputs) if inputs is not None else [0] * n
    k = SparseKernel(q)
    wires = k.new_wires(digits)
    outcomes: dict[int, int] = {}
    h = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
    k_gate = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
    for g in circuit.gates:
        ws = [wires[w] for w in g.wires]
        if g.name == "X":
            k.x_power(ws[0], g.power)
        elif g.name == "Z":
            k.z_power(ws[0], g.power)
        elif g.name == "SUM":
            k.sum_(ws[0], ws[1], g.power)
        elif g.name == "F":
            k.fourier(ws[0], 1)
        elif g.name == "TOFFOLI":
            k.toffoli(ws[0], ws[1], ws[2])
        elif g.name == "H":
            k.unitary(ws, h)
        elif g.name == "K":
            k.unitary(ws, k_gate)
        elif g.name == "CNOT":
            k.sum_(ws[0], ws[1])
        elif g.name == "MEASURE":
            if rng is None:
                raise ValueError("sparse plain runs need an rng for measurement")
            (out,), _ = k.measure(ws, rng)
            outcomes[g.wires[0]] = out
    live = [w for i, w in enumerate(wires) if w in k.live_wires()]
    return outcomes, k, live


# Universal circuit: a fixed public gate sequence whose behaviour on the
# data wires is selected by control registers.  Hidden circuits compile to
# a per-slot control assignment; every slot applies
#   X^{a_w} on each data wire   (SUM from an x-control wire),
#   Z^{b_w} on each data wire   (CZ from a z-control wire, expanded as
#                                F^3, SUM, F on the data wire),
#   SUM^{s_uv} on each ordered data pair (TOFFOLI with an s-control wire),
# so a hidden gate never changes which instructions the evaluator sees.
# F and TOFFOLI are not selectable per slot (selecting a basis-changing
# gate by a control value is outside this gate set); hidden circuits are
# therefore drawn from {X^a, Z^b, SUM^s}.


@dataclass(frozen=True)
class UniversalLayout:
    n_data: int
    slots: int
    q: int

    @property
    def controls_per_slot(self) -> int:
        return 2 * self.n_data + self.n_data * (self.n_data - 1)

    @property
    def n_controls(self) -> int:
        return self.slots * self.controls_per_slot

    @property
    def n_total(self) -> int:
        return self.n_data + self.n_controls

    def control_wire(self, slot: int, kind: str, which: int) -> int:
        """Absolute wire of a control digit; kinds: 'x', 'z', 's'."""
        base = self.n_data + slot * self.controls_per_slot
        if kind == "x":
            return base + which
        if kind == "z":
            return base + self.n_data + which
        if kind == "s":
            return base + 2 * self.n_data + which
        raise ValueError(kind)

    def pair_index(self, u: int, v: int) -> int:
        pairs = [
            (a, b)
            for a in range(self.n_data)
            for b in range(self.n_data)
            if a != b
        ]
        return pairs.index((u, v))


def build_universal_circuit(
    n_data: int, slots: int, q: int, output_wire: int = 0, measure: bool = True
) -> tuple[CircuitIR, UniversalLayout]:
    """The fixed universal circuit for `slots` hidden gates on n data wires."""
    layout = UniversalLayout(n_data, slots, q)
    gates: list[Gate] = []
    for s in range(slots):
        for w in range(n_data):
            gates.append(Gate("SUM", (layout.control_wire(s, "x", w), w)))
        for w in range(n_data):
            zc = layout.control_wire(s, "z", w)
            gates.append(Gate("F", (w,)))
            gates.append(Gate("F", (w,)))
            gates.append(Gate("F", (w,)))
            gates.append(Gate("SUM", (zc, w)))
            gates.append(Gate("F", (w,)))
        pi = 0
        for u in range(n_data):
            for v in range(n_data):
                if u == v:
                    continue
                sc = layout.control_wire(s, "s", pi)
                gates.append(Gate("TOFFOLI", (sc, u, v)))
                pi += 1
    if measure:
        gates.append(Gate("MEASURE", (output_wire,)))
    return CircuitIR(q, layout.n_total, tuple(gates), output_wire), layout


HIDEABLE = ("X", "Z", "SUM")


def compile_hidden_circuit(
    hidden: CircuitIR, layout: UniversalLayout
) -> list[int]:
    """Control digits (the classical circuit description) for a hidden circuit.

    One hidden gate per slot; unused slots keep all-zero controls and act
    as identity.
    """
    if hidden.q != layout.q or hidden.n != layout.n_data:
        raise ValueError("hidden circuit shape does not match the layout")
    ops = [g for g in hidden.gates if g.name != "MEASURE"]
    if len(ops) > layout.slots:
        raise ValueError(
            f"hidden circuit has {len(ops)} gates but only {layout.slots} slots"
        )
    controls = [0] * layout.n_controls
    for s, g in enumerate(ops):
        if g.name not in HIDEABLE:
            raise ValueError(f"gate {g.name} cannot be hidden by this construction")
        if g.name == "X":
            wire = layout.control_wire(s, "x", g.wires[0]) - layout.n_data
            controls[wire] = g.power % layout.q
        elif g.name == "Z":
            wire = layout.control_wire(s, "z", g.wires[0]) - layout.n_data
            controls[wire] = g.power % layout.q
        else:  # SUM
            pi = layout.pair_index(*g.wires)
            wire = layout.control_wire(s, "s", pi) - layout.n_data
            controls[wire] = g.power % layout.q
    return controls
