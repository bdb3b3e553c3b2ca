"""Statevector simulator, gate/circuit containers and the field <-> register map.

Wire 0 is the most significant bit of the amplitude index. Within each
position block the first wire is the most significant bit of the site index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import gates as g
from .lattice import LatticeSpec, SpinorField

_FIXED = {"H": g.H, "S": g.S, "T": g.T, "X": g.X, "Y": g.Y, "Z": g.Z, "I": g.I2,
          "SDG": g.S.conj().T, "TDG": g.T.conj().T}
_PARAM = {"RX": g.rx, "RY": g.ry, "RZ": g.rz, "P": g.phase}
# kinds whose matrix is stored explicitly or that carry per-pattern tables
_TABLE_KINDS = {"U", "U2", "UC", "UCRY", "UCRZ", "DIAG"}


class CircuitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Gate:
    """A (possibly controlled) gate.

    ``controls`` holds (wire, polarity) pairs. Table kinds: ``UC`` applies
    ``table[p]`` to the target for control pattern p, ``UCRY``/``UCRZ`` are the
    same with rotation angles, ``DIAG`` multiplies basis state p of the
    targets by ``exp(i * params[p])``.
    """

    kind: str
    targets: tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()
    params: tuple[float, ...] = ()
    table: np.ndarray | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple((int(w), int(p)) for w, p in self.controls))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if kind not in _FIXED and kind not in _PARAM and kind not in _TABLE_KINDS and kind != "CNOT":
            raise CircuitError(f"unknown gate kind {kind!r}")
        wires = list(self.targets) + [w for w, _ in self.controls]
        if len(set(wires)) != len(wires):
            raise CircuitError(f"{kind}: control and target wires overlap: {wires}")
        if any(p not in (0, 1) for _, p in self.controls):
            raise CircuitError("control polarity must be 0 or 1")
        if kind in ("UC", "UCRY", "UCRZ") and any(p != 1 for _, p in self.controls):
            raise CircuitError("uniformly controlled gates take every control pattern; polarity is fixed to 1")
        if kind in ("U", "U2", "UC") and self.table is not None:
            tab = np.asarray(self.table, dtype=complex)
            object.__setattr__(self, "table", tab)
            mats = tab.reshape(-1, tab.shape[-2], tab.shape[-1])
            for m in mats:
                if np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) > 1e-12:
                    raise CircuitError(f"{kind}: stored matrix is not unitary")

    @property
    def wires(self) -> tuple[int, ...]:
        return tuple(w for w, _ in self.controls) + self.targets

    def base_matrix(self) -> np.ndarray:
        """Matrix applied to the targets when all controls are satisfied (not for table kinds)."""
        if self.kind == "CNOT":
            return g.X
        if self.kind in _FIXED:
            return _FIXED[self.kind]
        if self.kind in _PARAM:
            return _PARAM[self.kind](self.params[0])
        if self.kind in ("U", "U2"):
            return self.table
        raise CircuitError(f"{self.kind} has no single base matrix")

    def inverse(self) -> Gate:
        k = self.kind
        if k in ("H", "X", "Y", "Z", "CNOT", "I"):
            return self
        if k in ("S", "T"):
            return replace(self, kind=k + "DG")
        if k in ("SDG", "TDG"):
            return replace(self, kind=k[:-2])
        if k in _PARAM or k in ("UCRY", "UCRZ", "DIAG"):
            return replace(self, params=tuple(-p for p in self.params))
        if k in ("U", "U2"):
            return replace(self, table=self.table.conj().T)
        if k == "UC":
            return replace(self, table=np.conj(np.swapaxes(self.table, -1, -2)))
        raise CircuitError(f"cannot invert {k}")

    def with_control(self, wire: int, polarity: int = 1) -> Gate:
        if self.kind in ("UC", "UCRY", "UCRZ", "DIAG"):
            # extend the table: the extra control selects identity on the other value
            return _control_table_gate(self, wire, polarity)
        return replace(self, controls=((wire, polarity),) + self.controls)

    def text(self) -> str:
        if self.kind == "X" and len(self.controls) == 1 and self.controls[0][1] == 1:
            return f"CNOT {self.targets[0]} [{self.controls[0][0]}+]"
        params = ""
        if self.params:
            params = "(" + ",".join(f"{p:.12g}" for p in self.params) + ")"
        elif self.table is not None:
            params = "(" + ",".join(f"{v.real:.12g}{v.imag:+.12g}j" for v in np.ravel(self.table)) + ")"
        ctrl = ""
        if self.controls:
            ctrl = " [" + " ".join(f"{w}{'+' if p else '-'}" for w, p in self.controls) + "]"
        return f"{self.kind}{params} {','.join(map(str, self.targets))}{ctrl}"


def _control_table_gate(gate: Gate, wire: int, polarity: int) -> Gate:
    """Controlled version of a table gate built by prepending a control to the table index."""
    if gate.kind == "DIAG":
        # DIAG on targets: add the wire as the leading target with zero phases on the inactive value
        n = len(gate.params)
        inactive = [0.0] * n
        params = (list(gate.params) + inactive) if polarity == 0 else (inactive + list(gate.params))
        return Gate("DIAG", (wire,) + gate.targets, gate.controls, tuple(params))
    if gate.kind in ("UCRY", "UCRZ"):
        n = len(gate.params)
        idle = [0.0] * n
        params = (list(gate.params) + idle) if polarity == 0 else (idle + list(gate.params))
        return Gate(gate.kind, gate.targets, ((wire, 1),) + gate.controls, tuple(params))
    tab = gate.table
    eye = np.broadcast_to(np.eye(tab.shape[-1]), tab.shape)
    stacked = np.concatenate([tab, eye]) if polarity == 0 else np.concatenate([eye, tab])
    return Gate("UC", gate.targets, ((wire, 1),) + gate.controls, table=stacked)


@dataclass
class Circuit:
    n_wires: int
    gates: list[Gate] = field(default_factory=list)
    global_phase: float = 0.0
    label: str = ""
    ancillas: tuple[int, ...] = ()
    metadata: dict = field(default_factory=dict)

    def append(self, gate: Gate) -> Circuit:
        for w in gate.wires:
            if not 0 <= w < self.n_wires:
                raise CircuitError(f"wire {w} outside a {self.n_wires}-wire circuit")
        self.gates.append(gate)
        return self

    def add(self, kind: str, targets, controls=(), params=(), table=None) -> Circuit:
        if isinstance(targets, int):
            targets = (targets,)
        return self.append(Gate(kind, tuple(targets), tuple(controls), tuple(params), table))

    def extend(self, other: Circuit | Iterable[Gate]) -> Circuit:
        if isinstance(other, Circuit):
            if other.n_wires > self.n_wires:
                raise CircuitError("appended circuit is wider than the host")
            self.global_phase += other.global_phase
            gates = other.gates
        else:
            gates = other
        for gate in gates:
            self.append(gate)
        return self

    def copy(self) -> Circuit:
        return Circuit(self.n_wires, list(self.gates), self.global_phase, self.label, self.ancillas,
                       dict(self.metadata))

    def inverse(self) -> Circuit:
        return Circuit(self.n_wires, [gt.inverse() for gt in reversed(self.gates)], -self.global_phase,
                       self.label + "^-1", self.ancillas, dict(self.metadata))

    def controlled(self, wire: int, polarity: int = 1) -> Circuit:
        """Every gate gains a control; the global phase becomes a phase on the control wire."""
        out = Circuit(self.n_wires, [gt.with_control(wire, polarity) for gt in self.gates], 0.0,
                      f"c-{self.label}", self.ancillas, dict(self.metadata))
        if self.global_phase:
            ph = self.global_phase
            out.append(Gate("DIAG", (wire,), (), (0.0, ph) if polarity else (ph, 0.0)))
        return out

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def count(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for gt in self.gates:
            counts[gt.kind] = counts.get(gt.kind, 0) + 1
        return counts

    def dump(self) -> str:
        head = [f"# circuit {self.label} wires={self.n_wires} gates={len(self.gates)}"]
        if self.global_phase:
            head.append(f"# global_phase={self.global_phase:.12g}")
        return "\n".join(head + [gt.text() for gt in self.gates]) + "\n"

    def unitary(self) -> np.ndarray:
        dim = 2**self.n_wires
        out = np.empty((dim, dim), dtype=complex)
        for col in range(dim):
            st = np.zeros(dim, dtype=complex)
            st[col] = 1.0
            out[:, col] = run(self, st)
        return out


@dataclass(frozen=True)
class Layout:
    """Named wire blocks of a Dirac register: spinor, x, y, z, ancillas, extra named wires."""

    spinor: tuple[int, ...]
    x: tuple[int, ...]
    y: tuple[int, ...]
    z: tuple[int, ...]
    ancilla: tuple[int, ...]
    named: tuple[tuple[str, int], ...] = ()
    reduced_axis: int | None = None

    @property
    def n_wires(self) -> int:
        return len(self.spinor) + len(self.x) + len(self.y) + len(self.z) + len(self.ancilla) + len(self.named)

    def axis(self, a: int) -> tuple[int, ...]:
        return (self.x, self.y, self.z)[a]

    @property
    def position(self) -> tuple[int, ...]:
        return self.x + self.y + self.z

    @property
    def data_wires(self) -> int:
        return len(self.spinor) + len(self.position)

    def wire(self, name: str) -> int:
        for n, w in self.named:
            if n == name:
                return w
        raise KeyError(f"no wire named {name!r}")


# component pairs kept by the reduced one-dimensional encoding, per streaming axis
REDUCED_COMPONENTS = {0: (0, 3), 1: (0, 3), 2: (0, 2)}


def dirac_layout(spec: LatticeSpec, n_ancilla: int | None = None, extra: Sequence[str] = (),
                 reduced: bool = False) -> Layout:
    """Wire map: 2 spinor wires (1 if reduced), position blocks, walk ancillas, then extra named wires.

    The default ancilla count is max(n_a) for the full register, which gives
    4 n_x + 2 wires in the symmetric 3-D case, and max(0, n - 2) in reduced 1-D mode.
    """
    reduced_axis = None
    if reduced:
        if len(spec.active_axes) != 1:
            raise ValueError("reduced encoding needs exactly one active axis")
        reduced_axis = spec.active_axes[0]
    n_spin = 1 if reduced else 2
    if n_ancilla is None:
        n_ancilla = max(0, max(spec.qubits) - 2) if reduced else max(spec.qubits)
    w = 0
    blocks = []
    for size in (n_spin, *spec.qubits, n_ancilla):
        blocks.append(tuple(range(w, w + size)))
        w += size
    named = tuple((name, w + i) for i, name in enumerate(extra))
    return Layout(blocks[0], blocks[1], blocks[2], blocks[3], blocks[4], named, reduced_axis)


@dataclass
class QuantumState:
    amps: np.ndarray
    layout: Layout | None = None

    @property
    def n_total(self) -> int:
        return int(round(math.log2(len(self.amps))))

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def copy(self) -> QuantumState:
        return QuantumState(self.amps.copy(), self.layout)


def zero_state(n: int) -> np.ndarray:
    st = np.zeros(2**n, dtype=complex)
    st[0] = 1.0
    return st


def _subview(psi: np.ndarray, controls) -> tuple[np.ndarray, list[int]]:
    idx = [slice(None)] * psi.ndim
    for w, p in controls:
        idx[w] = p
    removed = sorted(w for w, _ in controls)
    return psi[tuple(idx)], removed


def _shift(wire: int, removed: list[int]) -> int:
    return wire - sum(1 for r in removed if r < wire)


def apply(amps: np.ndarray, gate: Gate, n: int | None = None) -> np.ndarray:
    """Apply a gate in place to a flat amplitude vector and return it."""
    if n is None:
        n = int(round(math.log2(amps.size)))
    psi = amps.reshape((2,) * n)
    if max(gate.wires) >= n:
        raise CircuitError(f"gate {gate.text()} touches a wire outside the {n}-qubit state")
    kind = gate.kind
    if kind in ("UC", "UCRY", "UCRZ"):
        _apply_uniformly_controlled(psi, gate)
        return amps
    if kind == "DIAG":
        sub, removed = _subview(psi, gate.controls)
        axes = [_shift(t, removed) for t in gate.targets]
        k = len(axes)
        ph = np.exp(1j * np.asarray(gate.params)).reshape((2,) * k)
        moved = np.moveaxis(sub, axes, list(range(k)))
        moved *= ph.reshape(ph.shape + (1,) * (moved.ndim - k))
        return amps
    sub, removed = _subview(psi, gate.controls)
    m = gate.base_matrix()
    axes = [_shift(t, removed) for t in gate.targets]
    k = len(axes)
    if k == 1:
        ax = axes[0]
        a0 = np.take(sub, 0, axis=ax)
        a1 = np.take(sub, 1, axis=ax)
        n0 = m[0, 0] * a0 + m[0, 1] * a1
        n1 = m[1, 0] * a0 + m[1, 1] * a1
        sl0 = [slice(None)] * sub.ndim
        sl1 = [slice(None)] * sub.ndim
        sl0[ax], sl1[ax] = 0, 1
        sub[tuple(sl0)] = n0
        sub[tuple(sl1)] = n1
        return amps
    moved = np.moveaxis(sub, axes, list(range(k)))
    tensor = m.reshape((2,) * (2 * k))
    moved[...] = np.tensordot(tensor, moved, axes=(list(range(k, 2 * k)), list(range(k))))
    return amps


def _apply_uniformly_controlled(psi: np.ndarray, gate: Gate) -> None:
    ctrl = [w for w, _ in gate.controls]
    k = len(ctrl)
    tgt = gate.targets[0]
    moved = np.moveaxis(psi, ctrl + [tgt], list(range(k + 1)))
    block = moved.reshape(2**k, 2, -1)
    if gate.kind == "UC":
        mats = gate.table.reshape(2**k, 2, 2)
    elif gate.kind == "UCRY":
        mats = np.array([g.ry(a) for a in gate.params])
    else:
        mats = np.array([g.rz(a) for a in gate.params])
    if len(mats) != 2**k:
        raise CircuitError(f"uniformly controlled gate with {k} controls needs {2**k} entries, got {len(mats)}")
    new = np.einsum("kab,kbr->kar", mats, block)
    moved[...] = new.reshape(moved.shape)


def run(circuit: Circuit, amps: np.ndarray, with_global_phase: bool = False) -> np.ndarray:
    """Return circuit applied to a copy of amps."""
    out = np.array(amps, dtype=complex, copy=True)
    n = circuit.n_wires
    if out.size != 2**n:
        raise CircuitError(f"state has {out.size} amplitudes, circuit needs {2**n}")
    for gt in circuit.gates:
        apply(out, gt, n)
    if with_global_phase and circuit.global_phase:
        out *= np.exp(1j * circuit.global_phase)
    return out


def apply_circuit(state: QuantumState, circuit: Circuit, with_global_phase: bool = False) -> QuantumState:
    return QuantumState(run(circuit, state.amps, with_global_phase), state.layout)


def decompose_mcx(controls: Sequence[tuple[int, int]], target: int, ancillas: Sequence[int]) -> list[Gate]:
    """Multi-controlled X as X / CNOT / Toffoli gates with clean ancillas (V-chain).

    Uses max(0, c - 2) ancillas and 2c - 3 Toffolis for c >= 3 controls; the
    ancillas are returned to |0>. Negative-polarity controls are conjugated by X.
    """
    controls = list(controls)
    c = len(controls)
    need = max(0, c - 2)
    if len(ancillas) < need:
        raise CircuitError(f"{c}-controlled X needs {need} ancillas, got {len(ancillas)}")
    flips = [Gate("X", (w,)) for w, p in controls if p == 0]
    wires = [w for w, _ in controls]
    core: list[Gate] = []
    if c == 0:
        core.append(Gate("X", (target,)))
    elif c <= 2:
        core.append(Gate("X", (target,), tuple((w, 1) for w in wires)))
    else:
        anc = list(ancillas[:need])
        ladder = [Gate("X", (anc[0],), ((wires[0], 1), (wires[1], 1)))]
        for i in range(2, c - 1):
            ladder.append(Gate("X", (anc[i - 1],), ((wires[i], 1), (anc[i - 2], 1))))
        core.extend(ladder)
        core.append(Gate("X", (target,), ((wires[-1], 1), (anc[-1], 1))))
        core.extend(reversed(ladder))
    return flips + core + flips


def apply_multi_controlled_x(amps: np.ndarray, controls, target: int, ancilla_pool: Sequence[int],
                             check: bool = True) -> list[Gate]:
    """Run the ancilla decomposition of a multi-controlled X in place; returns the emitted gates."""
    n = int(round(math.log2(amps.size)))
    emitted = decompose_mcx(controls, target, ancilla_pool)
    used = list(ancilla_pool[: max(0, len(controls) - 2)])
    psi = amps.reshape((2,) * n)
    if check and used:
        sub, _ = _subview(psi, [(w, 1) for w in used[:1]])
        if np.any(np.abs(sub) > 1e-12):
            raise CircuitError("ancillas must start in |0>")
    for gt in emitted:
        apply(amps, gt, n)
    return emitted


def encode_field(f: SpinorField, layout: Layout | None = None, tol: float = 1e-10) -> QuantumState:
    """alpha_{S,i,j,k} = ell^{d/2} psi_S(x_ijk); all non-data wires start in |0>."""
    if layout is None:
        layout = dirac_layout(f.spec)
    n = f.norm()
    if abs(n - 1.0) > tol:
        raise ValueError(f"field must be normalized before encoding (norm {n})")
    scale = math.sqrt(f.spec.cell_volume)
    if layout.reduced_axis is not None:
        comps = REDUCED_COMPONENTS[layout.reduced_axis]
        other = [c for c in range(4) if c not in comps]
        if np.any(np.abs(f.amps[other]) > 1e-14):
            raise ValueError("reduced encoding drops components that are nonzero in this field")
        data = f.amps[list(comps)]
    else:
        data = f.amps
    flat = (scale * data).reshape(-1)
    rest = layout.n_wires - layout.data_wires
    amps = np.zeros((flat.size, 2**rest), dtype=complex)
    amps[:, 0] = flat
    return QuantumState(amps.reshape(-1), layout)


def decode_field(state: QuantumState, spec: LatticeSpec, tol: float = 1e-10) -> SpinorField:
    layout = state.layout
    rest = layout.n_wires - layout.data_wires
    block = state.amps.reshape(-1, 2**rest)
    if rest and np.max(np.abs(block[:, 1:]), initial=0.0) > tol:
        raise ValueError("non-data wires are not in |0>; cannot decode")
    scale = math.sqrt(spec.cell_volume)
    data = block[:, 0] / scale
    if layout.reduced_axis is not None:
        amps = np.zeros((4, *spec.shape), dtype=complex)
        comps = REDUCED_COMPONENTS[layout.reduced_axis]
        amps[list(comps)] = data.reshape(2, *spec.shape)
        return SpinorField(spec, amps)
    return SpinorField(spec, data.reshape(4, *spec.shape))


_OBSERVABLES = {"X": g.X, "Y": g.Y, "Z": g.Z, "X+iY": g.X + 1j * g.Y}


def expectation(state: QuantumState, operator: str, wire: int | str) -> complex:
    """Exact <psi| O_wire (x) I |psi> for O in {X, Y, Z, X+iY}."""
    if isinstance(wire, str):
        if state.layout is None:
            raise KeyError(f"state has no layout to resolve wire {wire!r}")
        wire = state.layout.wire(wire)
    n = state.n_total
    if not 0 <= wire < n:
        raise KeyError(f"wire {wire} not in a {n}-qubit state")
    m = _OBSERVABLES[operator]
    psi = np.moveaxis(state.amps.reshape((2,) * n), wire, 0).reshape(2, -1)
    return complex(np.einsum("ar,ab,br->", psi.conj(), m, psi))


def sample_expectation(state: QuantumState, operator: str, wire: int | str, shots: int, seed: int) -> complex:
    """Shot-noise estimate of <X + iY> (or X / Y) from seeded single-qubit measurements."""
    rng = np.random.default_rng(seed)
    parts = {"X": ["X"], "Y": ["Y"], "X+iY": ["X", "Y"]}[operator]
    total = 0j
    for basis in parts:
        p_plus = (1 + expectation(state, basis, wire).real) / 2
        hits = rng.binomial(shots, min(1.0, max(0.0, p_plus)))
        est = 2 * hits / shots - 1
        total += est if basis == "X" else 1j * est
    return total
