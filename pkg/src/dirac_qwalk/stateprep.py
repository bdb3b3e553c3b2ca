"""Arbitrary-state initialization through trees of uniformly controlled rotations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import SpinorField
from .qcore import Circuit, CircuitError, Gate, Layout, apply, dirac_layout, encode_field


@dataclass(frozen=True)
class UniformlyControlledGate:
    """table[p] acts on the target when the controls (first = most significant) read p."""

    controls: tuple[int, ...]
    target: int
    table: np.ndarray

    def __post_init__(self):
        tab = np.asarray(self.table, dtype=complex)
        k = len(self.controls)
        if tab.shape != (2**k, 2, 2):
            raise CircuitError(f"{k} controls need a table of shape {(2**k, 2, 2)}, got {tab.shape}")
        for u in tab:
            if np.max(np.abs(u.conj().T @ u - np.eye(2))) > 1e-12:
                raise CircuitError("uniformly controlled table entry is not unitary")
        object.__setattr__(self, "table", tab)
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))

    def to_gate(self) -> Gate:
        return Gate("UC", (self.target,), tuple((c, 1) for c in self.controls), table=self.table)


def apply_uniformly_controlled(amps: np.ndarray, ucg: UniformlyControlledGate) -> np.ndarray:
    """In-place application on a flat state vector."""
    return apply(amps, ucg.to_gate())


def multiplexor_cost(k: int) -> int:
    """Rotations plus CNOTs of a Gray-code multiplexed rotation with k controls."""
    return 1 if k == 0 else 2 ** (k + 1)


def _rotation(kind: str, target: int, controls: Sequence[int], angles: np.ndarray) -> Gate | None:
    if not np.any(np.abs(angles) > 1e-15):
        return None
    if not controls:
        return Gate(kind[2:], (target,), params=(float(angles[0]),))
    return Gate(kind, (target,), tuple((c, 1) for c in controls), params=tuple(angles))


def prepare_amplitudes(target: np.ndarray, wires: Sequence[int], n_wires: int, tol: float = 1e-10) -> Circuit:
    """Circuit taking |0...0> on ``wires`` to ``target`` (wires[0] most significant)."""
    vec = np.asarray(target, dtype=complex).reshape(-1)
    n = len(wires)
    if vec.size != 2**n:
        raise ValueError(f"target has {vec.size} amplitudes for {n} wires")
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("cannot prepare the zero vector")
    if abs(norm - 1) > tol:
        raise ValueError(f"target must be normalized (norm {norm})")
    circ = Circuit(n_wires, label="prepare")
    mags = np.abs(vec)
    phases = np.angle(vec)

    nonzero = np.flatnonzero(mags > 1e-14)
    if nonzero.size == 1:
        idx = int(nonzero[0])
        for b, w in enumerate(wires):
            if (idx >> (n - 1 - b)) & 1:
                circ.add("X", w)
        circ.global_phase = float(phases[idx])
        circ.metadata["gate_count"] = len(circ)
        return circ
    if np.allclose(vec, vec[0], atol=1e-14) and abs(phases[0]) < 1e-14:
        for w in wires:
            circ.add("H", w)
        circ.metadata["gate_count"] = n
        return circ

    count = 0
    # magnitude tree: level k rotates wire k conditioned on the k wires above it
    for k in range(n):
        blocks = (mags**2).reshape(2**k, 2, -1).sum(axis=2)
        theta = 2 * np.arctan2(np.sqrt(blocks[:, 1]), np.sqrt(blocks[:, 0]))
        gate = _rotation("UCRY", wires[k], wires[:k], theta)
        if gate is not None:
            circ.append(gate)
            count += multiplexor_cost(k)
    # phase layer: peel one wire at a time from the least significant end
    rest = phases.copy()
    for k in range(n - 1, -1, -1):
        pairs = rest.reshape(-1, 2)
        gate = _rotation("UCRZ", wires[k], wires[:k], pairs[:, 1] - pairs[:, 0])
        if gate is not None:
            circ.append(gate)
            count += multiplexor_cost(k)
        rest = pairs.mean(axis=1)
    circ.global_phase = float(rest[0])
    circ.metadata["gate_count"] = count
    return circ


def prepare_state(target: SpinorField, layout: Layout | None = None) -> Circuit:
    """Circuit mapping |0...0> to encode(target); ancillas are left untouched."""
    if layout is None:
        layout = dirac_layout(target.spec)
    if target.norm() == 0:
        raise ValueError("cannot prepare a zero-norm field")
    encoded = encode_field(target, layout).amps
    rest = layout.n_wires - layout.data_wires
    vec = encoded.reshape(-1, 2**rest)[:, 0]
    return prepare_amplitudes(vec, list(range(layout.data_wires)), layout.n_wires)


def literal_angle_tree(target: np.ndarray) -> list[np.ndarray]:
    """Per-level angles 2*acos((|a_2k| + |a_2k+1|) / 2), the averaged-magnitude rule.

    Kept only to demonstrate that it does not reproduce general targets.
    """
    mags = np.abs(np.asarray(target, dtype=complex).reshape(-1))
    levels = []
    while mags.size > 1:
        pairs = mags.reshape(-1, 2)
        levels.append(2 * np.arccos(np.clip(pairs.sum(axis=1) / 2, -1, 1)))
        mags = np.sqrt((pairs**2).sum(axis=1))
    return levels[::-1]


def gate_count_bound(n: int) -> int:
    """Both rotation trees together cost at most 2^(n+2) elementary gates."""
    return 2 ** (n + 2)
