import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from dirac_qwalk.lattice import SpinorField, make_lattice, random_field
from dirac_qwalk.qcore import Circuit, CircuitError, decode_field, dirac_layout, run, zero_state, QuantumState
from dirac_qwalk.stateprep import (UniformlyControlledGate, apply_uniformly_controlled, gate_count_bound,
                                   literal_angle_tree, multiplexor_cost, prepare_amplitudes, prepare_state)
from oracles import SX, controlled_dense, uniformly_controlled_dense


def prepared(target, n):
    circ = prepare_amplitudes(target, list(range(n)), n)
    return run(circ, zero_state(n), with_global_phase=True), circ


def test_spike_needs_only_x_gates():
    target = np.zeros(16, dtype=complex)
    target[0b1011] = np.exp(0.4j)
    out, circ = prepared(target, 4)
    assert {g.kind for g in circ} == {"X"} and len(circ) <= 4
    assert np.max(np.abs(out - target)) < 1e-15


def test_uniform_real_target_is_a_hadamard_layer():
    out, circ = prepared(np.full(8, 1 / math.sqrt(8)), 3)
    assert [g.kind for g in circ] == ["H"] * 3
    assert np.max(np.abs(out - 1 / math.sqrt(8))) < 1e-15


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_random_targets_are_reproduced_with_bounded_cost(seed, n):
    rng = np.random.default_rng(seed)
    target = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    target /= np.linalg.norm(target)
    out, circ = prepared(target, n)
    assert np.max(np.abs(out - target)) < 1e-10
    assert circ.metadata["gate_count"] <= gate_count_bound(n)


def test_gate_count_grows_exponentially():
    rng = np.random.default_rng(0)
    counts = []
    for n in range(1, 8):
        t = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        counts.append(prepared(t / np.linalg.norm(t), n)[1].metadata["gate_count"])
    assert counts == [2 * sum(multiplexor_cost(k) for k in range(n)) for n in range(1, 8)]
    assert all(b > 1.9 * a for a, b in zip(counts[1:], counts[2:]))


def test_signed_real_target():
    target = np.array([0.1, -0.3, 0.5, 0.2, 0.4, 0.1, 0.6, 0.25])
    target /= np.linalg.norm(target)
    out, circ = prepared(target, 3)
    assert np.max(np.abs(out - target)) < 1e-14


def test_literal_averaged_magnitude_rule_misses_the_target():
    target = np.array([0.6, 0.8])
    (theta,) = literal_angle_tree(target)
    built = np.array([math.cos(theta[0] / 2), math.sin(theta[0] / 2)])
    assert abs(np.dot(built, target)) ** 2 < 0.99
    out, _ = prepared(target, 1)
    assert np.max(np.abs(out - target)) < 1e-15


@pytest.mark.parametrize("bad", [np.zeros(4), np.ones(4), np.ones(3) / math.sqrt(3)])
def test_prepare_rejects_bad_targets(bad):
    with pytest.raises(ValueError):
        prepare_amplitudes(bad, [0, 1], 2)


def test_uniformly_controlled_gate_without_controls_is_plain():
    u = scipy.stats.unitary_group.rvs(2, random_state=1)
    psi = zero_state(2)
    psi[:] = [0.5, 0.5j, -0.5, 0.5]
    expect = controlled_dense(2, u, [1]) @ psi
    out = apply_uniformly_controlled(psi.copy(), UniformlyControlledGate((), 1, u[None]))
    assert np.max(np.abs(out - expect)) < 1e-15


def test_identity_then_x_table_is_cnot():
    ucg = UniformlyControlledGate((0,), 1, np.array([np.eye(2), SX]))
    u = Circuit(2).append(ucg.to_gate()).unitary()
    assert np.max(np.abs(u - controlled_dense(2, SX, [1], [(0, 1)]))) < 1e-15


def test_three_control_table_against_block_diagonal_oracle():
    table = scipy.stats.unitary_group.rvs(2, size=8, random_state=2)
    ucg = UniformlyControlledGate((3, 0, 2), 1, table)
    u = Circuit(4).append(ucg.to_gate()).unitary()
    assert np.max(np.abs(u - uniformly_controlled_dense(4, (3, 0, 2), 1, table))) < 1e-14


def test_uniformly_controlled_gate_validation():
    with pytest.raises(CircuitError):
        UniformlyControlledGate((0,), 1, np.array([np.eye(2)]))
    with pytest.raises(CircuitError):
        UniformlyControlledGate((0,), 1, np.array([np.eye(2), 2 * np.eye(2)]))


@pytest.mark.parametrize("qubits", [(3, 0, 0), (2, 1, 0), (1, 1, 1)])
def test_prepare_state_reproduces_a_field(qubits):
    spec = make_lattice(*qubits, ell=0.3)
    target = random_field(spec, np.random.default_rng(sum(qubits)))
    layout = dirac_layout(spec)
    circ = prepare_state(target, layout)
    amps = run(circ, zero_state(layout.n_wires), with_global_phase=True)
    field = decode_field(QuantumState(amps, layout), spec)
    assert np.max(np.abs(field.amps - target.amps)) * math.sqrt(spec.cell_volume) < 1e-10


def test_prepare_state_rejects_empty_field():
    with pytest.raises(ValueError):
        prepare_state(SpinorField.zeros(make_lattice(2)))
