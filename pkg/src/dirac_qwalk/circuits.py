"""Gate-level construction of one split-operator time step on a Dirac register."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import gates as g
from .classical import euler_angles, streaming_sites
from .lattice import LatticeSpec, Potentials, SpinorField
from .qcore import Circuit, CircuitError, Gate, Layout, decode_field, dirac_layout, encode_field, run
from .splitting import STREAM_TAGS, TIME_SHIFT, SplittingScheme

_PAULI_KIND = ("X", "Y", "Z")


def _reduced_alpha(axis: int) -> np.ndarray:
    # alpha_a restricted to the component pair kept by the reduced encoding
    return g.Y if axis == 1 else g.X


def build_spin_rotation(axis: int, layout: Layout) -> Circuit:
    """S_a = C(sigma_a) (H x I) C(sigma_a) on the spinor wires."""
    c = Circuit(layout.n_wires, label=f"S_{'xyz'[axis]}")
    if layout.reduced_axis is not None:
        s_r = (g.Z + _reduced_alpha(axis)) / math.sqrt(2)
        if axis == 1:
            c.add("U", layout.spinor[0], table=s_r)
        else:
            c.add("H", layout.spinor[0])
        return c
    s1, s2 = layout.spinor
    c.add(_PAULI_KIND[axis], s2, [(s1, 1)])
    c.add("H", s1)
    c.add(_PAULI_KIND[axis], s2, [(s1, 1)])
    return c


def _check_ancillas(n_controls: int, layout: Layout) -> None:
    need = max(0, n_controls - 2)
    if len(layout.ancilla) < need:
        raise CircuitError(f"shift needs {need} ancilla wires, layout has {len(layout.ancilla)}")


def build_shift(axis: int, l: int, sign: int, layout: Layout, controls=()) -> Circuit:
    """|v> -> |v + sign*l mod N_a> on the axis block as a cascade of multi-controlled X gates."""
    if int(l) != l or l < 1:
        raise CircuitError(f"shift length must be a positive integer, got {l}")
    wires = layout.axis(axis)
    controls = tuple(controls)
    c = Circuit(layout.n_wires, label=f"{'I' if sign > 0 else 'D'}_{'xyz'[axis]}")
    if not wires:
        return c
    _check_ancillas(len(wires) - 1 + len(controls), layout)
    unit = []
    for b, w in enumerate(wires):
        lower = tuple((x, 1) for x in wires[b + 1:])
        unit.append(Gate("X", (w,), controls + lower))
    if sign < 0:
        unit = unit[::-1]
    for _ in range(int(l)):
        c.extend(unit)
    return c


def build_conditional_walk(axis: int, l: int, layout: Layout) -> Circuit:
    """phi (s1 = 0) shifted by -l, chi (s1 = 1) by +l; negative l swaps the directions."""
    s1 = layout.spinor[0]
    c = Circuit(layout.n_wires, label=f"W_{'xyz'[axis]}")
    if l == 0:
        return c
    sign = 1 if l > 0 else -1
    c.extend(build_shift(axis, abs(l), -sign, layout, controls=((s1, 0),)))
    c.extend(build_shift(axis, abs(l), sign, layout, controls=((s1, 1),)))
    return c


def build_mass_gate(dt_eff: float, mass: float, layout: Layout, c_light: float = 1.0) -> Circuit:
    c = Circuit(layout.n_wires, label="Q_m")
    if mass:
        c.add("RZ", layout.spinor[0], params=[2 * mass * c_light**2 * dt_eff])
    return c


def build_field_gate(t: float, dt_eff: float, potentials: Potentials, layout: Layout) -> Circuit:
    """Q_A for a homogeneous vector potential: H, s1-controlled Euler triples, H."""
    c = Circuit(layout.n_wires, label="Q_A")
    a = potentials.homogeneous_a(t)
    if not np.any(a):
        return c
    e = potentials.charge
    if layout.reduced_axis is not None:
        axis = layout.reduced_axis
        if np.any(np.delete(a, axis)):
            raise CircuitError("reduced 1-D encoding only supports A parallel to the streaming axis")
        c.add("RY" if axis == 1 else "RX", layout.spinor[0], params=[-2 * e * dt_eff * a[axis]])
        return c
    ang = euler_angles(a, dt_eff, e)
    s1, s2 = layout.spinor
    c.add("H", s1)
    # s1 = 0 block gets Q^dagger = Rz(-xi) Ry(-theta) Rz(-delta)
    for kind, angle in (("RZ", -ang.delta), ("RY", -ang.theta), ("RZ", -ang.xi)):
        if angle:
            c.add(kind, s2, [(s1, 0)], [angle])
    for kind, angle in (("RZ", ang.xi), ("RY", ang.theta), ("RZ", ang.delta)):
        if angle:
            c.add(kind, s2, [(s1, 1)], [angle])
    if ang.phase:
        c.add("RZ", s1, params=[2 * ang.phase])
    c.add("H", s1)
    c.metadata["euler"] = ang
    return c


def build_magnetic_field_gate(t: float, dt_eff: float, potentials: Potentials, spec: LatticeSpec,
                              layout: Layout) -> Circuit:
    """Site-dependent Q_A through uniformly controlled rotations on s2 (controls: s1 and position)."""
    if layout.reduced_axis is not None:
        raise CircuitError("magnetic mode needs the full two-wire spinor encoding")
    c = Circuit(layout.n_wires, label="Q_A(x)")
    a_sites = potentials.site_a(spec, t).reshape(3, -1)
    n_sites = a_sites.shape[1]
    angles = np.array([euler_angles(a_sites[:, k], dt_eff, potentials.charge) for k in range(n_sites)])
    delta, theta, xi, gamma = angles.T
    s1, s2 = layout.spinor
    ctrl = ((s1, 1),) + tuple((w, 1) for w in layout.position)
    c.add("H", s1)
    c.add("UCRZ", s2, ctrl, np.concatenate([-delta, xi]))
    c.add("UCRY", s2, ctrl, np.concatenate([-theta, theta]))
    c.add("UCRZ", s2, ctrl, np.concatenate([-xi, delta]))
    if np.any(gamma):
        c.add("DIAG", (s1,) + layout.position, params=np.concatenate([-gamma, gamma]))
    c.add("H", s1)
    return c


def build_scalar_potential_gate(t: float, dt_eff: float, potentials: Potentials, spec: LatticeSpec,
                                layout: Layout) -> Circuit:
    """Diagonal phase exp(-i e V dt) on the position wires; constant parts go to the global phase."""
    pot = potentials.scalar_potential
    e = potentials.charge
    c = Circuit(layout.n_wires, label="Q_V")
    if pot.kind == "zero":
        return c
    if pot.kind == "constant":
        v = float(pot.value(t))
        if not math.isfinite(v):
            raise ValueError("scalar potential returned a non-finite value")
        c.global_phase = -e * v * dt_eff
        return c
    if pot.kind == "linear":
        efield = np.asarray(pot.efield(t), dtype=float)
        if not np.all(np.isfinite(efield)):
            raise ValueError("electric field returned non-finite values")
        const = 0.0
        for axis in range(3):
            if not efield[axis]:
                continue
            const += e * dt_eff * efield[axis] * (spec.origin[axis] + spec.ell / 2)
            wires = layout.axis(axis)
            n = len(wires)
            for b, w in enumerate(wires):
                c.add("P", w, params=[e * dt_eff * efield[axis] * spec.ell * 2 ** (n - 1 - b)])
        c.global_phase = const
        return c
    x, y, z = spec.mesh()
    v = pot(x, y, z, t)
    if not np.all(np.isfinite(v)):
        raise ValueError("scalar potential returned non-finite values")
    c.add("DIAG", layout.position, params=(-e * dt_eff * v).reshape(-1))
    return c


def build_time_step(scheme: SplittingScheme, t: float, spec: LatticeSpec, potentials: Potentials,
                    layout: Layout | None = None) -> Circuit:
    """One time step: rotation-walk-rotation per streaming step, then the local operators, in scheme order."""
    if layout is None:
        layout = dirac_layout(spec)
    circ = Circuit(layout.n_wires, label=f"step[{scheme.name}]", ancillas=layout.ancilla)
    segments = []

    def add(part: Circuit, kind: str) -> None:
        start = len(circ)
        circ.extend(part)
        if len(circ) > start:
            segments.append((kind, start, len(circ)))

    clock = Fraction(0)
    for s in scheme.steps:
        dt_eff = float(s.coefficient) * spec.dt
        t_eval = t + float(clock) * spec.dt
        if s.tag == TIME_SHIFT:
            clock += s.coefficient
        elif s.tag in STREAM_TAGS:
            axis = STREAM_TAGS[s.tag]
            sites = streaming_sites(spec.n_star, s.coefficient)
            if spec.qubits[axis] == 0 or sites == 0:
                continue
            rot = build_spin_rotation(axis, layout)
            add(rot, "rotation")
            add(build_conditional_walk(axis, sites, layout), "walk")
            add(rot, "rotation")
        elif s.tag == "M":
            add(build_mass_gate(dt_eff, potentials.mass, layout, spec.c), "Q_m")
        elif s.tag == "V":
            add(build_scalar_potential_gate(t_eval, dt_eff, potentials, spec, layout), "Q_V")
        elif s.tag == "A":
            if potentials.magnetic_mode:
                add(build_magnetic_field_gate(t_eval, dt_eff, potentials, spec, layout), "Q_A")
            else:
                add(build_field_gate(t_eval, dt_eff, potentials, layout), "Q_A")
    circ.metadata["segments"] = segments
    circ.metadata.update(t=t, dt=spec.dt, scheme=scheme.name)
    return circ


def quantum_step(field: SpinorField, scheme: SplittingScheme, t: float, potentials: Potentials,
                 layout: Layout | None = None, with_global_phase: bool = True) -> SpinorField:
    """decode(circuit(encode(field))); the recorded global phase is restored by default."""
    if layout is None:
        layout = dirac_layout(field.spec)
    circ = build_time_step(scheme, t, field.spec, potentials, layout)
    state = encode_field(field, layout)
    state.amps = run(circ, state.amps, with_global_phase=with_global_phase)
    return decode_field(state, field.spec)
