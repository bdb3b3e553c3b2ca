"""Lowering to {H, S, T, CNOT}, symbolic gate counting and the depth-vs-resolution study.

Two independent routes produce counts: ``lower_to_fundamental`` emits the
gates, ``count_fundamental`` adds up closed-form costs per high-level gate.
They must agree wherever the synthesizer can materialize every rotation.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.stats
from scipy.spatial import cKDTree

from . import gates as g
from .circuits import build_time_step
from .lattice import Potentials, make_lattice
from .qcore import Circuit, Gate, decompose_mcx, dirac_layout
from .splitting import SplittingScheme, scheme_second_order

FUNDAMENTAL = ("H", "S", "T", "CNOT")

# fixed gates written structurally, in time order; Y is exact up to a global phase
_WORDS = {
    "I": (),
    "H": ("H",),
    "S": ("S",),
    "T": ("T",),
    "X": ("H", "S", "S", "H"),
    "Z": ("S", "S"),
    "Y": ("S", "S", "H", "S", "S", "H"),
    "SDG": ("S", "S", "S"),
    "TDG": ("S", "S", "S", "T"),
}

# Toffoli as H / CNOT / T / T^dagger; entries are (kind, role) with roles c1, c2, t
_TOFFOLI = (
    ("H", "t"), ("CNOT", "c2", "t"), ("TDG", "t"), ("CNOT", "c1", "t"), ("T", "t"),
    ("CNOT", "c2", "t"), ("TDG", "t"), ("CNOT", "c1", "t"), ("T", "c2"), ("T", "t"),
    ("H", "t"), ("CNOT", "c1", "c2"), ("T", "c1"), ("TDG", "c2"), ("CNOT", "c1", "c2"),
)


class SynthesisError(ValueError):
    pass


def _word_counts(word: Iterable[str]) -> Counter:
    return Counter(word)


def _quaternion(u: np.ndarray) -> np.ndarray:
    """Unit 4-vector q with u ~ q0 I - i (q1 X + q2 Y + q3 Z), sign fixed by the first nonzero entry."""
    v = u / np.sqrt(np.linalg.det(u))
    q = np.array([v[0, 0].real, -v[1, 0].imag, v[1, 0].real, -v[0, 0].imag])
    lead = q[np.flatnonzero(np.abs(q) > 1e-9)[0]]
    return q if lead > 0 else -q


class RotationSynthesizer:
    """Shortest {H, S, T} word within eps of a target, from a breadth-first table.

    The chord distance between unit quaternions equals the phase-aligned
    operator-norm distance, so a KD-tree radius query finds every candidate.
    """

    def __init__(self, max_length: int = 25):
        self.max_length = max_length
        words: list[tuple[str, ...]] = [()]
        quats = [_quaternion(g.I2)]
        seen = {tuple(np.round(quats[0], 9))}
        frontier = [((), g.I2)]
        gens = (("H", g.H), ("S", g.S), ("T", g.T))
        for _ in range(max_length):
            nxt = []
            for word, m in frontier:
                for name, gm in gens:
                    mm = gm @ m
                    q = _quaternion(mm)
                    key = tuple(np.round(q, 9))
                    if key in seen:
                        continue
                    seen.add(key)
                    words.append(word + (name,))
                    quats.append(q)
                    nxt.append((word + (name,), mm))
            frontier = nxt
        self.words = words
        quats = np.array(quats)
        self._tree = cKDTree(np.vstack([quats, -quats]))
        self._cost_model: dict[str, tuple[float, float]] | None = None

    def __len__(self) -> int:
        return len(self.words)

    def _candidates(self, u: np.ndarray, eps: float) -> list[int]:
        hits = self._tree.query_ball_point(_quaternion(u), eps)
        return [h % len(self.words) for h in hits]

    def lookup(self, u: np.ndarray, eps: float) -> tuple[str, ...] | None:
        """Shortest word within eps (ties broken by T count, then table order), or None."""
        exact = self._candidates(u, 1e-12)
        pool = exact or self._candidates(u, eps)
        if not pool:
            return None
        return min((self.words[i] for i in pool), key=lambda w: (len(w), w.count("T")))

    def synthesize(self, u: np.ndarray, eps: float) -> tuple[str, ...]:
        word = self.lookup(u, eps)
        if word is None:
            raise SynthesisError(f"no word of length <= {self.max_length} within {eps}; "
                                 "use count_fundamental for counting at this precision")
        return word

    def nearest_distance(self, u: np.ndarray) -> float:
        return float(self._tree.query(_quaternion(u))[0])

    def cost_model(self) -> dict[str, tuple[float, float]]:
        """Per-kind (a, b) in count = a + b log2(1/eps), fitted on seeded random targets."""
        if self._cost_model is None:
            rng = np.random.default_rng(2024)
            eps_grid = np.array([0.25, 0.2, 0.16, 0.13, 0.1])
            targets = [scipy.stats.unitary_group.rvs(2, random_state=rng) for _ in range(200)]
            rows = {k: [] for k in ("H", "S", "T")}
            for eps in eps_grid:
                counts = [Counter(self.synthesize(u, eps)) for u in targets]
                for k in rows:
                    rows[k].append(np.mean([c[k] for c in counts]))
            x = np.log2(1 / eps_grid)
            model = {}
            for k, y in rows.items():
                b, a = np.polyfit(x, y, 1)
                model[k] = (float(a), float(max(b, 0.0)))
            self._cost_model = model
        return self._cost_model

    def cost(self, u: np.ndarray, eps: float) -> Counter:
        """Gate counts of the synthesized word, or of the cost model when the table cannot reach eps."""
        word = self.lookup(u, eps)
        if word is not None:
            return _word_counts(word)
        model = self.cost_model()
        return Counter({k: max(1, round(a + b * math.log2(1 / eps))) for k, (a, b) in model.items()})


@lru_cache(maxsize=None)
def default_synthesizer() -> RotationSynthesizer:
    return RotationSynthesizer()


# ---------------------------------------------------------------- shared decomposition math


def gray_angles(angles: Sequence[float]) -> np.ndarray:
    """Rotation angles of the Gray-code multiplexor reproducing per-pattern angles."""
    alpha = np.asarray(angles, dtype=float)
    n = alpha.size
    gray = np.arange(n) ^ (np.arange(n) >> 1)
    j = np.arange(n)
    signs = np.array([[(-1) ** bin(jj & gg).count("1") for gg in gray] for jj in j])
    return signs.T @ alpha / n


def gray_cnot_bit(i: int, n: int) -> int:
    """Bit (0 = least significant) that flips between Gray codes i and i + 1 (cyclic)."""
    a = i ^ (i >> 1)
    k = (i + 1) % n
    return (a ^ (k ^ (k >> 1))).bit_length() - 1


def abc_factors(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """u = e^{i gamma} A X B X C with A B C = I."""
    d, th, xi, gamma = g.zyz_decompose(u)
    a = g.rz(d) @ g.ry(th / 2)
    b = g.ry(-th / 2) @ g.rz(-(d + xi) / 2)
    c = g.rz((xi - d) / 2)
    return a, b, c, gamma


def _pattern_table(gate: Gate) -> tuple[tuple[int, ...], np.ndarray]:
    """Multi-controlled single-qubit gate as a UC table over its control wires."""
    k = len(gate.controls)
    tab = np.broadcast_to(np.eye(2, dtype=complex), (2**k, 2, 2)).copy()
    pattern = int("".join(str(p) for _, p in gate.controls), 2)
    tab[pattern] = gate.base_matrix()
    return tuple(w for w, _ in gate.controls), tab


def _diag_to_full(gate: Gate) -> tuple[tuple[int, ...], np.ndarray]:
    """A controlled DIAG as an uncontrolled DIAG over controls + targets."""
    wires = tuple(w for w, _ in gate.controls) + gate.targets
    m = len(gate.targets)
    phases = np.zeros(2 ** len(wires))
    if gate.controls:
        pattern = int("".join(str(p) for _, p in gate.controls), 2)
        phases[pattern * 2**m:(pattern + 1) * 2**m] = gate.params
    else:
        phases[:] = gate.params
    return wires, phases


def _uc_zyz(table: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    angles = np.array([g.zyz_decompose(u) for u in table])
    return angles[:, 0], angles[:, 1], angles[:, 2], angles[:, 3]


def _matrix_of(kind: str, angle: float) -> np.ndarray:
    return {"RY": g.ry, "RZ": g.rz}[kind](angle)


# ---------------------------------------------------------------- materialized route


class _Lowerer:
    def __init__(self, n_wires: int, ancillas: Sequence[int], eps: float, synth: RotationSynthesizer):
        self.out = Circuit(n_wires, label="fundamental")
        self.ancillas = tuple(ancillas)
        self.eps = eps
        self.synth = synth
        self.n_rot = 0

    def emit(self, kind: str, target: int, control: int | None = None) -> None:
        if kind == "CNOT":
            self.out.append(Gate("X", (target,), ((control, 1),)))
        else:
            self.out.append(Gate(kind, (target,)))

    def word(self, word: Iterable[str], wire: int) -> None:
        for k in word:
            self.emit(k, wire)

    def single(self, u: np.ndarray, wire: int) -> None:
        self.n_rot += 1
        self.word(self.synth.synthesize(u, self.eps), wire)

    def toffoli(self, c1: int, c2: int, t: int) -> None:
        roles = {"c1": c1, "c2": c2, "t": t}
        for entry in _TOFFOLI:
            if entry[0] == "CNOT":
                self.emit("CNOT", roles[entry[2]], roles[entry[1]])
            else:
                self.word(_WORDS[entry[0]], roles[entry[1]])

    def mcx(self, controls, target: int) -> None:
        if not controls:
            self.word(_WORDS["X"], target)
            return
        free = [a for a in self.ancillas if a != target and a not in {w for w, _ in controls}]
        for gt in decompose_mcx(controls, target, free):
            if not gt.controls:
                self.word(_WORDS["X"], gt.targets[0])
            elif len(gt.controls) == 1:
                self.emit("CNOT", gt.targets[0], gt.controls[0][0])
            else:
                self.toffoli(gt.controls[0][0], gt.controls[1][0], gt.targets[0])

    def ucr(self, kind: str, controls: Sequence[int], target: int, angles) -> None:
        k = len(controls)
        if k == 0:
            self.single(_matrix_of(kind, angles[0]), target)
            return
        omega = gray_angles(angles)
        n = 2**k
        for i in range(n):
            self.single(_matrix_of(kind, omega[i]), target)
            bit = gray_cnot_bit(i, n)
            self.emit("CNOT", target, controls[k - 1 - bit])

    def diag(self, wires: Sequence[int], phases) -> None:
        phases = np.asarray(phases, dtype=float)
        wires = list(wires)
        while len(wires) > 1:
            pairs = phases.reshape(-1, 2)
            self.ucr("RZ", wires[:-1], wires[-1], pairs[:, 1] - pairs[:, 0])
            phases = pairs.mean(axis=1)
            wires.pop()
        self.single(g.phase(phases[1] - phases[0]), wires[0])

    def uc(self, controls: Sequence[int], target: int, table: np.ndarray) -> None:
        delta, theta, xi, gamma = _uc_zyz(table)
        self.ucr("RZ", controls, target, xi)
        self.ucr("RY", controls, target, theta)
        self.ucr("RZ", controls, target, delta)
        if controls:
            self.diag(controls, gamma)

    def controlled_single(self, u: np.ndarray, control: int, target: int) -> None:
        a, b, c, gamma = abc_factors(u)
        self.single(c, target)
        self.emit("CNOT", target, control)
        self.single(b, target)
        self.emit("CNOT", target, control)
        self.single(a, target)
        self.single(g.phase(gamma), control)

    def gate(self, gate: Gate) -> None:
        kind = "X" if gate.kind == "CNOT" else gate.kind
        ctrl = gate.controls
        if kind == "DIAG":
            self.diag(*_diag_to_full(gate))
        elif kind in ("UCRY", "UCRZ"):
            self.ucr("R" + kind[-1], [w for w, _ in ctrl], gate.targets[0], gate.params)
        elif kind == "UC":
            self.uc([w for w, _ in ctrl], gate.targets[0], gate.table.reshape(-1, 2, 2))
        elif kind == "U2":
            if ctrl:
                raise SynthesisError("controlled two-qubit tables are not supported")
            t0, t1 = gate.targets
            (l0, l1), cs, (r0, r1) = scipy.linalg.cossin(gate.table, p=2, q=2, separate=True)
            self.uc([t0], t1, np.array([r0, r1]))
            self.ucr("RY", [t1], t0, 2 * cs)
            self.uc([t0], t1, np.array([l0, l1]))
        elif kind == "X":
            self.mcx(ctrl, gate.targets[0])
        elif kind in ("Y", "Z") and ctrl:
            t = gate.targets[0]
            pre, post = (("H",), ("H",)) if kind == "Z" else (_WORDS["SDG"], ("S",))
            self.word(pre, t)
            self.mcx(ctrl, t)
            self.word(post, t)
        elif not ctrl:
            if kind in _WORDS:
                self.word(_WORDS[kind], gate.targets[0])
            else:
                self.single(gate.base_matrix(), gate.targets[0])
        elif len(ctrl) == 1:
            (w, p), t = ctrl[0], gate.targets[0]
            if p == 0:
                self.word(_WORDS["X"], w)
            self.controlled_single(gate.base_matrix(), w, t)
            if p == 0:
                self.word(_WORDS["X"], w)
        else:
            wires, table = _pattern_table(gate)
            self.uc(list(wires), gate.targets[0], table)


# ---------------------------------------------------------------- symbolic route


class _Counter:
    def __init__(self, eps: float, synth: RotationSynthesizer):
        self.eps = eps
        self.synth = synth
        self._cache: dict[bytes, Counter] = {}

    def single(self, u: np.ndarray) -> Counter:
        key = np.round(_quaternion(u), 12).tobytes()
        if key not in self._cache:
            self._cache[key] = self.synth.cost(u, self.eps)
        return self._cache[key]

    @staticmethod
    def x_word() -> Counter:
        return Counter(H=2, S=2)

    @staticmethod
    def toffoli() -> Counter:
        return Counter(H=2, CNOT=6, T=7, S=9)

    def mcx(self, controls) -> Counter:
        c = len(controls)
        negs = sum(1 for _, p in controls if p == 0)
        flips = Counter({k: 2 * negs * v for k, v in self.x_word().items()})
        if c == 0:
            return self.x_word()
        if c == 1:
            return flips + Counter(CNOT=1)
        tof = self.toffoli()
        n_tof = 1 if c == 2 else 2 * c - 3
        return flips + Counter({k: n_tof * v for k, v in tof.items()})

    def ucr(self, kind: str, k: int, angles) -> Counter:
        if k == 0:
            return self.single(_matrix_of(kind, angles[0])).copy()
        total = Counter(CNOT=2**k)
        for w in gray_angles(angles):
            total += self.single(_matrix_of(kind, w))
        return total

    def diag(self, phases) -> Counter:
        phases = np.asarray(phases, dtype=float)
        m = int(round(math.log2(phases.size)))
        total = Counter()
        while m > 1:
            pairs = phases.reshape(-1, 2)
            total += self.ucr("RZ", m - 1, pairs[:, 1] - pairs[:, 0])
            phases = pairs.mean(axis=1)
            m -= 1
        return total + self.single(g.phase(phases[1] - phases[0]))

    def uc(self, k: int, table: np.ndarray) -> Counter:
        delta, theta, xi, gamma = _uc_zyz(table)
        total = self.ucr("RZ", k, xi) + self.ucr("RY", k, theta) + self.ucr("RZ", k, delta)
        return total + self.diag(gamma) if k else total

    def gate(self, gate: Gate) -> Counter:
        kind = "X" if gate.kind == "CNOT" else gate.kind
        ctrl = gate.controls
        if kind == "DIAG":
            return self.diag(_diag_to_full(gate)[1])
        if kind in ("UCRY", "UCRZ"):
            return self.ucr("R" + kind[-1], len(ctrl), gate.params)
        if kind == "UC":
            return self.uc(len(ctrl), gate.table.reshape(-1, 2, 2))
        if kind == "U2":
            (l0, l1), cs, (r0, r1) = scipy.linalg.cossin(gate.table, p=2, q=2, separate=True)
            return self.uc(1, np.array([r0, r1])) + self.ucr("RY", 1, 2 * cs) + self.uc(1, np.array([l0, l1]))
        if kind == "X":
            return self.mcx(ctrl)
        if kind in ("Y", "Z") and ctrl:
            extra = Counter(H=2) if kind == "Z" else Counter(S=4)
            return self.mcx(ctrl) + extra
        if not ctrl:
            if kind in _WORDS:
                return _word_counts(_WORDS[kind])
            return self.single(gate.base_matrix()).copy()
        if len(ctrl) == 1:
            a, b, c, gamma = abc_factors(gate.base_matrix())
            total = self.single(a) + self.single(b) + self.single(c) + self.single(g.phase(gamma))
            total += Counter(CNOT=2)
            if ctrl[0][1] == 0:
                total += Counter({k: 2 * v for k, v in self.x_word().items()})
            return total
        _, table = _pattern_table(gate)
        return self.uc(len(ctrl), table)


# ---------------------------------------------------------------- reports


@dataclass
class ResourceReport:
    counts: dict[str, int]
    width: int
    epsilon: float
    breakdown: dict[str, dict[str, int]] = field(default_factory=dict)
    rotations: int = 0
    materialized: bool = False

    @property
    def depth(self) -> int:
        """Total number of fundamental gates (not parallel depth)."""
        return sum(self.counts.values())

    def row(self) -> dict[str, int]:
        return {k: self.counts.get(k, 0) for k in FUNDAMENTAL} | {"total": self.depth, "width": self.width}


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 0.1:
        raise ValueError(f"epsilon must lie in (0, 0.1], got {eps}")


def _segment_of(circuit: Circuit) -> list[str]:
    labels = ["other"] * len(circuit)
    for name, start, stop in circuit.metadata.get("segments", []):
        labels[start:stop] = [name] * (stop - start)
    return labels


def _normalize_counts(c: Counter) -> dict[str, int]:
    return {k: int(c.get(k, 0)) for k in FUNDAMENTAL}


def lower_to_fundamental(circuit: Circuit, epsilon: float,
                         synth: RotationSynthesizer | None = None) -> tuple[Circuit, ResourceReport]:
    """Materialize the circuit over {H, S, T, CNOT}; every rotation lands within epsilon up to phase."""
    _check_eps(epsilon)
    synth = synth or default_synthesizer()
    low = _Lowerer(circuit.n_wires, circuit.ancillas, epsilon, synth)
    breakdown: dict[str, Counter] = {}
    for gate, label in zip(circuit.gates, _segment_of(circuit)):
        start = len(low.out)
        low.gate(gate)
        part = breakdown.setdefault(label, Counter())
        for gt in low.out.gates[start:]:
            part["CNOT" if gt.controls else gt.kind] += 1
    total = sum(breakdown.values(), Counter())
    report = ResourceReport(_normalize_counts(total), circuit.n_wires, epsilon,
                            {k: _normalize_counts(v) for k, v in breakdown.items()}, low.n_rot, True)
    low.out.metadata["n_rotations"] = low.n_rot
    return low.out, report


def count_fundamental(circuit: Circuit, epsilon: float,
                      synth: RotationSynthesizer | None = None) -> ResourceReport:
    """Closed-form counts without emitting gates; rotations below the table's reach use the cost model."""
    _check_eps(epsilon)
    counter = _Counter(epsilon, synth or default_synthesizer())
    breakdown: dict[str, Counter] = {}
    for gate, label in zip(circuit.gates, _segment_of(circuit)):
        breakdown.setdefault(label, Counter()).update(counter.gate(gate))
    total = sum(breakdown.values(), Counter())
    return ResourceReport(_normalize_counts(total), circuit.n_wires, epsilon,
                          {k: _normalize_counts(v) for k, v in breakdown.items()})


# ---------------------------------------------------------------- scaling study


@dataclass
class ScalingStudy:
    n: np.ndarray
    depth: np.ndarray
    width: np.ndarray
    reports: list[ResourceReport]
    coefficients: np.ndarray  # c2, c1, c0
    r_squared: float
    exponent: float

    def constant_parts(self, name: str) -> np.ndarray:
        return np.array([sum(r.breakdown.get(name, {}).values()) for r in self.reports])


def step_circuit(n: int, dims: int = 3, scheme: SplittingScheme | None = None,
                 potentials: Potentials | None = None, t: float = 0.0) -> Circuit:
    """Time-step circuit on a symmetric lattice with n wires per active axis."""
    scheme = scheme or scheme_second_order()
    if potentials is None:
        potentials = Potentials(mass=1.0, vector_potential=(0.3, -0.2, 0.5))
    sizes = [n] * dims + [0] * (3 - dims)
    spec = make_lattice(*sizes, ell=1.0, n_star=1)
    return build_time_step(scheme, t, spec, potentials, dirac_layout(spec))


def scaling_study(n_values: Sequence[int], epsilon: float = 1e-10, dims: int = 3,
                  scheme: SplittingScheme | None = None, potentials: Potentials | None = None,
                  fit_from: int = 10) -> ScalingStudy:
    reports = [count_fundamental(step_circuit(n, dims, scheme, potentials), epsilon) for n in n_values]
    n = np.asarray(n_values)
    depth = np.array([r.depth for r in reports], dtype=float)
    width = np.array([r.width for r in reports])
    sel = n >= fit_from
    walk = np.array([sum(r.breakdown.get("walk", {}).values()) for r in reports], dtype=float)
    coeffs, r2, exponent = np.full(3, np.nan), float("nan"), float("nan")
    if sel.sum() >= 4:
        coeffs = np.polyfit(n[sel], depth[sel], 2)
        resid = depth[sel] - np.polyval(coeffs, n[sel])
        r2 = float(1 - np.sum(resid**2) / np.sum((depth[sel] - depth[sel].mean()) ** 2))
        # exponent of the n-dependent part: the walk blocks
        exponent = float(np.polyfit(np.log(n[sel]), np.log(walk[sel]), 1)[0])
    return ScalingStudy(n, depth.astype(int), width, reports, coeffs, r2, exponent)
