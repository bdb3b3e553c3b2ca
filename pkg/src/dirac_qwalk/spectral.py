"""Lattice dispersion, autocorrelation series, spectral density and eigenstate filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .circuits import build_time_step
from .classical import BETA, SPIN_ROTATION, step
from .lattice import Potentials, SpinorField, normalize
from .qcore import Gate, QuantumState, apply, decode_field, dirac_layout, encode_field, expectation, run
from .splitting import STREAM_TAGS, SplittingScheme


class SpectralError(ValueError):
    pass


# ---------------------------------------------------------------- dispersion


@dataclass
class DispersionResult:
    momenta: np.ndarray  # (N, 3)
    energies: np.ndarray  # (N, 4), sorted per momentum, E*dt in (-pi, pi]
    dt: float
    eigenvalues: np.ndarray
    doubling: list[np.ndarray] = field(default_factory=list)

    @property
    def has_doubling(self) -> bool:
        return bool(self.doubling)

    def branch_energies(self) -> np.ndarray:
        return self.energies / self.dt


def symbol(scheme: SplittingScheme, p: Sequence[float], ell: float, n_star, dt: float,
           mass: float = 0.0, c: float = 1.0) -> np.ndarray:
    """4x4 one-step amplification matrix for the plane wave exp(i p.x)."""
    p = np.asarray(p, dtype=float)
    u = np.eye(4, dtype=complex)
    for s in scheme.steps:
        if s.tag in STREAM_TAGS:
            axis = STREAM_TAGS[s.tag]
            shift = float(Fraction(n_star) * s.coefficient) * ell
            # phi(x) <- phi(x + shift), chi(x) <- chi(x - shift)
            ph = np.exp(1j * p[axis] * shift)
            d = np.diag([ph, ph, ph.conjugate(), ph.conjugate()])
            rot = SPIN_ROTATION[axis]
            u = rot @ d @ rot.conj().T @ u
        elif s.tag == "M" and mass:
            u = np.diag(np.exp(-1j * mass * c**2 * float(s.coefficient) * dt * np.diag(BETA).real)) @ u
    return u


def dispersion(scheme: SplittingScheme, momenta, ell: float, n_star, dt: float | None = None,
               mass: float = 0.0, c: float = 1.0, zero_tol: float = 1e-9) -> DispersionResult:
    """E*dt = i ln(lambda) for each eigenvalue of the symbol, plus nonzero momenta where some branch vanishes."""
    if dt is None:
        dt = float(Fraction(n_star)) * ell / c
    mom = np.atleast_2d(np.asarray(momenta, dtype=float))
    if mom.shape[1] == 1:
        mom = np.hstack([mom, np.zeros((len(mom), 2))])
    lams = np.empty((len(mom), 4), dtype=complex)
    for i, p in enumerate(mom):
        lams[i] = np.linalg.eigvals(symbol(scheme, p, ell, n_star, dt, mass, c))
    if np.max(np.abs(np.abs(lams) - 1)) > 1e-10:
        raise SpectralError("one-step symbol is not unitary")
    energies = np.sort(-np.angle(lams), axis=1)
    doubling = [p for p, e in zip(mom, energies)
                if np.linalg.norm(p) > 1e-12 and np.min(np.abs(e)) < zero_tol]
    return DispersionResult(mom, energies, dt, lams, doubling)


def brillouin_line(ell: float, n: int, axis: int = 0) -> np.ndarray:
    """n momenta across [-pi/ell, pi/ell] along one axis."""
    p = np.zeros((n, 3))
    p[:, axis] = np.linspace(-math.pi / ell, math.pi / ell, n)
    return p


# ---------------------------------------------------------------- windows


def _hann(t: np.ndarray, t_f: float) -> np.ndarray:
    return 1 - np.cos(2 * math.pi * t / t_f)


def _rectangular(t: np.ndarray, t_f: float) -> np.ndarray:
    return np.ones_like(t)


def _blackman(t: np.ndarray, t_f: float) -> np.ndarray:
    x = 2 * math.pi * t / t_f
    return (0.42 - 0.5 * np.cos(x) + 0.08 * np.cos(2 * x)) / 0.42


# all windows have unit mean over [0, t_f]
WINDOWS: dict[str, Callable[[np.ndarray, float], np.ndarray]] = {
    "hann": _hann,
    "rectangular": _rectangular,
    "blackman": _blackman,
}


def window(kind: str, t: np.ndarray, t_f: float) -> np.ndarray:
    try:
        return WINDOWS[kind](np.asarray(t, dtype=float), t_f)
    except KeyError:
        raise SpectralError(f"unknown window {kind!r}; choose from {sorted(WINDOWS)}") from None


def trapezoid_weights(n_t: int) -> np.ndarray:
    a = np.ones(n_t + 1)
    a[0] = a[-1] = 0.5
    return a


# ---------------------------------------------------------------- autocorrelation


def _time_dependent(potentials: Potentials) -> bool:
    # conservative: any field may depend on t, so the step circuit is rebuilt per step
    return potentials.vector_potential is not None or potentials.scalar_potential.kind != "zero"


def autocorrelation_classical(trial: SpinorField, scheme: SplittingScheme, potentials: Potentials,
                              n_t: int, t0: float = 0.0) -> np.ndarray:
    """C(t_k) = <psi(0)|psi(t_k)> from the classical solver."""
    out = np.empty(n_t + 1, dtype=complex)
    f = trial
    out[0] = trial.inner(f)
    for k in range(1, n_t + 1):
        f = step(f, scheme, t0 + (k - 1) * trial.spec.dt, potentials)
        out[k] = trial.inner(f)
    return out


def autocorrelation_quantum(trial: SpinorField, scheme: SplittingScheme, potentials: Potentials,
                            n_t: int, t0: float = 0.0) -> np.ndarray:
    """<(X + iY)> on an ancilla that controls the time evolution, for t_0 .. t_{n_t}."""
    spec = trial.spec
    layout = dirac_layout(spec, extra=("a",))
    anc = layout.wire("a")
    state = encode_field(trial, layout)
    apply(state.amps, Gate("H", (anc,)))
    out = np.empty(n_t + 1, dtype=complex)
    out[0] = expectation(state, "X+iY", anc)
    step_circ = None
    for k in range(1, n_t + 1):
        if step_circ is None or _time_dependent(potentials):
            t = t0 + (k - 1) * spec.dt
            step_circ = build_time_step(scheme, t, spec, potentials, layout).controlled(anc, 1)
        state.amps = run(step_circ, state.amps)
        out[k] = expectation(state, "X+iY", anc)
    return out


# ---------------------------------------------------------------- spectral density


@dataclass
class SpectralDensity:
    energies: np.ndarray
    values: np.ndarray  # complex C(E)
    window: str
    t_f: float
    dt: float

    @property
    def resolution(self) -> float:
        return math.pi / self.t_f

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def peaks(self, threshold: float = 0.1) -> np.ndarray:
        """Energies of local maxima of |C(E)| above threshold * max, strongest first."""
        mag = self.magnitude
        inner = (mag[1:-1] >= mag[:-2]) & (mag[1:-1] > mag[2:]) & (mag[1:-1] >= threshold * mag.max())
        idx = np.flatnonzero(inner) + 1
        idx = idx[np.argsort(-mag[idx])]
        return self.energies[idx]


def spectral_density(series: Sequence[complex], dt: float, window_kind: str = "hann",
                     energies: np.ndarray | None = None, oversample: int = 8) -> SpectralDensity:
    """C(E) = (1/t_f) sum_k dt a_k w(t_k) e^{i E t_k} C(t_k) with trapezoid weights."""
    c = np.asarray(series, dtype=complex)
    if c.size < 2:
        raise SpectralError("need at least two samples of the autocorrelation")
    n_t = c.size - 1
    t_f = n_t * dt
    t = dt * np.arange(n_t + 1)
    weights = dt * trapezoid_weights(n_t) * window(window_kind, t, t_f) / t_f
    if energies is None:
        d_e = math.pi / t_f / oversample
        e_max = math.pi / dt
        energies = np.linspace(-e_max, e_max, 2 * math.ceil(e_max / d_e) + 1)
    energies = np.asarray(energies, dtype=float)
    values = np.exp(1j * np.outer(energies, t)) @ (weights * c)
    return SpectralDensity(energies, values, window_kind, t_f, dt)


# ---------------------------------------------------------------- filtering


@dataclass
class FilterPlan:
    energy: float
    n_t: int
    dt: float
    window: str
    weights: np.ndarray
    window_values: np.ndarray
    coefficients: np.ndarray  # B_k
    singular_values: np.ndarray  # a_k
    matrices: np.ndarray  # normalized 2x2 B-hat_k

    @property
    def t_f(self) -> float:
        return self.n_t * self.dt


def b_hat(b: complex) -> np.ndarray:
    """[[1, 0], [b, 1]] scaled so its largest singular value is 1."""
    m = abs(b)
    scale = 1 / math.sqrt(1 + m * m / 2 + m * math.sqrt(1 + m * m / 4))
    return scale * np.array([[1, 0], [b, 1]], dtype=complex)


def b_hat_singular_value(b: complex) -> float:
    m = abs(b)
    root = m * math.sqrt(1 + m * m / 4)
    return math.sqrt((1 + m * m / 2 - root) / (1 + m * m / 2 + root))


def make_filter_plan(energy: float, n_t: int, dt: float, window_kind: str = "hann") -> FilterPlan:
    if n_t < 1:
        raise SpectralError("need at least one time step")
    if abs(energy) > math.pi / dt:
        raise SpectralError(f"energy {energy} outside the representable band [-{math.pi / dt}, {math.pi / dt}]")
    t_f = n_t * dt
    t = dt * np.arange(n_t + 1)
    a = trapezoid_weights(n_t)
    w = window(window_kind, t, t_f)
    b = dt * a * w * np.exp(1j * energy * t) / t_f
    mats = np.array([b_hat(x) for x in b])
    sv = np.array([b_hat_singular_value(x) for x in b])
    return FilterPlan(energy, n_t, dt, window_kind, a, w, b, sv, mats)


def success_probability_bound(n_t: int) -> float:
    if n_t < 2:
        raise SpectralError("the bound needs n_t >= 2")
    return (1 - 1 / n_t) / math.e


@dataclass
class FilterResult:
    field: SpinorField
    success_probability: float  # product of the per-step ancilla projections
    branch_probability: float  # probability of the final |c> = |1> projection
    step_probabilities: np.ndarray
    plan: FilterPlan
    attempts: int | None = None


def _project(state: QuantumState, wire: int, value: int) -> float:
    n = state.n_total
    psi = np.moveaxis(state.amps.reshape((2,) * n), wire, 0)
    prob = float(np.sum(np.abs(psi[value]) ** 2))
    if prob <= 1e-300:
        raise SpectralError("projection onto an outcome with zero probability")
    psi[1 - value] = 0
    state.amps /= math.sqrt(prob)
    return prob


def _apply_b_hat(state: QuantumState, mat: np.ndarray, c_wire: int, r_wire: int) -> tuple[float, float]:
    """B-hat = U diag(1, a) V^dagger; diag(1, a) realized by c-controlled RY on r plus projection of r on |0>."""
    u, s, vh = np.linalg.svd(mat)
    # numpy returns s descending; normalization makes s[0] == 1
    a = float(min(1.0, s[1] / s[0]))
    apply(state.amps, Gate("U", (c_wire,), table=vh))
    if a < 1.0:
        apply(state.amps, Gate("RY", (r_wire,), ((c_wire, 1),), (-2 * math.acos(a),)))
    prob = _project(state, r_wire, 0)
    apply(state.amps, Gate("U", (c_wire,), table=u))
    return prob, a


def feit_fleck_filter(trial: SpinorField, energy: float, n_t: int, scheme: SplittingScheme,
                      potentials: Potentials, window_kind: str = "hann", t0: float = 0.0,
                      seed: int | None = None) -> FilterResult:
    """Filter the trial toward the eigenstate at ``energy`` on a register with two extra wires.

    Wire ``c`` starts in |0>: its |0> branch carries the evolving trial, each
    B-hat adds B_k times it to the |1> branch, and the time step only acts on
    the |0> branch. Ancilla projections are exact; with a seed, the number of
    attempts until every projection succeeds is also drawn.
    """
    spec = trial.spec
    plan = make_filter_plan(energy, n_t, spec.dt, window_kind)
    layout = dirac_layout(spec, extra=("c", "r"))
    c_wire, r_wire = layout.wire("c"), layout.wire("r")
    state = encode_field(trial, layout)
    probs = np.empty(n_t + 1)
    step_circ = None
    for k in range(n_t + 1):
        if k > 0:
            if step_circ is None or _time_dependent(potentials):
                t = t0 + (k - 1) * spec.dt
                step_circ = build_time_step(scheme, t, spec, potentials, layout).controlled(c_wire, 0)
            state.amps = run(step_circ, state.amps)
        probs[k], _ = _apply_b_hat(state, plan.matrices[k], c_wire, r_wire)
    branch = _project(state, c_wire, 1)
    # move the filtered branch back to c = |0> so the register decodes
    apply(state.amps, Gate("X", (c_wire,)))
    out = normalize(decode_field(state, spec))
    total = float(np.prod(probs))
    attempts = None
    if seed is not None:
        attempts = int(np.random.default_rng(seed).geometric(total))
    return FilterResult(out, total, branch, probs, plan, attempts)


def feit_fleck_classical(trial: SpinorField, energy: float, n_t: int, scheme: SplittingScheme,
                         potentials: Potentials, window_kind: str = "hann", t0: float = 0.0) -> SpinorField:
    """Normalized sum_k B_k psi(t_k) from the classical solver."""
    plan = make_filter_plan(energy, n_t, trial.spec.dt, window_kind)
    acc = plan.coefficients[0] * trial.amps
    f = trial
    for k in range(1, n_t + 1):
        f = step(f, scheme, t0 + (k - 1) * trial.spec.dt, potentials)
        acc = acc + plan.coefficients[k] * f.amps
    return normalize(SpinorField(trial.spec, acc))
