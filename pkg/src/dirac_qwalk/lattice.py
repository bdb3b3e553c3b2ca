"""Lattice geometry, spinor fields and external potentials.

Fields are stored component-major as ``(4, N_x, N_y, N_z)`` complex arrays in
the order (phi_1, phi_2, chi_1, chi_2). An axis with zero qubits has a single
site and is inert.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

COMPONENTS = ("phi1", "phi2", "chi1", "chi2")
AXES = ("x", "y", "z")


class LatticeError(ValueError):
    """Raised for invalid lattice geometry or CFL parameters."""


def _as_half_integer(n_star) -> Fraction:
    try:
        value = Fraction(n_star).limit_denominator(1000)
    except (TypeError, ValueError) as exc:
        raise LatticeError(f"n_star must be a number, got {n_star!r}") from exc
    if abs(float(value) - float(n_star)) > 1e-12 or value <= 0 or (2 * value).denominator != 1:
        raise LatticeError(
            f"CFL multiplier n_star must be a positive half-integer (1/2, 1, 3/2, ...), got {n_star!r}"
        )
    return value


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic cubic lattice with time step locked to the cell size (c dt = n_star ell)."""

    n_x: int
    n_y: int
    n_z: int
    ell: float
    n_star: Fraction
    dt: float
    c: float = 1.0
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    boundary: str = "periodic"

    def __post_init__(self):
        for name in ("n_x", "n_y", "n_z"):
            n = getattr(self, name)
            if int(n) != n or n < 0:
                raise LatticeError(f"{name} must be a non-negative integer, got {n!r}")
        if not self.ell > 0:
            raise LatticeError(f"cell size must be positive, got {self.ell!r}")
        if self.boundary != "periodic":
            raise LatticeError("only periodic boundaries are supported")
        object.__setattr__(self, "n_star", _as_half_integer(self.n_star))
        expected = float(self.n_star) * self.ell
        if abs(self.c * self.dt - expected) > math.ulp(expected):
            raise LatticeError(
                f"CFL violation: c*dt = {self.c * self.dt!r} but n_star*ell = {expected!r}"
            )

    @property
    def qubits(self) -> tuple[int, int, int]:
        return (self.n_x, self.n_y, self.n_z)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(2**n for n in self.qubits)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    @property
    def active_axes(self) -> tuple[int, ...]:
        return tuple(a for a, n in enumerate(self.qubits) if n > 0)

    @property
    def cell_volume(self) -> float:
        # inert axes do not contribute a length factor
        return self.ell ** len(self.active_axes)

    def axis_coordinates(self, axis: int) -> np.ndarray:
        n = self.shape[axis]
        return self.origin[axis] + (np.arange(n) + 0.5) * self.ell

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Centroid coordinates broadcast to the lattice shape."""
        return tuple(np.meshgrid(*(self.axis_coordinates(a) for a in range(3)), indexing="ij"))

    def refined(self) -> LatticeSpec:
        """Same domain and time step on a lattice of half the cell size (one more qubit per active axis)."""
        q = [n + 1 if n > 0 else 0 for n in self.qubits]
        return LatticeSpec(*q, ell=self.ell / 2, n_star=2 * self.n_star, dt=self.dt, c=self.c,
                           origin=self.origin)


def make_lattice(n_x: int, n_y: int = 0, n_z: int = 0, ell: float = 1.0, n_star=1,
                 origin: Sequence[float] = (0.0, 0.0, 0.0), c: float = 1.0) -> LatticeSpec:
    """Build a lattice whose time step satisfies c dt = n_star ell.

    Axes with zero qubits are inert (one site); at least one axis must be active.
    """
    ns = _as_half_integer(n_star)
    if max(n_x, n_y, n_z) < 1:
        raise LatticeError("at least one axis needs n_a >= 1")
    dt = float(ns) * ell / c
    return LatticeSpec(n_x, n_y, n_z, ell=ell, n_star=ns, dt=dt, c=c, origin=tuple(origin))


def centroid(spec: LatticeSpec, i: int, j: int = 0, k: int = 0) -> tuple[float, float, float]:
    out = []
    for axis, idx in enumerate((i, j, k)):
        if not 0 <= idx < spec.shape[axis]:
            raise IndexError(f"index {idx} out of range for axis {AXES[axis]} of size {spec.shape[axis]}")
        out.append(spec.origin[axis] + (idx + 0.5) * spec.ell)
    return tuple(out)


@dataclass
class SpinorField:
    spec: LatticeSpec
    amps: np.ndarray

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        expected = (4, *self.spec.shape)
        if self.amps.shape != expected:
            raise ValueError(f"amplitude array has shape {self.amps.shape}, expected {expected}")

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> SpinorField:
        return cls(spec, np.zeros((4, *spec.shape), dtype=complex))

    def copy(self) -> SpinorField:
        return SpinorField(self.spec, self.amps.copy())

    def norm(self) -> float:
        """Discrete norm ell^d * sum psi^dagger psi."""
        return float(self.spec.cell_volume * np.sum(np.abs(self.amps) ** 2))

    def inner(self, other: SpinorField) -> complex:
        return complex(self.spec.cell_volume * np.vdot(self.amps, other.amps))

    def density(self) -> np.ndarray:
        return np.sum(np.abs(self.amps) ** 2, axis=0)

    def mean_position(self) -> tuple[float, float, float]:
        rho = self.density() * self.spec.cell_volume
        total = rho.sum()
        return tuple(float(np.sum(rho * x) / total) for x in self.spec.mesh())


def normalize(f: SpinorField) -> SpinorField:
    n = f.norm()
    if n == 0.0:
        raise ValueError("cannot normalize a zero field")
    return SpinorField(f.spec, f.amps / math.sqrt(n))


def random_field(spec: LatticeSpec, rng: np.random.Generator, components: Sequence[int] = (0, 1, 2, 3)) -> SpinorField:
    amps = np.zeros((4, *spec.shape), dtype=complex)
    shape = (len(components), *spec.shape)
    amps[list(components)] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return normalize(SpinorField(spec, amps))


def gaussian_packet(spec: LatticeSpec, spinor: Sequence[complex], center: Sequence[float],
                    width: float, momentum: Sequence[float] = (0.0, 0.0, 0.0)) -> SpinorField:
    """Normalized Gaussian envelope times a constant spinor and a plane-wave phase."""
    grids = spec.mesh()
    arg = np.zeros(spec.shape)
    phase = np.zeros(spec.shape)
    for a in spec.active_axes:
        arg += (grids[a] - center[a]) ** 2
        phase += momentum[a] * grids[a]
    envelope = np.exp(-arg / (2 * width**2) + 1j * phase)
    amps = np.asarray(spinor, dtype=complex)[:, None, None, None] * envelope[None]
    return normalize(SpinorField(spec, amps))


class ScalarPotential:
    """V(x, t); ``kind`` tells circuit builders which oracle construction applies."""

    kind = "tabulated"

    def __init__(self, func: Callable[[np.ndarray, np.ndarray, np.ndarray, float], np.ndarray]):
        self.func = func

    def __call__(self, x, y, z, t):
        return np.broadcast_to(np.asarray(self.func(x, y, z, t), dtype=float), np.shape(x))


class ZeroPotential(ScalarPotential):
    kind = "zero"

    def __init__(self):
        super().__init__(lambda x, y, z, t: 0.0)


class ConstantPotential(ScalarPotential):
    kind = "constant"

    def __init__(self, value: float | Callable[[float], float]):
        self.value = value if callable(value) else (lambda t, v=float(value): v)
        super().__init__(lambda x, y, z, t: self.value(t))


class LinearPotential(ScalarPotential):
    """V(x, t) = -x . E(t) for a homogeneous electric field."""

    kind = "linear"

    def __init__(self, efield: Sequence[float] | Callable[[float], Sequence[float]]):
        self.efield = efield if callable(efield) else (lambda t, e=tuple(map(float, efield)): e)
        super().__init__(self._evaluate)

    def _evaluate(self, x, y, z, t):
        ex, ey, ez = self.efield(t)
        return -(x * ex + y * ey + z * ez)


def _constant_vector(value):
    v = tuple(float(a) for a in value)
    return lambda t: v


@dataclass
class Potentials:
    """External fields, mass and charge (natural units)."""

    mass: float = 0.0
    charge: float = -1.0
    scalar_potential: ScalarPotential = field(default_factory=ZeroPotential)
    vector_potential: Callable[[float], Sequence[float]] | None = None
    magnetic_mode: bool = False
    magnetic_potential: Callable[..., Sequence[np.ndarray]] | None = None

    def __post_init__(self):
        if self.vector_potential is not None and not callable(self.vector_potential):
            self.vector_potential = _constant_vector(self.vector_potential)
        if self.magnetic_mode and self.magnetic_potential is None:
            raise ValueError("magnetic_mode needs a space-dependent magnetic_potential(x, y, z, t)")

    def homogeneous_a(self, t: float) -> np.ndarray:
        if self.vector_potential is None:
            return np.zeros(3)
        return np.asarray(self.vector_potential(t), dtype=float)

    def site_a(self, spec: LatticeSpec, t: float) -> np.ndarray:
        """Vector potential on every centroid, shape (3, N_x, N_y, N_z)."""
        if not self.magnetic_mode:
            a = self.homogeneous_a(t)
            return np.broadcast_to(a[:, None, None, None], (3, *spec.shape)).copy()
        x, y, z = spec.mesh()
        comps = self.magnetic_potential(x, y, z, t)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), spec.shape) for c in comps])

    def with_mass(self, mass: float) -> Potentials:
        return replace(self, mass=mass)


def save_snapshot(f: SpinorField, path: str | Path, header: str = "") -> None:
    """Write a field as CSV: commented header, then one ``re,im`` row per amplitude (component-major)."""
    spec = f.spec
    lines = [
        f"# n_x={spec.n_x},n_y={spec.n_y},n_z={spec.n_z},ell={float(spec.ell)!r},n_star={spec.n_star},"
        f"origin={':'.join(repr(float(o)) for o in spec.origin)},order={':'.join(COMPONENTS)}"
    ]
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
    lines.append("re,im")
    flat = f.amps.reshape(-1)
    lines.extend(f"{float(a.real)!r},{float(a.imag)!r}" for a in flat)
    Path(path).write_text("\n".join(lines) + "\n")


def load_snapshot(path: str | Path) -> SpinorField:
    text = Path(path).read_text().splitlines()
    meta = dict(item.split("=", 1) for item in text[0].lstrip("# ").split(","))
    origin = tuple(float(o) for o in meta["origin"].split(":"))
    spec = make_lattice(int(meta["n_x"]), int(meta["n_y"]), int(meta["n_z"]), ell=float(meta["ell"]),
                        n_star=Fraction(meta["n_star"]), origin=origin)
    rows = [line for line in text if line and not line.startswith("#")][1:]
    data = np.array([[float(v) for v in r.split(",")] for r in rows])
    amps = (data[:, 0] + 1j * data[:, 1]).reshape(4, *spec.shape)
    return SpinorField(spec, amps)
