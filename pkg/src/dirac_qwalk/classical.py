"""Reference split-operator solver acting directly on a SpinorField.

Streaming is an exact periodic permutation of lattice sites; every other
operator is a site-local 4x4 (or scalar phase) multiplication.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import gates as g
from .lattice import Potentials, SpinorField
from .splitting import STREAM_TAGS, TIME_SHIFT, SplittingScheme


class StreamingError(ValueError):
    """A streaming coefficient does not land on an integer number of sites."""


def _block(a, b, c, d) -> np.ndarray:
    return np.block([[a, b], [c, d]])


_ZERO2 = np.zeros((2, 2), dtype=complex)

ALPHA = tuple(_block(_ZERO2, s, s, _ZERO2) for s in (g.X, g.Y, g.Z))
BETA = _block(g.I2, _ZERO2, _ZERO2, -g.I2)
# S_a = (beta + alpha_a) / sqrt(2); Hermitian and involutory
SPIN_ROTATION = tuple((BETA + a) / math.sqrt(2) for a in ALPHA)
WEYL_ALPHA = tuple(_block(s, _ZERO2, _ZERO2, -s) for s in (g.X, g.Y, g.Z))
# H (x) I_2 maps the Weyl representation to the Dirac one
WEYL_TO_DIRAC = np.kron(g.H, g.I2)


def check_representation(tol: float = 1e-14) -> None:
    """Assert the matrix identities the solver relies on."""
    for a, s, w in zip(ALPHA, SPIN_ROTATION, WEYL_ALPHA):
        assert np.allclose(s @ s, np.eye(4), atol=tol)
        assert np.allclose(s.conj().T @ a @ s, BETA, atol=tol)
        assert np.allclose(WEYL_TO_DIRAC @ w @ WEYL_TO_DIRAC, a, atol=tol)


check_representation()


def _apply_spinor_matrix(amps: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Multiply every site spinor by m (4x4) or by a site field of matrices (4, 4, *shape)."""
    if m.ndim == 2:
        return np.tensordot(m, amps, axes=(1, 0))
    return np.einsum("ab...,b...->a...", m, amps)


def stream(field: SpinorField, axis: int, sites: int) -> SpinorField:
    """phi moves by -sites along the axis, chi by +sites (periodic)."""
    sites = int(sites)
    out = np.empty_like(field.amps)
    out[:2] = np.roll(field.amps[:2], -sites, axis=1 + axis)
    out[2:] = np.roll(field.amps[2:], sites, axis=1 + axis)
    return SpinorField(field.spec, out)


def spin_rotate(field: SpinorField, axis: int, inverse: bool = False) -> SpinorField:
    s = SPIN_ROTATION[axis]
    m = s.conj().T if inverse else s
    return SpinorField(field.spec, _apply_spinor_matrix(field.amps, m))


def apply_mass(field: SpinorField, dt_eff: float, mass: float, c: float = 1.0) -> SpinorField:
    ph = mass * c**2 * dt_eff
    out = field.amps.copy()
    out[:2] *= np.exp(-1j * ph)
    out[2:] *= np.exp(1j * ph)
    return SpinorField(field.spec, out)


def apply_scalar_potential(field: SpinorField, t: float, dt_eff: float, potentials: Potentials) -> SpinorField:
    x, y, z = field.spec.mesh()
    v = potentials.scalar_potential(x, y, z, t)
    if not np.all(np.isfinite(v)):
        raise ValueError("scalar potential returned non-finite values")
    return SpinorField(field.spec, field.amps * np.exp(-1j * potentials.charge * v * dt_eff)[None])


def su2_exponential(a: np.ndarray) -> np.ndarray:
    """exp(-i sigma . a) for a of shape (3, ...), returned with shape (2, 2, ...)."""
    a = np.asarray(a, dtype=float)
    norm = np.sqrt(np.sum(a**2, axis=0))
    cos = np.cos(norm)
    # sin(|a|)/|a| -> 1 as |a| -> 0
    sinc = np.where(norm > 1e-300, np.sin(norm) / np.where(norm > 1e-300, norm, 1.0), 1.0)
    ax, ay, az = a * sinc
    return np.array([[cos - 1j * az, -1j * ax - ay], [-1j * ax + ay, cos + 1j * az]])


def vector_potential_matrix(a_vec: np.ndarray, dt_eff: float, charge: float) -> np.ndarray:
    """Q_A = exp(i e dt alpha . A) through the Weyl block form diag(Q^dagger, Q), Q = exp(-i e dt sigma . A)."""
    q = su2_exponential(charge * dt_eff * np.asarray(a_vec, dtype=float))
    q_dag = np.conj(np.swapaxes(q, 0, 1))
    shape = q.shape[2:]
    weyl = np.zeros((4, 4, *shape), dtype=complex)
    weyl[:2, :2] = q_dag
    weyl[2:, 2:] = q
    return np.einsum("ab,bc...,cd->ad...", WEYL_TO_DIRAC, weyl, WEYL_TO_DIRAC)


def apply_vector_potential(field: SpinorField, t: float, dt_eff: float, potentials: Potentials) -> SpinorField:
    if potentials.magnetic_mode:
        m = vector_potential_matrix(potentials.site_a(field.spec, t), dt_eff, potentials.charge)
    else:
        a = potentials.homogeneous_a(t)
        if not np.any(a):
            return field.copy()
        m = vector_potential_matrix(a, dt_eff, potentials.charge)
    return SpinorField(field.spec, _apply_spinor_matrix(field.amps, m))


class EulerAngles(NamedTuple):
    """exp(-i e dt sigma . A) = exp(i*phase) Rz(delta) Ry(theta) Rz(xi)."""

    delta: float
    theta: float
    xi: float
    phase: float = 0.0

    def matrix(self) -> np.ndarray:
        return g.ZYZ(*self).matrix()


def euler_angles(a_vec, dt_eff: float, charge: float = -1.0) -> EulerAngles:
    """Closed-form Euler angles of the SU(2) field rotation, with a ZYZ fallback.

    The charge is folded into the vector potential before the angle formulas
    are applied. When the closed form is singular or lands on the wrong sign
    branch, the angles are recomputed from the explicit 2x2 matrix and the
    leftover global phase is returned in ``phase``.
    """
    a = charge * dt_eff * np.asarray(a_vec, dtype=float)
    norm = float(np.linalg.norm(a))
    if norm == 0.0:
        return EulerAngles(0.0, 0.0, 0.0, 0.0)
    target = su2_exponential(a)
    ax, ay, az = a
    azimuth = math.atan2(ax, ay) if (ax or ay) else 0.0
    tilt = math.atan((az / norm) * math.tan(norm))
    delta, xi = tilt - azimuth, tilt + azimuth
    cos_half = math.cos((xi + delta) / 2)
    if abs(cos_half) >= 1e-14:
        ratio = min(1.0, max(-1.0, math.cos(norm) / cos_half))
        angles = EulerAngles(delta, 2 * math.acos(ratio), xi, 0.0)
        if np.max(np.abs(angles.matrix() - target)) < 1e-12:
            return angles
    return EulerAngles(*g.zyz_decompose(target))


def streaming_sites(n_star: Fraction, coefficient: Fraction) -> int:
    sites = Fraction(n_star) * Fraction(coefficient)
    if sites.denominator != 1:
        raise StreamingError(
            f"streaming by {sites} sites is not exact; refine the lattice or raise n_star"
        )
    return int(sites)


def step(field: SpinorField, scheme: SplittingScheme, t: float, potentials: Potentials) -> SpinorField:
    """Advance the field by one time step of the scheme, starting at time t."""
    spec = field.spec
    clock = Fraction(0)
    f = field
    for s in scheme.steps:
        dt_eff = float(s.coefficient) * spec.dt
        t_eval = t + float(clock) * spec.dt
        if s.tag == TIME_SHIFT:
            clock += s.coefficient
        elif s.tag in STREAM_TAGS:
            axis = STREAM_TAGS[s.tag]
            sites = streaming_sites(spec.n_star, s.coefficient)
            if spec.qubits[axis] == 0:
                continue
            f = spin_rotate(f, axis, inverse=True)
            f = stream(f, axis, sites)
            f = spin_rotate(f, axis)
        elif s.tag == "M":
            if potentials.mass:
                f = apply_mass(f, dt_eff, potentials.mass, spec.c)
        elif s.tag == "V":
            if potentials.scalar_potential.kind != "zero":
                f = apply_scalar_potential(f, t_eval, dt_eff, potentials)
        elif s.tag == "A":
            f = apply_vector_potential(f, t_eval, dt_eff, potentials)
    return f


def evolve(field: SpinorField, scheme: SplittingScheme, potentials: Potentials, n_steps: int,
           t0: float = 0.0, callback=None) -> SpinorField:
    f = field
    for n in range(n_steps):
        f = step(f, scheme, t0 + n * field.spec.dt, potentials)
        if callback is not None:
            callback(n + 1, t0 + (n + 1) * field.spec.dt, f)
    return f
