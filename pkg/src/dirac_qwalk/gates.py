"""Single-qubit matrices and SU(2) helpers shared by the solver and the circuit layer."""

from __future__ import annotations

import cmath
import math
from typing import NamedTuple

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
T = np.array([[1, 0], [0, cmath.exp(1j * math.pi / 4)]], dtype=complex)
PAULI = {"x": X, "y": Y, "z": Z}


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array([[cmath.exp(-0.5j * theta), 0], [0, cmath.exp(0.5j * theta)]], dtype=complex)


def phase(theta: float) -> np.ndarray:
    return np.array([[1, 0], [0, cmath.exp(1j * theta)]], dtype=complex)


class ZYZ(NamedTuple):
    """U = exp(i*phase) Rz(delta) Ry(theta) Rz(xi)."""

    delta: float
    theta: float
    xi: float
    phase: float = 0.0

    def matrix(self) -> np.ndarray:
        return cmath.exp(1j * self.phase) * (rz(self.delta) @ ry(self.theta) @ rz(self.xi))


def zyz_decompose(u: np.ndarray) -> ZYZ:
    u = np.asarray(u, dtype=complex)
    gamma = cmath.phase(np.linalg.det(u)) / 2
    v = u * cmath.exp(-1j * gamma)
    theta = 2 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    # half-sum and half-difference of delta, xi; one is free when theta is 0 or pi
    half_sum = -cmath.phase(v[0, 0]) if abs(v[0, 0]) > 1e-14 else 0.0
    half_diff = cmath.phase(v[1, 0]) if abs(v[1, 0]) > 1e-14 else 0.0
    out = ZYZ(half_sum + half_diff, theta, half_sum - half_diff, gamma)
    if np.max(np.abs(out.matrix() - u)) > 1e-9:
        out = ZYZ(out.delta + 2 * math.pi, theta, out.xi, gamma + math.pi)
    return out


def phase_distance(u: np.ndarray, v: np.ndarray) -> float:
    """min over global phase of the operator-norm distance ||u - e^{i a} v||."""
    w = np.conj(u.T) @ v
    ang = np.sort(np.angle(np.linalg.eigvals(w)))
    if len(ang) == 1:
        return 0.0
    # smallest arc containing all eigenphases
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
    spread = 2 * math.pi - gaps.max()
    return float(2 * math.sin(min(spread, math.pi) / 4))
