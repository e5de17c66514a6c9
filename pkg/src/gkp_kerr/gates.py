"""Oscillator gates and their two-level logical targets."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fock_core import (
    DEFAULT_INTERIOR_MARGIN,
    FockOperator,
    InvalidDimensionError,
    TruncationWarning,
    quadratures,
)

SQRT_PI = np.sqrt(np.pi)

# phi(q) = c1 q + c2 q^2 + c3 q^3 with x = q/sqrt(pi):
# (pi/4)(2x^3 + x^2 - 2x) is 0 mod 2 pi on even x and pi/4 mod 2 pi on odd x
T_GATE_COEFFS = (-SQRT_PI / 2, 0.25, 1 / (2 * SQRT_PI))

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = (PAULI_X + PAULI_Z) / np.sqrt(2)

# qubit eigenvectors of the Hadamard, eigenvalues +1 and -1
PLUS_H = np.array([np.cos(np.pi / 8), np.sin(np.pi / 8)], dtype=complex)
MINUS_H = np.array([np.sin(np.pi / 8), -np.cos(np.pi / 8)], dtype=complex)


@dataclass(frozen=True, eq=False)
class LogicalTarget:
    matrix: np.ndarray
    name: str

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("logical target must be 2x2")
        if np.abs(m.conj().T @ m - np.eye(2)).max() > 1e-12:
            raise ValueError(f"{self.name} is not unitary")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def __call__(self, vec) -> np.ndarray:
        return self.matrix @ np.asarray(vec, dtype=complex)


def _check_dim(dim: int) -> None:
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")


def kerr_unitary(dim: int, interior_margin: int = DEFAULT_INTERIOR_MARGIN) -> FockOperator:
    """exp(i pi n^2 / 8); acts as the logical sqrt(H) on the square code."""
    _check_dim(dim)
    n = np.arange(dim, dtype=float)
    return FockOperator(np.diag(np.exp(1j * np.pi * n**2 / 8)), interior_margin, unitary=True)


def kerr_phase_diag(dim: int, elapsed_fraction: float = 1.0) -> np.ndarray:
    """Diagonal of exp(i (pi/8) s n^2), i.e. Kerr evolution for s gate times."""
    n = np.arange(dim, dtype=float)
    return np.exp(1j * np.pi * elapsed_fraction * n**2 / 8)


def fourier_gate(dim: int, interior_margin: int = DEFAULT_INTERIOR_MARGIN) -> FockOperator:
    _check_dim(dim)
    return FockOperator(np.diag(1j ** np.arange(dim)), interior_margin, unitary=True)


def parity(dim: int, interior_margin: int = DEFAULT_INTERIOR_MARGIN) -> FockOperator:
    _check_dim(dim)
    return FockOperator(np.diag((-1.0) ** np.arange(dim)), interior_margin, hermitian=True, unitary=True)


def kerr_hamiltonian(dim: int, kerr: float = -1.0, interior_margin: int = DEFAULT_INTERIOR_MARGIN) -> FockOperator:
    """H = (K/2) n^2 for an angular Kerr rate K.

    With K < 0 and t_K = pi / (4 |K|), exp(-i H t_K) = exp(i pi n^2 / 8).
    """
    _check_dim(dim)
    n = np.arange(dim, dtype=float)
    return FockOperator(np.diag(0.5 * kerr * n**2), interior_margin, hermitian=True)


def cubic_gate(dim: int, coeffs=T_GATE_COEFFS, interior_margin: int = DEFAULT_INTERIOR_MARGIN) -> FockOperator:
    """exp(i phi(q)) with phi(q) = c1 q + c2 q^2 + c3 q^3.

    Built in the eigenbasis of the truncated position operator. The default
    coefficients give the square-code logical T gate.
    """
    _check_dim(dim)
    c1, c2, c3 = (float(c) for c in coeffs)
    if c1 == c2 == c3 == 0:
        return FockOperator(np.eye(dim), interior_margin, unitary=True)
    q, _ = quadratures(dim, interior_margin)
    x, v = np.linalg.eigh(q.data)
    phase = c1 * x + c2 * x**2 + c3 * x**3
    # the largest eigenvalue of the truncated q bounds what is resolvable;
    # a phase gradient beyond the momentum range the truncation can hold
    # folds over
    grad = np.abs(c1 + 2 * c2 * x + 3 * c3 * x**2)
    if grad.max() > np.sqrt(2 * dim + 1) * 4:
        warnings.warn("cubic phase gradient exceeds the truncated momentum range", TruncationWarning, stacklevel=2)
    u = (v * np.exp(1j * phase)) @ v.conj().T
    return FockOperator(u, interior_margin, unitary=True)


def sqrt_h_target() -> LogicalTarget:
    """e^{i pi/4}[cos(pi/4) I - i sin(pi/4)(X + Z)/sqrt 2].

    Eigenphases are exactly 1 on |+H> and i on |-H>.
    """
    m = np.exp(1j * np.pi / 4) * (np.cos(np.pi / 4) * PAULI_I - 1j * np.sin(np.pi / 4) * HADAMARD)
    return LogicalTarget(m, "sqrtH")


def hadamard_target() -> LogicalTarget:
    return LogicalTarget(HADAMARD, "H")


def t_target() -> LogicalTarget:
    return LogicalTarget(np.diag([1.0, np.exp(1j * np.pi / 4)]), "T")


def qubit_state(label: str) -> np.ndarray:
    """Single-qubit vector for the same labels as ``gkp_code.logical_state``."""
    s = 1 / np.sqrt(2)
    table = {
        "0": [1, 0],
        "1": [0, 1],
        "+": [s, s],
        "-": [s, -s],
        "+i": [s, 1j * s],
        "-i": [s, -1j * s],
        "+H": PLUS_H,
        "-H": MINUS_H,
    }
    alias = {"+Y": "+i", "-Y": "-i"}
    return np.array(table[alias.get(label, label)], dtype=complex)


def magic_target() -> np.ndarray:
    """|H'> = sqrt(H)|+i>."""
    return sqrt_h_target()(qubit_state("+i"))


def kerr_gate_time(kerr_rate: float) -> float:
    """t_K = pi / (4 K) for angular Kerr rate K."""
    return np.pi / (4 * abs(kerr_rate))


def operating_point(kerr_hz: float = -20e3, cavity_t1: float = 610e-6) -> dict:
    """Gate time and loss parameter for a Kerr K/2pi (Hz) and cavity T1 (s).

    The published operating-point figures are carried alongside the computed
    ones as reference metadata only.
    """
    kerr = 2 * np.pi * kerr_hz
    t_k = kerr_gate_time(kerr)
    gamma = float(-np.expm1(-t_k / cavity_t1))
    return {
        "kerr_angular": kerr,
        "gate_time": t_k,
        "gamma": gamma,
        "reference": {"gate_time": 6.3e-6, "gamma": 1.07e-2},
    }
