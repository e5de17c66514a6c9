"""Truncated Fock-space linear algebra.

Dense operators and states on span{|0>, ..., |D-1>}, plus the joint
ancilla (x) oscillator space used by conditional-displacement circuits.

Conventions
-----------
q = (a + a^dag)/sqrt(2),  p = i (a^dag - a)/sqrt(2),  [q, p] = i.
D(alpha) = exp(alpha a^dag - alpha* a) shifts q by sqrt(2) Re(alpha) and
p by sqrt(2) Im(alpha).  Wigner functions are normalised so that
integral W dq dp = 1, giving W_vac(0, 0) = 1/pi.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

DEFAULT_INTERIOR_MARGIN = 10


class InvalidDimensionError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


class TruncationWarning(UserWarning):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class FockOperator:
    """Dense D x D operator on the truncated Fock space.

    ``interior_margin`` rows/columns at the top of the space are excluded
    from exactness claims (``interior`` returns the trusted block).
    """

    data: np.ndarray
    interior_margin: int = DEFAULT_INTERIOR_MARGIN
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise InvalidDimensionError(f"operator must be square, got shape {data.shape}")
        if data.shape[0] < 2:
            raise InvalidDimensionError("dim must be >= 2")
        if self.interior_margin < 0:
            raise ValueError("interior_margin must be non-negative")
        object.__setattr__(self, "data", data)
        if self.hermitian and self.hermiticity_defect() > 1e-12:
            raise NumericError(f"operator flagged Hermitian has defect {self.hermiticity_defect():.2e}")
        if self.unitary and self.unitarity_defect() > 1e-10:
            raise NumericError(f"operator flagged unitary has defect {self.unitarity_defect():.2e}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def interior(self) -> int:
        """Size of the trusted block."""
        return max(self.dim - self.interior_margin, 1)

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.data - np.diag(np.diag(self.data)))

    @property
    def dag(self) -> "FockOperator":
        return FockOperator(self.data.conj().T, self.interior_margin, self.hermitian, self.unitary)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            _check_dims(self.dim, other.dim)
            return FockOperator(self.data @ other.data, max(self.interior_margin, other.interior_margin))
        return self.data @ np.asarray(other)

    def __add__(self, other: "FockOperator") -> "FockOperator":
        _check_dims(self.dim, other.dim)
        return FockOperator(self.data + other.data, max(self.interior_margin, other.interior_margin))

    def __sub__(self, other: "FockOperator") -> "FockOperator":
        _check_dims(self.dim, other.dim)
        return FockOperator(self.data - other.data, max(self.interior_margin, other.interior_margin))

    def __mul__(self, scalar) -> "FockOperator":
        return FockOperator(self.data * scalar, self.interior_margin)

    __rmul__ = __mul__

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    def unitarity_defect(self) -> float:
        """max |U^dag U - I| on the interior block."""
        k = self.interior
        g = self.data.conj().T @ self.data
        return float(np.abs(g[:k, :k] - np.eye(k)).max())


def _check_dims(d1: int, d2: int) -> None:
    if d1 != d2:
        raise InvalidDimensionError(f"dimension mismatch: {d1} vs {d2}")


@dataclass(frozen=True, eq=False)
class OscillatorState:
    """Pure ket (1-d ``data``) or density matrix (2-d ``data``).

    ``weight`` records the trace an unnormalised post-selected state is
    expected to carry; validation checks the trace against it.
    """

    data: np.ndarray
    weight: float = 1.0
    trace_tol: float = 1e-8

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim == 1:
            if data.size < 2:
                raise InvalidDimensionError("dim must be >= 2")
        elif data.ndim == 2:
            if data.shape[0] != data.shape[1] or data.shape[0] < 2:
                raise InvalidDimensionError(f"density matrix must be square, got {data.shape}")
        else:
            raise InvalidDimensionError("state must be a vector or a square matrix")
        if not np.all(np.isfinite(data)):
            raise NumericError("state has non-finite entries")
        object.__setattr__(self, "data", data)

    @classmethod
    def ket(cls, amplitudes, normalize: bool = True) -> "OscillatorState":
        v = np.asarray(amplitudes, dtype=complex)
        if normalize:
            nrm = np.linalg.norm(v)
            if nrm == 0:
                raise NumericError("cannot normalise the zero vector")
            v = v / nrm
        return cls(v)

    @classmethod
    def fock(cls, n: int, dim: int) -> "OscillatorState":
        v = np.zeros(dim, dtype=complex)
        v[n] = 1.0
        return cls(v)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def dm(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def to_dm(self) -> "OscillatorState":
        return self if not self.is_pure else OscillatorState(self.dm(), self.weight, self.trace_tol)

    def trace(self) -> float:
        if self.is_pure:
            return float(np.vdot(self.data, self.data).real)
        return float(np.trace(self.data).real)

    def normalized(self) -> "OscillatorState":
        tr = self.trace()
        if tr <= 0:
            raise NumericError("state has zero trace")
        if self.is_pure:
            return OscillatorState(self.data / np.sqrt(tr), 1.0, self.trace_tol)
        return OscillatorState(self.data / tr, 1.0, self.trace_tol)

    def expect(self, op: FockOperator | np.ndarray) -> complex:
        m = op.data if isinstance(op, FockOperator) else np.asarray(op)
        if self.is_pure:
            return complex(np.vdot(self.data, m @ self.data))
        return complex(np.trace(m @ self.data))

    def evolve(self, op: FockOperator | np.ndarray) -> "OscillatorState":
        """Return ``U psi`` or ``U rho U^dag`` (no renormalisation)."""
        m = op.data if isinstance(op, FockOperator) else np.asarray(op)
        if self.is_pure:
            return OscillatorState(m @ self.data, self.weight, self.trace_tol)
        return OscillatorState(m @ self.data @ m.conj().T, self.weight, self.trace_tol)

    def fidelity(self, target: "OscillatorState") -> float:
        """<t|rho|t> for a pure target (both normalised first)."""
        if not target.is_pure:
            raise ValueError("target must be a pure state")
        t = target.data / np.linalg.norm(target.data)
        s = self.normalized()
        if s.is_pure:
            return float(abs(np.vdot(t, s.data)) ** 2)
        return float(np.vdot(t, s.data @ t).real)

    def photon_distribution(self) -> np.ndarray:
        if self.is_pure:
            return np.abs(self.data) ** 2
        return np.real(np.diag(self.data)).copy()

    def validate(self, herm_tol: float = 1e-12, neg_tol: float = -1e-9) -> None:
        """Raise ``NumericError`` when the invariants are violated."""
        if self.is_pure:
            if abs(np.linalg.norm(self.data) - np.sqrt(self.weight)) > 1e-10:
                raise NumericError("ket is not normalised")
            return
        rho = self.data
        if np.abs(rho - rho.conj().T).max() > herm_tol:
            raise NumericError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - self.weight) > self.trace_tol:
            raise NumericError(f"trace {np.trace(rho).real} differs from {self.weight}")
        if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < neg_tol:
            raise NumericError("density matrix has negative eigenvalues")


@dataclass(frozen=True, eq=False)
class HybridState:
    """Joint state on (qubit ancilla) (x) (oscillator), ancilla index first."""

    data: np.ndarray
    osc_dim: int = field(default=0)

    def __post_init__(self):
        data = _frozen(self.data)
        n = data.shape[0]
        if n % 2:
            raise InvalidDimensionError("hybrid dimension must be 2 * D")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "osc_dim", n // 2)

    @classmethod
    def product(cls, ancilla, osc: OscillatorState) -> "HybridState":
        anc = np.asarray(ancilla, dtype=complex)
        if osc.is_pure and anc.ndim == 1:
            return cls(np.kron(anc, osc.data))
        a_dm = np.outer(anc, anc.conj()) if anc.ndim == 1 else anc
        return cls(np.kron(a_dm, osc.dm()))

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def evolve(self, u: np.ndarray) -> "HybridState":
        if self.is_pure:
            return HybridState(u @ self.data)
        return HybridState(u @ self.data @ u.conj().T)

    def project_ancilla(self, bra) -> OscillatorState:
        """Unnormalised oscillator state conditioned on ancilla outcome ``bra``."""
        d = self.osc_dim
        proj = np.kron(np.asarray(bra, dtype=complex).conj()[None, :], np.eye(d))
        if self.is_pure:
            return OscillatorState(proj @ self.data)
        return OscillatorState(proj @ self.data @ proj.conj().T)

    def ptrace_ancilla(self) -> OscillatorState:
        d = self.osc_dim
        if self.is_pure:
            blocks = self.data.reshape(2, d)
            return OscillatorState(blocks.T @ blocks.conj())
        r = self.data.reshape(2, d, 2, d)
        return OscillatorState(np.einsum("iaib->ab", r))


def ladder_ops(dim: int, interior_margin: int = DEFAULT_INTERIOR_MARGIN):
    """Return ``(a, adag, n)`` on a ``dim``-level truncation."""
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)
    adag = a.conj().T
    n = np.diag(np.arange(dim, dtype=float)).astype(complex)
    return (
        FockOperator(a, interior_margin),
        FockOperator(adag, interior_margin),
        FockOperator(n, interior_margin, hermitian=True),
    )


def quadratures(dim: int, interior_margin: int = DEFAULT_INTERIOR_MARGIN):
    a, adag, _ = ladder_ops(dim, interior_margin)
    q = (a.data + adag.data) / np.sqrt(2)
    p = 1j * (adag.data - a.data) / np.sqrt(2)
    return FockOperator(q, interior_margin, hermitian=True), FockOperator(p, interior_margin, hermitian=True)


def identity(dim: int, interior_margin: int = DEFAULT_INTERIOR_MARGIN) -> FockOperator:
    return FockOperator(np.eye(dim), interior_margin, hermitian=True, unitary=True)


def number_diag(dim: int) -> np.ndarray:
    return np.arange(dim, dtype=float)


def expm(op: FockOperator | np.ndarray, scale: complex = 1.0) -> FockOperator:
    """``exp(scale * op)``; diagonal inputs are exponentiated entrywise."""
    m = op.data if isinstance(op, FockOperator) else np.asarray(op, dtype=complex)
    margin = op.interior_margin if isinstance(op, FockOperator) else DEFAULT_INTERIOR_MARGIN
    if not np.all(np.isfinite(m)) or not np.isfinite(scale):
        raise NumericError("expm: non-finite entries")
    d = np.diag(m)
    if not np.any(m - np.diag(d)):
        out = np.diag(np.exp(scale * d))
    else:
        out = scipy.linalg.expm(scale * m)
    if not np.all(np.isfinite(out)):
        raise NumericError("expm overflowed")
    gen = scale * m
    anti_herm = np.allclose(gen, -gen.conj().T, atol=1e-13, rtol=0)
    return FockOperator(out, margin, unitary=anti_herm)


def displacement(alpha: complex, dim: int, interior_margin: int = DEFAULT_INTERIOR_MARGIN) -> FockOperator:
    """Truncated-space displacement ``exp(alpha a^dag - alpha* a)``.

    Exactly unitary on the truncated space; matrix elements agree with the
    infinite-dimensional operator only well inside the truncation.
    """
    alpha = complex(alpha)
    if abs(alpha) ** 2 > dim / 4:
        warnings.warn(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} is not small compared with dim = {dim}",
            TruncationWarning,
            stacklevel=2,
        )
    a, adag, _ = ladder_ops(dim, interior_margin)
    if alpha == 0:
        return identity(dim, interior_margin)
    gen = alpha * adag.data - np.conj(alpha) * a.data
    # the generator is anti-Hermitian: exponentiate through the Hermitian
    # eigenproblem of i*gen, which is faster and exactly unitary
    w, v = np.linalg.eigh(1j * gen)
    u = (v * np.exp(-1j * w)) @ v.conj().T
    return FockOperator(u, interior_margin, unitary=True)


def wigner(state: OscillatorState, q_grid: Sequence[float], p_grid: Sequence[float]):
    """Wigner function on the grid, indexed ``W[i_p, i_q]``.

    Uses W(q, p) = (1/pi) integral <q+y|rho|q-y> exp(-2ipy) dy with the
    position kernel expanded in Hermite functions. The integrand is band
    limited, so a trapezoidal sum on a fine enough y grid is exact to
    rounding; unlike the Laguerre recurrence for displaced parity this
    stays stable far from the origin.

    Returns
    -------
    (W, meta) : (ndarray, dict)
        ``meta['truncation_warning']`` is set when the grid reaches beyond
        the phase-space radius resolvable at this truncation.
    """
    q = np.asarray(q_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise NumericError("grid must be finite")
    rho = state.dm()
    dim = rho.shape[0]
    reach = np.sqrt(2 * dim + 1)
    pmax = float(np.abs(p).max())
    # the kernel's y-spectrum is bounded by 2 * reach, the phase adds 2|p|
    h = np.pi / (2 * (2 * reach + 2 * pmax) + 1)
    y_max = reach + 6.0
    y = np.arange(-np.ceil(y_max / h), np.ceil(y_max / h) + 1) * h
    phase = np.exp(-2j * np.outer(p, y)) * (h / np.pi)
    w = np.empty((p.size, q.size))
    for i, qv in enumerate(q):
        plus = hermite_functions(qv + y, dim)
        minus = hermite_functions(qv - y, dim)
        kernel = np.einsum("ny,nm,my->y", plus, rho, minus, optimize=True)
        w[:, i] = (phase @ kernel).real

    radius = float(np.sqrt(q[:, None] ** 2 + p[None, :] ** 2).max())
    meta = {
        "dim": dim,
        "q_bounds": [float(q.min()), float(q.max())],
        "p_bounds": [float(p.min()), float(p.max())],
        "shape": [int(p.size), int(q.size)],
        "normalization": "integral W dq dp = 1 (vacuum W(0,0) = 1/pi)",
        "max_grid_radius": radius,
        "resolvable_radius": float(reach),
        "truncation_warning": bool(radius > reach),
    }
    return w, meta


def hermite_functions(x, nmax: int) -> np.ndarray:
    """Position wavefunctions <x|n> for n < nmax, shape ``(nmax, len(x))``.

    Normalised three-term recurrence; stable well past n = 1000.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros((nmax, x.size))
    out[0] = np.pi**-0.25 * np.exp(-(x**2) / 2)
    if nmax > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(2, nmax):
        out[n] = np.sqrt(2.0 / n) * x * out[n - 1] - np.sqrt((n - 1) / n) * out[n - 2]
    return out



def write_wigner_csv(path, w: np.ndarray, q_grid, p_grid, meta: dict | None = None) -> None:
    """CSV with header ``q,p,w``; outer loop over p, inner over q.

    A JSON sidecar ``<path>.json`` holds ``meta``.
    """
    path = Path(path)
    q = np.asarray(q_grid, dtype=float)
    p = np.asarray(p_grid, dtype=float)
    lines = ["q,p,w"]
    for ip, pv in enumerate(p):
        for iq, qv in enumerate(q):
            lines.append(f"{qv:.10g},{pv:.10g},{w[ip, iq]:.12e}")
    path.write_text("\n".join(lines) + "\n")
    if meta is not None:
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def grid_integral(w: np.ndarray, q_grid, p_grid) -> float:
    """Trapezoidal integral of a grid indexed ``[i_p, i_q]``."""
    return float(np.trapezoid(np.trapezoid(w, q_grid, axis=1), p_grid))


def truncation_convergence(fn: Callable[[int], float], dim: int, tol: float, extra: int = 20) -> dict:
    """Evaluate ``fn`` at ``dim`` and ``dim + extra`` and compare."""
    lo = float(fn(dim))
    hi = float(fn(dim + extra))
    diff = abs(hi - lo)
    return {"dim": dim, "dim_hi": dim + extra, "value": lo, "value_hi": hi, "diff": diff, "converged": diff <= tol}
