"""Square-lattice finite-energy GKP code in a truncated Fock space."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .fock_core import (
    DEFAULT_INTERIOR_MARGIN,
    FockOperator,
    InvalidDimensionError,
    OscillatorState,
    _check_dims,
    expm,
    hermite_functions,
    quadratures,
)

SQRT_PI = np.sqrt(np.pi)
LATTICE_LENGTH = 2 * SQRT_PI

# default truncations; see ``tail_weight`` for what they guarantee
DEFAULT_DIMS = {0.36: 60, 0.25: 100, 0.15: 240}
DEFAULT_TAIL_TOL = 1e-4

LABELS = ("0", "1", "+", "-", "+i", "-i", "+H", "-H")
_LABEL_ALIASES = {"+Y": "+i", "-Y": "-i", "+y": "+i", "-y": "-i", "+h": "+H", "-h": "-H"}


class TruncationError(ValueError):
    def __init__(self, message: str, suggested_dim: int):
        super().__init__(f"{message}; suggested dim >= {suggested_dim}")
        self.suggested_dim = suggested_dim


def comb_amplitudes(mu: int, delta: float, dim: int, weight_tol: float = 1e-14) -> np.ndarray:
    """Unnormalised Fock amplitudes of E_Delta sum_j |q = sqrt(pi)(2j + mu)>.

    Spikes at +-x are added in pairs moving outward until a pair adds less
    than ``weight_tol`` of the accumulated weight.
    """
    env = np.exp(-(delta**2) * np.arange(dim))
    total = np.zeros(dim)
    k = mu
    while True:
        x = SQRT_PI * k
        xs = [x] if k == 0 else [x, -x]
        added = env * hermite_functions(xs, dim).sum(axis=1)
        total = total + added
        if x > 3.0 and added @ added <= weight_tol * (total @ total):
            return total
        k += 2


def tail_weight(state: np.ndarray, margin: int = DEFAULT_INTERIOR_MARGIN) -> float:
    """Probability carried by the top ``margin`` Fock levels."""
    pn = np.abs(state) ** 2
    return float(pn[len(pn) - margin :].sum() / pn.sum())


def suggest_dim(delta: float, tail_tol: float = DEFAULT_TAIL_TOL, margin: int = DEFAULT_INTERIOR_MARGIN) -> int:
    """Smallest D whose codeword tail weight above D - margin is below ``tail_tol``."""
    probe = int(max(60, 12 / delta**2))
    worst = np.zeros(probe)
    for mu in (0, 1):
        v = comb_amplitudes(mu, delta, probe)
        pn = np.abs(v) ** 2 / np.vdot(v, v).real
        worst = np.maximum(worst, np.cumsum(pn[::-1])[::-1])
    below = np.nonzero(worst < tail_tol)[0]
    n_cut = int(below[0]) if below.size else probe
    return n_cut + margin


def default_dim(delta: float) -> int:
    for d, dim in DEFAULT_DIMS.items():
        if abs(d - delta) < 1e-12:
            return dim
    return suggest_dim(delta)


@dataclass(frozen=True, eq=False)
class GkpCode:
    """Finite-energy square GKP code; build with :func:`build_code`."""

    delta: float
    dim: int
    zero: np.ndarray
    one: np.ndarray
    norm_consts: tuple
    interior_margin: int = DEFAULT_INTERIOR_MARGIN

    @cached_property
    def _quads(self):
        return quadratures(self.dim, self.interior_margin)

    @cached_property
    def envelope(self) -> FockOperator:
        return FockOperator(np.diag(np.exp(-(self.delta**2) * np.arange(self.dim))), self.interior_margin, hermitian=True)

    @cached_property
    def stabilizer_q(self) -> FockOperator:
        return expm(self._quads[0], 1j * LATTICE_LENGTH)

    @cached_property
    def stabilizer_p(self) -> FockOperator:
        return expm(self._quads[1], -1j * LATTICE_LENGTH)

    @cached_property
    def logical_x(self) -> FockOperator:
        return expm(self._quads[1], -1j * SQRT_PI)

    @cached_property
    def logical_z(self) -> FockOperator:
        return expm(self._quads[0], 1j * SQRT_PI)

    @property
    def codewords(self) -> tuple:
        return self.zero, self.one

    @cached_property
    def codeword_matrix(self) -> np.ndarray:
        """Columns |0_Delta>, |1_Delta> (non-orthogonal)."""
        return np.column_stack([self.zero, self.one])

    @cached_property
    def gram(self) -> np.ndarray:
        b = self.codeword_matrix
        return b.conj().T @ b

    @cached_property
    def lowdin_basis(self) -> np.ndarray:
        """Symmetrically orthonormalised codeword pair as columns."""
        w, v = np.linalg.eigh(self.gram)
        return self.codeword_matrix @ (v * w**-0.5) @ v.conj().T

    @property
    def overlap(self) -> complex:
        return complex(np.vdot(self.zero, self.one))

    def mean_photon_number(self, mu: int = 0) -> float:
        v = self.zero if mu == 0 else self.one
        return float(np.sum(np.arange(self.dim) * np.abs(v) ** 2))

    def encode(self, coeffs) -> OscillatorState:
        """Normalised c0 |0_Delta> + c1 |1_Delta>."""
        return OscillatorState.ket(self.codeword_matrix @ np.asarray(coeffs, dtype=complex))

    def stabilizer_expectations(self, mu: int = 0) -> tuple:
        v = self.zero if mu == 0 else self.one
        return (
            complex(np.vdot(v, self.stabilizer_q.data @ v)),
            complex(np.vdot(v, self.stabilizer_p.data @ v)),
        )

    def to_csv(self, path) -> None:
        """Fock-amplitude table with columns n, Re/Im of both codewords."""
        rows = ["n,re0,im0,re1,im1"]
        for n in range(self.dim):
            z, o = self.zero[n], self.one[n]
            rows.append(f"{n},{z.real:.17g},{z.imag:.17g},{o.real:.17g},{o.imag:.17g}")
        Path(path).write_text("\n".join(rows) + "\n")


def build_code(
    delta: float,
    dim: int | None = None,
    tail_tol: float = DEFAULT_TAIL_TOL,
    interior_margin: int = DEFAULT_INTERIOR_MARGIN,
) -> GkpCode:
    """Construct |mu_Delta> = N E_Delta |mu_0> for mu = 0, 1.

    Each position eigenket of the ideal comb is expanded in Hermite
    functions, damped by exp(-Delta^2 n), summed and renormalised.

    Raises
    ------
    TruncationError
        If either codeword puts more than ``tail_tol`` weight in the top
        ``interior_margin`` levels.
    """
    if not 0 < delta <= 0.6:
        raise ValueError(f"delta must lie in (0, 0.6], got {delta}")
    if dim is None:
        dim = default_dim(delta)
    if dim < 2:
        raise InvalidDimensionError("dim must be >= 2")
    words, norms = [], []
    for mu in (0, 1):
        v = comb_amplitudes(mu, delta, dim)
        nrm = np.linalg.norm(v)
        words.append((v / nrm).astype(complex))
        norms.append(float(1 / nrm))
        tw = tail_weight(v, interior_margin)
        if tw > tail_tol:
            raise TruncationError(
                f"codeword {mu} has tail weight {tw:.2e} > {tail_tol:.0e} at dim={dim}",
                suggest_dim(delta, tail_tol, interior_margin),
            )
    for w in words:
        w.flags.writeable = False
    return GkpCode(delta, dim, words[0], words[1], tuple(norms), interior_margin)


def _support_projection(v: np.ndarray, residue: int) -> np.ndarray:
    out = np.zeros_like(v)
    out[residue::4] = v[residue::4]
    return out


def logical_state(code: GkpCode, label: str) -> OscillatorState:
    """Pauli or Hadamard eigenstate of the code.

    Hadamard eigenstates come from restricting a codeword to the Fock
    levels 4n (+H) or 4n + 2 (-H), which is exact because the Fourier
    gate maps the code span onto itself.
    """
    label = _LABEL_ALIASES.get(label, label)
    z, o = code.zero, code.one
    if label == "0":
        return OscillatorState.ket(z)
    if label == "1":
        return OscillatorState.ket(o)
    if label == "+":
        return OscillatorState.ket(z + o)
    if label == "-":
        return OscillatorState.ket(z - o)
    if label == "+i":
        return OscillatorState.ket(z + 1j * o)
    if label == "-i":
        return OscillatorState.ket(z - 1j * o)
    if label == "+H":
        return OscillatorState.ket(_support_projection(z, 0))
    if label == "-H":
        # sign fixed so that <1_Delta|-H_Delta> > 0, i.e. qubit (sin, -cos) up to -1
        return OscillatorState.ket(_support_projection(o, 2))
    raise ValueError(f"unknown logical label {label!r}; expected one of {LABELS}")


def envelope_commutator_norm(code: GkpCode, op: FockOperator) -> float:
    """Entrywise max of |[op, E_Delta]|."""
    _check_dims(code.dim, op.dim)
    e = np.exp(-(code.delta**2) * np.arange(code.dim))
    # [A, E]_{mn} = A_mn (e_n - e_m) since E is diagonal
    comm = op.data * (e[None, :] - e[:, None])
    return float(np.abs(comm).max())
