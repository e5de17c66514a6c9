"""Logical read-out of oscillator states.

Two maps to a qubit: projection onto the (non-orthogonal) codewords, which
discards everything outside the code, and a trace over the error label of
an orthonormal subsystem basis |e, mu>, which keeps all of the weight.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .fock_core import NumericError, OscillatorState, displacement, quadratures
from .gates import qubit_state
from .gkp_code import SQRT_PI, GkpCode


class UndecodableError(NumericError):
    pass


class BasisConstructionError(NumericError):
    pass


@dataclass(frozen=True, eq=False)
class LogicalQubit:
    """2x2 logical density matrix with optional decoder diagnostics."""

    matrix: np.ndarray
    weight: float = 1.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("logical state must be 2x2")
        if np.abs(m - m.conj().T).max() > 1e-9:
            raise NumericError("logical state is not Hermitian")
        if abs(np.trace(m).real - self.weight) > 1e-9:
            raise NumericError(f"logical trace {np.trace(m).real} differs from {self.weight}")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min() < -1e-9:
            raise NumericError("logical state is not positive")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def with_frame(self, frame) -> "LogicalQubit":
        """Undo a tracked logical Pauli: F^dag rho F."""
        if frame is None:
            return self
        f = np.asarray(frame, dtype=complex)
        return LogicalQubit(f.conj().T @ self.matrix @ f, self.weight, self.diagnostics)


def logical_fidelity(rho_l: LogicalQubit, target) -> float:
    """<t|rho_L|t> for a normalised pure target (rho_L taken at unit trace)."""
    t = np.asarray(target, dtype=complex)
    t = t / np.linalg.norm(t)
    return float(np.vdot(t, rho_l.matrix @ t).real / np.trace(rho_l.matrix).real)


def decode_perfect_ed(
    rho: OscillatorState, code: GkpCode, frame=None, orthonormalize: bool = False
) -> tuple[LogicalQubit, float]:
    """P rho P^dag / Tr(P rho P^dag) with P = |0><0_Delta| + |1><1_Delta|.

    Returns the decoded qubit and the retained weight Tr(P rho P^dag). The
    diagnostics also carry Re Tr(rho Q) with Q = sum_mu |mu_Delta><mu_Delta|.
    ``orthonormalize`` swaps the raw codewords for their Loewdin pair, which
    makes P a partial isometry.

    Raises
    ------
    UndecodableError
        If the retained weight is below 1e-14.
    """
    p = (code.lowdin_basis if orthonormalize else code.codeword_matrix).conj().T
    r = rho.dm() / rho.trace()
    m = p @ r @ p.conj().T
    success = float(np.trace(m).real)
    if success < 1e-14:
        raise UndecodableError(f"code-space weight {success:.2e} too small to decode")
    q = p.conj().T @ p
    diag = {"success_sandwich": success, "success_projector": float(np.trace(r @ q).real)}
    m = 0.5 * (m + m.conj().T) / success
    return LogicalQubit(m, 1.0, diag).with_frame(frame), success


@dataclass(frozen=True, eq=False)
class SbsBasis:
    """Orthonormal basis |e, mu> of the truncated space.

    ``v0[:, i]`` and ``v1[:, i]`` are the mu = 0, 1 members of cell
    ``labels[i]``; cell 0 is the no-error label (0, 0), cells 1 to
    ``n_shift_cells - 1`` come from shifted codewords and the rest from the
    orthogonal completion.
    """

    v0: np.ndarray
    v1: np.ndarray
    labels: tuple
    n_shift_cells: int

    @property
    def dim(self) -> int:
        return self.v0.shape[0]

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.hstack([self.v0, self.v1])

    def orthonormality_defect(self) -> float:
        b = self.matrix
        return float(np.abs(b.conj().T @ b - np.eye(b.shape[1])).max())

    def completeness_defect(self, margin: int = 0) -> float:
        b = self.matrix
        m = self.dim - margin
        return float(np.abs((b @ b.conj().T)[:m, :m] - np.eye(m)).max())

    def cell(self, label) -> np.ndarray:
        i = self.labels.index(tuple(label))
        return np.column_stack([self.v0[:, i], self.v1[:, i]])

    def logical_state(self, label: str, cell=(0, 0)) -> OscillatorState:
        return OscillatorState.ket(self.cell(cell) @ qubit_state(label))


def _function_of(op: np.ndarray, fn) -> np.ndarray:
    w, v = np.linalg.eigh(op)
    return (v * fn(w)) @ v.conj().T


def _lowdin(c: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(c.conj().T @ c)
    return c @ (v * w**-0.5) @ v.conj().T


def default_grid(code: GkpCode) -> int:
    """Largest shift grid whose cells fit inside the trusted block, capped at 8."""
    room = code.dim - code.interior_margin - 2
    return int(max(1, min(8, np.floor(np.sqrt(room / 2)))))


def _shift_family(code: GkpCode, n: int):
    """Displaced codeword pairs on an n x n grid of shifts inside the cell.

    Shifts are odd or even multiples of sqrt(pi)/(2n), staying strictly
    inside |u|, |v| < sqrt(pi)/2 so that none is a logical operator. The
    zero shift is left to the anchor cell. Pairs are ordered by shift length.
    """
    step = SQRT_PI / (2 * n)
    ks = 2 * np.arange(n) - (n - 1)
    pts = sorted(((kq, kp) for kq in ks for kp in ks if (kq, kp) != (0, 0)), key=lambda k: (k[0] ** 2 + k[1] ** 2, k))
    cols, labels = [], []
    for kq, kp in pts:
        disp = displacement((kq * step + 1j * kp * step) / np.sqrt(2), code.dim).data
        cols += [disp @ code.zero, disp @ code.one]
        labels.append((int(kq), int(kp)))
    if not cols:
        return np.zeros((code.dim, 0), dtype=complex), labels
    return np.column_stack(cols), labels


def _complete(code: GkpCode, basis: np.ndarray):
    """Split the orthogonal complement by the sign of cos(sqrt(pi) q) and pair
    the halves with the unitary closest to the logical X."""
    d = code.dim
    rest = d - basis.shape[1]
    if rest % 2:
        raise BasisConstructionError("complement has odd dimension")
    if rest == 0:
        return np.zeros((d, 0)), np.zeros((d, 0))
    u, _, _ = np.linalg.svd(np.eye(d) - basis @ basis.conj().T)
    comp = u[:, :rest]
    q, _ = quadratures(d, code.interior_margin)
    cos_z = _function_of(q.data, lambda x: np.cos(SQRT_PI * x))
    w, vecs = np.linalg.eigh(comp.conj().T @ cos_z @ comp)
    order = np.argsort(-w, kind="stable")
    zero_half = comp @ vecs[:, order[: rest // 2]]
    one_half = comp @ vecs[:, order[rest // 2 :]]
    uu, _, vh = np.linalg.svd(one_half.conj().T @ code.logical_x.data @ zero_half)
    return zero_half, one_half @ (uu @ vh)


def build_sbs_basis(
    code: GkpCode,
    channel=None,
    grid: int | None = None,
    rank_tol: float = 1e-6,
    orth_tol: float = 1e-11,
) -> SbsBasis:
    """Orthonormal subsystem basis from shifted codewords.

    Cell (0, 0) is the symmetrically orthonormalised codeword pair. The
    other cells start from D(u, v)|mu_Delta> on a ``grid`` x ``grid`` lattice
    of correctable shifts; label (k_q, k_p) means a shift of
    (k_q, k_p) sqrt(pi) / (2 grid). These are projected off cell (0, 0) and
    orthonormalised together, dropping the longest shifts while the family
    is ill-conditioned. The remaining space is appended as ("rest", i)
    cells.

    ``channel`` is accepted so that callers can tie a basis to the round
    it decodes; the construction only depends on the code.

    Raises
    ------
    BasisConstructionError
        If no grid yields an orthonormal family within ``orth_tol``.
    """
    del channel
    d = code.dim
    anchor = _lowdin(code.codeword_matrix)
    sizes = [grid] if grid is not None else list(range(default_grid(code), 0, -1))
    for n in sizes:
        fam, labels = _shift_family(code, n)
        fam = fam - anchor @ (anchor.conj().T @ fam)
        fam = fam - anchor @ (anchor.conj().T @ fam)
        npair = min(len(labels), (d - 2) // 2)
        while npair:
            s = np.linalg.svd(fam[:, : 2 * npair], compute_uv=False)
            if s.min() > rank_tol * s.max():
                break
            npair -= 1
        cells = _lowdin(fam[:, : 2 * npair]) if npair else np.zeros((d, 0))
        v0 = np.hstack([anchor[:, :1], cells[:, 0::2]])
        v1 = np.hstack([anchor[:, 1:], cells[:, 1::2]])
        z, o = _complete(code, np.hstack([v0, v1]))
        v0, v1 = np.hstack([v0, z]), np.hstack([v1, o])
        labs = ((0, 0),) + tuple(labels[:npair]) + tuple(("rest", i) for i in range(z.shape[1]))
        basis = SbsBasis(v0, v1, labs, npair + 1)
        if basis.orthonormality_defect() <= orth_tol:
            return basis
    raise BasisConstructionError(f"no shift grid in {sizes} gives an orthonormal basis at dim={d}")


def decode_sbs(rho: OscillatorState, basis: SbsBasis, frame=None) -> LogicalQubit:
    """sum_e P_e rho P_e^dag with P_e = |0><e,0| + |1><e,1|; trace preserving."""
    r = rho.dm()
    a0 = basis.v0.conj().T @ r
    a1 = basis.v1.conj().T @ r
    m = np.empty((2, 2), dtype=complex)
    m[0, 0] = np.einsum("ij,ji->", a0, basis.v0)
    m[0, 1] = np.einsum("ij,ji->", a0, basis.v1)
    m[1, 0] = np.einsum("ij,ji->", a1, basis.v0)
    m[1, 1] = np.einsum("ij,ji->", a1, basis.v1)
    m = 0.5 * (m + m.conj().T)
    return LogicalQubit(m, float(np.trace(m).real)).with_frame(frame)
